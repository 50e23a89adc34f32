#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace groundwork::script {

enum class Tok : std::uint8_t { Name, Int, Float, String, FString, Op, Newline, Indent, Dedent, End };

struct Token {
  Tok kind;
  std::string text;  // identifier, operator, or decoded string body
  std::int64_t int_value = 0;
  double float_value = 0.0;
  int line = 0;
  int column = 0;
};

/// Splits source into tokens with Python's indentation rules. Throws
/// ScriptError(Syntax) on malformed input.
std::vector<Token> tokenize(std::string_view source);

}  // namespace groundwork::script
