#include "lexer.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <cstring>

#include "groundwork/script.hpp"

namespace groundwork::script {

namespace {

[[noreturn]] void fail(const std::string& msg, int line) {
  throw ScriptError(ErrorKind::Syntax, "SyntaxError", msg, line);
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

const char* const kOps3[] = {"**=", "//=", ">>=", "<<=", "..."};
const char* const kOps2[] = {"**", "//", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=",
                             "&=", "|=", "^=", "->", "<<", ">>", ":="};
const char kOps1[] = "+-*/%<>=()[]{},:.;&|^~@!";

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    indents_.push_back(0);
    bool at_line_start = true;
    while (pos_ < src_.size()) {
      if (at_line_start && depth_ == 0) {
        if (!handle_indent()) continue;
        at_line_start = false;
      }
      char c = src_[pos_];
      if (c == '\n') {
        ++pos_;
        if (depth_ == 0) {
          if (!out_.empty() && out_.back().kind != Tok::Newline && out_.back().kind != Tok::Indent &&
              out_.back().kind != Tok::Dedent)
            push(Tok::Newline, "");
          at_line_start = true;
        }
        ++line_;
        line_start_ = pos_;
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\r' || c == '\f') {
        ++pos_;
        continue;
      }
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
        continue;
      }
      if (c == '\\') {
        std::size_t p = pos_ + 1;
        while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t' || src_[p] == '\r')) ++p;
        if (p < src_.size() && src_[p] == '\n') {
          pos_ = p + 1;
          ++line_;
          line_start_ = pos_;
          continue;
        }
        fail("unexpected character after line continuation", line_);
      }
      if (ident_start(c)) {
        std::size_t start = pos_;
        while (pos_ < src_.size() && ident_char(src_[pos_])) ++pos_;
        std::string word(src_.substr(start, pos_ - start));
        if (pos_ < src_.size() && (src_[pos_] == '\'' || src_[pos_] == '"') && is_string_prefix(word)) {
          lex_string(word);
          continue;
        }
        push(Tok::Name, std::move(word));
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) ||
          (c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        lex_number();
        continue;
      }
      if (c == '\'' || c == '"') {
        lex_string("");
        continue;
      }
      lex_op();
    }
    if (!out_.empty() && out_.back().kind != Tok::Newline && out_.back().kind != Tok::Dedent &&
        out_.back().kind != Tok::Indent)
      push(Tok::Newline, "");
    if (depth_ > 0) fail("unexpected end of input inside brackets", line_);
    while (indents_.size() > 1) {
      indents_.pop_back();
      push(Tok::Dedent, "");
    }
    push(Tok::End, "");
    return std::move(out_);
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_start_ = 0;
  int line_ = 1;
  int depth_ = 0;
  std::vector<int> indents_;
  std::vector<Token> out_;

  void push(Tok kind, std::string text) {
    Token t;
    t.kind = kind;
    t.text = std::move(text);
    t.line = line_;
    t.column = static_cast<int>(pos_ - line_start_) + 1;
    out_.push_back(std::move(t));
  }

  // Returns false when the line is blank or a comment (consumed entirely).
  bool handle_indent() {
    int width = 0;
    std::size_t p = pos_;
    while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t' || src_[p] == '\f' || src_[p] == '\r')) {
      if (src_[p] == '\t')
        width = (width / 8 + 1) * 8;
      else if (src_[p] == ' ')
        width += 1;
      ++p;
    }
    if (p >= src_.size()) {
      pos_ = p;
      return false;
    }
    if (src_[p] == '\n' || src_[p] == '#') {
      while (p < src_.size() && src_[p] != '\n') ++p;
      if (p < src_.size()) {
        ++p;
        ++line_;
        line_start_ = p;
      }
      pos_ = p;
      return false;
    }
    pos_ = p;
    if (width > indents_.back()) {
      indents_.push_back(width);
      push(Tok::Indent, "");
    } else {
      while (width < indents_.back()) {
        indents_.pop_back();
        push(Tok::Dedent, "");
      }
      if (width != indents_.back()) fail("unindent does not match any outer indentation level", line_);
    }
    return true;
  }

  static bool is_string_prefix(const std::string& w) {
    std::string l;
    for (char c : w) l += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return l == "r" || l == "f" || l == "rf" || l == "fr" || l == "u" || l == "b" || l == "br" || l == "rb";
  }

  void lex_string(const std::string& prefix) {
    bool raw = false, fstr = false;
    for (char c : prefix) {
      char l = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (l == 'r') raw = true;
      if (l == 'f') fstr = true;
      if (l == 'b') fail("bytes literals are not supported", line_);
    }
    const int start_line = line_;
    char q = src_[pos_];
    bool triple = pos_ + 2 < src_.size() && src_[pos_ + 1] == q && src_[pos_ + 2] == q;
    pos_ += triple ? 3 : 1;
    std::string body;
    for (;;) {
      if (pos_ >= src_.size()) fail("unterminated string literal", start_line);
      char c = src_[pos_];
      if (c == q) {
        if (!triple) {
          ++pos_;
          break;
        }
        if (pos_ + 2 < src_.size() && src_[pos_ + 1] == q && src_[pos_ + 2] == q) {
          pos_ += 3;
          break;
        }
      }
      if (c == '\n') {
        if (!triple) fail("unterminated string literal", start_line);
        ++line_;
        body += c;
        ++pos_;
        line_start_ = pos_;
        continue;
      }
      if (c == '\\' && pos_ + 1 < src_.size()) {
        char n = src_[pos_ + 1];
        if (raw) {
          body += c;
          body += n;
          pos_ += 2;
          if (n == '\n') {
            ++line_;
            line_start_ = pos_;
          }
          continue;
        }
        pos_ += 2;
        switch (n) {
          case 'n': body += '\n'; break;
          case 't': body += '\t'; break;
          case 'r': body += '\r'; break;
          case '0': body += '\0'; break;
          case '\\': body += '\\'; break;
          case '\'': body += '\''; break;
          case '"': body += '"'; break;
          case 'a': body += '\a'; break;
          case 'b': body += '\b'; break;
          case 'f': body += '\f'; break;
          case 'v': body += '\v'; break;
          case '\n':
            ++line_;
            line_start_ = pos_;
            break;
          case 'x':
          case 'u':
          case 'U': {
            std::size_t n_digits = n == 'x' ? 2 : n == 'u' ? 4 : 8;
            if (pos_ + n_digits > src_.size()) fail("truncated escape sequence", line_);
            std::uint32_t cp = 0;
            auto res = std::from_chars(src_.data() + pos_, src_.data() + pos_ + n_digits, cp, 16);
            if (res.ptr != src_.data() + pos_ + n_digits) fail("invalid escape sequence", line_);
            pos_ += n_digits;
            append_utf8(body, cp);
            break;
          }
          default:
            body += '\\';
            body += n;
        }
        continue;
      }
      body += c;
      ++pos_;
    }
    Token t;
    t.kind = fstr ? Tok::FString : Tok::String;
    t.text = std::move(body);
    t.line = start_line;
    out_.push_back(std::move(t));
  }

  void lex_number() {
    std::size_t start = pos_;
    bool is_float = false;
    if (src_[pos_] == '0' && pos_ + 1 < src_.size() && std::strchr("xXoObB", src_[pos_ + 1]) && src_[pos_ + 1] != 0) {
      char k = static_cast<char>(std::tolower(static_cast<unsigned char>(src_[pos_ + 1])));
      int base = k == 'x' ? 16 : k == 'o' ? 8 : 2;
      pos_ += 2;
      std::string digits;
      while (pos_ < src_.size() && (std::isxdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
        if (src_[pos_] != '_') digits += src_[pos_];
        ++pos_;
      }
      std::int64_t v = 0;
      auto res = std::from_chars(digits.data(), digits.data() + digits.size(), v, base);
      if (digits.empty() || res.ptr != digits.data() + digits.size()) fail("invalid integer literal", line_);
      Token t;
      t.kind = Tok::Int;
      t.int_value = v;
      t.line = line_;
      out_.push_back(std::move(t));
      return;
    }
    std::string text;
    auto take_digits = [&] {
      while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
        if (src_[pos_] != '_') text += src_[pos_];
        ++pos_;
      }
    };
    take_digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      is_float = true;
      text += '.';
      ++pos_;
      take_digits();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_;
      std::string save_text = text;
      text += 'e';
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) text += src_[pos_++];
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        is_float = true;
        take_digits();
      } else {
        pos_ = save;
        text = save_text;
      }
    }
    if (pos_ < src_.size() && (src_[pos_] == 'j' || src_[pos_] == 'J')) fail("complex literals are not supported", line_);
    if (pos_ < src_.size() && ident_start(src_[pos_])) fail("invalid decimal literal", line_);
    Token t;
    t.line = line_;
    t.column = static_cast<int>(start - line_start_) + 1;
    if (is_float) {
      t.kind = Tok::Float;
      t.float_value = std::strtod(text.c_str(), nullptr);
    } else {
      t.kind = Tok::Int;
      auto res = std::from_chars(text.data(), text.data() + text.size(), t.int_value);
      if (res.ec != std::errc()) fail("integer literal too large", line_);
    }
    out_.push_back(std::move(t));
  }

  void lex_op() {
    auto rest = src_.substr(pos_);
    for (const char* op : kOps3)
      if (rest.starts_with(op)) {
        push(Tok::Op, op);
        pos_ += 3;
        return;
      }
    for (const char* op : kOps2)
      if (rest.starts_with(op)) {
        push(Tok::Op, op);
        pos_ += 2;
        return;
      }
    char c = src_[pos_];
    if (c != '\0' && std::strchr(kOps1, c)) {
      if (c == '(' || c == '[' || c == '{') ++depth_;
      if (c == ')' || c == ']' || c == '}') {
        if (depth_ == 0) fail(std::string("unmatched '") + c + "'", line_);
        --depth_;
      }
      push(Tok::Op, std::string(1, c));
      ++pos_;
      return;
    }
    fail(std::string("invalid character '") + c + "'", line_);
  }
};

}  // namespace

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

}  // namespace groundwork::script
