#pragma once

// Program synthesis backends: prompt construction, code extraction, and the
// mock, oracle and HTTP chat-completion clients.

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "groundwork/replay.hpp"
#include "groundwork/worldmodel.hpp"

namespace groundwork::synth {

enum class RequestKind { Init, Refine };
std::string to_string(RequestKind k);

struct SynthRequest {
  RequestKind kind = RequestKind::Init;
  std::string prompt;
  double temperature = 0.7;
  std::string model = "gpt-4o";
  int attempt = 0;  // index of this call within the run
};

struct TokenUsage {
  long prompt = 0;
  long completion = 0;
  long total = 0;
  bool estimated = true;  // no usage metadata in the response
};

struct SynthResult {
  std::optional<std::string> program;  // empty when no fenced block was found
  std::string raw;
  TokenUsage usage;
  double latency_ms = 0.0;
  std::vector<std::string> warnings;
};

class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Body of the last fenced code block; `count` receives the number of blocks.
std::optional<std::string> extract_code(const std::string& text, std::size_t* count = nullptr);

SynthRequest build_init_prompt(const wm::LowState& state, const std::vector<std::string>& actions,
                               const agent::ReplayBuffer& warmup, const std::string& description);

/// Requires a non-empty diff or a model error; throws PreconditionError otherwise.
SynthRequest build_refine_prompt(const wm::TransitionProgram& program, const agent::ReplayBuffer& predicted,
                                 const agent::ReplayBuffer& actual, const agent::Mismatch& mismatch,
                                 const std::string& description = "");

/// "ERRORS FROM WORLD MODEL for ABSTRACT PLAN <label>:" block with states and error lines.
std::string render_mismatch_block(const agent::Mismatch& mismatch);

class Backend {
 public:
  virtual ~Backend() = default;
  virtual SynthResult call(const SynthRequest& request) = 0;
  virtual std::string name() const = 0;
};

/// Replays numbered response files (000.txt, 001.txt, ...) in call order.
class MockBackend final : public Backend {
 public:
  explicit MockBackend(std::string directory);
  SynthResult call(const SynthRequest& request) override;
  std::string name() const override { return "mock"; }
  std::size_t calls() const { return next_; }

 private:
  std::string dir_;
  std::size_t next_ = 0;
};

/// Answers every request with a fixed program (the environment's ground truth).
class OracleBackend final : public Backend {
 public:
  explicit OracleBackend(std::string source) : source_(std::move(source)) {}
  SynthResult call(const SynthRequest& request) override;
  std::string name() const override { return "oracle"; }

 private:
  std::string source_;
};

struct HttpConfig {
  std::string endpoint;  // https://host[:port]/v1/chat/completions
  std::string model = "gpt-4o";
  std::string api_key_env = "GROUNDWORK_API_KEY";
  int max_retries = 5;
  int base_delay_ms = 1000;
  int timeout_s = 300;
};

/// OpenAI-compatible chat completions. Retries 429 and 5xx with exponential backoff.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(HttpConfig config);
  SynthResult call(const SynthRequest& request) override;
  std::string name() const override { return "http"; }

  /// Request body for a prompt (exposed for tests).
  std::string request_body(const SynthRequest& request) const;
  /// Parses a chat-completion response body into a result (exposed for tests).
  static SynthResult parse_response(const std::string& body);

  /// Replaces the sleep used between retries (tests).
  void set_sleeper(std::function<void(int ms)> sleeper) { sleep_ = std::move(sleeper); }

 private:
  HttpConfig config_;
  std::string scheme_host_;
  std::string path_;
  std::function<void(int)> sleep_;
};

/// Backoff delay before retry `attempt` (0-based).
int backoff_ms(int base_delay_ms, int attempt);

}  // namespace groundwork::synth
