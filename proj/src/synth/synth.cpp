#include "groundwork/synth.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "json.hpp"

namespace groundwork::synth {

using agent::Mismatch;
using agent::ReplayBuffer;

std::string to_string(RequestKind k) { return k == RequestKind::Init ? "init" : "refine"; }

std::optional<std::string> extract_code(const std::string& text, std::size_t* count) {
  std::optional<std::string> last;
  std::size_t n = 0;
  std::size_t pos = 0;
  while (true) {
    std::size_t open = text.find("```", pos);
    if (open == std::string::npos) break;
    std::size_t body = text.find('\n', open);
    if (body == std::string::npos) break;
    std::size_t close = text.find("```", body + 1);
    if (close == std::string::npos) break;
    // closing fence must start a line
    while (close != std::string::npos && text[close - 1] != '\n') close = text.find("```", close + 3);
    if (close == std::string::npos) break;
    last = text.substr(body + 1, close - body - 1);
    ++n;
    pos = close + 3;
  }
  if (count) *count = n;
  return last;
}

namespace {

const char* kStateFormat =
    "States are dictionaries. \"width\" and \"height\" give the grid size. Every other key\n"
    "maps an object type to a list of [x, y] cells (x is the column, y the row, and y\n"
    "grows downwards, so \"up\" decreases y), or names an auxiliary fact holding a list\n"
    "of strings. Object types with no instances are left out of the dictionary.\n";

const char* kSyntaxRules =
    "Write the program in the restricted Python dialect of the sandbox:\n"
    "- define `def transition(state, action):` returning the next state dictionary;\n"
    "- helper functions, loops, comprehensions, lambdas, try/except, dict/list/set/tuple are fine;\n"
    "- classes, `with`, generators, decorators, `**`, star-arguments and the walrus operator are not;\n"
    "- only the `typing`, `copy` and `math` modules can be imported;\n"
    "- keep \"width\" and \"height\" unchanged and keep every cell inside the grid;\n"
    "- the rules must hold for every state and action, not only the ones shown.\n"
    "Reply with the complete program in one fenced code block.\n";

void write_transitions(std::ostringstream& os, const ReplayBuffer& buf) {
  for (std::size_t i = 0; i < buf.size(); ++i) {
    const auto& t = buf[i];
    os << "Transition " << i << ": action '" << t.action << "'";
    if (t.outcome != "none") os << " (" << t.outcome << ")";
    os << "\nbefore: " << t.state.to_json() << "\nafter:  " << t.next.to_json() << "\n";
  }
}

std::vector<std::string> quoted(const std::vector<std::string>& v) {
  std::vector<std::string> out;
  for (const auto& s : v) out.push_back("'" + s + "'");
  return out;
}

}  // namespace

SynthRequest build_init_prompt(const wm::LowState& state, const std::vector<std::string>& actions,
                               const ReplayBuffer& warmup, const std::string& description) {
  std::ostringstream os;
  os << "Write the transition function of a deterministic grid game.\n\n";
  os << "## Game description\n" << description;
  if (!description.empty() && description.back() != '\n') os << "\n";
  os << "\n## Actions\n" << agent::py_list(quoted(actions)) << "\n";
  os << "\n## State format\n" << kStateFormat;
  os << "\n## Initial state\n" << state.to_json() << "\n";
  os << "\n## Observed transitions\n";
  if (warmup.empty())
    os << "No transitions observed.\n";
  else
    write_transitions(os, warmup);
  os << "\n## Instructions\n" << kSyntaxRules;
  SynthRequest r;
  r.kind = RequestKind::Init;
  r.prompt = os.str();
  return r;
}

std::string render_mismatch_block(const Mismatch& m) {
  std::ostringstream os;
  os << "ERRORS FROM WORLD MODEL for ABSTRACT PLAN " << (m.label.empty() ? "random actions" : m.label) << ":\n\n";
  os << "Initial state:\n" << m.segment_start.to_json() << "\n\n";
  os << "Actions: " << agent::py_list(quoted(m.segment_actions)) << "\n\n";
  if (!m.error.empty()) {
    os << "Your program raised an error on action '" << m.action << "' from state:\n" << m.before.to_json() << "\n\n";
    os << "Error: " << m.error << "\n";
    return os.str();
  }
  os << "Predicted state after ABSTRACT PLAN:\n" << m.predicted.to_json() << "\n\n";
  os << "Actual state after ABSTRACT PLAN:\n" << m.actual.to_json() << "\n\n";
  if (m.truncated) os << "The episode ended before the predicted transitions did.\n\n";
  os << "Your prediction errors:\n" << agent::render_diff(m.diff);
  return os.str();
}

SynthRequest build_refine_prompt(const wm::TransitionProgram& program, const ReplayBuffer& predicted,
                                 const ReplayBuffer& actual, const Mismatch& mismatch, const std::string& description) {
  if (mismatch.error.empty() && mismatch.diff.empty() && !mismatch.truncated)
    throw PreconditionError("refinement needs a non-empty mismatch");
  std::ostringstream os;
  os << "The transition function below predicted the game incorrectly. Fix it.\n\n";
  if (!description.empty()) {
    os << "## Game description\n" << description;
    if (description.back() != '\n') os << "\n";
    os << "\n";
  }
  os << "## State format\n" << kStateFormat << "\n";
  os << "## Current program (version " << program.version() << ")\n```python\n" << program.source();
  if (!program.source().empty() && program.source().back() != '\n') os << "\n";
  os << "```\n\n";
  // Transitions of the failing step, predicted next to actual.
  os << "## Transitions for ABSTRACT PLAN " << (mismatch.label.empty() ? "random actions" : mismatch.label) << "\n";
  std::size_t begin = mismatch.index - mismatch.segment_offset;
  if (mismatch.error.empty())
    for (std::size_t i = begin; i <= mismatch.index; ++i) {
      std::string a = i < actual.size() ? actual[i].action : i < predicted.size() ? predicted[i].action : "?";
      bool same = i < actual.size() && i < predicted.size() && actual[i].next == predicted[i].next;
      os << "step " << (i - begin) << ": '" << a << "' " << (same ? "predicted correctly" : "MISPREDICTED") << "\n";
    }
  os << "\n" << render_mismatch_block(mismatch) << "\n";
  os << "## Instructions\n" << kSyntaxRules;
  SynthRequest r;
  r.kind = RequestKind::Refine;
  r.prompt = os.str();
  return r;
}

namespace {

SynthResult from_text(std::string raw) {
  SynthResult r;
  std::size_t blocks = 0;
  r.program = extract_code(raw, &blocks);
  if (blocks == 0) r.warnings.push_back("no fenced code block in response");
  if (blocks > 1) r.warnings.push_back("response has " + std::to_string(blocks) + " code blocks; using the last");
  r.raw = std::move(raw);
  return r;
}

}  // namespace

MockBackend::MockBackend(std::string directory) : dir_(std::move(directory)) {
  if (!std::filesystem::is_directory(dir_)) throw ConfigError("mock script directory not found: " + dir_);
}

SynthResult MockBackend::call(const SynthRequest&) {
  char name[16];
  std::snprintf(name, sizeof name, "%03zu.txt", next_++);
  auto path = std::filesystem::path(dir_) / name;
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    SynthResult r;
    r.warnings.push_back("mock script exhausted at " + std::string(name));
    return r;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

SynthResult OracleBackend::call(const SynthRequest&) {
  return from_text("```python\n" + source_ + (source_.ends_with('\n') ? "" : "\n") + "```\n");
}

int backoff_ms(int base_delay_ms, int attempt) {
  long d = static_cast<long>(base_delay_ms) << std::min(attempt, 16);
  return static_cast<int>(std::min<long>(d, 60'000));
}

HttpBackend::HttpBackend(HttpConfig config) : config_(std::move(config)) {
  static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.endpoint, m, url)) throw ConfigError("bad endpoint URL: " + config_.endpoint);
  scheme_host_ = m[1];
  path_ = m[2].matched ? std::string(m[2]) : "/v1/chat/completions";
  sleep_ = [](int ms) { std::this_thread::sleep_for(std::chrono::milliseconds(ms)); };
}

std::string HttpBackend::request_body(const SynthRequest& request) const {
  nlohmann::json body = {
      {"model", config_.model},
      {"temperature", request.temperature},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
  };
  return body.dump();
}

SynthResult HttpBackend::parse_response(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("malformed response: ") + e.what());
  }
  std::string content;
  try {
    content = j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw TransportError("response has no choices[0].message.content");
  }
  SynthResult r = from_text(content);
  if (j.contains("usage") && j["usage"].is_object()) {
    const auto& u = j["usage"];
    r.usage.prompt = u.value("prompt_tokens", 0L);
    r.usage.completion = u.value("completion_tokens", 0L);
    r.usage.total = u.value("total_tokens", r.usage.prompt + r.usage.completion);
    r.usage.estimated = false;
  }
  return r;
}

SynthResult HttpBackend::call(const SynthRequest& request) {
  const char* key = std::getenv(config_.api_key_env.c_str());
  if (!key || !*key) throw ConfigError("environment variable " + config_.api_key_env + " is not set");
  httplib::Client client(scheme_host_);
  client.set_connection_timeout(30);
  client.set_read_timeout(config_.timeout_s);
  client.set_write_timeout(60);
  httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};
  std::string body = request_body(request);
  std::string last_error;
  auto t0 = std::chrono::steady_clock::now();
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) sleep_(backoff_ms(config_.base_delay_ms, attempt - 1));
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 500));
    SynthResult r = parse_response(res->body);
    r.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return r;
  }
  throw TransportError("giving up after " + std::to_string(config_.max_retries + 1) + " attempts: " + last_error);
}

}  // namespace groundwork::synth
