#pragma once

// The learning agent: random warmup, model initialization, bilevel planning,
// execution with mismatch detection, refinement and exploration.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "groundwork/environments.hpp"
#include "groundwork/llplanner.hpp"
#include "groundwork/replay.hpp"
#include "groundwork/synth.hpp"
#include "json.hpp"

namespace groundwork::agent {

/// JSON-lines event log. Every record carries "event" and a running "seq".
class TraceWriter {
 public:
  explicit TraceWriter(std::ostream* out) : out_(out) {}
  /// Adds "event" and "seq" to `fields` (a JSON object) and writes one line.
  void write(const std::string& event, nlohmann::json fields);
  std::uint64_t records() const { return seq_; }

 private:
  std::ostream* out_;
  std::uint64_t seq_ = 0;
};

struct Budgets {
  int synth_calls = 6;
  int env_steps = 500;
  int warmup_actions = 10;
  ll::Budget planner{2'000'000, 500.0, 400};
};

struct AgentOptions {
  Budgets budgets;
  bool bilevel = true;
  std::uint64_t seed = 0;
  double temperature = 0.7;
  std::string model = "gpt-4o";
};

enum class LevelStatus { Solved, CallBudget, StepBudget, UnsolvableAbstract };
std::string to_string(LevelStatus s);

struct LevelReport {
  std::string level;
  bool solved = false;
  LevelStatus status = LevelStatus::CallBudget;
  int synth_calls = 0;
  int env_steps = 0;
  int plans_attempted = 0;
  int refinements = 0;
  int explorations = 0;
  long tokens = 0;
  int program_version = 0;
  double wall_seconds = 0.0;  // not written to traces
};

/// Up to n random actions from the level's initial state (stops at a terminal).
ReplayBuffer warmup(const env::Environment& env, const env::Level& level, int n, std::mt19937_64& rng);

/// Grounded operators whose preconditions hold in `init` and whose effects do not all
/// hold already, in grounding order.
std::vector<pddl::GroundedOperator> enumerate_exploration(const pddl::AbstractState& init,
                                                          const std::vector<pddl::GroundedOperator>& ops);

/// (completed / total) * (completed / steps); 0 when nothing was completed.
double learning_efficiency(int completed, int total, int steps);

class Agent {
 public:
  Agent(const env::Environment& env, synth::Backend& backend, AgentOptions options = {},
        TraceWriter* trace = nullptr);

  /// Runs one level. The transition program carries over to the next call.
  LevelReport run_level(const env::Level& level);

  const std::optional<wm::TransitionProgram>& program() const { return program_; }
  void set_program(wm::TransitionProgram p) { program_ = std::move(p); }
  /// Prompts sent so far (for inspection).
  const std::vector<synth::SynthRequest>& requests() const { return requests_; }

 private:
  struct Run;

  void call_synth(Run& run, synth::SynthRequest request);
  ll::TransitionFn model(Run& run) const;
  std::optional<Mismatch> execute(Run& run, const std::vector<ll::Segment>& segments, Origin origin);
  std::optional<Mismatch> explore(Run& run);
  std::optional<Mismatch> random_probe(Run& run);
  void trace(const std::string& event, nlohmann::json fields);

  const env::Environment& env_;
  synth::Backend& backend_;
  AgentOptions opts_;
  TraceWriter* trace_;
  std::optional<wm::TransitionProgram> program_;
  int next_version_ = 1;
  int attempt_ = 0;
  std::vector<synth::SynthRequest> requests_;
};

}  // namespace groundwork::agent
