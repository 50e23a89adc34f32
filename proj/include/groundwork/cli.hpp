#pragma once

// Experiment runner, summaries and trace replay behind the groundwork tool.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "groundwork/agent.hpp"
#include "json.hpp"

namespace groundwork::cli {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for unreadable trace logs; `offset` is where the last valid record ends.
class TraceError : public std::runtime_error {
 public:
  TraceError(const std::string& what, std::size_t offset) : std::runtime_error(what), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

struct ExperimentConfig {
  std::string game = "sokoban";
  /// Shipped level names ("level1"), level file paths, or "all".
  std::vector<std::string> levels{"all"};
  std::string backend = "oracle";  // mock | oracle | http
  std::string mock_dir;
  std::string endpoint;
  std::string model = "gpt-4o";
  agent::Budgets budgets;
  std::uint64_t seed = 0;
  bool bilevel = true;
  double temperature = 0.7;
  std::string out_dir;  // empty: nothing written
};

/// Checks budgets, game id, backend and level references; throws ConfigError.
void validate(const ExperimentConfig& config);
std::vector<env::Level> resolve_levels(const env::Environment& env, const std::vector<std::string>& refs);
std::unique_ptr<synth::Backend> make_backend(const ExperimentConfig& config, const env::Environment& env);

struct Summary {
  std::string game;
  std::vector<agent::LevelReport> levels;

  int solved() const;
  int total_synth_calls() const;
  int total_steps() const;
  double success_rate() const;
  double efficiency() const;

  nlohmann::json to_json() const;
  std::string to_csv() const;
  std::string to_table() const;
};

/// Runs every level in order with one agent (the program carries over).
/// Trace records go to `trace` when non-null.
Summary run(const ExperimentConfig& config, std::ostream* trace);
/// run() plus trace.jsonl, summary.csv, summary.json and summary.txt in config.out_dir.
Summary run_to_directory(const ExperimentConfig& config);

/// Parses a JSONL trace. Throws TraceError on malformed or out-of-sequence records.
std::vector<nlohmann::json> read_trace(std::istream& in);
/// Rebuilds the summary from trace events (ignores the level_report records).
Summary summarize_trace(const std::vector<nlohmann::json>& records);
/// Per-step grids, mismatch blocks and level outcomes.
void replay(const std::vector<nlohmann::json>& records, std::ostream& out);

/// Entry point for the groundwork executable.
int main(int argc, char** argv);

}  // namespace groundwork::cli
