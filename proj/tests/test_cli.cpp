#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "groundwork/cli.hpp"

using namespace groundwork;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("groundwork_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<nlohmann::json> run_and_read(const cli::ExperimentConfig& c, cli::Summary* summary) {
  std::stringstream trace;
  *summary = cli::run(c, &trace);
  return cli::read_trace(trace);
}

void check_same(const cli::Summary& a, const cli::Summary& b) {
  CHECK(a.game == b.game);
  REQUIRE(a.levels.size() == b.levels.size());
  for (std::size_t i = 0; i < a.levels.size(); ++i) {
    const auto& x = a.levels[i];
    const auto& y = b.levels[i];
    CAPTURE(x.level);
    CHECK(x.level == y.level);
    CHECK(x.solved == y.solved);
    CHECK(x.status == y.status);
    CHECK(x.synth_calls == y.synth_calls);
    CHECK(x.env_steps == y.env_steps);
    CHECK(x.plans_attempted == y.plans_attempted);
    CHECK(x.refinements == y.refinements);
    CHECK(x.explorations == y.explorations);
    CHECK(x.tokens == y.tokens);
    CHECK(x.program_version == y.program_version);
  }
  CHECK(a.to_csv() == b.to_csv());
}

}  // namespace

TEST_CASE("config validation gives actionable errors") {
  cli::ExperimentConfig c;
  CHECK_NOTHROW(cli::validate(c));
  auto bad = c;
  bad.game = "chess";
  CHECK_THROWS_WITH_AS(cli::validate(bad), doctest::Contains("unknown game"), cli::ConfigError);
  bad = c;
  bad.budgets.synth_calls = 0;
  CHECK_THROWS_WITH_AS(cli::validate(bad), doctest::Contains("--budget-calls"), cli::ConfigError);
  bad = c;
  bad.budgets.env_steps = -1;
  CHECK_THROWS_AS(cli::validate(bad), cli::ConfigError);
  bad = c;
  bad.backend = "mock";
  CHECK_THROWS_WITH_AS(cli::validate(bad), doctest::Contains("--mock-dir"), cli::ConfigError);
  bad = c;
  bad.backend = "http";
  CHECK_THROWS_WITH_AS(cli::validate(bad), doctest::Contains("--endpoint"), cli::ConfigError);
  bad = c;
  bad.levels = {"level9"};
  CHECK_THROWS_WITH_AS(cli::validate(bad), doctest::Contains("level1"), cli::ConfigError);
  bad = c;
  bad.levels = {"/no/such/level.txt"};
  CHECK_THROWS_WITH_AS(cli::validate(bad), doctest::Contains("not found"), cli::ConfigError);
}

TEST_CASE("level references resolve to shipped levels and files") {
  auto e = env::make_environment("sokoban");
  auto all = cli::resolve_levels(*e, {"all"});
  CHECK(all.size() == 5);
  auto two = cli::resolve_levels(*e, {"level3", env::asset_dir() + "/sokoban/levels/level1.txt"});
  REQUIRE(two.size() == 2);
  CHECK(two[0].name == "level3");
  CHECK(two[1].name == "level1");
  CHECK(cli::resolve_levels(*e, {}).empty());
}

TEST_CASE("empty level list gives an empty report") {
  cli::ExperimentConfig c;
  c.levels = {};
  cli::Summary s;
  auto records = run_and_read(c, &s);
  CHECK(s.levels.empty());
  CHECK(s.solved() == 0);
  CHECK(s.efficiency() == 0.0);
  REQUIRE(records.size() == 1);
  CHECK(records[0]["event"] == "run_start");
  CHECK(s.to_csv().find('\n') == s.to_csv().size() - 1);
}

TEST_CASE("oracle sokoban run: call vector and summary recomputed from the trace") {
  cli::ExperimentConfig c;
  cli::Summary s;
  auto records = run_and_read(c, &s);
  REQUIRE(s.levels.size() == 5);
  std::vector<int> calls;
  for (const auto& r : s.levels) {
    calls.push_back(r.synth_calls);
    CHECK(r.solved);
    CHECK(r.env_steps <= 500);
  }
  CHECK(calls == std::vector<int>{1, 0, 0, 0, 0});
  CHECK(s.to_json()["totals"]["synth_call_vector"] == nlohmann::json::array({1, 0, 0, 0, 0}));
  check_same(s, cli::summarize_trace(records));
}

TEST_CASE("unsolved levels are summarized from the trace too") {
  TempDir d;
  std::ofstream(d.path / "000.txt") << "```python\ndef transition(state, action):\n    return state\n```\n";
  cli::ExperimentConfig c;
  c.levels = {"level1", "level2"};
  c.backend = "mock";
  c.mock_dir = d.path.string();
  c.budgets.synth_calls = 2;
  cli::Summary s;
  auto records = run_and_read(c, &s);
  REQUIRE(s.levels.size() == 2);
  CHECK_FALSE(s.levels[0].solved);
  CHECK(s.levels[0].status == agent::LevelStatus::CallBudget);
  check_same(s, cli::summarize_trace(records));

  cli::ExperimentConfig steps;
  steps.levels = {"level1"};
  steps.budgets.env_steps = 3;
  records = run_and_read(steps, &s);
  REQUIRE(s.levels.size() == 1);
  CHECK(s.levels[0].status == agent::LevelStatus::StepBudget);
  check_same(s, cli::summarize_trace(records));
}

TEST_CASE("output files are byte-identical across runs") {
  TempDir a, b;
  cli::ExperimentConfig c;
  c.game = "pushboulders";
  c.levels = {"all"};
  c.seed = 11;
  c.out_dir = a.path.string();
  auto sa = cli::run_to_directory(c);
  c.out_dir = b.path.string();
  auto sb = cli::run_to_directory(c);
  for (const char* f : {"trace.jsonl", "summary.csv", "summary.json", "summary.txt"}) {
    CAPTURE(f);
    CHECK(fs::exists(a.path / f));
    CHECK(read_file(a.path / f) == read_file(b.path / f));
  }
  CHECK(read_file(a.path / "summary.txt") == sa.to_table());
  auto j = nlohmann::json::parse(read_file(a.path / "summary.json"));
  CHECK(j["totals"]["levels"] == sa.levels.size());
}

TEST_CASE("replay renders frames and a WIN mark") {
  cli::ExperimentConfig c;
  c.levels = {"level2"};
  cli::Summary s;
  auto records = run_and_read(c, &s);
  std::ostringstream out;
  cli::replay(records, out);
  std::string text = out.str();
  CHECK(text.find("=== level level2 (sokoban) ===") != std::string::npos);
  CHECK(text.find("-> win") != std::string::npos);
  CHECK(text.rfind("*** WIN ***") != std::string::npos);
  CHECK(text.find("#") != std::string::npos);
}

TEST_CASE("corrupt traces report the byte offset") {
  cli::ExperimentConfig c;
  c.levels = {"level2"};
  std::stringstream trace;
  cli::run(c, &trace);
  std::string text = trace.str();
  std::size_t first = text.find('\n') + 1;
  std::size_t second = text.find('\n', first) + 1;

  SUBCASE("truncated final record") {
    std::istringstream in(text.substr(0, second + 10));
    try {
      cli::read_trace(in);
      FAIL("expected TraceError");
    } catch (const cli::TraceError& e) {
      CHECK(e.offset() == second);
      CHECK(std::string(e.what()).find("byte offset " + std::to_string(second)) != std::string::npos);
    }
  }
  SUBCASE("garbage in the middle") {
    std::string bad = text.substr(0, first) + "{not json\n" + text.substr(first);
    std::istringstream in(bad);
    try {
      cli::read_trace(in);
      FAIL("expected TraceError");
    } catch (const cli::TraceError& e) {
      CHECK(e.offset() == first);
    }
  }
  SUBCASE("a dropped record breaks the sequence") {
    std::string bad = text.substr(0, first) + text.substr(second);
    std::istringstream in(bad);
    CHECK_THROWS_WITH_AS(cli::read_trace(in), doctest::Contains("expected 1"), cli::TraceError);
  }
  SUBCASE("intact") {
    std::istringstream in(text);
    CHECK(cli::read_trace(in).size() == static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')));
  }
}
