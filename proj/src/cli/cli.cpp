#include "groundwork/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

namespace groundwork::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

bool looks_like_path(const std::string& ref) {
  return ref.find('/') != std::string::npos || ref.ends_with(".txt");
}

}  // namespace

std::vector<env::Level> resolve_levels(const env::Environment& env, const std::vector<std::string>& refs) {
  std::vector<env::Level> out;
  std::vector<env::Level> shipped;
  bool shipped_loaded = false;
  auto load_shipped = [&] {
    if (!shipped_loaded) shipped = env.shipped_levels();
    shipped_loaded = true;
  };
  for (const auto& ref : refs) {
    if (ref.empty()) continue;
    if (ref == "all") {
      load_shipped();
      out.insert(out.end(), shipped.begin(), shipped.end());
      continue;
    }
    if (looks_like_path(ref)) {
      if (!fs::is_regular_file(ref)) throw ConfigError("level file not found: " + ref);
      try {
        out.push_back(env.load_level(ref));
      } catch (const std::exception& e) {
        throw ConfigError("cannot load level " + ref + ": " + e.what());
      }
      continue;
    }
    load_shipped();
    auto it = std::find_if(shipped.begin(), shipped.end(), [&](const env::Level& l) { return l.name == ref; });
    if (it == shipped.end()) {
      std::string names;
      for (const auto& l : shipped) names += (names.empty() ? "" : ", ") + l.name;
      throw ConfigError("no shipped " + env.id() + " level named '" + ref + "' (available: " + names + ")");
    }
    out.push_back(*it);
  }
  return out;
}

void validate(const ExperimentConfig& c) {
  const auto& ids = env::environment_ids();
  if (std::find(ids.begin(), ids.end(), c.game) == ids.end()) {
    std::string all;
    for (const auto& id : ids) all += (all.empty() ? "" : ", ") + id;
    throw ConfigError("unknown game '" + c.game + "' (expected one of: " + all + ")");
  }
  if (c.budgets.synth_calls <= 0) throw ConfigError("--budget-calls must be positive");
  if (c.budgets.env_steps <= 0) throw ConfigError("--budget-steps must be positive");
  if (c.budgets.warmup_actions < 0) throw ConfigError("warmup action count must not be negative");
  if (c.budgets.planner.max_nodes == 0) throw ConfigError("planner node budget must be positive");
  if (!(c.budgets.planner.max_seconds > 0)) throw ConfigError("planner time budget must be positive");
  if (c.backend == "mock") {
    if (c.mock_dir.empty()) throw ConfigError("the mock backend needs --mock-dir");
    if (!fs::is_directory(c.mock_dir)) throw ConfigError("mock directory not found: " + c.mock_dir);
  } else if (c.backend == "http") {
    if (c.endpoint.empty()) throw ConfigError("the http backend needs --endpoint");
  } else if (c.backend != "oracle") {
    throw ConfigError("unknown backend '" + c.backend + "' (expected mock, oracle or http)");
  }
  auto e = env::make_environment(c.game);
  resolve_levels(*e, c.levels);
}

std::unique_ptr<synth::Backend> make_backend(const ExperimentConfig& c, const env::Environment& env) {
  if (c.backend == "mock") return std::make_unique<synth::MockBackend>(c.mock_dir);
  if (c.backend == "oracle") return std::make_unique<synth::OracleBackend>(env.builtin_program_source());
  if (c.backend == "http") {
    synth::HttpConfig h;
    h.endpoint = c.endpoint;
    h.model = c.model;
    try {
      return std::make_unique<synth::HttpBackend>(h);
    } catch (const synth::ConfigError& e) {
      throw ConfigError(e.what());
    }
  }
  throw ConfigError("unknown backend '" + c.backend + "'");
}

int Summary::solved() const {
  return static_cast<int>(std::count_if(levels.begin(), levels.end(), [](const auto& r) { return r.solved; }));
}

int Summary::total_synth_calls() const {
  int n = 0;
  for (const auto& r : levels) n += r.synth_calls;
  return n;
}

int Summary::total_steps() const {
  int n = 0;
  for (const auto& r : levels) n += r.env_steps;
  return n;
}

double Summary::success_rate() const {
  return levels.empty() ? 0.0 : static_cast<double>(solved()) / static_cast<double>(levels.size());
}

double Summary::efficiency() const {
  return agent::learning_efficiency(solved(), static_cast<int>(levels.size()), total_steps());
}

json Summary::to_json() const {
  json lv = json::array();
  json calls = json::array();
  for (const auto& r : levels) {
    lv.push_back({{"level", r.level},
                  {"solved", r.solved},
                  {"status", agent::to_string(r.status)},
                  {"synth_calls", r.synth_calls},
                  {"refinements", r.refinements},
                  {"env_steps", r.env_steps},
                  {"plans_attempted", r.plans_attempted},
                  {"explorations", r.explorations},
                  {"tokens", r.tokens},
                  {"program_version", r.program_version}});
    calls.push_back(r.synth_calls);
  }
  return {{"game", game},
          {"levels", lv},
          {"totals",
           {{"levels", levels.size()},
            {"solved", solved()},
            {"success_rate", success_rate()},
            {"synth_calls", total_synth_calls()},
            {"synth_call_vector", calls},
            {"env_steps", total_steps()},
            {"learning_efficiency", efficiency()}}}};
}

std::string Summary::to_csv() const {
  std::ostringstream os;
  os << "level,solved,status,synth_calls,refinements,env_steps,plans_attempted,explorations,tokens,program_version\n";
  for (const auto& r : levels)
    os << r.level << ',' << (r.solved ? 1 : 0) << ',' << agent::to_string(r.status) << ',' << r.synth_calls << ','
       << r.refinements << ',' << r.env_steps << ',' << r.plans_attempted << ',' << r.explorations << ',' << r.tokens
       << ',' << r.program_version << '\n';
  return os.str();
}

std::string Summary::to_table() const {
  std::vector<std::vector<std::string>> rows{
      {"level", "solved", "status", "calls", "refines", "steps", "plans", "explore", "tokens"}};
  for (const auto& r : levels)
    rows.push_back({r.level, r.solved ? "yes" : "no", agent::to_string(r.status), std::to_string(r.synth_calls),
                    std::to_string(r.refinements), std::to_string(r.env_steps), std::to_string(r.plans_attempted),
                    std::to_string(r.explorations), std::to_string(r.tokens)});
  std::vector<std::size_t> width(rows[0].size(), 0);
  for (const auto& row : rows)
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  std::ostringstream os;
  os << "game: " << game << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      os << row[i];
      if (i + 1 < row.size()) os << std::string(width[i] - row[i].size() + 2, ' ');
    }
    os << "\n";
  }
  os << "\nsolved " << solved() << "/" << levels.size() << " (success rate " << fixed(success_rate(), 4) << ")\n";
  os << "synth calls " << total_synth_calls() << " [";
  for (std::size_t i = 0; i < levels.size(); ++i) os << (i ? "," : "") << levels[i].synth_calls;
  os << "]\n";
  os << "env steps " << total_steps() << "\n";
  os << "learning efficiency k " << fixed(efficiency()) << "\n";
  return os.str();
}

Summary run(const ExperimentConfig& config, std::ostream* trace_out) {
  validate(config);
  auto e = env::make_environment(config.game);
  auto levels = resolve_levels(*e, config.levels);
  auto backend = make_backend(config, *e);

  agent::AgentOptions opts;
  opts.budgets = config.budgets;
  opts.bilevel = config.bilevel;
  opts.seed = config.seed;
  opts.temperature = config.temperature;
  opts.model = config.model;

  agent::TraceWriter trace(trace_out);
  json names = json::array();
  for (const auto& l : levels) names.push_back(l.name);
  trace.write("run_start", {{"game", config.game},
                            {"backend", backend->name()},
                            {"seed", config.seed},
                            {"bilevel", config.bilevel},
                            {"levels", names},
                            {"budgets",
                             {{"synth_calls", config.budgets.synth_calls},
                              {"env_steps", config.budgets.env_steps},
                              {"warmup_actions", config.budgets.warmup_actions},
                              {"planner_nodes", config.budgets.planner.max_nodes},
                              {"planner_depth", config.budgets.planner.max_depth}}}});

  agent::Agent a(*e, *backend, opts, &trace);
  Summary s;
  s.game = config.game;
  for (const auto& l : levels) s.levels.push_back(a.run_level(l));
  return s;
}

Summary run_to_directory(const ExperimentConfig& config) {
  if (config.out_dir.empty()) throw ConfigError("no output directory given");
  validate(config);
  fs::create_directories(config.out_dir);
  fs::path dir(config.out_dir);
  std::ofstream trace(dir / "trace.jsonl", std::ios::binary);
  if (!trace) throw ConfigError("cannot write to " + (dir / "trace.jsonl").string());
  Summary s = run(config, &trace);
  std::ofstream(dir / "summary.csv", std::ios::binary) << s.to_csv();
  std::ofstream(dir / "summary.json", std::ios::binary) << s.to_json().dump(2) << "\n";
  std::ofstream(dir / "summary.txt", std::ios::binary) << s.to_table();
  return s;
}

std::vector<json> read_trace(std::istream& in) {
  std::vector<json> out;
  std::size_t offset = 0;
  std::string line;
  while (std::getline(in, line)) {
    bool newline = !in.eof();
    std::size_t next = offset + line.size() + (newline ? 1 : 0);
    if (line.empty() && newline) {
      offset = next;
      continue;
    }
    if (!newline)
      throw TraceError("truncated trace: record at byte offset " + std::to_string(offset) +
                           " has no line ending (last valid record ends at byte " + std::to_string(offset) + ")",
                       offset);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw TraceError("corrupt trace record at byte offset " + std::to_string(offset) + ": " + e.what() +
                           " (last valid record ends at byte " + std::to_string(offset) + ")",
                       offset);
    }
    if (!j.is_object() || !j.contains("event") || !j["event"].is_string() || !j.contains("seq") ||
        !j["seq"].is_number_unsigned())
      throw TraceError("trace record at byte offset " + std::to_string(offset) + " lacks \"event\" or \"seq\"", offset);
    if (j["seq"].get<std::uint64_t>() != out.size())
      throw TraceError("trace record at byte offset " + std::to_string(offset) + " has seq " +
                           std::to_string(j["seq"].get<std::uint64_t>()) + ", expected " + std::to_string(out.size()) +
                           " (records missing before this point)",
                       offset);
    out.push_back(std::move(j));
    offset = next;
  }
  return out;
}

namespace {

struct TraceContext {
  std::unique_ptr<env::Environment> env;
  json budgets;
};

const env::Environment& require_env(const TraceContext& ctx, std::size_t i) {
  if (!ctx.env) throw TraceError("trace record " + std::to_string(i) + " precedes any level_start", 0);
  return *ctx.env;
}

wm::LowState state_of(const json& j) { return wm::LowState::from_json(j.dump()); }

}  // namespace

Summary summarize_trace(const std::vector<json>& records) {
  Summary s;
  TraceContext ctx;
  bool has_program = false;
  bool pending = false;
  bool unsolvable = false;
  wm::LowState initial, current;
  agent::LevelReport* r = nullptr;

  auto close = [&] {
    if (!r) return;
    const auto& e = *ctx.env;
    if (e.status(current) == env::Terminal::Win) {
      r->status = agent::LevelStatus::Solved;
    } else if (unsolvable) {
      r->status = agent::LevelStatus::UnsolvableAbstract;
    } else if (!has_program || pending) {
      r->status = agent::LevelStatus::CallBudget;
    } else {
      r->status = agent::LevelStatus::StepBudget;
    }
    r->solved = r->status == agent::LevelStatus::Solved;
    r = nullptr;
  };

  for (std::size_t i = 0; i < records.size(); ++i) {
    const json& j = records[i];
    const std::string ev = j.at("event");
    if (ev == "run_start") {
      s.game = j.at("game");
      ctx.budgets = j.value("budgets", json::object());
    } else if (ev == "level_start") {
      close();
      if (!ctx.env || ctx.env->id() != j.at("env").get<std::string>()) ctx.env = env::make_environment(j.at("env").get<std::string>());
      if (s.game.empty()) s.game = j.at("env");
      s.levels.emplace_back();
      r = &s.levels.back();
      r->level = j.at("level");
      r->program_version = j.value("program_version", 0);
      has_program = has_program || r->program_version > 0;
      pending = false;
      unsolvable = false;
      initial = current = state_of(j.at("initial"));
    } else if (ev == "level_report") {
      close();
    } else {
      require_env(ctx, i);
      if (!r) throw TraceError("trace record " + std::to_string(i) + " (" + ev + ") is outside a level", 0);
      if (ev == "warmup") {
        for (const auto& t : j.at("transitions")) {
          ++r->env_steps;
          current = state_of(t.at("next"));
        }
      } else if (ev == "transition") {
        ++r->env_steps;
        current = state_of(j.at("next"));
      } else if (ev == "reset") {
        current = initial;
      } else if (ev == "synth_request") {
        ++r->synth_calls;
        if (j.at("kind") == "refine") {
          ++r->refinements;
          pending = false;
        }
      } else if (ev == "synth_response") {
        r->tokens += j.value("tokens", 0L);
      } else if (ev == "program") {
        r->program_version = j.at("version");
        has_program = true;
      } else if (ev == "plan_high") {
        if (j.at("solvable").get<bool>())
          ++r->plans_attempted;
        else
          unsolvable = true;
      } else if (ev == "exploration") {
        ++r->explorations;
      } else if (ev == "mismatch" || ev == "model_error") {
        pending = true;
      }
    }
  }
  close();
  return s;
}

void replay(const std::vector<json>& records, std::ostream& out) {
  TraceContext ctx;
  wm::LowState initial;
  std::string last_frame;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const json& j = records[i];
    const std::string ev = j.at("event");
    if (ev == "run_start") {
      out << "run: game " << j.at("game").get<std::string>() << ", backend " << j.value("backend", "?") << ", seed "
          << j.value("seed", 0) << (j.value("bilevel", true) ? "" : ", flat search") << "\n";
      continue;
    }
    if (ev == "level_start") {
      if (!ctx.env || ctx.env->id() != j.at("env").get<std::string>()) ctx.env = env::make_environment(j.at("env").get<std::string>());
      initial = state_of(j.at("initial"));
      out << "\n=== level " << j.at("level").get<std::string>() << " (" << ctx.env->id() << ") ===\n";
      out << ctx.env->render(initial);
      continue;
    }
    const auto& e = require_env(ctx, i);
    if (ev == "warmup") {
      int k = 0;
      for (const auto& t : j.at("transitions")) {
        out << "\nwarmup " << k++ << ": " << t.at("action").get<std::string>();
        if (t.value("outcome", "none") != "none") out << " -> " << t.at("outcome").get<std::string>();
        out << "\n" << e.render(state_of(t.at("next")));
      }
    } else if (ev == "synth_request") {
      out << "\n-- synth call " << j.at("attempt").get<int>() << " (" << j.at("kind").get<std::string>() << ")\n";
    } else if (ev == "synth_error") {
      out << "-- synth error: " << j.at("error").get<std::string>() << "\n";
    } else if (ev == "program") {
      out << "-- program version " << j.at("version").get<int>();
      if (!j.value("load_error", "").empty()) out << " (does not compile: " << j.at("load_error").get<std::string>() << ")";
      out << "\n";
    } else if (ev == "plan_high") {
      if (!j.at("solvable").get<bool>()) {
        out << "abstract plan: none\n";
      } else {
        out << "abstract plan:";
        for (const auto& step : j.at("steps")) out << "\n  " << step.get<std::string>();
        out << "\n";
      }
    } else if (ev == "plan_low") {
      out << "low-level plan: " << j.at("status").get<std::string>() << "\n";
    } else if (ev == "transition") {
      out << "\nstep " << j.at("step").get<int>() << " [" << j.at("label").get<std::string>() << "] "
          << j.at("action").get<std::string>();
      if (j.at("outcome") != "none") out << " -> " << j.at("outcome").get<std::string>();
      if (!j.value("predicted_match", true)) out << "  (mispredicted)";
      out << "\n" << e.render(state_of(j.at("next")));
    } else if (ev == "mismatch") {
      std::string label = j.at("label");
      out << "\nERRORS FROM WORLD MODEL for ABSTRACT PLAN " << (label.empty() ? "random actions" : label) << ":\n";
      out << "at action " << j.at("index").get<int>() << " ('" << j.at("action").get<std::string>() << "')\n";
      out << "predicted:\n" << e.render(state_of(j.at("predicted")));
      out << "actual:\n" << e.render(state_of(j.at("actual")));
      out << "Your prediction errors:\n" << j.at("diff").get<std::string>();
    } else if (ev == "model_error") {
      out << "\nmodel error on '" << j.at("action").get<std::string>() << "': " << j.at("error").get<std::string>() << "\n";
    } else if (ev == "exploration") {
      out << "exploring (" << j.at("candidates").size() << " candidates)\n";
    } else if (ev == "exploration_plan") {
      out << "exploration goal: " << j.at("label").get<std::string>() << "\n";
    } else if (ev == "random_probe") {
      out << "random probe of " << j.at("actions").size() << " actions\n";
    } else if (ev == "reset") {
      out << "\nreset: " << j.at("reason").get<std::string>() << "\n" << e.render(initial);
    } else if (ev == "level_report") {
      if (j.at("solved").get<bool>())
        out << "*** WIN ***\n";
      else
        out << "*** not solved: " << j.at("status").get<std::string>() << " ***\n";
      out << "calls " << j.at("synth_calls").get<int>() << ", steps " << j.at("env_steps").get<int>()
          << ", refinements " << j.at("refinements").get<int>() << "\n";
    }
  }
}

namespace {

int cmd_plan(const std::string& game, const std::string& level_ref, bool bilevel, std::size_t nodes, double seconds,
             std::ostream& out) {
  auto e = env::make_environment(game);
  auto levels = resolve_levels(*e, {level_ref});
  if (levels.size() != 1) throw ConfigError("--level must name exactly one level");
  const auto& level = levels.front();
  auto model = ll::program_model(e->builtin_program());
  auto problem = e->problem(level);
  auto checkers = e->checkers(level);
  ll::Budget budget{nodes, seconds, 400};
  auto dead = [&](const wm::LowState& s) { return e->status(s) == env::Terminal::Loss; };
  auto t0 = std::chrono::steady_clock::now();
  ll::PlanResult r;
  if (bilevel) {
    auto high = hl::plan_high(e->domain(), problem);
    r = ll::solve_plan(model, e->actions(), level.initial, high, problem.goal, checkers, budget, dead);
  } else {
    r = ll::solve_flat(model, e->actions(), level.initial, problem.goal, checkers, budget, dead);
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out << ll::format_plan(r);
  std::cerr << "status " << ll::to_string(r.status) << ", " << r.actions().size() << " actions, " << r.stats.expanded
            << " expanded, " << fixed(secs, 3) << " s\n";
  return r.status == ll::SearchStatus::Solved ? 0 : 1;
}

std::vector<std::string> split_levels(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bilevel planning agent with learned transition programs"};
  app.require_subcommand(1);

  ExperimentConfig cfg;
  std::string levels = "all";
  bool no_bilevel = false;
  auto* run_cmd = app.add_subcommand("run", "Run the agent over a list of levels");
  run_cmd->add_option("--game", cfg.game, "sokoban, pushboulders, keke, clusterbox or babyai")->capture_default_str();
  run_cmd->add_option("--levels", levels, "Comma-separated level names or files; \"all\" for the shipped set")
      ->capture_default_str();
  run_cmd->add_option("--backend", cfg.backend, "mock, oracle or http")->capture_default_str();
  run_cmd->add_option("--mock-dir", cfg.mock_dir, "Directory of numbered mock responses");
  run_cmd->add_option("--endpoint", cfg.endpoint, "Chat-completions URL for the http backend");
  run_cmd->add_option("--model", cfg.model, "Model name sent to the http backend")->capture_default_str();
  run_cmd->add_option("--budget-calls", cfg.budgets.synth_calls, "Synthesis calls per level")->capture_default_str();
  run_cmd->add_option("--budget-steps", cfg.budgets.env_steps, "Environment steps per level")->capture_default_str();
  run_cmd->add_option("--planner-nodes", cfg.budgets.planner.max_nodes, "Node cap per search")->capture_default_str();
  run_cmd->add_option("--planner-seconds", cfg.budgets.planner.max_seconds, "Time cap per search")->capture_default_str();
  run_cmd->add_flag("--no-bilevel", no_bilevel, "Search straight for the goal without abstract plans");
  run_cmd->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  run_cmd->add_option("--temperature", cfg.temperature, "Sampling temperature")->capture_default_str();
  run_cmd->add_option("--out", cfg.out_dir, "Output directory for trace and summaries");

  std::string trace_path;
  bool summary_only = false;
  auto* replay_cmd = app.add_subcommand("replay", "Render a recorded trace");
  replay_cmd->add_option("trace", trace_path, "trace.jsonl file")->required();
  replay_cmd->add_flag("--summary", summary_only, "Print the summary rebuilt from the trace instead");

  std::string plan_game = "sokoban", plan_level;
  bool plan_flat = false;
  std::size_t plan_nodes = 2'000'000;
  double plan_seconds = 500.0;
  auto* plan_cmd = app.add_subcommand("plan", "Plan one level with the builtin program");
  plan_cmd->add_option("--game", plan_game)->capture_default_str();
  plan_cmd->add_option("--level", plan_level, "Level name or file")->required();
  plan_cmd->add_flag("--no-bilevel", plan_flat, "Flat search");
  plan_cmd->add_option("--planner-nodes", plan_nodes)->capture_default_str();
  plan_cmd->add_option("--planner-seconds", plan_seconds)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*run_cmd) {
      cfg.levels = split_levels(levels);
      cfg.bilevel = !no_bilevel;
      Summary s = cfg.out_dir.empty() ? run(cfg, nullptr) : run_to_directory(cfg);
      std::cout << s.to_table();
      return s.solved() == static_cast<int>(s.levels.size()) ? 0 : 1;
    }
    if (*replay_cmd) {
      std::ifstream in(trace_path, std::ios::binary);
      if (!in) throw ConfigError("cannot open trace " + trace_path);
      auto records = read_trace(in);
      if (summary_only)
        std::cout << summarize_trace(records).to_table();
      else
        replay(records, std::cout);
      return 0;
    }
    if (*plan_cmd) return cmd_plan(plan_game, plan_level, !plan_flat, plan_nodes, plan_seconds, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const TraceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}

}  // namespace groundwork::cli
