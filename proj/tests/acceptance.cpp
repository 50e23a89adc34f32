// Acceptance checks. Prints one PASS/FAIL line per criterion; exits non-zero on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <queue>
#include <random>
#include <sstream>

#include "groundwork/cli.hpp"

using namespace groundwork;
using wm::LowState;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& check) {
  Outcome o;
  auto t0 = Clock::now();
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("[%s] %d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), since(t0));
  std::fflush(stdout);
}

ll::TransitionFn native(const env::Environment& e) {
  return [&e](const LowState& s, const std::string& a) { return e.step(s, a).state; };
}

ll::StatePredicate lost(const env::Environment& e) {
  return [&e](const LowState& s) { return e.status(s) == env::Terminal::Loss; };
}

// Uniform-cost search over the native rules, states keyed by canonical JSON.
int dijkstra_to_win(const env::Environment& e, const LowState& s0) {
  using Item = std::pair<int, std::string>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  std::map<std::string, int> dist;
  dist[s0.to_json()] = 0;
  pq.push({0, s0.to_json()});
  while (!pq.empty()) {
    auto [d, key] = pq.top();
    pq.pop();
    if (d > dist[key]) continue;
    LowState s = LowState::from_json(key);
    auto st = e.status(s);
    if (st == env::Terminal::Win) return d;
    if (st == env::Terminal::Loss) continue;
    for (const auto& a : e.actions()) {
      std::string k = e.step(s, a).state.to_json();
      auto it = dist.find(k);
      if (it == dist.end() || d + 1 < it->second) {
        dist[k] = d + 1;
        pq.push({d + 1, k});
      }
    }
  }
  return -1;
}

env::Level shipped(const env::Environment& e, const std::string& name) {
  for (const auto& l : e.shipped_levels())
    if (l.name == name) return l;
  throw std::runtime_error("missing shipped level " + name);
}

std::string goop_trace;
agent::LevelReport goop_report;
std::string goop_last_prompt;

// Oracle Sokoban suite followed by the scripted goop level; returns the concatenated trace.
std::string mock_suite() {
  std::ostringstream out;
  cli::ExperimentConfig soko;
  soko.seed = 5;
  cli::run(soko, &out);

  auto e = env::make_environment("keke");
  synth::MockBackend mock(env::asset_dir() + "/mock/keke_goop");
  agent::TraceWriter trace(&out);
  agent::AgentOptions opts;
  opts.seed = 5;
  agent::Agent a(*e, mock, opts, &trace);
  goop_report = a.run_level(shipped(*e, "level2"));
  goop_last_prompt = a.requests().empty() ? "" : a.requests().back().prompt;
  return out.str();
}

}  // namespace

int main() {
  report(1, "oracle sokoban suite", [] {
    auto t0 = Clock::now();
    cli::ExperimentConfig c;
    auto s = cli::run(c, nullptr);
    double secs = since(t0);
    std::vector<int> calls;
    int max_steps = 0;
    bool all = s.levels.size() == 5;
    for (const auto& r : s.levels) {
      calls.push_back(r.synth_calls);
      max_steps = std::max(max_steps, r.env_steps);
      all = all && r.solved;
    }
    std::string v;
    for (int c2 : calls) v += (v.empty() ? "" : ",") + std::to_string(c2);
    bool ok = all && calls == std::vector<int>{1, 0, 0, 0, 0} && max_steps <= 500 && secs < 120;
    return Outcome{ok, "calls [" + v + "], solved " + std::to_string(s.solved()) + "/5, max steps " +
                           std::to_string(max_steps)};
  });

  report(2, "bfs optimality vs uniform-cost search", [] {
    auto e = env::make_environment("sokoban");
    auto model = ll::program_model(e->builtin_program());
    int checked = 0, wrong = 0;
    for (std::uint64_t seed = 0; checked < 120; ++seed) {
      env::LevelParams p;
      p.width = 5 + static_cast<int>(seed % 3);
      p.height = 5 + static_cast<int>((seed / 3) % 3);
      p.boxes = 1;
      p.obstacles = static_cast<int>(seed % 4);
      auto l = e->random_level(1000 + seed, p);
      auto prob = e->problem(l);
      auto r = ll::solve_subplan(model, e->actions(), l.initial, e->checkers(l), prob.goal, {}, lost(*e));
      int best = dijkstra_to_win(*e, l.initial);
      ++checked;
      if (r.status != ll::SearchStatus::Solved || static_cast<int>(r.actions.size()) != best) ++wrong;
    }
    return Outcome{wrong == 0, std::to_string(checked) + " levels, " + std::to_string(wrong) + " length mismatches"};
  });

  report(3, "segment effects and goal hold in the native environment", [] {
    int levels = 0, solved = 0, violations = 0;
    std::string note;
    for (const auto& id : env::environment_ids()) {
      auto e = env::make_environment(id);
      for (std::uint64_t seed = 0; seed < 40; ++seed) {
        env::LevelParams p;
        p.width = 8 + static_cast<int>(seed % 2);
        p.height = 6 + static_cast<int>((seed / 2) % 2);
        p.boxes = 1 + static_cast<int>(seed % 2);
        p.obstacles = static_cast<int>(seed % 3);
        p.hazards = static_cast<int>(seed % 2);
        auto l = e->random_level(seed, p);
        ++levels;
        auto prob = e->problem(l);
        hl::HighLevelPlan plan;
        try {
          plan = hl::plan_high(e->domain(), prob);
        } catch (const std::runtime_error&) {
          continue;
        }
        auto cs = e->checkers(l);
        auto r = ll::solve_plan(native(*e), e->actions(), l.initial, plan, prob.goal, cs, {}, lost(*e));
        if (r.status != ll::SearchStatus::Solved) continue;
        ++solved;
        LowState s = l.initial;
        for (const auto& seg : r.segments) {
          for (const auto& a : seg.actions) s = e->step(s, a).state;
          if (!wm::check_literals(cs, s, seg.goal)) {
            ++violations;
            if (note.empty()) note = "; first violation " + id + " seed " + std::to_string(seed) + " " + seg.label;
          }
        }
        if (!wm::check_literals(cs, s, prob.goal)) ++violations;
      }
    }
    return Outcome{violations == 0 && solved > 0, std::to_string(levels) + " levels, " + std::to_string(solved) +
                                                      " plans executed, " + std::to_string(violations) +
                                                      " violations" + note};
  });

  report(4, "bilevel speedup on sokoban level4", [] {
    auto e = env::make_environment("sokoban");
    auto l = shipped(*e, "level4");
    auto model = ll::program_model(e->builtin_program());
    auto prob = e->problem(l);
    auto cs = e->checkers(l);
    ll::Budget budget{50'000'000, 500.0, 400};
    auto t0 = Clock::now();
    auto plan = hl::plan_high(e->domain(), prob);
    auto bi = ll::solve_plan(model, e->actions(), l.initial, plan, prob.goal, cs, budget, lost(*e));
    double tb = since(t0);
    t0 = Clock::now();
    auto flat = ll::solve_flat(model, e->actions(), l.initial, prob.goal, cs, budget, lost(*e));
    double tf = since(t0);
    bool flat_timeout = flat.status != ll::SearchStatus::Solved && tf >= 500.0;
    double ratio = tf / std::max(tb, 1e-9);
    bool ok = bi.status == ll::SearchStatus::Solved && tb < 60.0 && (ratio >= 10.0 || flat_timeout);
    char buf[200];
    std::snprintf(buf, sizeof buf, "bilevel %.3f s (%zu actions), flat %.3f s (%s), ratio %.0fx", tb,
                  bi.actions().size(), tf, ll::to_string(flat.status).c_str(), ratio);
    return Outcome{ok, buf};
  });

  report(5, "refinement convergence on the goop level", [] {
    goop_trace = mock_suite();
    bool block = goop_last_prompt.find("ERRORS FROM WORLD MODEL for ABSTRACT PLAN") != std::string::npos;
    bool ok = goop_report.solved && goop_report.refinements <= 4 && goop_report.synth_calls <= 6 && block;
    return Outcome{ok, "solved " + std::string(goop_report.solved ? "yes" : "no") + ", calls " +
                           std::to_string(goop_report.synth_calls) + ", refinements " +
                           std::to_string(goop_report.refinements) + ", diff block in final prompt " +
                           (block ? "yes" : "no")};
  });

  report(6, "exploration filter on the rule fixture", [] {
    auto e = env::make_environment("keke");
    auto l = e->parse_level("env: keke\nname: fixture\n---\nB=Y   F=V\n\n  R= F\n b    r\n");
    auto prob = e->problem(l);
    auto ops = pddl::ground(e->domain(), prob);
    auto cands = agent::enumerate_exploration(prob.init, ops);
    auto cs = e->checkers(l);
    std::vector<std::string> expected, got;
    for (const auto& op : ops)
      if (wm::check_literals(cs, l.initial, op.preconditions) && !wm::check_literals(cs, l.initial, op.effect_literals()))
        expected.push_back(op.label());
    for (const auto& c : cands) got.push_back(c.label());
    bool excluded = std::find(got.begin(), got.end(), "form_rule flag_word is_word win_word") == got.end();
    bool ok = excluded && !got.empty() && got == expected;
    return Outcome{ok, std::to_string(got.size()) + " candidates, formed rule excluded " + (excluded ? "yes" : "no") +
                           ", brute force agrees " + (got == expected ? "yes" : "no")};
  });

  report(7, "learning efficiency arithmetic", [] {
    double a = agent::learning_efficiency(5, 5, 197);
    double b = agent::learning_efficiency(2, 4, 62);
    bool ok = std::abs(a - 0.025381) < 1e-6 && std::abs(b - 0.016129) < 1e-6;
    char buf[100];
    std::snprintf(buf, sizeof buf, "k(5,5,197)=%.6f, k(2,4,62)=%.6f", a, b);
    return Outcome{ok, buf};
  });

  report(8, "builtin programs match native steps", [] {
    std::string detail;
    int total_bad = 0;
    for (const auto& id : env::environment_ids()) {
      auto e = env::make_environment(id);
      auto prog = e->builtin_program();
      wm::Simulator sim;
      std::mt19937_64 rng(4242);
      auto levels = e->shipped_levels();
      env::LevelParams p;
      if (id == "keke") p.width = 8;
      for (std::uint64_t k = 0; k < 10; ++k) {
        p.hazards = static_cast<int>(k % 2);
        p.boxes = 1 + static_cast<int>(k % 2);
        levels.push_back(e->random_level(500 + k, p));
      }
      int bad = 0;
      std::size_t li = 0;
      LowState s = levels[0].initial;
      for (int i = 0; i < 10'000; ++i) {
        if (i % 250 == 0) s = levels[li++ % levels.size()].initial;
        const auto& a = e->actions()[rng() % e->actions().size()];
        auto o = e->step(s, a);
        if (!(sim.simulate(prog, s, a) == o.state)) ++bad;
        s = o.terminal == env::Terminal::None ? o.state : levels[li++ % levels.size()].initial;
      }
      total_bad += bad;
      detail += (detail.empty() ? "" : ", ") + id + " " + std::to_string(bad);
    }
    return Outcome{total_bad == 0, "mismatches per 10000 steps: " + detail};
  });

  report(9, "mock suite traces are byte-identical", [] {
    if (goop_trace.empty()) goop_trace = mock_suite();
    std::string second = mock_suite();
    bool ok = !goop_trace.empty() && goop_trace == second;
    return Outcome{ok, std::to_string(goop_trace.size()) + " bytes, identical " + (ok ? "yes" : "no")};
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
