#include <map>
#include <queue>
#include <random>

#include "doctest.h"
#include "groundwork/environments.hpp"
#include "groundwork/llplanner.hpp"

using namespace groundwork;
using wm::Coord;
using wm::LowState;

namespace {

ll::TransitionFn native(const env::Environment& e) {
  return [&e](const LowState& s, const std::string& a) { return e.step(s, a).state; };
}

ll::StatePredicate lost(const env::Environment& e) {
  return [&e](const LowState& s) { return e.status(s) == env::Terminal::Loss; };
}

// Uniform-cost search on the native rules, keyed by JSON text.
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

}  // namespace

TEST_CASE("bfs finds a shortest path in action order") {
  auto e = env::make_environment("sokoban");
  LowState s(5, 3);
  s.add("agent", {0, 1});
  s.add("box", {2, 0});
  s.add("hole", {4, 2});
  auto goal = [](const LowState& x) { return x.coords("agent")[0] == Coord{3, 1}; };
  auto r = ll::bfs(native(*e), e->actions(), s, goal, {});
  REQUIRE(r.status == ll::SearchStatus::Solved);
  CHECK(r.actions == std::vector<std::string>{"right", "right", "right"});
  CHECK(r.final_state.coords("agent")[0] == Coord{3, 1});

  // Already satisfied: empty plan.
  auto r0 = ll::bfs(native(*e), e->actions(), s, [](const LowState&) { return true; }, {});
  CHECK(r0.status == ll::SearchStatus::Solved);
  CHECK(r0.actions.empty());

  // Unreachable goal exhausts the space.
  auto ru = ll::bfs(native(*e), e->actions(), s, [](const LowState&) { return false; }, {});
  CHECK(ru.status == ll::SearchStatus::Unsolvable);
  CHECK(ru.stats.expanded > 0);

  ll::Budget tiny;
  tiny.max_nodes = 3;
  CHECK(ll::bfs(native(*e), e->actions(), s, goal, tiny).status == ll::SearchStatus::BudgetExceeded);
  tiny = {};
  tiny.max_depth = 2;
  CHECK(ll::bfs(native(*e), e->actions(), s, goal, tiny).status == ll::SearchStatus::BudgetExceeded);
}

TEST_CASE("bfs plan length matches uniform-cost search (property)") {
  auto e = env::make_environment("sokoban");
  env::LevelParams p;
  p.width = 7;
  p.height = 6;
  p.boxes = 1;
  p.obstacles = 2;
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    auto l = e->random_level(seed, p);
    auto r = ll::bfs(native(*e), e->actions(), l.initial,
                     [&](const LowState& s) { return e->status(s) == env::Terminal::Win; }, {}, lost(*e));
    int best = dijkstra_to_win(*e, l.initial);
    REQUIRE(best > 0);
    REQUIRE(r.status == ll::SearchStatus::Solved);
    CHECK(static_cast<int>(r.actions.size()) == best);
    LowState s = l.initial;
    for (const auto& a : r.actions) s = e->step(s, a).state;
    CHECK(e->status(s) == env::Terminal::Win);
  }
}

TEST_CASE("dead ends are not expanded") {
  auto e = env::make_environment("pushboulders");
  LowState s(4, 1);
  s.add("agent", {0, 0});
  s.add("poison_red", {1, 0});
  s.add("goal", {3, 0});
  auto win = [&](const LowState& x) { return e->status(x) == env::Terminal::Win; };
  auto r = ll::bfs(native(*e), e->actions(), s, win, {}, lost(*e));
  CHECK(r.status == ll::SearchStatus::Unsolvable);
}

TEST_CASE("segment goals protect achieved problem goals") {
  auto e = env::make_environment("sokoban");
  auto l = e->shipped_levels().front();
  auto prob = e->problem(l);
  auto plan = hl::plan_high(e->domain(), prob);
  REQUIRE(!plan.steps.empty());
  auto cs = e->checkers(l);
  auto g = ll::segment_goal(plan.steps[0], prob.goal, cs, l.initial);
  auto eff = plan.steps[0].effect_literals();
  REQUIRE(g.size() >= eff.size());
  CHECK(std::equal(eff.begin(), eff.end(), g.begin()));
}

TEST_CASE("bilevel plans solve every shipped level with the builtin program") {
  for (const auto& id : env::environment_ids()) {
    auto e = env::make_environment(id);
    auto model = ll::program_model(e->builtin_program());
    for (const auto& l : e->shipped_levels()) {
      CAPTURE(l.name);
      auto prob = e->problem(l);
      auto plan = hl::plan_high(e->domain(), prob);
      auto cs = e->checkers(l);
      auto r = ll::solve_plan(model, e->actions(), l.initial, plan, prob.goal, cs, {}, lost(*e));
      REQUIRE(r.status == ll::SearchStatus::Solved);
      CHECK(r.segments.size() == plan.steps.size());
      LowState s = l.initial;
      for (const auto& seg : r.segments) {
        CHECK(seg.start == s);
        for (const auto& a : seg.actions) s = e->step(s, a).state;
        CHECK(s == seg.predicted_end);
        CHECK(wm::check_literals(cs, s, seg.goal));
      }
      CHECK(e->status(s) == env::Terminal::Win);
    }
  }
}

TEST_CASE("flat search reaches the same goal") {
  auto e = env::make_environment("sokoban");
  auto l = e->shipped_levels().front();
  auto prob = e->problem(l);
  auto r = ll::solve_flat(native(*e), e->actions(), l.initial, prob.goal, e->checkers(l), {}, lost(*e));
  REQUIRE(r.status == ll::SearchStatus::Solved);
  REQUIRE(r.segments.size() == 1);
  CHECK(r.segments[0].label == "flat");
  LowState s = l.initial;
  for (const auto& a : r.actions()) s = e->step(s, a).state;
  CHECK(e->status(s) == env::Terminal::Win);
}

TEST_CASE("model errors propagate") {
  auto e = env::make_environment("sokoban");
  wm::TransitionProgram bad("def transition(state, action):\n    return state['nope']\n", 1, "bad");
  auto l = e->shipped_levels().front();
  CHECK_THROWS_AS(ll::bfs(ll::program_model(bad), e->actions(), l.initial,
                          [](const LowState&) { return false; }, {}),
                  wm::SimulationError);
}

TEST_CASE("plan text format round-trips") {
  auto e = env::make_environment("sokoban");
  auto l = e->shipped_levels()[2];
  auto prob = e->problem(l);
  auto high = hl::plan_high(e->domain(), prob);
  auto r = ll::solve_plan(native(*e), e->actions(), l.initial, high, prob.goal, e->checkers(l), {}, lost(*e));
  REQUIRE(r.status == ll::SearchStatus::Solved);
  std::string text = ll::format_plan(r);
  CHECK(text.rfind("; segment " + r.segments[0].label + "\n", 0) == 0);
  auto parsed = ll::parse_plan(text);
  REQUIRE(parsed.size() == r.segments.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    CHECK(parsed[i].first == r.segments[i].label);
    CHECK(parsed[i].second == r.segments[i].actions);
  }
  CHECK(ll::parse_plan("; note\n\n; segment a\nup\r\n").at(0).second == std::vector<std::string>{"up"});
  CHECK_THROWS_AS(ll::parse_plan("up\n"), std::invalid_argument);
}
