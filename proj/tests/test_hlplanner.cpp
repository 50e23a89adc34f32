#include <deque>
#include <map>
#include <random>
#include <string>

#include "doctest.h"
#include "fixtures.hpp"
#include "groundwork/hlplanner.hpp"

using namespace groundwork;
using pddl::Atom;
using pddl::Literal;

namespace {

// Independent oracle: plain BFS over std::set states using apply().
int bfs_distance(const pddl::Domain& d, const pddl::Problem& p) {
  auto ops = pddl::ground(d, p);
  std::map<pddl::AbstractState, int> dist{{p.init, 0}};
  std::deque<pddl::AbstractState> q{p.init};
  while (!q.empty()) {
    auto s = q.front();
    q.pop_front();
    if (pddl::holds(s, p.goal)) return dist[s];
    for (const auto& op : ops) {
      if (!pddl::holds(s, op.preconditions)) continue;
      auto t = hl::apply(s, op);
      if (dist.emplace(t, dist[s] + 1).second) q.push_back(t);
    }
  }
  return -1;
}

}  // namespace

TEST_CASE("apply") {
  auto d = pddl::parse_domain(fixtures::kSokobanDomain);
  auto p = pddl::parse_problem(fixtures::kSokobanProblem, d);
  auto ops = pddl::ground(d, p);
  pddl::AbstractState s{pddl::parse_atom("(unstored_box b1)")};
  CHECK(hl::apply(s, ops[0]).empty());
  CHECK_THROWS_AS(hl::apply(s, ops[1]), hl::PreconditionError);
  try {
    hl::apply(s, ops[1]);
  } catch (const hl::PreconditionError& e) {
    CHECK(e.literal().atom.str() == "(unstored_box b2)");
  }

  auto k = pddl::parse_domain(fixtures::kKekeDomain);
  auto kp = pddl::parse_problem(fixtures::kKekeProblem, k);
  for (const auto& op : pddl::ground(k, kp)) {
    if (op.label() != "form_rule rock is flag") continue;
    auto next = hl::apply(kp.init, op);
    CHECK(next.count(pddl::parse_atom("(rule_formed rock is flag)")) == 1);
    CHECK(next.count(pddl::parse_atom("(rule_formable rock is flag)")) == 1);
  }

  pddl::GroundedOperator noop;
  noop.schema = "noop";
  CHECK(hl::apply(s, noop) == s);
}

TEST_CASE("plan_high: box storage needs both pushes") {
  auto d = pddl::parse_domain(fixtures::kSokobanDomain);
  auto p = pddl::parse_problem(fixtures::kSokobanProblem, d);
  auto plan = hl::plan_high(d, p);
  CHECK(plan.labels() == std::vector<std::string>{"push_to_hole b1", "push_to_hole b2"});
  CHECK(plan.cost() == 2);
  CHECK(hl::validate(plan, d, p));
  CHECK(static_cast<int>(plan.cost()) == bfs_distance(d, p));
}

TEST_CASE("plan_high: trivial and unsolvable problems") {
  auto d = pddl::parse_domain(fixtures::kSokobanDomain);
  auto solved = pddl::parse_problem(
      "(define (problem t) (:domain sokoban) (:objects b1 - box) (:init) (:goal (not (unstored_box b1))))", d);
  auto plan = hl::plan_high(d, solved);
  CHECK(plan.steps.empty());
  CHECK(hl::validate(plan, d, solved));

  auto unsolvable = pddl::parse_problem(
      "(define (problem t) (:domain sokoban) (:objects b1 - box) (:init) (:goal (unstored_box b1)))", d);
  CHECK_THROWS_AS(hl::plan_high(d, unsolvable), hl::UnsolvableError);
}

TEST_CASE("plan_high: rule formation") {
  auto k = pddl::parse_domain(fixtures::kKekeDomain);
  auto kp = pddl::parse_problem(fixtures::kKekeProblem, k);
  auto plan = hl::plan_high(k, kp);
  CHECK(plan.labels() == std::vector<std::string>{"form_rule rock is flag"});
}

TEST_CASE("validate rejects swapped dependent steps") {
  auto d = pddl::parse_domain(fixtures::kChainDomain);
  auto p = pddl::parse_problem(fixtures::kChainProblem, d);
  auto plan = hl::plan_high(d, p);
  REQUIRE(plan.labels() == std::vector<std::string>{"go a b", "go b c"});
  CHECK(hl::validate(plan, d, p));
  std::swap(plan.steps[0], plan.steps[1]);
  CHECK_FALSE(hl::validate(plan, d, p));
}

TEST_CASE("node budget") {
  auto d = pddl::parse_domain(fixtures::kChainDomain);
  auto p = pddl::parse_problem(fixtures::kChainProblem, d);
  hl::PlannerOptions opts;
  opts.max_nodes = 1;
  CHECK_THROWS_AS(hl::plan_high(d, p, opts), hl::BudgetExceededError);
}

TEST_CASE("parse_sas_plan") {
  auto d = pddl::parse_domain(fixtures::kChainDomain);
  auto p = pddl::parse_problem(fixtures::kChainProblem, d);
  auto plan = hl::parse_sas_plan("(go a b)\n(GO b c)\n; cost = 2 (unit cost)\n", d, p);
  CHECK(plan.labels() == std::vector<std::string>{"go a b", "go b c"});
  CHECK_THROWS(hl::parse_sas_plan("(go a z)\n", d, p));
}

TEST_CASE("optimality against an independent BFS oracle (property)") {
  std::mt19937 rng(2024);
  int checked = 0;
  for (int trial = 0; trial < 150; ++trial) {
    int n = 3 + static_cast<int>(rng() % 5);
    std::string objects, init = "(at n0)";
    for (int i = 0; i < n; ++i) objects += " n" + std::to_string(i);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && rng() % 4 == 0) init += " (link n" + std::to_string(i) + " n" + std::to_string(j) + ")";
    std::string goal = "(and (at n" + std::to_string(n - 1) + ")";
    if (rng() % 2) goal += " (visited n" + std::to_string(rng() % n) + ")";
    goal += ")";
    auto d = pddl::parse_domain(fixtures::kChainDomain);
    auto p = pddl::parse_problem(
        "(define (problem r) (:domain chain) (:objects" + objects + " - node) (:init " + init + ") (:goal " + goal + "))",
        d);
    int oracle = bfs_distance(d, p);
    for (auto mode : {hl::SearchMode::BreadthFirst, hl::SearchMode::GoalCountAStar}) {
      hl::PlannerOptions opts;
      opts.mode = mode;
      if (oracle < 0) {
        CHECK_THROWS_AS(hl::plan_high(d, p, opts), hl::UnsolvableError);
        continue;
      }
      auto plan = hl::plan_high(d, p, opts);
      CHECK(hl::validate(plan, d, p));
      if (mode == hl::SearchMode::BreadthFirst) {
        CHECK(static_cast<int>(plan.cost()) == oracle);
        CHECK(plan.labels() == hl::plan_high(d, p, opts).labels());
        ++checked;
      }
    }
  }
  CHECK(checked > 30);
}
