#pragma once

// Low-level planning: breadth-first search over states predicted by a
// transition model, one search per abstract step (bilevel) or one search for
// the whole goal (flat ablation).

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "groundwork/hlplanner.hpp"
#include "groundwork/pddl.hpp"
#include "groundwork/worldmodel.hpp"

namespace groundwork::ll {

using wm::LowState;

using TransitionFn = std::function<LowState(const LowState&, const std::string&)>;
using StatePredicate = std::function<bool(const LowState&)>;

struct Budget {
  std::size_t max_nodes = 500'000;  // distinct states generated
  double max_seconds = 60.0;
  std::size_t max_depth = 400;
};

enum class SearchStatus { Solved, Unsolvable, BudgetExceeded };
std::string to_string(SearchStatus s);

struct SearchStats {
  std::size_t expanded = 0;
  std::size_t generated = 0;
  double seconds = 0.0;

  SearchStats& operator+=(const SearchStats& o);
};

struct SubplanResult {
  SearchStatus status = SearchStatus::Unsolvable;
  std::vector<std::string> actions;
  LowState final_state;  // predicted state after the actions
  SearchStats stats;
};

/// Breadth-first search from s0 until `goal` holds. Successors are generated in
/// the given action order, so the first shortest plan in that order wins.
/// States for which `dead_end` holds are never expanded. Model errors
/// (wm::SimulationError) propagate to the caller.
SubplanResult bfs(const TransitionFn& model, const std::vector<std::string>& actions, const LowState& s0,
                  const StatePredicate& goal, const Budget& budget, const StatePredicate& dead_end = {});

/// BFS until every goal literal evaluates as required under the checkers.
SubplanResult solve_subplan(const TransitionFn& model, const std::vector<std::string>& actions, const LowState& s0,
                            const wm::CheckerSet& checkers, const std::vector<pddl::Literal>& goal,
                            const Budget& budget, const StatePredicate& dead_end = {});

struct Segment {
  std::string label;                 // abstract step label, "flat" for the ablation
  std::vector<pddl::Literal> goal;   // EFF literals plus protected problem-goal literals
  std::vector<std::string> actions;
  LowState start;
  LowState predicted_end;
  SearchStats stats;
  SearchStatus status = SearchStatus::Unsolvable;
};

struct PlanResult {
  SearchStatus status = SearchStatus::Unsolvable;
  std::vector<Segment> segments;  // the last one is the failing segment unless solved
  SearchStats stats;

  std::vector<std::string> actions() const;
};

/// Goal for one abstract step: its effects plus every problem-goal literal
/// that already holds in `s` (so earlier achievements are not undone).
std::vector<pddl::Literal> segment_goal(const pddl::GroundedOperator& op, const std::vector<pddl::Literal>& problem_goal,
                                        const wm::CheckerSet& checkers, const LowState& s);

/// Refines each abstract step in order from the predicted end of the previous one.
PlanResult solve_plan(const TransitionFn& model, const std::vector<std::string>& actions, const LowState& s0,
                      const hl::HighLevelPlan& plan, const std::vector<pddl::Literal>& problem_goal,
                      const wm::CheckerSet& checkers, const Budget& budget, const StatePredicate& dead_end = {});

/// Ablation: a single search straight to the problem goal.
PlanResult solve_flat(const TransitionFn& model, const std::vector<std::string>& actions, const LowState& s0,
                      const std::vector<pddl::Literal>& problem_goal, const wm::CheckerSet& checkers,
                      const Budget& budget, const StatePredicate& dead_end = {});

/// Text form: "; segment <label>" before each segment, then one action per line.
std::string format_plan(const PlanResult& plan);
/// Inverse of format_plan: (label, actions) per segment. Throws std::invalid_argument
/// on an action before the first segment header.
std::vector<std::pair<std::string, std::vector<std::string>>> parse_plan(std::string_view text);

/// Adapts a transition program to a TransitionFn (one sandbox per adapter).
TransitionFn program_model(const wm::TransitionProgram& program);

}  // namespace groundwork::ll
