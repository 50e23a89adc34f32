#pragma once

// Abstract (PDDL-level) planning: forward search over ground STRIPS states.

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "groundwork/pddl.hpp"

namespace groundwork::hl {

class PreconditionError : public std::runtime_error {
 public:
  PreconditionError(const std::string& op_label, const pddl::Literal& unsatisfied);
  const pddl::Literal& literal() const { return literal_; }

 private:
  pddl::Literal literal_;
};

class UnsolvableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BudgetExceededError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HighLevelPlan {
  std::vector<pddl::GroundedOperator> steps;

  std::size_t cost() const { return steps.size(); }
  std::vector<std::string> labels() const;
};

/// (state \ EFF-) U EFF+; throws PreconditionError naming the first unsatisfied literal.
pddl::AbstractState apply(const pddl::AbstractState& state, const pddl::GroundedOperator& op);

enum class SearchMode { BreadthFirst, GoalCountAStar };

struct PlannerOptions {
  SearchMode mode = SearchMode::BreadthFirst;
  std::size_t max_nodes = 2'000'000;
};

/// Shortest plan under unit step cost (BreadthFirst). Ties break by grounding order.
HighLevelPlan plan_high(const pddl::Domain& domain, const pddl::Problem& problem,
                        const PlannerOptions& options = {});

bool validate(const HighLevelPlan& plan, const pddl::Domain& domain, const pddl::Problem& problem);

/// Seam for swapping in an external classical planner.
class HighLevelPlanner {
 public:
  virtual ~HighLevelPlanner() = default;
  virtual HighLevelPlan plan(const pddl::Domain& domain, const pddl::Problem& problem) = 0;
  virtual std::string name() const = 0;
};

class InternalPlanner final : public HighLevelPlanner {
 public:
  explicit InternalPlanner(PlannerOptions options = {}) : options_(options) {}
  HighLevelPlan plan(const pddl::Domain& domain, const pddl::Problem& problem) override;
  std::string name() const override { return "internal-bfs"; }

 private:
  PlannerOptions options_;
};

/// Writes domain.pddl/problem.pddl into a work directory, runs a shell command
/// and reads the resulting SAS-style plan file. The command template may use
/// {domain}, {problem} and {plan} placeholders.
class ExternalPlanner final : public HighLevelPlanner {
 public:
  ExternalPlanner(std::string command_template, std::string work_dir);
  HighLevelPlan plan(const pddl::Domain& domain, const pddl::Problem& problem) override;
  std::string name() const override { return "external"; }

 private:
  std::string command_template_;
  std::string work_dir_;
};

/// Parses "(op a b)" lines; ';' comment lines (e.g. "; cost = 2") are skipped.
/// Every step must name a grounding of the domain/problem.
HighLevelPlan parse_sas_plan(const std::string& text, const pddl::Domain& domain, const pddl::Problem& problem);

}  // namespace groundwork::hl
