#include "groundwork/hlplanner.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <queue>
#include <sstream>
#include <tuple>
#include <unordered_map>

namespace groundwork::hl {

using pddl::AbstractState;
using pddl::Atom;
using pddl::GroundedOperator;
using pddl::Literal;

PreconditionError::PreconditionError(const std::string& op_label, const Literal& unsatisfied)
    : std::runtime_error("precondition of '" + op_label + "' not satisfied: " + unsatisfied.str()),
      literal_(unsatisfied) {}

std::vector<std::string> HighLevelPlan::labels() const {
  std::vector<std::string> out;
  for (const auto& s : steps) out.push_back(s.label());
  return out;
}

AbstractState apply(const AbstractState& state, const GroundedOperator& op) {
  for (const auto& l : op.preconditions)
    if ((state.count(l.atom) > 0) != l.positive) throw PreconditionError(op.label(), l);
  AbstractState next = state;
  for (const auto& a : op.del_effects) next.erase(a);
  for (const auto& a : op.add_effects) next.insert(a);
  return next;
}

namespace {

using FactSet = std::vector<std::uint32_t>;  // sorted fact ids

struct FactSetHash {
  std::size_t operator()(const FactSet& s) const noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (auto v : s) {
      h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

struct CompiledOp {
  FactSet pre_pos, pre_neg, add, del;
};

class Compiler {
 public:
  std::uint32_t id(const Atom& a) {
    auto [it, inserted] = ids_.try_emplace(a, static_cast<std::uint32_t>(ids_.size()));
    return it->second;
  }

  FactSet ids(const std::vector<Atom>& atoms) {
    FactSet out;
    for (const auto& a : atoms) out.push_back(id(a));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

 private:
  std::map<Atom, std::uint32_t> ids_;
};

bool contains(const FactSet& s, std::uint32_t v) { return std::binary_search(s.begin(), s.end(), v); }

bool satisfied(const FactSet& state, const FactSet& pos, const FactSet& neg) {
  for (auto f : pos)
    if (!contains(state, f)) return false;
  for (auto f : neg)
    if (contains(state, f)) return false;
  return true;
}

FactSet successor(const FactSet& state, const CompiledOp& op) {
  FactSet next;
  next.reserve(state.size() + op.add.size());
  for (auto f : state)
    if (!contains(op.del, f)) next.push_back(f);
  for (auto f : op.add)
    if (!contains(next, f)) next.insert(std::upper_bound(next.begin(), next.end(), f), f);
  return next;
}

std::size_t goal_distance(const FactSet& state, const FactSet& pos, const FactSet& neg) {
  std::size_t h = 0;
  for (auto f : pos) h += contains(state, f) ? 0 : 1;
  for (auto f : neg) h += contains(state, f) ? 1 : 0;
  return h;
}

}  // namespace

HighLevelPlan plan_high(const pddl::Domain& domain, const pddl::Problem& problem, const PlannerOptions& options) {
  const std::vector<GroundedOperator> grounded = pddl::ground(domain, problem);
  Compiler compiler;
  FactSet init = compiler.ids(std::vector<Atom>(problem.init.begin(), problem.init.end()));
  std::vector<Atom> goal_pos_atoms, goal_neg_atoms;
  for (const auto& l : problem.goal) (l.positive ? goal_pos_atoms : goal_neg_atoms).push_back(l.atom);
  FactSet goal_pos = compiler.ids(goal_pos_atoms);
  FactSet goal_neg = compiler.ids(goal_neg_atoms);

  std::vector<CompiledOp> ops;
  ops.reserve(grounded.size());
  for (const auto& g : grounded) {
    std::vector<Atom> pp, pn;
    for (const auto& l : g.preconditions) (l.positive ? pp : pn).push_back(l.atom);
    CompiledOp c{compiler.ids(pp), compiler.ids(pn), compiler.ids(g.add_effects), compiler.ids(g.del_effects)};
    ops.push_back(std::move(c));
  }

  struct Node {
    FactSet state;
    std::int64_t parent;
    std::size_t op;
    std::size_t depth;
  };
  std::vector<Node> nodes;
  std::unordered_map<FactSet, std::size_t, FactSetHash> seen;

  auto extract = [&](std::size_t idx) {
    HighLevelPlan plan;
    for (std::int64_t i = static_cast<std::int64_t>(idx); nodes[i].parent >= 0; i = nodes[i].parent)
      plan.steps.push_back(grounded[nodes[i].op]);
    std::reverse(plan.steps.begin(), plan.steps.end());
    return plan;
  };

  nodes.push_back({init, -1, 0, 0});
  seen.emplace(init, 0);
  if (satisfied(init, goal_pos, goal_neg)) return {};

  if (options.mode == SearchMode::BreadthFirst) {
    for (std::size_t head = 0; head < nodes.size(); ++head) {
      for (std::size_t o = 0; o < ops.size(); ++o) {
        if (!satisfied(nodes[head].state, ops[o].pre_pos, ops[o].pre_neg)) continue;
        FactSet next = successor(nodes[head].state, ops[o]);
        if (seen.count(next)) continue;
        if (nodes.size() >= options.max_nodes)
          throw BudgetExceededError("abstract search exceeded node cap of " + std::to_string(options.max_nodes));
        std::size_t idx = nodes.size();
        seen.emplace(next, idx);
        nodes.push_back({std::move(next), static_cast<std::int64_t>(head), o, nodes[head].depth + 1});
        if (satisfied(nodes[idx].state, goal_pos, goal_neg)) return extract(idx);
      }
    }
    throw UnsolvableError("abstract goal unreachable from initial state");
  }

  // Goal-count A*: f = g + h; ties on lower h, then insertion order.
  using Entry = std::tuple<std::size_t, std::size_t, std::size_t>;  // f, h, node
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::vector<bool> closed;
  open.emplace(goal_distance(init, goal_pos, goal_neg), goal_distance(init, goal_pos, goal_neg), 0);
  while (!open.empty()) {
    auto [f, h, idx] = open.top();
    open.pop();
    if (closed.size() <= idx) closed.resize(nodes.size(), false);
    if (closed[idx]) continue;
    closed[idx] = true;
    if (satisfied(nodes[idx].state, goal_pos, goal_neg)) return extract(idx);
    for (std::size_t o = 0; o < ops.size(); ++o) {
      if (!satisfied(nodes[idx].state, ops[o].pre_pos, ops[o].pre_neg)) continue;
      FactSet next = successor(nodes[idx].state, ops[o]);
      if (seen.count(next)) continue;
      if (nodes.size() >= options.max_nodes)
        throw BudgetExceededError("abstract search exceeded node cap of " + std::to_string(options.max_nodes));
      std::size_t nidx = nodes.size();
      seen.emplace(next, nidx);
      std::size_t nh = goal_distance(next, goal_pos, goal_neg);
      nodes.push_back({std::move(next), static_cast<std::int64_t>(idx), o, nodes[idx].depth + 1});
      open.emplace(nodes[nidx].depth + nh, nh, nidx);
    }
  }
  throw UnsolvableError("abstract goal unreachable from initial state");
}

bool validate(const HighLevelPlan& plan, const pddl::Domain& domain, const pddl::Problem& problem) {
  (void)domain;
  AbstractState s = problem.init;
  for (const auto& step : plan.steps) {
    if (!pddl::holds(s, step.preconditions)) return false;
    for (const auto& a : step.del_effects) s.erase(a);
    for (const auto& a : step.add_effects) s.insert(a);
  }
  return pddl::holds(s, problem.goal);
}

HighLevelPlan InternalPlanner::plan(const pddl::Domain& domain, const pddl::Problem& problem) {
  return plan_high(domain, problem, options_);
}

ExternalPlanner::ExternalPlanner(std::string command_template, std::string work_dir)
    : command_template_(std::move(command_template)), work_dir_(std::move(work_dir)) {}

namespace {

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size())
    s.replace(pos, from.size(), to);
  return s;
}

}  // namespace

HighLevelPlan ExternalPlanner::plan(const pddl::Domain& domain, const pddl::Problem& problem) {
  namespace fs = std::filesystem;
  fs::create_directories(work_dir_);
  const fs::path dir(work_dir_);
  const std::string domain_path = (dir / "domain.pddl").string();
  const std::string problem_path = (dir / "problem.pddl").string();
  const std::string plan_path = (dir / "sas_plan").string();
  std::ofstream(domain_path) << pddl::serialize(domain);
  std::ofstream(problem_path) << pddl::serialize(problem);
  fs::remove(plan_path);

  std::string cmd = command_template_;
  cmd = replace_all(cmd, "{domain}", domain_path);
  cmd = replace_all(cmd, "{problem}", problem_path);
  cmd = replace_all(cmd, "{plan}", plan_path);
  int rc = std::system(cmd.c_str());
  if (rc != 0 || !fs::exists(plan_path))
    throw UnsolvableError("external planner failed (exit " + std::to_string(rc) + ") for command: " + cmd);
  std::ifstream in(plan_path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_sas_plan(buf.str(), domain, problem);
}

HighLevelPlan parse_sas_plan(const std::string& text, const pddl::Domain& domain, const pddl::Problem& problem) {
  const auto grounded = pddl::ground(domain, problem);
  std::map<std::string, const GroundedOperator*> by_label;
  for (const auto& g : grounded) by_label.emplace(g.label(), &g);

  HighLevelPlan plan;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == ';') continue;
    Atom a = pddl::parse_atom(line.substr(first));
    std::string label = a.predicate;
    for (const auto& arg : a.args) label += " " + arg;
    auto it = by_label.find(label);
    if (it == by_label.end())
      throw pddl::ValidationError("plan line " + std::to_string(lineno) + ": unknown grounded operator '" + label + "'");
    plan.steps.push_back(*it->second);
  }
  return plan;
}

}  // namespace groundwork::hl
