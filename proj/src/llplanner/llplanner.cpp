#include "groundwork/llplanner.hpp"

#include <algorithm>
#include <chrono>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace groundwork::ll {

std::string to_string(SearchStatus s) {
  switch (s) {
    case SearchStatus::Solved: return "solved";
    case SearchStatus::Unsolvable: return "unsolvable";
    case SearchStatus::BudgetExceeded: return "budget_exceeded";
  }
  return "unsolvable";
}

SearchStats& SearchStats::operator+=(const SearchStats& o) {
  expanded += o.expanded;
  generated += o.generated;
  seconds += o.seconds;
  return *this;
}

namespace {

struct Node {
  std::string packed;
  std::size_t parent;
  std::uint16_t action;
  std::uint32_t depth;
};

constexpr std::size_t kRoot = static_cast<std::size_t>(-1);
constexpr std::uint32_t kDeadEnd = static_cast<std::uint32_t>(-1);

std::vector<std::string> trace(const std::vector<Node>& nodes, std::size_t i, const std::vector<std::string>& actions) {
  std::vector<std::string> out;
  for (; nodes[i].parent != kRoot; i = nodes[i].parent) out.push_back(actions[nodes[i].action]);
  return {out.rbegin(), out.rend()};
}

}  // namespace

SubplanResult bfs(const TransitionFn& model, const std::vector<std::string>& actions, const LowState& s0,
                  const StatePredicate& goal, const Budget& budget, const StatePredicate& dead_end) {
  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  SubplanResult r;
  auto finish = [&](SearchStatus st) {
    r.status = st;
    r.stats.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    return r;
  };
  if (goal(s0)) {
    r.final_state = s0;
    return finish(SearchStatus::Solved);
  }
  std::vector<Node> nodes;
  std::unordered_map<std::string_view, std::size_t> seen;
  nodes.reserve(1024);
  nodes.push_back({s0.pack(), kRoot, 0, 0});
  seen.emplace(nodes.back().packed, 0);
  bool truncated = false;
  // Nodes are appended in BFS order, so the vector doubles as the queue.
  // Keys view into node strings; reserve keeps them stable until reallocation,
  // so the map is rebuilt whenever the vector grows.
  auto rebuild = [&] {
    seen.clear();
    for (std::size_t i = 0; i < nodes.size(); ++i) seen.emplace(nodes[i].packed, i);
  };
  for (std::size_t head = 0; head < nodes.size(); ++head) {
    if ((head & 63) == 0 && std::chrono::duration<double>(clock::now() - t0).count() > budget.max_seconds)
      return finish(SearchStatus::BudgetExceeded);
    if (nodes[head].depth == kDeadEnd) continue;
    if (nodes[head].depth >= budget.max_depth) {
      truncated = true;
      continue;
    }
    LowState s = LowState::unpack(nodes[head].packed);
    ++r.stats.expanded;
    for (std::size_t a = 0; a < actions.size(); ++a) {
      LowState n = model(s, actions[a]);
      ++r.stats.generated;
      std::string key = n.pack();
      if (seen.count(key)) continue;
      if (nodes.size() >= budget.max_nodes) return finish(SearchStatus::BudgetExceeded);
      bool grow = nodes.size() == nodes.capacity();
      nodes.push_back({std::move(key), head, static_cast<std::uint16_t>(a), nodes[head].depth + 1});
      if (grow)
        rebuild();
      else
        seen.emplace(nodes.back().packed, nodes.size() - 1);
      if (goal(n)) {
        r.actions = trace(nodes, nodes.size() - 1, actions);
        r.final_state = std::move(n);
        return finish(SearchStatus::Solved);
      }
      if (dead_end && dead_end(n)) nodes.back().depth = kDeadEnd;
    }
  }
  return finish(truncated ? SearchStatus::BudgetExceeded : SearchStatus::Unsolvable);
}

SubplanResult solve_subplan(const TransitionFn& model, const std::vector<std::string>& actions, const LowState& s0,
                            const wm::CheckerSet& checkers, const std::vector<pddl::Literal>& goal,
                            const Budget& budget, const StatePredicate& dead_end) {
  return bfs(
      model, actions, s0, [&](const LowState& s) { return wm::check_literals(checkers, s, goal); }, budget, dead_end);
}

std::vector<std::string> PlanResult::actions() const {
  std::vector<std::string> out;
  for (const auto& seg : segments) out.insert(out.end(), seg.actions.begin(), seg.actions.end());
  return out;
}

std::vector<pddl::Literal> segment_goal(const pddl::GroundedOperator& op, const std::vector<pddl::Literal>& problem_goal,
                                        const wm::CheckerSet& checkers, const LowState& s) {
  std::vector<pddl::Literal> goal = op.effect_literals();
  for (const auto& g : problem_goal) {
    if (std::find(goal.begin(), goal.end(), g) != goal.end()) continue;
    bool negated_by_effect = std::any_of(goal.begin(), goal.end(), [&](const pddl::Literal& l) {
      return l.atom == g.atom && l.positive != g.positive;
    });
    if (!negated_by_effect && checkers.evaluate(s, g.atom) == g.positive) goal.push_back(g);
  }
  return goal;
}

PlanResult solve_plan(const TransitionFn& model, const std::vector<std::string>& actions, const LowState& s0,
                      const hl::HighLevelPlan& plan, const std::vector<pddl::Literal>& problem_goal,
                      const wm::CheckerSet& checkers, const Budget& budget, const StatePredicate& dead_end) {
  PlanResult out;
  LowState s = s0;
  for (const auto& op : plan.steps) {
    Segment seg;
    seg.label = op.label();
    seg.goal = segment_goal(op, problem_goal, checkers, s);
    seg.start = s;
    auto r = solve_subplan(model, actions, s, checkers, seg.goal, budget, dead_end);
    seg.actions = std::move(r.actions);
    seg.predicted_end = r.final_state;
    seg.stats = r.stats;
    seg.status = r.status;
    out.stats += r.stats;
    out.segments.push_back(std::move(seg));
    if (r.status != SearchStatus::Solved) {
      out.status = r.status;
      return out;
    }
    s = std::move(r.final_state);
  }
  out.status = SearchStatus::Solved;
  return out;
}

PlanResult solve_flat(const TransitionFn& model, const std::vector<std::string>& actions, const LowState& s0,
                      const std::vector<pddl::Literal>& problem_goal, const wm::CheckerSet& checkers,
                      const Budget& budget, const StatePredicate& dead_end) {
  PlanResult out;
  Segment seg;
  seg.label = "flat";
  seg.goal = problem_goal;
  seg.start = s0;
  auto r = solve_subplan(model, actions, s0, checkers, problem_goal, budget, dead_end);
  seg.actions = std::move(r.actions);
  seg.predicted_end = r.final_state;
  seg.stats = r.stats;
  seg.status = r.status;
  out.stats = r.stats;
  out.status = r.status;
  out.segments.push_back(std::move(seg));
  return out;
}

TransitionFn program_model(const wm::TransitionProgram& program) {
  auto sim = std::make_shared<wm::Simulator>();
  return [sim, program](const LowState& s, const std::string& a) { return sim->simulate(program, s, a); };
}

std::string format_plan(const PlanResult& plan) {
  std::ostringstream os;
  for (const auto& seg : plan.segments) {
    os << "; segment " << seg.label << "\n";
    for (const auto& a : seg.actions) os << a << "\n";
  }
  return os.str();
}

std::vector<std::pair<std::string, std::vector<std::string>>> parse_plan(std::string_view text) {
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.starts_with("; segment ")) {
      out.emplace_back(std::string(line.substr(10)), std::vector<std::string>{});
    } else if (line.front() == ';') {
      continue;
    } else {
      if (out.empty()) throw std::invalid_argument("plan line " + std::to_string(line_no) + ": action before any segment");
      out.back().second.emplace_back(line);
    }
  }
  return out;
}

}  // namespace groundwork::ll
