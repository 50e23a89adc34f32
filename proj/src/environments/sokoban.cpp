#include <algorithm>

#include "common.hpp"

namespace groundwork::env {

bool sokoban_boxes_stuck(const LowState& s) {
  auto blocked = [&](Coord c) { return !s.in_bounds(c) || s.has("wall", c); };
  for (Coord b : s.coords("box")) {
    if (s.has("hole", b)) continue;
    bool vertical = blocked({b.x, b.y - 1}) || blocked({b.x, b.y + 1});
    bool horizontal = blocked({b.x - 1, b.y}) || blocked({b.x + 1, b.y});
    if (vertical && horizontal) return true;
  }
  return false;
}

namespace detail {
namespace {

int stored_boxes(const LowState& s) {
  int n = 0;
  for (Coord b : s.coords("box")) n += s.has("hole", b);
  return n;
}

class Sokoban final : public Environment {
 public:
  std::string id() const override { return "sokoban"; }
  const std::vector<std::string>& actions() const override { return kMoves; }

  Terminal status(const LowState& s) const override {
    return stored_boxes(s) == static_cast<int>(s.count("box")) ? Terminal::Win : Terminal::None;
  }

  void validate(const LowState& s) const override {
    Environment::validate(s);
    for (const auto& [t, v] : s.objects())
      if (t != "agent" && t != "wall" && t != "box" && t != "hole")
        throw InvalidStateError("sokoban has no object type '" + t + "'");
    if (s.count("agent") != 1) throw InvalidStateError("sokoban needs exactly one agent");
    const auto& boxes = s.coords("box");
    if (std::adjacent_find(boxes.begin(), boxes.end()) != boxes.end())
      throw InvalidStateError("two boxes share a cell");
    for (Coord b : boxes)
      if (s.has("wall", b)) throw InvalidStateError("box inside a wall");
    if (s.has("wall", s.coords("agent")[0])) throw InvalidStateError("agent inside a wall");
  }

  wm::CheckerSet checkers(const Level&) const override {
    wm::CheckerSet cs;
    // Rank-based identity: b_k is unstored while fewer than k boxes sit in holes.
    cs.add("unstored_box", [](const LowState& s, const std::vector<std::string>& args) {
      int k = std::stoi(args.at(0).substr(1));
      return stored_boxes(s) < k;
    });
    cs.add("boxes_stuck", [](const LowState& s, const std::vector<std::string>&) { return sokoban_boxes_stuck(s); });
    return cs;
  }

  Level random_level(std::uint64_t seed, const LevelParams& p) const override {
    std::mt19937_64 rng(seed);
    int interior = std::max(0, p.width - 2) * std::max(0, p.height - 2);
    if (p.boxes < 1 || interior < 2 * p.boxes + 1)
      throw GenerationError("no room for " + std::to_string(p.boxes) + " boxes, their holes and the agent in a " +
                            std::to_string(p.width) + "x" + std::to_string(p.height) + " grid");
    for (std::size_t attempt = 0; attempt < p.max_attempts; ++attempt) {
      LowState s = walled_room(p.width, p.height, aux_keys());
      auto pool = empty_cells(s);
      int walls = std::min(p.obstacles, static_cast<int>(pool.size()) - (2 * p.boxes + 1));
      for (int i = 0; i < walls; ++i) s.add("wall", take(rng, pool));
      s.add("agent", take(rng, pool));
      for (int i = 0; i < p.boxes; ++i) s.add("box", take(rng, pool));
      for (int i = 0; i < p.boxes; ++i) s.add("hole", take(rng, pool));
      if (sokoban_boxes_stuck(s) || status(s) != Terminal::None) continue;
      if (!solvable(s, p.verify_nodes)) continue;
      Level l;
      l.env_id = id();
      l.name = "sokoban_random_" + std::to_string(seed);
      l.initial = std::move(s);
      return l;
    }
    throw GenerationError("no solvable sokoban level after " + std::to_string(p.max_attempts) + " attempts");
  }

 protected:
  LowState apply(const LowState& s, const std::string& action) const override {
    Coord a = s.coords("agent")[0];
    Coord t = offset(a, action);
    auto free = [&](Coord c) { return s.in_bounds(c) && !s.has("wall", c); };
    if (!free(t)) return s;
    std::vector<Coord> chain;
    Coord c = t;
    while (s.has("box", c)) {
      chain.push_back(c);
      c = offset(c, action);
    }
    if (!chain.empty() && !free(c)) return s;
    LowState n = s;
    for (Coord b : chain) n.remove("box", b);
    for (Coord b : chain) n.add("box", offset(b, action));
    n.set_coords("agent", {t});
    return n;
  }

  std::vector<pddl::TypedName> problem_objects(const Level& level) const override {
    std::vector<pddl::TypedName> out;
    for (std::size_t i = 1; i <= level.initial.count("box"); ++i) out.push_back({"b" + std::to_string(i), "box"});
    return out;
  }

  std::vector<std::string> default_goal(const Level& level) const override {
    std::vector<std::string> out;
    for (std::size_t i = 1; i <= level.initial.count("box"); ++i)
      out.push_back("(not (unstored_box b" + std::to_string(i) + "))");
    return out;
  }

  std::vector<std::pair<char, std::vector<std::string>>> default_legend() const override {
    return {{'#', {"wall"}}, {'@', {"agent"}},          {'$', {"box"}},
            {'.', {"hole"}}, {'*', {"box", "hole"}}, {'+', {"agent", "hole"}}};
  }
};

}  // namespace

std::unique_ptr<Environment> make_sokoban() { return std::make_unique<Sokoban>(); }

}  // namespace detail
}  // namespace groundwork::env
