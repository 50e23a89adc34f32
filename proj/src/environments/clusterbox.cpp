#include <algorithm>
#include <deque>
#include <set>

#include "common.hpp"

namespace groundwork::env {

namespace {

const std::vector<std::string> kBoxColors{"red", "blue", "green"};

bool connected(const std::vector<Coord>& cells) {
  if (cells.size() <= 1) return true;
  std::set<Coord> all(cells.begin(), cells.end()), seen{cells[0]};
  std::deque<Coord> q{cells[0]};
  while (!q.empty()) {
    Coord c = q.front();
    q.pop_front();
    for (Coord n : {Coord{c.x + 1, c.y}, Coord{c.x - 1, c.y}, Coord{c.x, c.y + 1}, Coord{c.x, c.y - 1}})
      if (all.count(n) && seen.insert(n).second) q.push_back(n);
  }
  return seen.size() == all.size();
}

std::string box_at(const LowState& s, Coord c) {
  for (const auto& col : kBoxColors)
    if (s.has("box_" + col, c)) return col;
  return "";
}

}  // namespace

bool clusterbox_all_clustered(const LowState& s) {
  for (const auto& col : kBoxColors)
    if (!connected(s.coords("box_" + col))) return false;
  return true;
}

namespace detail {
namespace {

class ClusterBox final : public Environment {
 public:
  std::string id() const override { return "clusterbox"; }
  const std::vector<std::string>& actions() const override { return kMoves; }

  Terminal status(const LowState& s) const override {
    if (s.count("agent") == 0) return Terminal::Loss;
    return clusterbox_all_clustered(s) ? Terminal::Win : Terminal::None;
  }

  void validate(const LowState& s) const override {
    Environment::validate(s);
    for (const auto& [t, v] : s.objects()) {
      bool ok = t == "agent" || t == "wall" || t == "cherry";
      for (const auto& col : kBoxColors) ok = ok || t == "box_" + col;
      if (!ok) throw InvalidStateError("clusterbox has no object type '" + t + "'");
    }
    if (s.count("agent") > 1) throw InvalidStateError("clusterbox allows one agent");
  }

  wm::CheckerSet checkers(const Level&) const override {
    wm::CheckerSet cs;
    cs.add("clustered", [](const LowState& s, const std::vector<std::string>& a) {
      return connected(s.coords("box_" + a.at(0)));
    });
    return cs;
  }

  Level random_level(std::uint64_t seed, const LevelParams& p) const override {
    std::mt19937_64 rng(seed);
    int per_color = std::max(2, p.boxes);
    if ((p.width - 2) * (p.height - 2) < 2 * per_color + 1 + p.hazards + 4)
      throw GenerationError("clusterbox level too small");
    for (std::size_t attempt = 0; attempt < p.max_attempts; ++attempt) {
      LowState s = walled_room(p.width, p.height, aux_keys());
      auto pool = empty_cells(s);
      // Keep boxes off the border ring so they stay pushable.
      std::vector<Coord> inner;
      for (Coord c : pool)
        if (c.x > 1 && c.y > 1 && c.x < p.width - 2 && c.y < p.height - 2) inner.push_back(c);
      if (inner.size() < static_cast<std::size_t>(2 * per_color)) throw GenerationError("clusterbox level too small");
      std::vector<Coord> boxes;
      for (int i = 0; i < 2 * per_color; ++i) boxes.push_back(take(rng, inner));
      for (int i = 0; i < 2 * per_color; ++i) {
        s.add("box_" + kBoxColors[static_cast<std::size_t>(i / per_color)], boxes[static_cast<std::size_t>(i)]);
        pool.erase(std::find(pool.begin(), pool.end(), boxes[static_cast<std::size_t>(i)]));
      }
      s.add("agent", take(rng, pool));
      for (int i = 0; i < p.hazards && !pool.empty(); ++i) s.add("cherry", take(rng, pool));
      if (status(s) != Terminal::None || !solvable(s, p.verify_nodes)) continue;
      Level l;
      l.env_id = id();
      l.name = "clusterbox_random_" + std::to_string(seed);
      l.initial = std::move(s);
      return l;
    }
    throw GenerationError("no solvable clusterbox level after " + std::to_string(p.max_attempts) + " attempts");
  }

 protected:
  LowState apply(const LowState& s, const std::string& action) const override {
    Coord a = s.coords("agent")[0];
    Coord t = offset(a, action);
    if (!s.in_bounds(t) || s.has("wall", t)) return s;
    LowState n = s;
    if (s.has("cherry", t)) {
      n.erase_type("agent");
      return n;
    }
    std::vector<Coord> chain;
    Coord c = t;
    while (!box_at(s, c).empty()) {
      chain.push_back(c);
      c = offset(c, action);
    }
    if (!chain.empty()) {
      if (!s.in_bounds(c) || s.has("wall", c) || s.has("cherry", c)) return s;
      std::vector<std::pair<std::string, Coord>> moved;
      for (Coord b : chain) {
        std::string col = box_at(s, b);
        n.remove("box_" + col, b);
        moved.emplace_back(col, offset(b, action));
      }
      for (const auto& [col, b] : moved) n.add("box_" + col, b);
    }
    n.set_coords("agent", {t});
    return n;
  }

  std::vector<pddl::TypedName> problem_objects(const Level& level) const override {
    std::vector<pddl::TypedName> out;
    for (const auto& col : kBoxColors)
      if (level.initial.count("box_" + col)) out.push_back({col, "color"});
    return out;
  }

  std::vector<std::string> default_goal(const Level& level) const override {
    std::vector<std::string> out;
    for (const auto& o : problem_objects(level)) out.push_back("(clustered " + o.name + ")");
    return out;
  }

  std::vector<std::pair<char, std::vector<std::string>>> default_legend() const override {
    return {{'#', {"wall"}}, {'@', {"agent"}}, {'c', {"cherry"}},
            {'r', {"box_red"}}, {'b', {"box_blue"}}, {'g', {"box_green"}}};
  }
};

}  // namespace

std::unique_ptr<Environment> make_clusterbox() { return std::make_unique<ClusterBox>(); }

}  // namespace detail
}  // namespace groundwork::env
