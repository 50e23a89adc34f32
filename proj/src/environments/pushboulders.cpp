#include <algorithm>

#include "common.hpp"

namespace groundwork::env::detail {
namespace {

const std::vector<std::string> kColors{"red", "blue", "yellow"};

/// Color of the boulder at c, or "" if none.
std::string boulder_at(const LowState& s, Coord c) {
  for (const auto& col : kColors)
    if (s.has("boulder_" + col, c)) return col;
  return "";
}

std::string poison_at(const LowState& s, Coord c) {
  for (const auto& col : kColors)
    if (s.has("poison_" + col, c)) return col;
  return "";
}

class PushBoulders final : public Environment {
 public:
  std::string id() const override { return "pushboulders"; }
  const std::vector<std::string>& actions() const override { return kMoves; }

  Terminal status(const LowState& s) const override {
    const auto& agent = s.coords("agent");
    if (agent.empty()) return Terminal::Loss;
    return s.has("goal", agent[0]) ? Terminal::Win : Terminal::None;
  }

  void validate(const LowState& s) const override {
    Environment::validate(s);
    for (const auto& [t, v] : s.objects()) {
      bool ok = t == "agent" || t == "wall" || t == "goal";
      for (const auto& col : kColors) ok = ok || t == "boulder_" + col || t == "poison_" + col;
      if (!ok) throw InvalidStateError("pushboulders has no object type '" + t + "'");
    }
    if (s.count("agent") > 1) throw InvalidStateError("pushboulders allows one agent");
    for (int y = 0; y < s.height(); ++y)
      for (int x = 0; x < s.width(); ++x) {
        int boulders = 0;
        for (const auto& col : kColors) boulders += static_cast<int>(std::count(
            s.coords("boulder_" + col).begin(), s.coords("boulder_" + col).end(), Coord{x, y}));
        if (boulders > 1) throw InvalidStateError("two boulders share a cell");
      }
  }

  wm::CheckerSet checkers(const Level& level) const override {
    wm::CheckerSet cs;
    auto regions = level.regions;
    auto connections = level.connections;
    cs.add("at", [regions](const LowState& s, const std::vector<std::string>& args) {
      const auto& agent = s.coords("agent");
      if (agent.empty()) return false;
      for (const auto& r : regions)
        if (r.name == args.at(0)) return r.contains(agent[0]);
      return false;
    });
    cs.add("connection", [connections](const LowState&, const std::vector<std::string>& args) {
      return std::binary_search(connections.begin(), connections.end(), std::pair{args.at(0), args.at(1)});
    });
    return cs;
  }

  Level random_level(std::uint64_t seed, const LevelParams& p) const override {
    std::mt19937_64 rng(seed);
    if (p.width < 5 || p.height < 4)
      throw GenerationError("pushboulders levels need at least 5x4 cells");
    for (std::size_t attempt = 0; attempt < p.max_attempts; ++attempt) {
      LowState s = walled_room(p.width, p.height, aux_keys());
      // Agent on the left, goal on the right, a random partition wall between with one gap.
      int mid = p.width / 2;
      int gap = 1 + static_cast<int>(pick(rng, static_cast<std::size_t>(p.height - 2)));
      for (int y = 1; y + 1 < p.height; ++y)
        if (y != gap) s.add("wall", {mid, y});
      Coord agent{1 + static_cast<int>(pick(rng, static_cast<std::size_t>(mid - 1))),
                  1 + static_cast<int>(pick(rng, static_cast<std::size_t>(p.height - 2)))};
      Coord goal{mid + 1 + static_cast<int>(pick(rng, static_cast<std::size_t>(p.width - mid - 2))),
                 1 + static_cast<int>(pick(rng, static_cast<std::size_t>(p.height - 2)))};
      s.add("agent", agent);
      s.add("goal", goal);
      auto pool = empty_cells(s);
      for (int i = 0; i < p.boxes && pool.size() > 2; ++i) {
        const auto& col = kColors[pick(rng, kColors.size())];
        s.add("boulder_" + col, take(rng, pool));
        if (i < p.hazards && !pool.empty()) s.add("poison_" + col, take(rng, pool));
      }
      if (!solvable(s, p.verify_nodes)) continue;
      Level l;
      l.env_id = id();
      l.name = "pushboulders_random_" + std::to_string(seed);
      l.regions = {{"start", 1, 1, mid - 1, p.height - 2}, {"goal", goal.x, goal.y, goal.x, goal.y}};
      l.connections = {{"goal", "start"}, {"start", "goal"}};
      std::sort(l.connections.begin(), l.connections.end());
      l.initial = std::move(s);
      return l;
    }
    throw GenerationError("no solvable pushboulders level after " + std::to_string(p.max_attempts) + " attempts");
  }

 protected:
  LowState apply(const LowState& s, const std::string& action) const override {
    Coord a = s.coords("agent")[0];
    Coord t = offset(a, action);
    if (!s.in_bounds(t) || s.has("wall", t)) return s;
    LowState n = s;
    if (!poison_at(s, t).empty()) {
      n.erase_type("agent");
      return n;
    }
    std::vector<Coord> chain;
    Coord c = t;
    while (!boulder_at(s, c).empty()) {
      chain.push_back(c);
      c = offset(c, action);
    }
    if (!chain.empty()) {
      if (!s.in_bounds(c) || s.has("wall", c) || s.has("goal", c)) return s;
      std::string poison = poison_at(s, c);
      std::string last = boulder_at(s, chain.back());
      bool dissolve = !poison.empty();
      if (dissolve && poison != last) return s;
      std::vector<std::pair<std::string, Coord>> moved;
      for (Coord b : chain) {
        std::string col = boulder_at(s, b);
        n.remove("boulder_" + col, b);
        moved.emplace_back(col, offset(b, action));
      }
      if (dissolve) {
        moved.pop_back();
        n.remove("poison_" + poison, c);
      }
      for (const auto& [col, b] : moved) n.add("boulder_" + col, b);
    }
    n.set_coords("agent", {t});
    return n;
  }

  std::vector<pddl::TypedName> problem_objects(const Level& level) const override {
    std::vector<pddl::TypedName> out;
    for (const auto& r : level.regions) out.push_back({r.name, "object"});
    return out;
  }

  std::vector<std::string> default_goal(const Level& level) const override {
    // The tightest region around the goal tile.
    const Region* best = nullptr;
    auto area = [](const Region& r) { return (r.x1 - r.x0 + 1) * (r.y1 - r.y0 + 1); };
    for (Coord g : level.initial.coords("goal"))
      for (const auto& r : level.regions)
        if (r.contains(g) && (!best || area(r) < area(*best))) best = &r;
    if (!best) return {};
    return {"(at " + best->name + ")"};
  }

  std::vector<std::pair<char, std::vector<std::string>>> default_legend() const override {
    return {{'#', {"wall"}},          {'@', {"agent"}},         {'G', {"goal"}},
            {'r', {"boulder_red"}},   {'b', {"boulder_blue"}},  {'y', {"boulder_yellow"}},
            {'R', {"poison_red"}},    {'B', {"poison_blue"}},   {'Y', {"poison_yellow"}}};
  }
};

}  // namespace

std::unique_ptr<Environment> make_pushboulders() { return std::make_unique<PushBoulders>(); }

}  // namespace groundwork::env::detail
