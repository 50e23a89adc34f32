#include <algorithm>
#include <optional>

#include "common.hpp"

namespace groundwork::env::detail {
namespace {

const std::vector<std::string> kItems{"ball", "box", "key"};
const std::vector<std::string> kBabyActions{"up", "down", "left", "right", "pickup", "drop", "toggle"};

std::string item_at(const LowState& s, Coord c) {
  for (const auto& it : kItems)
    if (s.has(it, c)) return it;
  return "";
}

Coord door_cell(const LowState& s) {
  if (s.count("door_locked")) return s.coords("door_locked")[0];
  if (s.count("door_open")) return s.coords("door_open")[0];
  return {-1, -1};
}

/// Static layout facts taken from the level's initial state.
struct Layout {
  Coord door{-1, -1};
  Coord block_cell{-1, -1};  // the door's neighbour on the agent's starting side
  std::vector<std::string> accessible, behind;

  explicit Layout(const LowState& s) {
    door = door_cell(s);
    if (s.count("agent") == 0 || door.x < 0) return;
    Coord a = s.coords("agent")[0];
    int side = a.x < door.x ? -1 : 1;
    block_cell = {door.x + side, door.y};
    for (const auto& it : kItems)
      for (Coord c : s.coords(it)) ((c.x - door.x) * side > 0 ? accessible : behind).push_back(it);
  }

  bool is_accessible(const std::string& o) const { return std::count(accessible.begin(), accessible.end(), o) > 0; }
  bool is_behind(const std::string& o) const { return std::count(behind.begin(), behind.end(), o) > 0; }
};

class BabyAI final : public Environment {
 public:
  std::string id() const override { return "babyai"; }
  const std::vector<std::string>& actions() const override { return kBabyActions; }
  std::vector<std::string> aux_keys() const override { return {"carrying", "facing", "mission"}; }

  Terminal status(const LowState& s) const override {
    const auto& carrying = s.aux("carrying");
    const auto& mission = s.aux("mission");
    if (!mission.empty() && !carrying.empty() && carrying[0] == mission[0]) return Terminal::Win;
    return Terminal::None;
  }

  void validate(const LowState& s) const override {
    Environment::validate(s);
    for (const auto& [t, v] : s.objects()) {
      bool ok = t == "agent" || t == "wall" || t == "door_locked" || t == "door_open" ||
                std::count(kItems.begin(), kItems.end(), t);
      if (!ok) throw InvalidStateError("babyai has no object type '" + t + "'");
      if (t != "wall" && v.size() > 1) throw InvalidStateError("babyai allows one '" + t + "'");
    }
    if (s.count("agent") != 1) throw InvalidStateError("babyai needs exactly one agent");
    if (s.aux("facing").size() != 1) throw InvalidStateError("babyai needs one facing direction");
    if (s.aux("carrying").size() > 1) throw InvalidStateError("babyai carries at most one item");
  }

  wm::CheckerSet checkers(const Level& level) const override {
    wm::CheckerSet cs;
    Layout lay(level.initial);
    auto on_grid = [](const LowState& s, const std::string& o) -> std::optional<Coord> {
      if (s.count(o) == 0) return std::nullopt;
      return s.coords(o)[0];
    };
    auto carrying = [](const LowState& s, const std::string& o) {
      const auto& c = s.aux("carrying");
      return std::find(c.begin(), c.end(), o) != c.end();
    };
    cs.add("carrying", [carrying](const LowState& s, const std::vector<std::string>& a) { return carrying(s, a.at(0)); });
    cs.add("inventory_full", [](const LowState& s, const std::vector<std::string>&) { return !s.aux("carrying").empty(); });
    cs.add("next_to", [on_grid](const LowState& s, const std::vector<std::string>& a) {
      auto p = on_grid(s, a.at(0)), q = on_grid(s, a.at(1));
      return p && q && manhattan(*p, *q) == 1;
    });
    cs.add("unlocks", [](const LowState&, const std::vector<std::string>& a) { return a.at(0) == "key"; });
    cs.add("blocking", [lay](const LowState& s, const std::vector<std::string>& a) {
      return s.has(a.at(0), lay.block_cell);
    });
    cs.add("clear", [lay](const LowState& s, const std::vector<std::string>&) {
      return item_at(s, lay.block_cell).empty();
    });
    cs.add("open", [](const LowState& s, const std::vector<std::string>&) { return s.count("door_open") > 0; });
    cs.add("agent_moved_away", [lay](const LowState& s, const std::vector<std::string>&) {
      return manhattan(s.coords("agent")[0], lay.door) >= 2;
    });
    cs.add("not_near_door", [lay, on_grid](const LowState& s, const std::vector<std::string>& a) {
      auto p = on_grid(s, a.at(0));
      return p && std::max(std::abs(p->x - lay.door.x), std::abs(p->y - lay.door.y)) >= 2;
    });
    cs.add("accessible", [lay](const LowState&, const std::vector<std::string>& a) { return lay.is_accessible(a.at(0)); });
    cs.add("behind", [lay](const LowState&, const std::vector<std::string>& a) { return lay.is_behind(a.at(0)); });
    return cs;
  }

  Level random_level(std::uint64_t seed, const LevelParams& p) const override {
    // Two rooms split by a wall column with a locked door, a ball blocking the
    // door, the key somewhere on the agent's side and the box behind the door.
    std::mt19937_64 rng(seed);
    if (p.width < 7 || p.height < 5) throw GenerationError("babyai levels need at least 7x5 cells");
    for (std::size_t attempt = 0; attempt < p.max_attempts; ++attempt) {
      LowState s = walled_room(p.width, p.height, aux_keys());
      int wx = std::max(3, p.width / 2);
      int dy = 1 + static_cast<int>(pick(rng, static_cast<std::size_t>(p.height - 2)));
      for (int y = 1; y + 1 < p.height; ++y)
        if (y != dy) s.add("wall", {wx, y});
      s.add("door_locked", {wx, dy});
      s.add("ball", {wx - 1, dy});
      std::vector<Coord> left, right;
      for (Coord c : empty_cells(s)) (c.x < wx ? left : right).push_back(c);
      if (left.size() < 3 || right.empty()) continue;
      s.add("agent", take(rng, left));
      s.add("key", take(rng, left));
      s.add("box", take(rng, right));
      s.set_aux("facing", {kMoves[pick(rng, kMoves.size())]});
      s.set_aux("mission", {"box"});
      if (!solvable(s, p.verify_nodes)) continue;
      Level l;
      l.env_id = id();
      l.name = "babyai_random_" + std::to_string(seed);
      l.initial = std::move(s);
      return l;
    }
    throw GenerationError("no solvable babyai level after " + std::to_string(p.max_attempts) + " attempts");
  }

 protected:
  LowState apply(const LowState& s, const std::string& action) const override {
    LowState n = s;
    Coord a = s.coords("agent")[0];
    if (action == "up" || action == "down" || action == "left" || action == "right") {
      n.set_aux("facing", {action});
      Coord t = offset(a, action);
      if (s.in_bounds(t) && !s.has("wall", t) && !s.has("door_locked", t) && item_at(s, t).empty())
        n.set_coords("agent", {t});
      return n;
    }
    Coord f = offset(a, s.aux("facing")[0]);
    const auto& carrying = s.aux("carrying");
    if (action == "pickup") {
      std::string it = s.in_bounds(f) ? item_at(s, f) : "";
      if (carrying.empty() && !it.empty()) {
        n.remove(it, f);
        n.set_aux("carrying", {it});
      }
    } else if (action == "drop") {
      if (!carrying.empty() && s.in_bounds(f) && s.types_at(f).empty()) {
        n.add(carrying[0], f);
        n.set_aux("carrying", {});
      }
    } else if (action == "toggle") {
      if (s.in_bounds(f) && s.has("door_locked", f) && carrying.size() == 1 && carrying[0] == "key") {
        n.remove("door_locked", f);
        n.add("door_open", f);
      }
    }
    return n;
  }

  std::vector<pddl::TypedName> problem_objects(const Level& level) const override {
    std::vector<pddl::TypedName> out;
    for (const auto& it : kItems)
      if (level.initial.count(it) || std::count(level.initial.aux("carrying").begin(),
                                                level.initial.aux("carrying").end(), it))
        out.push_back({it, "item"});
    if (door_cell(level.initial).x >= 0) out.push_back({"door", "door"});
    return out;
  }

  std::vector<std::string> default_goal(const Level& level) const override {
    const auto& m = level.initial.aux("mission");
    if (m.empty()) return {};
    return {"(carrying " + m[0] + ")"};
  }

  std::vector<std::pair<char, std::vector<std::string>>> default_legend() const override {
    return {{'#', {"wall"}}, {'@', {"agent"}},      {'k', {"key"}},      {'o', {"ball"}},
            {'x', {"box"}},  {'D', {"door_locked"}}, {'d', {"door_open"}}};
  }
};

}  // namespace

std::unique_ptr<Environment> make_babyai() { return std::make_unique<BabyAI>(); }

}  // namespace groundwork::env::detail
