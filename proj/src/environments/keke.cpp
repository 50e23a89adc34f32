#include <algorithm>
#include <map>
#include <set>

#include "common.hpp"

namespace groundwork::env {

namespace {

const std::set<std::string> kProperties{"you", "win", "stop", "push", "sink"};

bool is_word(const std::string& t) { return t.size() > 5 && t.compare(t.size() - 5, 5, "_word") == 0; }
bool is_obj(const std::string& t) { return t.size() > 4 && t.compare(t.size() - 4, 4, "_obj") == 0; }
std::string base_of(const std::string& t) { return t.substr(0, t.rfind('_')); }
bool is_noun_word(const std::string& t) {
  return is_word(t) && base_of(t) != "is" && !kProperties.count(base_of(t));
}
bool is_property_word(const std::string& t) { return is_word(t) && kProperties.count(base_of(t)); }

std::vector<std::string> words_at(const LowState& s, Coord c) {
  std::vector<std::string> out;
  for (const auto& [t, v] : s.objects())
    if (is_word(t) && std::binary_search(v.begin(), v.end(), c)) out.push_back(t);
  return out;
}

}  // namespace

std::vector<KekeRule> parse_rules(const LowState& s) {
  std::vector<KekeRule> out;
  for (const auto& [t, v] : s.objects()) {
    if (!is_noun_word(t)) continue;
    for (Coord c : v)
      for (Coord d : {Coord{1, 0}, Coord{0, 1}}) {
        Coord c1{c.x + d.x, c.y + d.y}, c2{c.x + 2 * d.x, c.y + 2 * d.y};
        if (!s.has("is_word", c1)) continue;
        for (const auto& w3 : words_at(s, c2))
          if (is_noun_word(w3) || is_property_word(w3)) out.push_back({t, "is_word", w3, {c, c1, c2}});
      }
  }
  std::sort(out.begin(), out.end(), [](const KekeRule& a, const KekeRule& b) {
    return std::tie(a.subject, a.verb, a.object, a.cells) < std::tie(b.subject, b.verb, b.object, b.cells);
  });
  out.erase(std::unique(out.begin(), out.end(), [](const KekeRule& a, const KekeRule& b) { return a.str() == b.str(); }),
            out.end());
  return out;
}

std::vector<std::string> parse_rule_strings(const LowState& s) {
  std::vector<std::string> out;
  for (const auto& r : parse_rules(s)) out.push_back(r.str());
  return out;
}

namespace detail {
namespace {

struct RuleSet {
  std::map<std::string, std::set<std::string>> props;   // noun -> properties
  std::map<std::string, std::set<std::string>> nouns;   // noun -> target nouns

  explicit RuleSet(const LowState& s) {
    for (const auto& r : parse_rules(s)) {
      std::string subject = base_of(r.subject), object = base_of(r.object);
      if (is_property_word(r.object))
        props[subject].insert(object);
      else
        nouns[subject].insert(object);
    }
  }

  bool has(const std::string& type, const std::string& prop) const {
    if (!is_obj(type)) return false;
    auto it = props.find(base_of(type));
    return it != props.end() && it->second.count(prop);
  }
  bool pushable(const std::string& type) const { return is_word(type) || has(type, "push"); }
  bool stops(const std::string& type) const { return !pushable(type) && has(type, "stop"); }
};

class Keke final : public Environment {
 public:
  std::string id() const override { return "keke"; }
  const std::vector<std::string>& actions() const override { return kMoves; }
  std::vector<std::string> aux_keys() const override { return {"overlappables", "rules_formed"}; }

  Terminal status(const LowState& s) const override {
    RuleSet rules(s);
    std::vector<Coord> you, win;
    for (const auto& [t, v] : s.objects()) {
      if (rules.has(t, "you")) you.insert(you.end(), v.begin(), v.end());
      if (rules.has(t, "win")) win.insert(win.end(), v.begin(), v.end());
    }
    if (you.empty()) return Terminal::Loss;
    for (Coord c : you)
      if (std::find(win.begin(), win.end(), c) != win.end()) return Terminal::Win;
    return Terminal::None;
  }

  void validate(const LowState& s) const override {
    Environment::validate(s);
    for (const auto& [t, v] : s.objects())
      if (!is_word(t) && !is_obj(t)) throw InvalidStateError("keke types end in _obj or _word, got '" + t + "'");
  }

  wm::CheckerSet checkers(const Level&) const override {
    wm::CheckerSet cs;
    auto formed = [](const LowState& s, const std::vector<std::string>& a) {
      std::string rule = a.at(0) + " " + a.at(1) + " " + a.at(2);
      auto rules = parse_rule_strings(s);
      return std::binary_search(rules.begin(), rules.end(), rule);
    };
    cs.add("rule_formed", formed);
    cs.add("rule_breakable", formed);
    cs.add("rule_formable", [formed](const LowState& s, const std::vector<std::string>& a) {
      if (a.at(1) != "is_word" || !is_noun_word(a.at(0)) || a.at(0) == a.at(2)) return false;
      if (!is_noun_word(a.at(2)) && !is_property_word(a.at(2))) return false;
      if (formed(s, a)) return false;
      // Each word needs a copy that is not already part of an active rule.
      std::set<Coord> used;
      for (const auto& r : parse_rules(s)) used.insert(r.cells.begin(), r.cells.end());
      for (const auto& w : a) {
        const auto& cs = s.coords(w);
        if (std::none_of(cs.begin(), cs.end(), [&](Coord c) { return !used.count(c); })) return false;
      }
      return true;
    });
    cs.add("overlapping", [](const LowState& s, const std::vector<std::string>& a) {
      if (a.at(0) == a.at(1)) return true;
      const auto& p = s.coords(a.at(0));
      const auto& q = s.coords(a.at(1));
      return std::any_of(p.begin(), p.end(), [&](Coord c) { return std::binary_search(q.begin(), q.end(), c); });
    });
    cs.add("controllable", [](const LowState& s, const std::vector<std::string>& a) {
      return RuleSet(s).has(a.at(0), "you");
    });
    cs.add("pushable", [](const LowState& s, const std::vector<std::string>& a) {
      return RuleSet(s).has(a.at(0), "push");
    });
    cs.add("present", [](const LowState& s, const std::vector<std::string>& a) { return s.count(a.at(0)) > 0; });
    return cs;
  }

  Level random_level(std::uint64_t seed, const LevelParams& p) const override {
    // Open room with "baba is you" and "flag is win" in the top row; optionally a
    // loose "rock is flag" sentence to form when the level has no flag.
    std::mt19937_64 rng(seed);
    if (p.width < 8 || p.height < 6) throw GenerationError("keke levels need at least 8x6 cells");
    for (std::size_t attempt = 0; attempt < p.max_attempts; ++attempt) {
      LowState s(p.width, p.height, aux_keys());
      s.add("baba_word", {0, 0});
      s.add("is_word", {1, 0});
      s.add("you_word", {2, 0});
      s.add("flag_word", {p.width - 3, 0});
      s.add("is_word", {p.width - 2, 0});
      s.add("win_word", {p.width - 1, 0});
      std::vector<Coord> pool;
      for (int y = 2; y + 1 < p.height; ++y)
        for (int x = 1; x + 1 < p.width; ++x) pool.push_back({x, y});
      bool transmute = rng() % 2 == 0 && p.width >= 9;
      s.add("baba_obj", take(rng, pool));
      if (transmute) {
        int y = 2 + static_cast<int>(pick(rng, static_cast<std::size_t>(p.height - 4)));
        int x = 1 + static_cast<int>(pick(rng, static_cast<std::size_t>(p.width - 6)));
        for (Coord c : {Coord{x, y}, Coord{x + 1, y}, Coord{x + 3, y}}) {
          auto it = std::find(pool.begin(), pool.end(), c);
          if (it != pool.end()) pool.erase(it);
        }
        if (s.count("baba_obj") && (s.coords("baba_obj")[0] == Coord{x, y} || s.coords("baba_obj")[0] == Coord{x + 1, y} ||
                                    s.coords("baba_obj")[0] == Coord{x + 3, y}))
          continue;
        s.add("rock_word", {x, y});
        s.add("is_word", {x + 1, y});
        s.add("flag_word", {x + 3, y});
        s.add("rock_obj", take(rng, pool));
      } else {
        s.add("flag_obj", take(rng, pool));
      }
      for (int i = 0; i < p.hazards && !pool.empty(); ++i) s.add("goop_obj", take(rng, pool));
      refresh(s);
      if (status(s) != Terminal::None || !solvable(s, p.verify_nodes)) continue;
      Level l;
      l.env_id = id();
      l.name = "keke_random_" + std::to_string(seed);
      if (transmute) l.goal = {"(rule_formed rock_word is_word flag_word)", "(overlapping baba_obj flag_obj)"};
      l.initial = std::move(s);
      return l;
    }
    throw GenerationError("no solvable keke level after " + std::to_string(p.max_attempts) + " attempts");
  }

 protected:
  void refresh(LowState& s) const override {
    RuleSet rules(s);
    s.set_aux("rules_formed", parse_rule_strings(s));
    std::vector<std::string> over;
    for (const auto& [t, v] : s.objects())
      if (is_obj(t) && !rules.has(t, "stop") && !rules.has(t, "push") && !rules.has(t, "you")) over.push_back(t);
    s.set_aux("overlappables", over);
  }

  LowState apply(const LowState& s, const std::string& action) const override {
    LowState n = s;
    Coord d = offset({0, 0}, action);
    {
      RuleSet rules(s);
      std::vector<std::pair<std::string, Coord>> movers;
      for (const auto& [t, v] : s.objects())
        if (rules.has(t, "you"))
          for (Coord c : v) movers.emplace_back(t, c);
      // Leading objects move first so followers do not bump into them.
      auto key = [&](const std::pair<std::string, Coord>& m) {
        int lead = m.second.x * d.x + m.second.y * d.y;
        int across = d.x != 0 ? m.second.y : m.second.x;
        return std::tuple(-lead, across, m.first);
      };
      std::stable_sort(movers.begin(), movers.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
      for (const auto& [t, c] : movers) {
        if (!n.has(t, c) || !can_enter(n, rules, {c.x + d.x, c.y + d.y}, d)) continue;
        push_from(n, rules, {c.x + d.x, c.y + d.y}, d);
        n.remove(t, c);
        n.add(t, {c.x + d.x, c.y + d.y});
      }
    }
    RuleSet rules(n);
    // Transmutation "X is Y": all X become Y in place; "X is X" protects X.
    std::vector<std::pair<std::string, std::string>> conversions;
    for (const auto& [noun, targets] : rules.nouns) {
      if (targets.count(noun) || targets.size() != 1) continue;
      if (n.count(noun + "_obj") == 0) continue;
      conversions.emplace_back(noun + "_obj", *targets.begin() + "_obj");
    }
    std::map<std::string, std::vector<Coord>> snapshot;
    for (const auto& [from, to] : conversions) snapshot[from] = n.coords(from);
    for (const auto& [from, to] : conversions) n.erase_type(from);
    for (const auto& [from, to] : conversions)
      for (Coord c : snapshot[from]) n.add(to, c);
    // Sink: a sink object destroys everything sharing its cell, itself included.
    std::set<Coord> doomed;
    for (const auto& [t, v] : n.objects()) {
      if (!rules.has(t, "sink")) continue;
      for (Coord c : v) {
        std::size_t here = 0;
        for (const auto& [u, w] : n.objects()) here += static_cast<std::size_t>(std::count(w.begin(), w.end(), c));
        if (here >= 2) doomed.insert(c);
      }
    }
    for (Coord c : doomed)
      for (const auto& t : n.types_at(c))
        while (n.remove(t, c)) {
        }
    return n;
  }

  std::vector<pddl::TypedName> problem_objects(const Level& level) const override {
    std::vector<pddl::TypedName> out;
    std::set<std::string> entities;
    for (const auto& [t, v] : level.initial.objects()) {
      if (is_word(t)) out.push_back({t, "word"});
      if (is_obj(t)) entities.insert(t);
      if (is_noun_word(t)) entities.insert(base_of(t) + "_obj");
    }
    for (const auto& e : entities) out.push_back({e, "entity"});
    return out;
  }

  std::vector<std::string> default_goal(const Level& level) const override {
    // Reach a WIN object with a YOU object.
    RuleSet rules(level.initial);
    std::string you, win;
    for (const auto& [noun, props] : rules.props) {
      if (you.empty() && props.count("you")) you = noun + "_obj";
      if (win.empty() && props.count("win")) win = noun + "_obj";
    }
    if (you.empty() || win.empty()) return {};
    return {"(overlapping " + you + " " + win + ")"};
  }

  std::vector<std::pair<char, std::vector<std::string>>> default_legend() const override {
    return {{'b', {"baba_obj"}},  {'f', {"flag_obj"}},  {'r', {"rock_obj"}},  {'w', {"wall_obj"}},
            {'g', {"goop_obj"}},  {'k', {"keke_obj"}},  {'B', {"baba_word"}}, {'F', {"flag_word"}},
            {'R', {"rock_word"}}, {'W', {"wall_word"}}, {'G', {"goop_word"}}, {'K', {"keke_word"}},
            {'=', {"is_word"}},   {'Y', {"you_word"}},  {'V', {"win_word"}},  {'S', {"stop_word"}},
            {'P', {"push_word"}}, {'X', {"sink_word"}}};
  }

 private:
  /// True iff something may move into `c` going in direction d, pushing what is there.
  static bool can_enter(const LowState& s, const RuleSet& rules, Coord c, Coord d) {
    if (!s.in_bounds(c)) return false;
    bool pushables = false;
    for (const auto& t : s.types_at(c)) {
      if (rules.stops(t)) return false;
      pushables = pushables || rules.pushable(t);
    }
    return !pushables || can_enter(s, rules, {c.x + d.x, c.y + d.y}, d);
  }

  static void push_from(LowState& s, const RuleSet& rules, Coord c, Coord d) {
    std::vector<std::string> movers;
    for (const auto& t : s.types_at(c))
      if (rules.pushable(t)) movers.push_back(t);
    if (movers.empty()) return;
    Coord next{c.x + d.x, c.y + d.y};
    push_from(s, rules, next, d);
    for (const auto& t : movers)
      while (s.remove(t, c)) s.add(t, next);
  }
};

}  // namespace

std::unique_ptr<Environment> make_keke() { return std::make_unique<Keke>(); }

}  // namespace detail
}  // namespace groundwork::env
