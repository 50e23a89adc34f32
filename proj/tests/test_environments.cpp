#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>

#include "doctest.h"
#include "groundwork/environments.hpp"
#include "groundwork/hlplanner.hpp"

using namespace groundwork;
using env::Terminal;
using wm::Coord;
using wm::LowState;

namespace {

env::Level level_from(const env::Environment& e, const std::string& grid, const std::string& header = "") {
  return e.parse_level("env: " + e.id() + "\n" + header + "---\n" + grid);
}

// Brute force: every (cell, direction) triple of word types, no sorting tricks.
std::set<std::string> brute_rules(const LowState& s) {
  const std::set<std::string> props{"you", "win", "stop", "push", "sink"};
  auto word_types = [&](Coord c) {
    std::vector<std::string> out;
    for (const auto& [t, v] : s.objects())
      if (t.size() > 5 && t.substr(t.size() - 5) == "_word" && std::count(v.begin(), v.end(), c)) out.push_back(t);
    return out;
  };
  std::set<std::string> out;
  for (int y = 0; y < s.height(); ++y)
    for (int x = 0; x < s.width(); ++x)
      for (auto [dx, dy] : {std::pair{1, 0}, std::pair{0, 1}})
        for (const auto& a : word_types({x, y}))
          for (const auto& b : word_types({x + dx, y + dy}))
            for (const auto& c : word_types({x + 2 * dx, y + 2 * dy})) {
              std::string ba = a.substr(0, a.size() - 5), bc = c.substr(0, c.size() - 5);
              if (b == "is_word" && ba != "is" && !props.count(ba) && bc != "is") out.insert(a + " " + b + " " + c);
            }
  return out;
}

}  // namespace

TEST_CASE("registry and shipped assets") {
  CHECK(env::environment_ids().size() == 5);
  CHECK_THROWS(env::make_environment("chess"));
  for (const auto& id : env::environment_ids()) {
    CAPTURE(id);
    auto e = env::make_environment(id);
    CHECK(e->id() == id);
    CHECK_FALSE(e->description().empty());
    CHECK(e->builtin_program().loaded());
    auto levels = e->shipped_levels();
    CHECK_FALSE(levels.empty());
    for (const auto& l : levels) {
      CAPTURE(l.name);
      CHECK(e->status(l.initial) == Terminal::None);
      auto p = e->problem(l);
      CHECK_FALSE(p.goal.empty());
      CHECK_FALSE(pddl::holds(p.init, p.goal));
      // the abstract problem is solvable
      CHECK_NOTHROW(hl::plan_high(e->domain(), p));
      // serialization round trip
      auto again = e->parse_level(e->serialize_level(l));
      CHECK(again.initial == l.initial);
      CHECK(again.regions.size() == l.regions.size());
    }
  }
}

TEST_CASE("sokoban push and blocked moves") {
  auto e = env::make_environment("sokoban");
  auto l = level_from(*e, "#####\n#@$ #\n#  .#\n#####\n");
  auto o = e->step(l.initial, "right");
  CHECK(o.state.coords("agent") == std::vector<Coord>{{2, 1}});
  CHECK(o.state.coords("box") == std::vector<Coord>{{3, 1}});
  CHECK(o.terminal == Terminal::None);
  // box against the wall: nothing moves
  auto o2 = e->step(o.state, "right");
  CHECK(o2.state == o.state);
  // walking into a wall
  CHECK(e->step(l.initial, "up").state == l.initial);
  CHECK_THROWS_AS(e->step(l.initial, "jump"), env::InvalidActionError);

  auto w = level_from(*e, "#####\n#@$.#\n#####\n");
  auto won = e->step(w.initial, "right");
  CHECK(won.terminal == Terminal::Win);
  // terminal states are absorbing
  CHECK(e->step(won.state, "left").state == won.state);
  CHECK(e->step(won.state, "left").terminal == Terminal::Win);
}

TEST_CASE("sokoban push chains and invalid states") {
  auto e = env::make_environment("sokoban");
  auto l = level_from(*e, "#######\n#@$$ .#\n#    .#\n#######\n");
  auto o = e->step(l.initial, "right");
  CHECK(o.state.coords("box") == std::vector<Coord>{{3, 1}, {4, 1}});
  auto blocked = e->step(e->step(o.state, "right").state, "right");
  CHECK(blocked.state.coords("box") == std::vector<Coord>{{4, 1}, {5, 1}});
  CHECK(blocked.terminal == Terminal::None);

  LowState bad(4, 4);
  bad.add("agent", {1, 1});
  bad.add("agent", {2, 2});
  CHECK_THROWS_AS(e->step(bad, "up"), env::InvalidStateError);
  CHECK_THROWS_AS(level_from(*e, "#?#\n"), env::LevelFormatError);
}

TEST_CASE("sokoban invariants under random walks (property)") {
  auto e = env::make_environment("sokoban");
  std::mt19937_64 rng(3);
  for (const auto& l : e->shipped_levels()) {
    LowState s = l.initial;
    auto walls = s.coords("wall");
    for (int i = 0; i < 400; ++i) {
      auto o = e->step(s, e->actions()[rng() % 4]);
      CHECK(o.state.count("box") == l.initial.count("box"));
      const auto& boxes = o.state.coords("box");
      CHECK(std::adjacent_find(boxes.begin(), boxes.end()) == boxes.end());
      for (Coord b : boxes) CHECK_FALSE(o.state.has("wall", b));
      CHECK(o.state.coords("wall") == walls);
      CHECK(e->step(s, "up") == e->step(s, "up"));  // deterministic
      s = o.terminal == Terminal::None ? o.state : l.initial;
    }
  }
}

TEST_CASE("sokoban checkers") {
  auto e = env::make_environment("sokoban");
  auto l = level_from(*e, "#######\n#@$ $.#\n#    .#\n#######\n");
  auto cs = e->checkers(l);
  CHECK(cs.evaluate(l.initial, pddl::parse_atom("(unstored_box b1)")));
  CHECK_FALSE(cs.evaluate(l.initial, pddl::parse_atom("(boxes_stuck)")));
  auto stuck = level_from(*e, "#####\n#$ .#\n# @ #\n#####\n");
  CHECK(env::sokoban_boxes_stuck(stuck.initial));
  auto stored = level_from(*e, "######\n#@ $*#\n#  . #\n######\n");
  auto cs2 = e->checkers(stored);
  CHECK_FALSE(cs2.evaluate(stored.initial, pddl::parse_atom("(unstored_box b1)")));
  CHECK(cs2.evaluate(stored.initial, pddl::parse_atom("(unstored_box b2)")));
  auto p = e->problem(stored);
  CHECK(p.objects.size() == 2);
  CHECK(p.init == pddl::AbstractState{pddl::parse_atom("(unstored_box b2)")});
}

TEST_CASE("random levels") {
  auto e = env::make_environment("sokoban");
  env::LevelParams p;
  p.width = 5;
  p.height = 5;
  p.boxes = 1;
  p.obstacles = 0;
  auto a = e->random_level(0, p);
  auto b = e->random_level(0, p);
  CHECK(a.initial == b.initial);
  CHECK(e->status(a.initial) == Terminal::None);
  p.width = p.height = 3;
  p.boxes = 2;
  CHECK_THROWS_AS(e->random_level(0, p), env::GenerationError);

  for (const auto& id : env::environment_ids()) {
    CAPTURE(id);
    auto g = env::make_environment(id);
    env::LevelParams q;
    q.width = 9;
    q.height = 7;
    q.hazards = 1;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      auto l = g->random_level(seed, q);
      CHECK(l.initial == g->random_level(seed, q).initial);
      CHECK(g->status(l.initial) == Terminal::None);
      auto prob = g->problem(l);
      CHECK_FALSE(prob.goal.empty());
      CHECK_NOTHROW(hl::plan_high(g->domain(), prob));
    }
  }
}

TEST_CASE("keke rule parsing") {
  auto e = env::make_environment("keke");
  auto l = level_from(*e, "R=F\n\nB  \n=  \nY  \n");
  CHECK(env::parse_rule_strings(l.initial) ==
        std::vector<std::string>{"baba_word is_word you_word", "rock_word is_word flag_word"});
  CHECK(l.initial.aux("rules_formed") == env::parse_rule_strings(l.initial));
  auto none = level_from(*e, "R F\n =  \nb\n");
  CHECK(env::parse_rule_strings(none.initial).empty());
  // right-to-left and bottom-to-top do not count
  auto backwards = level_from(*e, "V=B\nY\n=\nB\n");
  CHECK(env::parse_rule_strings(backwards.initial).empty());
}

TEST_CASE("keke rule parsing matches a brute-force scan (property)") {
  std::mt19937_64 rng(17);
  const std::vector<std::string> words{"baba_word", "rock_word", "flag_word", "is_word",  "is_word",
                                       "you_word",  "win_word",  "push_word", "stop_word"};
  for (int t = 0; t < 300; ++t) {
    LowState s(5, 5, {"overlappables", "rules_formed"});
    int n = 4 + static_cast<int>(rng() % 10);
    for (int i = 0; i < n; ++i)
      s.add(words[rng() % words.size()], {static_cast<int>(rng() % 5), static_cast<int>(rng() % 5)});
    auto got = env::parse_rule_strings(s);
    auto want = brute_rules(s);
    CHECK(std::set<std::string>(got.begin(), got.end()) == want);
    CHECK(std::is_sorted(got.begin(), got.end()));
  }
}

TEST_CASE("keke transmutation keeps coordinates") {
  auto e = env::make_environment("keke");
  // baba pushes the flag word left to complete "rock is flag"
  auto l = level_from(*e, "B=Y F=V\n\nR= Fb\n\n  r r\n");
  auto o = e->step(l.initial, "left");
  CHECK(env::parse_rule_strings(o.state).size() == 3);
  CHECK(o.state.count("rock_obj") == 0);
  CHECK(o.state.coords("flag_obj") == l.initial.coords("rock_obj"));
  CHECK(o.state.aux("rules_formed") == env::parse_rule_strings(o.state));
  CHECK(std::count(o.state.aux("overlappables").begin(), o.state.aux("overlappables").end(), "flag_obj") == 1);
}

TEST_CASE("keke win, loss, stop, push and sink") {
  auto e = env::make_environment("keke");
  SUBCASE("reaching the flag wins") {
    auto l = level_from(*e, "B=Y\nF=V\n\nbf\n");
    CHECK(e->step(l.initial, "right").terminal == Terminal::Win);
  }
  SUBCASE("stepping into goop loses") {
    auto l = level_from(*e, "B=Y\nG=X\nF=V\nbg  f\n");
    auto o = e->step(l.initial, "right");
    CHECK(o.terminal == Terminal::Loss);
    CHECK(o.state.count("baba_obj") == 0);
    CHECK(o.state.count("goop_obj") == 0);
  }
  SUBCASE("pushing a rock into goop clears both") {
    auto l = level_from(*e, "B=Y\nG=X\nR=P\nbrg f\n");
    auto o = e->step(l.initial, "right");
    CHECK(o.terminal == Terminal::None);
    CHECK(o.state.count("rock_obj") == 0);
    CHECK(o.state.count("goop_obj") == 0);
    CHECK(o.state.coords("baba_obj") == std::vector<Coord>{{1, 3}});
  }
  SUBCASE("stop blocks, push beats stop") {
    auto l = level_from(*e, "B=Y\nW=S\n\nbw \n");
    CHECK(e->step(l.initial, "right").state.coords("baba_obj") == std::vector<Coord>{{0, 3}});
    auto p = level_from(*e, "B=Y\nW=S\nW=P\nbw \n");
    auto o = e->step(p.initial, "right");
    CHECK(o.state.coords("baba_obj") == std::vector<Coord>{{1, 3}});
    CHECK(o.state.coords("wall_obj") == std::vector<Coord>{{2, 3}});
  }
  SUBCASE("without 'baba is you' moves do nothing and the level is lost") {
    auto l = level_from(*e, "B=Y\n\nb\n");
    CHECK(e->status(l.initial) == Terminal::None);
    LowState s = l.initial;
    s.remove("you_word", {2, 0});
    s.add("you_word", {2, 2});
    CHECK(e->status(s) == Terminal::Loss);
    CHECK(e->step(s, "right").state == s);
  }
  SUBCASE("words are always pushable") {
    auto l = level_from(*e, "B=Y\n\nbR \n");
    auto o = e->step(l.initial, "right");
    CHECK(o.state.coords("rock_word") == std::vector<Coord>{{2, 2}});
    CHECK(e->step(o.state, "right").state == o.state);  // against the edge
  }
}

TEST_CASE("keke rule set tracks the grid after every step (property)") {
  auto e = env::make_environment("keke");
  std::mt19937_64 rng(23);
  for (const auto& l : e->shipped_levels()) {
    LowState s = l.initial;
    for (int i = 0; i < 500; ++i) {
      auto o = e->step(s, e->actions()[rng() % 4]);
      CHECK(o.state.aux("rules_formed") == env::parse_rule_strings(o.state));
      s = o.terminal == Terminal::None ? o.state : l.initial;
    }
  }
}

TEST_CASE("keke checkers") {
  auto e = env::make_environment("keke");
  auto l = e->shipped_levels().at(0);
  auto cs = e->checkers(l);
  auto at = [](const char* s) { return pddl::parse_atom(s); };
  CHECK(cs.evaluate(l.initial, at("(rule_formed flag_word is_word win_word)")));
  CHECK_FALSE(cs.evaluate(l.initial, at("(rule_formable flag_word is_word win_word)")));
  CHECK(cs.evaluate(l.initial, at("(rule_formable rock_word is_word flag_word)")));
  CHECK_FALSE(cs.evaluate(l.initial, at("(rule_formable baba_word is_word flag_word)")));
  CHECK(cs.evaluate(l.initial, at("(controllable baba_obj)")));
  CHECK_FALSE(cs.evaluate(l.initial, at("(present flag_obj)")));
  CHECK_FALSE(cs.evaluate(l.initial, at("(overlapping baba_obj rock_obj)")));
  auto plan = hl::plan_high(e->domain(), e->problem(l));
  CHECK(plan.labels() ==
        std::vector<std::string>{"form_rule rock_word is_word flag_word", "move_to baba_obj flag_obj"});
}

TEST_CASE("pushboulders dissolving and poison") {
  auto e = env::make_environment("pushboulders");
  auto l = level_from(*e, "#######\n#@yY G#\n#  B  #\n#######\n");
  auto o = e->step(l.initial, "right");
  CHECK(o.state.count("boulder_yellow") == 0);
  CHECK(o.state.count("poison_yellow") == 0);
  CHECK(o.state.coords("agent") == std::vector<Coord>{{2, 1}});
  auto wrong = level_from(*e, "#######\n#@rY G#\n#######\n");
  CHECK(e->step(wrong.initial, "right").state == wrong.initial);
  auto die = level_from(*e, "#######\n#@B  G#\n#######\n");
  CHECK(e->step(die.initial, "right").terminal == Terminal::Loss);
  auto win = level_from(*e, "#####\n#@G #\n#####\n");
  CHECK(e->step(win.initial, "right").terminal == Terminal::Win);
  auto chain = level_from(*e, "########\n#@yyY G#\n########\n");
  auto c = e->step(chain.initial, "right");
  CHECK(c.state.coords("boulder_yellow") == std::vector<Coord>{{3, 1}});
  CHECK(c.state.count("poison_yellow") == 0);
}

TEST_CASE("pushboulders abstraction") {
  auto e = env::make_environment("pushboulders");
  auto l = e->shipped_levels().at(0);
  auto p = e->problem(l);
  CHECK(p.init.count(pddl::parse_atom("(at start)")) == 1);
  CHECK(p.init.count(pddl::parse_atom("(connection hall start)")) == 1);
  CHECK(p.goal[0].atom.str() == "(at goal)");
  auto plan = hl::plan_high(e->domain(), p);
  CHECK(plan.labels() == std::vector<std::string>{"move_between_bottleneck start hall",
                                                  "move_between_bottleneck hall goalroom",
                                                  "move_between_bottleneck goalroom goal"});
}

TEST_CASE("clusterbox") {
  auto e = env::make_environment("clusterbox");
  auto l = level_from(*e, "#######\n#@r r #\n#  c  #\n#######\n");
  CHECK(e->status(l.initial) == Terminal::None);
  auto o = e->step(l.initial, "right");
  CHECK(o.state.coords("box_red") == std::vector<Coord>{{3, 1}, {4, 1}});
  CHECK(o.terminal == Terminal::Win);
  CHECK(env::clusterbox_all_clustered(o.state));
  auto cherry = level_from(*e, "#####\n#@c #\n#r r#\n#####\n");
  CHECK(e->step(cherry.initial, "right").terminal == Terminal::Loss);
  auto cs = e->checkers(l);
  CHECK_FALSE(cs.evaluate(l.initial, pddl::parse_atom("(clustered red)")));
  CHECK(cs.evaluate(o.state, pddl::parse_atom("(clustered red)")));
}

TEST_CASE("babyai pickup, drop, toggle") {
  auto e = env::make_environment("babyai");
  auto l = e->shipped_levels().at(0);
  LowState s = l.initial;
  CHECK(s.aux("facing") == std::vector<std::string>{"right"});
  auto o = e->step(s, "up");
  CHECK(o.state.coords("agent") == std::vector<Coord>{{1, 3}});
  CHECK(o.state.aux("facing") == std::vector<std::string>{"up"});
  auto p = e->problem(l);
  CHECK(p.init.count(pddl::parse_atom("(blocking ball door)")) == 1);
  CHECK(p.init.count(pddl::parse_atom("(accessible key)")) == 1);
  CHECK(p.init.count(pddl::parse_atom("(behind box door)")) == 1);
  auto plan = hl::plan_high(e->domain(), p);
  CHECK(plan.labels() == std::vector<std::string>{"unblock door ball", "drop ball", "pick_up key",
                                                  "unlock door key", "drop key", "pick_up_behind box door"});

  auto t = level_from(*e, "######\n#@kD #\n######\n", "aux: facing right\naux: mission key\n");
  auto picked = e->step(t.initial, "pickup");
  CHECK(picked.state.aux("carrying") == std::vector<std::string>{"key"});
  CHECK(picked.terminal == Terminal::Win);
  auto t2 = level_from(*e, "######\n#@ D #\n######\n", "aux: facing right\naux: carrying key\naux: mission box\n");
  auto moved = e->step(t2.initial, "right");
  auto opened = e->step(moved.state, "toggle");
  CHECK(opened.state.count("door_open") == 1);
  // the open doorway is not an empty cell
  CHECK(e->step(opened.state, "drop").state == opened.state);
  auto inside = e->step(opened.state, "right").state;
  CHECK(inside.coords("agent") == std::vector<Coord>{{3, 1}});
  auto dropped = e->step(inside, "drop");
  CHECK(dropped.state.coords("key") == std::vector<Coord>{{4, 1}});
  CHECK(dropped.state.aux("carrying").empty());
}

TEST_CASE("builtin programs agree with native steps") {
  for (const auto& id : env::environment_ids()) {
    CAPTURE(id);
    auto e = env::make_environment(id);
    auto prog = e->builtin_program();
    REQUIRE_MESSAGE(prog.loaded(), prog.load_error());
    std::mt19937_64 rng(99);
    wm::Simulator sim;
    int mismatches = 0;
    for (const auto& l : e->shipped_levels()) {
      LowState s = l.initial;
      for (int i = 0; i < 300; ++i) {
        const auto& a = e->actions()[rng() % e->actions().size()];
        auto o = e->step(s, a);
        LowState pred = sim.simulate(prog, s, a);
        if (!(pred == o.state)) {
          if (++mismatches < 3) MESSAGE(a << "\n" << s.to_json() << "\npredicted " << pred.to_json() << "\nactual    " << o.state.to_json());
        }
        s = o.terminal == Terminal::None ? o.state : l.initial;
      }
    }
    CHECK(mismatches == 0);
  }
}
