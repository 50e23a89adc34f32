#include <chrono>
#include <random>
#include <string>

#include "doctest.h"
#include "fixtures.hpp"
#include "groundwork/worldmodel.hpp"

using namespace groundwork;
using wm::Coord;
using wm::LowState;

namespace {

const char* kMoveAgent = R"(
def transition(state, action):
    dx, dy = {"up": (0, -1), "down": (0, 1), "left": (-1, 0), "right": (1, 0)}.get(action, (0, 0))
    x, y = state["agent"][0]
    nx, ny = x + dx, y + dy
    if 0 <= nx < state["width"] and 0 <= ny < state["height"] and [nx, ny] not in state.get("wall", []):
        state["agent"] = [[nx, ny]]
    return state
)";

LowState sample() {
  LowState s(5, 4, {"rules_formed"});
  s.add("agent", {1, 1});
  s.add("wall", {3, 1});
  s.add("wall", {0, 0});
  s.add("box", {2, 2});
  s.set_aux("rules_formed", {"z", "a"});
  return s;
}

}  // namespace

TEST_CASE("LowState canonical form") {
  LowState a(4, 4), b(4, 4);
  a.add("box", {2, 1});
  a.add("box", {1, 2});
  b.add("box", {1, 2});
  b.add("box", {2, 1});
  CHECK(a == b);
  CHECK(a.hash() == b.hash());
  CHECK(a.to_json() == b.to_json());
  CHECK(a.coords("box").front() == Coord{1, 2});

  // duplicates are kept (multiset), removal takes one
  a.add("box", {1, 2});
  CHECK(a.count("box") == 3);
  CHECK(a.remove("box", {1, 2}));
  CHECK(a == b);
  CHECK_FALSE(a.remove("box", {3, 3}));

  // empty lists are dropped
  a.remove("box", {1, 2});
  a.remove("box", {2, 1});
  CHECK(a.objects().empty());
  CHECK_THROWS_AS(a.add("box", {4, 0}), wm::MalformedStateError);
  CHECK_THROWS_AS(LowState(0, 3), wm::MalformedStateError);

  LowState s = sample();
  CHECK(s.aux("rules_formed") == std::vector<std::string>{"a", "z"});
  CHECK(s.types_at({3, 1}) == std::vector<std::string>{"wall"});
}

TEST_CASE("JSON round trip") {
  LowState s = sample();
  std::string j = s.to_json();
  CHECK(j == R"({"agent":[[1,1]],"box":[[2,2]],"height":4,"rules_formed":["a","z"],"wall":[[0,0],[3,1]],"width":5})");
  CHECK(LowState::from_json(j) == s);
  CHECK_THROWS_AS(LowState::from_json("{\"agent\": [[1,1]]}"), wm::MalformedStateError);
  CHECK_THROWS_AS(LowState::from_json("{\"width\":2,\"height\":2,\"agent\":[[5,5]]}"), wm::MalformedStateError);
  CHECK_THROWS_AS(LowState::from_json("not json"), wm::MalformedStateError);
}

TEST_CASE("JSON round trip on random states (property)") {
  std::mt19937 rng(5);
  for (int t = 0; t < 200; ++t) {
    int w = 1 + static_cast<int>(rng() % 9), h = 1 + static_cast<int>(rng() % 9);
    LowState s(w, h, {"carrying"});
    int n = static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i)
      s.add("t" + std::to_string(rng() % 3), {static_cast<int>(rng() % w), static_cast<int>(rng() % h)});
    if (rng() % 2) s.set_aux("carrying", {"key"});
    LowState r = LowState::from_json(s.to_json());
    CHECK(r == s);
    CHECK(r.hash() == s.hash());
  }
}

TEST_CASE("simulate runs the program on a copy") {
  wm::TransitionProgram prog(kMoveAgent, 1, "test");
  REQUIRE(prog.loaded());
  LowState s = sample();
  LowState before = s;
  LowState n = wm::simulate(prog, s, "down");
  CHECK(s == before);
  CHECK(n.coords("agent") == std::vector<Coord>{{1, 2}});
  CHECK(n.coords("wall") == s.coords("wall"));
  CHECK(n.aux("rules_formed") == s.aux("rules_formed"));
  CHECK(wm::simulate(prog, s, "right").coords("agent") == std::vector<Coord>{{2, 1}});
  CHECK(wm::simulate(prog, wm::simulate(prog, s, "right"), "right").coords("agent") ==
        std::vector<Coord>{{2, 1}});
  // deterministic and pure across repeated calls
  for (int i = 0; i < 5; ++i) CHECK(wm::simulate(prog, s, "down") == n);
}

TEST_CASE("identity program preserves every state (property)") {
  wm::TransitionProgram id("def transition(state, action):\n    return state\n", 0, "identity");
  std::mt19937 rng(9);
  wm::Simulator sim;
  for (int t = 0; t < 100; ++t) {
    LowState s(6, 6, {"facing"});
    for (int i = 0; i < 8; ++i)
      s.add(i % 2 ? "box" : "wall", {static_cast<int>(rng() % 6), static_cast<int>(rng() % 6)});
    s.set_aux("facing", {"left"});
    CHECK(sim.simulate(id, s, "up") == s);
  }
  CHECK(sim.calls() == 100);
}

TEST_CASE("simulation errors are classified") {
  LowState s = sample();
  auto kind_of = [&](const std::string& src) {
    try {
      wm::simulate(wm::TransitionProgram(src, 1, "t"), s, "up");
    } catch (const wm::SimulationError& e) {
      return static_cast<int>(e.kind());
    }
    return -1;
  };
  const int crash = static_cast<int>(wm::SimErrorKind::Crash);
  const int timeout = static_cast<int>(wm::SimErrorKind::Timeout);
  const int malformed = static_cast<int>(wm::SimErrorKind::Malformed);
  CHECK(kind_of("def transition(state, action):\n    return state['nothing']\n") == crash);
  CHECK(kind_of("def transition(state, action):\n    while True:\n        pass\n") == timeout);
  CHECK(kind_of("def transition(state, action):\n    return None\n") == malformed);
  CHECK(kind_of("def transition(state, action):\n    state['width'] = 9\n    return state\n") == malformed);
  CHECK(kind_of("def transition(state, action):\n    state['agent'] = [[9, 9]]\n    return state\n") == malformed);
  CHECK(kind_of("def transition(state, action):\n    state['agent'] = [[1]]\n    return state\n") == malformed);
  CHECK(kind_of("def other(state, action):\n    return state\n") == crash);
  CHECK(kind_of("def transition(state, action)\n    return state\n") == crash);
  CHECK(kind_of("import os\ndef transition(state, action):\n    return state\n") == crash);

  wm::TransitionProgram bad("def transition(:\n", 3, "t");
  CHECK_FALSE(bad.loaded());
  CHECK_FALSE(bad.load_error().empty());
}

TEST_CASE("missing aux keys come back empty") {
  LowState s = sample();
  wm::TransitionProgram drop("def transition(state, action):\n    del state['rules_formed']\n    return state\n", 1, "t");
  LowState n = wm::simulate(drop, s, "up");
  CHECK(n.has_aux_key("rules_formed"));
  CHECK(n.aux("rules_formed").empty());
}

TEST_CASE("checkers, abstract and check_effects agree") {
  auto d = pddl::parse_domain(fixtures::kSokobanDomain);
  auto p = pddl::parse_problem(fixtures::kSokobanProblem, d);
  wm::CheckerSet cs;
  // rank-based: unstored_box(b_k) iff fewer than k boxes sit on holes
  cs.add("unstored_box", [](const LowState& s, const std::vector<std::string>& args) {
    int k = std::stoi(args.at(0).substr(1));
    int stored = 0;
    for (Coord c : s.coords("box")) stored += s.has("hole", c);
    return stored < k;
  });
  cs.add("boxes_stuck", [](const LowState&, const std::vector<std::string>&) { return false; });

  auto atoms = wm::candidate_atoms(d, p);
  REQUIRE(atoms.size() == 3);
  CHECK(atoms[0].str() == "(unstored_box b1)");
  CHECK(atoms[2].str() == "(boxes_stuck)");

  LowState s(5, 3);
  s.add("box", {1, 1});
  s.add("box", {2, 1});
  s.add("hole", {2, 1});
  s.add("hole", {3, 1});
  auto abs = wm::abstract(cs, s, atoms);
  CHECK(abs == pddl::AbstractState{pddl::parse_atom("(unstored_box b2)")});

  auto ops = pddl::ground(d, p);
  CHECK(check_effects(cs, s, ops[0]));
  CHECK_FALSE(check_effects(cs, s, ops[1]));
  CHECK(wm::check_literals(cs, s, {pddl::Literal{pddl::parse_atom("(unstored_box b2)"), true}}));

  CHECK_THROWS_AS(cs.evaluate(s, pddl::parse_atom("(missing x)")), wm::MissingCheckerError);
  CHECK(cs.predicates() == std::vector<std::string>{"boxes_stuck", "unstored_box"});
}

TEST_CASE("simulate throughput") {
  wm::TransitionProgram prog(kMoveAgent, 1, "test");
  LowState s(10, 10);
  s.add("agent", {5, 5});
  for (int i = 0; i < 10; ++i) s.add("wall", {i, 0});
  wm::Simulator sim;
  auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 2000; ++i) s = sim.simulate(prog, s, i % 2 ? "left" : "right");
  double us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count() / 2000;
  MESSAGE("simulate: " << us << " us/call");
  CHECK(us < 5000);
}

TEST_CASE("pack/unpack round trip (property)") {
  std::mt19937 rng(21);
  for (int t = 0; t < 200; ++t) {
    LowState s(1 + static_cast<int>(rng() % 8), 1 + static_cast<int>(rng() % 8), {"facing", "carrying"});
    for (int i = 0; i < 10; ++i)
      s.add("t" + std::to_string(rng() % 4), {static_cast<int>(rng() % s.width()), static_cast<int>(rng() % s.height())});
    if (rng() % 2) s.set_aux("facing", {"up"});
    CHECK(LowState::unpack(s.pack()) == s);
  }
  CHECK_THROWS_AS(LowState::unpack("xx"), wm::MalformedStateError);
}
