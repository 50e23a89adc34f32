#include <algorithm>
#include <random>
#include <string>

#include "doctest.h"
#include "fixtures.hpp"
#include "groundwork/pddl.hpp"

using namespace groundwork::pddl;

TEST_CASE("parse_domain: box-storage listing") {
  Domain d = parse_domain(fixtures::kSokobanDomain);
  CHECK(d.name == "sokoban");
  REQUIRE(d.predicates.size() == 2);
  CHECK(d.predicates[0].name == "unstored_box");
  CHECK(d.predicates[1].name == "boxes_stuck");
  CHECK(d.predicates[1].arity() == 0);
  REQUIRE(d.operators.size() == 1);
  const auto& op = d.operators[0];
  CHECK(op.name == "push_to_hole");
  CHECK(op.params.size() == 1);
  CHECK(op.params[0].type == "box");
  CHECK(op.add_effects.empty());
  CHECK(op.del_effects.size() == 2);
}

TEST_CASE("parse_domain: rule listing has two three-word operators") {
  Domain d = parse_domain(fixtures::kKekeDomain);
  REQUIRE(d.operators.size() == 2);
  CHECK(d.operators[0].name == "form_rule");
  CHECK(d.operators[1].name == "break_rule");
  for (const auto& op : d.operators) {
    REQUIRE(op.params.size() == 3);
    for (const auto& p : op.params) CHECK(p.type == "word");
  }
}

TEST_CASE("parse_domain: degenerate domain") {
  Domain d = parse_domain("(define (domain empty) (:predicates))");
  CHECK(d.operators.empty());
  CHECK(d.predicates.empty());
}

TEST_CASE("parse_domain: identifiers are case-insensitive") {
  Domain d = parse_domain("(DEFINE (DOMAIN Mixed) (:PREDICATES (Foo ?X)) (:action Bar :parameters (?y) :effect (FOO ?Y)))");
  CHECK(d.name == "mixed");
  CHECK(d.predicates[0].name == "foo");
  CHECK(d.operators[0].add_effects[0].args[0] == "?y");
}

TEST_CASE("parse_domain: errors") {
  SUBCASE("syntax error reports line and column") {
    try {
      parse_domain("(define (domain d)\n  (:predicates (p)\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() >= 2);
    }
  }
  SUBCASE("conditional effects are unsupported") {
    CHECK_THROWS_AS(parse_domain("(define (domain d) (:predicates (p) (q))"
                                 " (:action a :parameters () :effect (when (p) (q))))"),
                    UnsupportedError);
  }
  SUBCASE("numeric fluents are unsupported") {
    CHECK_THROWS_AS(parse_domain("(define (domain d) (:predicates (p))"
                                 " (:action a :parameters () :effect (increase (total-cost) 1)))"),
                    UnsupportedError);
  }
  SUBCASE("undeclared predicate") {
    CHECK_THROWS_AS(parse_domain("(define (domain d) (:predicates (p)) (:action a :parameters () :effect (q)))"),
                    ValidationError);
  }
  SUBCASE("unbound variable") {
    CHECK_THROWS_AS(
        parse_domain("(define (domain d) (:predicates (p ?x)) (:action a :parameters () :effect (p ?z)))"),
        ValidationError);
  }
  SUBCASE("arity mismatch") {
    CHECK_THROWS_AS(
        parse_domain("(define (domain d) (:predicates (p ?x)) (:action a :parameters (?x) :effect (p ?x ?x)))"),
        ValidationError);
  }
  SUBCASE("add and delete the same atom") {
    CHECK_THROWS_AS(parse_domain("(define (domain d) (:predicates (p))"
                                 " (:action a :parameters () :effect (and (p) (not (p)))))"),
                    ValidationError);
  }
  SUBCASE("timed literal") {
    CHECK_THROWS_AS(parse_domain("(define (domain d) (:predicates (p))"
                                 " (:action a :parameters () :precondition (at start (p)) :effect (p)))"),
                    UnsupportedError);
  }
}

TEST_CASE("'at' is usable as a predicate name") {
  Domain d = parse_domain(
      "(define (domain boulders) (:predicates (at ?place) (connection ?from ?to))"
      " (:action move_between_bottleneck :parameters (?from - object ?to - object)"
      " :precondition (and (at ?from) (connection ?from ?to)) :effect (and (at ?to))))");
  CHECK(d.operators[0].preconditions[0].atom.predicate == "at");
}

TEST_CASE("parse_problem") {
  Domain d = parse_domain(fixtures::kSokobanDomain);
  Problem p = parse_problem(fixtures::kSokobanProblem, d);
  CHECK(p.objects.size() == 2);
  CHECK(p.objects_of_type(d, "box") == std::vector<std::string>{"b1", "b2"});
  CHECK(p.init.size() == 2);
  CHECK(p.goal.size() == 2);
  CHECK_FALSE(p.goal[0].positive);

  SUBCASE("goal equal to init is accepted") {
    Problem q = parse_problem(
        "(define (problem t) (:domain sokoban) (:objects b1 - box) (:init (unstored_box b1))"
        " (:goal (unstored_box b1)))",
        d);
    CHECK(holds(q.init, q.goal));
  }
  SUBCASE("undeclared type") {
    CHECK_THROWS_AS(parse_problem("(define (problem t) (:domain sokoban) (:objects x - crate) (:init) (:goal (and)))", d),
                    ValidationError);
  }
  SUBCASE("undeclared object") {
    CHECK_THROWS_AS(
        parse_problem("(define (problem t) (:domain sokoban) (:objects b1 - box) (:init (unstored_box b9)) (:goal (and)))", d),
        ValidationError);
  }
  SUBCASE("arity mismatch") {
    CHECK_THROWS_AS(
        parse_problem("(define (problem t) (:domain sokoban) (:objects b1 - box) (:init (boxes_stuck b1)) (:goal (and)))", d),
        ValidationError);
  }
}

TEST_CASE("serialize round trip") {
  for (auto [dt, pt] : {std::pair{fixtures::kSokobanDomain, fixtures::kSokobanProblem},
                        std::pair{fixtures::kKekeDomain, fixtures::kKekeProblem},
                        std::pair{fixtures::kChainDomain, fixtures::kChainProblem}}) {
    Domain d = parse_domain(dt);
    Domain d2 = parse_domain(serialize(d));
    CHECK(d == d2);
    CHECK(serialize(d) == serialize(d2));
    Problem p = parse_problem(pt, d);
    Problem p2 = parse_problem(serialize(p), d2);
    CHECK(p == p2);
  }
}

TEST_CASE("ground: deterministic order and counts") {
  Domain d = parse_domain(fixtures::kSokobanDomain);
  Problem p = parse_problem(fixtures::kSokobanProblem, d);
  auto ops = ground(d, p);
  REQUIRE(ops.size() == 2);
  CHECK(ops[0].label() == "push_to_hole b1");
  CHECK(ops[1].label() == "push_to_hole b2");
  CHECK(ops[0].del_effects[0].str() == "(unstored_box b1)");

  Domain k = parse_domain(fixtures::kKekeDomain);
  Problem kp = parse_problem(fixtures::kKekeProblem, k);
  auto kops = ground(k, kp);
  // 3 word objects, 3 parameters: 3^3 per operator.
  CHECK(kops.size() == 2 * 27);
  CHECK(std::count_if(kops.begin(), kops.end(), [](const auto& o) { return o.schema == "form_rule"; }) == 27);
  CHECK(kops[0].label() == "form_rule flag flag flag");
  CHECK(kops[26].label() == "form_rule rock rock rock");

  Domain empty = parse_domain("(define (domain e) (:predicates (p)))");
  Problem ep = parse_problem("(define (problem e) (:domain e) (:init) (:goal (p)))", empty);
  CHECK(ground(empty, ep).empty());
}

TEST_CASE("ground: count equals product of type-compatible objects (property)") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    int na = 1 + static_cast<int>(rng() % 4), nb = static_cast<int>(rng() % 4);
    std::string objs;
    for (int i = 0; i < na; ++i) objs += " a" + std::to_string(i) + " - ta";
    for (int i = 0; i < nb; ++i) objs += " b" + std::to_string(i) + " - tb";
    Domain d = parse_domain(
        "(define (domain g) (:types ta tb) (:predicates (p ?x - ta ?y - tb) (q ?x - ta))"
        " (:action one :parameters (?x - ta ?y - tb) :effect (p ?x ?y))"
        " (:action two :parameters (?x - ta ?z - ta) :effect (q ?z))"
        " (:action three :parameters (?o) :effect (and)))");
    Problem p = parse_problem("(define (problem g) (:domain g) (:objects" + objs + ") (:init) (:goal (and)))", d);
    auto ops = ground(d, p);
    std::size_t expect = static_cast<std::size_t>(na * nb + na * na + (na + nb));
    CHECK(ops.size() == expect);
    CHECK(ops == ground(d, p));
    // lexicographic within each schema
    for (std::size_t i = 1; i < ops.size(); ++i)
      if (ops[i].schema == ops[i - 1].schema) CHECK(ops[i - 1].args < ops[i].args);
  }
}

TEST_CASE("holds") {
  AbstractState s{parse_atom("(rule_formed flag is win)")};
  CHECK(holds(s, {Literal{parse_atom("(rule_formed flag is win)"), true}}));
  CHECK(holds(s, {}));
  CHECK(holds({}, {Literal{parse_atom("(boxes_stuck)"), false}}));
  CHECK_FALSE(holds(s, {Literal{parse_atom("(rule_formed flag is win)"), false}}));
}

TEST_CASE("holds is monotone for positive queries (property)") {
  std::mt19937 rng(11);
  std::vector<Atom> universe;
  for (int i = 0; i < 8; ++i) universe.push_back(Atom{"p", {"o" + std::to_string(i)}});
  for (int trial = 0; trial < 200; ++trial) {
    AbstractState s;
    std::vector<Literal> q;
    for (const auto& a : universe) {
      if (rng() % 2) s.insert(a);
      if (rng() % 3 == 0) q.push_back({a, true});
    }
    bool before = holds(s, q);
    AbstractState bigger = s;
    bigger.insert(universe[rng() % universe.size()]);
    if (before) CHECK(holds(bigger, q));
  }
}
