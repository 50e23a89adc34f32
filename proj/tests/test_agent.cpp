#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "groundwork/agent.hpp"

using namespace groundwork;
using agent::Origin;
using agent::ReplayBuffer;
using wm::Coord;
using wm::LowState;

namespace {

env::Level keke_level(const std::string& grid) {
  auto e = env::make_environment("keke");
  return e->parse_level("env: keke\nname: fixture\n---\n" + grid);
}

ReplayBuffer single(const LowState& s, const std::string& a, const LowState& next, const std::string& label) {
  ReplayBuffer b;
  b.push({s, a, 0.0, next, label, Origin::Actual, "none"});
  return b;
}

class ScriptedBackend final : public synth::Backend {
 public:
  explicit ScriptedBackend(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  synth::SynthResult call(const synth::SynthRequest&) override {
    synth::SynthResult r;
    r.raw = calls_ < replies_.size() ? replies_[calls_] : "";
    r.program = synth::extract_code(r.raw);
    ++calls_;
    return r;
  }
  std::string name() const override { return "scripted"; }
  std::size_t calls_ = 0;

 private:
  std::vector<std::string> replies_;
};

}  // namespace

TEST_CASE("learning efficiency") {
  CHECK(agent::learning_efficiency(5, 5, 197) == doctest::Approx(5.0 / 197).epsilon(1e-12));
  CHECK(std::abs(agent::learning_efficiency(5, 5, 197) - 0.025381) < 1e-6);
  CHECK(std::abs(agent::learning_efficiency(2, 4, 62) - 0.016129) < 1e-6);
  CHECK(agent::learning_efficiency(0, 5, 100) == 0.0);
  CHECK(agent::learning_efficiency(0, 0, 0) == 0.0);
}

TEST_CASE("warmup is reproducible and stops at terminals") {
  auto e = env::make_environment("sokoban");
  auto l = e->shipped_levels().front();
  std::mt19937_64 a(7), b(7);
  auto wa = agent::warmup(*e, l, 10, a);
  auto wb = agent::warmup(*e, l, 10, b);
  REQUIRE(wa.size() == 10);
  for (std::size_t i = 0; i < wa.size(); ++i) {
    CHECK(wa[i].action == wb[i].action);
    CHECK(wa[i].next == wb[i].next);
    CHECK(wa[i].origin == Origin::Warmup);
    if (i) CHECK(wa[i].state == wa[i - 1].next);
  }
  CHECK(wa[0].state == l.initial);

  // A one-push level: any push onto the hole wins and ends the warmup.
  auto win = e->parse_level("env: sokoban\n---\n@$.\n");
  std::mt19937_64 r(1);
  for (int t = 0; t < 20; ++t) {
    auto w = agent::warmup(*e, win, 10, r);
    if (w.entries.back().outcome == "win") {
      CHECK(e->status(w.entries.back().next) == env::Terminal::Win);
      CHECK(w.size() < 10);
      return;
    }
  }
  FAIL("no seed produced an early stop");
}

TEST_CASE("warmup can record a box push") {
  auto e = env::make_environment("sokoban");
  auto l = e->shipped_levels().front();
  bool found = false;
  for (std::uint64_t seed = 0; seed < 50 && !found; ++seed) {
    std::mt19937_64 rng(seed);
    for (const auto& t : agent::warmup(*e, l, 10, rng).entries)
      if (t.state.coords("box") != t.next.coords("box") && t.state.coords("agent") != t.next.coords("agent")) found = true;
  }
  CHECK(found);
}

TEST_CASE("mismatch detection and diff rendering") {
  auto l = keke_level("B=Y\n\nR=F\n b r\n");
  auto e = env::make_environment("keke");
  LowState s = l.initial;
  // The model forgets transmutation: rock stays rock.
  LowState predicted = s;
  LowState actual = s;
  actual.erase_type("rock_obj");
  actual.add("flag_obj", {3, 3});
  actual.set_aux("rules_formed", {"baba_word is_word you_word", "rock_word is_word flag_word"});
  actual.set_aux("overlappables", {"flag_obj"});
  predicted.set_aux("rules_formed", {"baba_word is_word you_word"});
  predicted.set_aux("overlappables", {});

  CHECK_FALSE(agent::detect_mismatch(single(s, "up", actual, "x"), single(s, "up", actual, "x")));

  auto m = agent::detect_mismatch(single(s, "up", predicted, "form_rule rock_word is_word flag_word"),
                                  single(s, "up", actual, "form_rule rock_word is_word flag_word"));
  REQUIRE(m);
  CHECK(m->index == 0);
  std::string text = agent::render_diff(m->diff);
  CHECK(text ==
        "\"overlappables\": predicted: []\n"
        "\"overlappables\": actual: ['flag_obj']\n"
        "\n"
        "\"rules_formed\": Missing: ['rock_word is_word flag_word']\n"
        "\n"
        "Key mismatch: \"flag_obj\" is missing, but \"rock_obj\" has the same coordinates.\n"
        "\n"
        "Key mismatch: \"rock_obj\" is missing, but \"flag_obj\" has the same coordinates.\n");

  std::string block = synth::render_mismatch_block(*m);
  CHECK(block.rfind("ERRORS FROM WORLD MODEL for ABSTRACT PLAN form_rule rock_word is_word flag_word:\n", 0) == 0);
}

TEST_CASE("earliest divergence is reported (property)") {
  auto e = env::make_environment("sokoban");
  auto l = e->shipped_levels().front();
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    auto w = agent::warmup(*e, l, 10, rng);
    ReplayBuffer p = w;
    std::size_t k = rng() % w.size();
    p.entries[k].next.add("wall", {0, 0});
    p.entries[k].next.erase_type("wall");
    if (p.entries[k].next == w.entries[k].next) continue;
    for (std::size_t j = k + 1; j < p.size(); ++j) p.entries[j].next = LowState(1, 1);
    auto m = agent::detect_mismatch(p, w);
    REQUIRE(m);
    CHECK(m->index == k);
    for (std::size_t j = 0; j < k; ++j) CHECK(p[j].next == w[j].next);
  }
}

TEST_CASE("truncated actual episode is a mismatch at the shorter length") {
  auto e = env::make_environment("pushboulders");
  auto l = e->parse_level("env: pushboulders\n---\n@R G\n");
  LowState s = l.initial;
  auto out = e->step(s, "right");
  REQUIRE(out.terminal == env::Terminal::Loss);
  ReplayBuffer actual = single(s, "right", out.state, "walk");
  LowState moved = s;
  moved.set_coords("agent", {{1, 0}});
  ReplayBuffer predicted = single(s, "right", moved, "walk");
  LowState moved2 = moved;
  moved2.set_coords("agent", {{2, 0}});
  predicted.push({moved, "right", 0.0, moved2, "walk", Origin::Predicted, "none"});
  auto m = agent::detect_mismatch(predicted, actual);
  REQUIRE(m);
  CHECK(m->index == 0);
  CHECK_FALSE(m->truncated);

  // Equal prefix, actual ends early.
  ReplayBuffer a2 = single(s, "right", moved, "walk");
  auto m2 = agent::detect_mismatch(predicted, a2);
  REQUIRE(m2);
  CHECK(m2->truncated);
  CHECK(m2->index == 1);
}

TEST_CASE("exploration candidates exclude formed rules") {
  auto e = env::make_environment("keke");
  // flag is win is already formed; rock is flag can be formed.
  auto l = keke_level("B=Y   F=V\n\n  R= F\n b    r\n");
  auto prob = e->problem(l);
  auto ops = pddl::ground(e->domain(), prob);
  auto cands = agent::enumerate_exploration(prob.init, ops);

  auto has = [&](const std::string& label) {
    return std::any_of(cands.begin(), cands.end(), [&](const auto& o) { return o.label() == label; });
  };
  CHECK_FALSE(has("form_rule flag_word is_word win_word"));
  CHECK(has("form_rule rock_word is_word flag_word"));
  CHECK_FALSE(cands.empty());

  // Brute force: evaluate preconditions and effects with the checkers directly.
  auto cs = e->checkers(l);
  std::vector<std::string> expected, got;
  for (const auto& op : ops) {
    bool pre = wm::check_literals(cs, l.initial, op.preconditions);
    bool eff = wm::check_literals(cs, l.initial, op.effect_literals());
    if (pre && !eff) expected.push_back(op.label());
  }
  for (const auto& c : cands) got.push_back(c.label());
  CHECK(got == expected);

  CHECK(agent::enumerate_exploration({}, {}).empty());
}

TEST_CASE("goop level: exploration includes pushing a rock into goop") {
  auto e = env::make_environment("keke");
  env::Level l;
  for (const auto& lv : e->shipped_levels())
    if (lv.name == "level2") l = lv;
  auto prob = e->problem(l);
  auto cands = agent::enumerate_exploration(prob.init, pddl::ground(e->domain(), prob));
  CHECK(std::any_of(cands.begin(), cands.end(),
                    [](const auto& o) { return o.label() == "push_onto rock_obj goop_obj"; }));
}

TEST_CASE("oracle backend solves the sokoban levels with one call") {
  auto e = env::make_environment("sokoban");
  synth::OracleBackend oracle(e->builtin_program_source());
  std::ostringstream log;
  agent::TraceWriter trace(&log);
  agent::Agent a(*e, oracle, {}, &trace);
  std::vector<int> calls;
  for (const auto& l : e->shipped_levels()) {
    auto r = a.run_level(l);
    CAPTURE(l.name);
    CHECK(r.solved);
    CHECK(r.env_steps <= 500);
    calls.push_back(r.synth_calls);
  }
  CHECK(calls == std::vector<int>{1, 0, 0, 0, 0});
  CHECK(a.requests().size() == 1);
  CHECK(log.str().find("\"event\":\"level_report\"") != std::string::npos);
}

TEST_CASE("a level won at the start needs no steps and no calls") {
  auto e = env::make_environment("sokoban");
  auto l = e->parse_level("env: sokoban\nname: done\n---\n@ \n");
  ScriptedBackend b({});
  agent::Agent a(*e, b);
  auto r = a.run_level(l);
  CHECK(r.solved);
  CHECK(r.env_steps == 0);
  CHECK(r.synth_calls == 0);
}

TEST_CASE("call budget is never exceeded") {
  auto e = env::make_environment("sokoban");
  auto l = e->shipped_levels().front();
  for (int budget : {1, 3, 6}) {
    ScriptedBackend b({"no code here", "```python\ndef transition(state, action):\n    return state\n```"});
    agent::AgentOptions opt;
    opt.budgets.synth_calls = budget;
    agent::Agent a(*e, b, opt);
    auto r = a.run_level(l);
    CHECK_FALSE(r.solved);
    CHECK(r.synth_calls == budget);
    CHECK(b.calls_ == static_cast<std::size_t>(budget));
    CHECK(r.status == agent::LevelStatus::CallBudget);
  }
}

TEST_CASE("broken programs are routed to refinement") {
  auto e = env::make_environment("sokoban");
  auto l = e->shipped_levels().front();
  std::string good = "```python\n" + e->builtin_program_source() + "```\n";
  ScriptedBackend b({"```python\ndef transition(state, action:\n```", good});
  agent::Agent a(*e, b);
  auto r = a.run_level(l);
  CHECK(r.solved);
  CHECK(r.synth_calls == 2);
  CHECK(r.refinements == 1);
  CHECK(a.requests().back().kind == synth::RequestKind::Refine);
}

TEST_CASE("scripted revisions converge on the goop level") {
  auto e = env::make_environment("keke");
  env::Level l;
  for (const auto& lv : e->shipped_levels())
    if (lv.name == "level2") l = lv;
  REQUIRE(!l.name.empty());
  synth::MockBackend mock(env::asset_dir() + "/mock/keke_goop");
  std::ostringstream log;
  agent::TraceWriter trace(&log);
  agent::Agent a(*e, mock, {}, &trace);
  auto r = a.run_level(l);
  CHECK(r.solved);
  CHECK(r.synth_calls <= 6);
  CHECK(r.refinements <= 4);
  MESSAGE("calls " << r.synth_calls << " refinements " << r.refinements << " steps " << r.env_steps);
  REQUIRE(!a.requests().empty());
  CHECK(a.requests().back().prompt.find("ERRORS FROM WORLD MODEL for ABSTRACT PLAN") != std::string::npos);
}
