#include "groundwork/agent.hpp"

#include <chrono>
#include <memory>
#include <ostream>

namespace groundwork::agent {

using nlohmann::json;

void TraceWriter::write(const std::string& event, json fields) {
  fields["event"] = event;
  fields["seq"] = seq_++;
  if (out_) *out_ << fields.dump() << "\n";
}

std::string to_string(LevelStatus s) {
  switch (s) {
    case LevelStatus::Solved: return "solved";
    case LevelStatus::CallBudget: return "call_budget_exhausted";
    case LevelStatus::StepBudget: return "step_budget_exhausted";
    case LevelStatus::UnsolvableAbstract: return "unsolvable_abstract";
  }
  return "call_budget_exhausted";
}

double learning_efficiency(int completed, int total, int steps) {
  if (completed <= 0 || total <= 0 || steps <= 0) return 0.0;
  return (static_cast<double>(completed) / total) * (static_cast<double>(completed) / steps);
}

std::string outcome_name(env::Terminal t) { return env::to_string(t); }

ReplayBuffer warmup(const env::Environment& env, const env::Level& level, int n, std::mt19937_64& rng) {
  ReplayBuffer buf;
  LowState s = level.initial;
  const auto& actions = env.actions();
  for (int i = 0; i < n && env.status(s) == env::Terminal::None; ++i) {
    const std::string& a = actions[rng() % actions.size()];
    auto out = env.step(s, a);
    buf.push({s, a, 0.0, out.state, "", Origin::Warmup, outcome_name(out.terminal)});
    s = out.state;
  }
  return buf;
}

std::vector<pddl::GroundedOperator> enumerate_exploration(const pddl::AbstractState& init,
                                                          const std::vector<pddl::GroundedOperator>& ops) {
  std::vector<pddl::GroundedOperator> out;
  for (const auto& op : ops)
    if (pddl::holds(init, op.preconditions) && !pddl::holds(init, op.effect_literals())) out.push_back(op);
  return out;
}

namespace {

json state_json(const LowState& s) { return json::parse(s.to_json()); }

json transitions_json(const ReplayBuffer& buf) {
  json arr = json::array();
  for (const auto& t : buf.entries)
    arr.push_back({{"action", t.action}, {"next", state_json(t.next)}, {"outcome", t.outcome}});
  return arr;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
  return h;
}

}  // namespace

struct Agent::Run {
  Run(const env::Level& l, std::uint64_t seed, wm::CheckerSet cs)
      : level(l), s0(l.initial), s(l.initial), rng(seed), checkers(std::move(cs)) {}

  const env::Level& level;
  LevelReport report;
  LowState s0;
  LowState s;
  std::mt19937_64 rng;
  wm::CheckerSet checkers;
  ReplayBuffer warmup;
  std::optional<Mismatch> pending;
  ReplayBuffer pending_predicted, pending_actual;
  std::size_t explore_cursor = 0;
  // input of the model call that raised
  LowState crash_state;
  std::string crash_action;
};

Agent::Agent(const env::Environment& env, synth::Backend& backend, AgentOptions options, TraceWriter* trace)
    : env_(env), backend_(backend), opts_(std::move(options)), trace_(trace) {}

void Agent::trace(const std::string& event, json fields) {
  if (trace_) trace_->write(event, std::move(fields));
}

ll::TransitionFn Agent::model(Run& run) const {
  auto sim = std::make_shared<wm::Simulator>();
  wm::TransitionProgram prog = *program_;
  return [sim, prog, &run](const LowState& s, const std::string& a) {
    try {
      return sim->simulate(prog, s, a);
    } catch (const wm::SimulationError&) {
      run.crash_state = s;
      run.crash_action = a;
      throw;
    }
  };
}

void Agent::call_synth(Run& run, synth::SynthRequest req) {
  req.attempt = attempt_++;
  req.temperature = opts_.temperature;
  req.model = opts_.model;
  requests_.push_back(req);
  ++run.report.synth_calls;
  trace("synth_request", {{"kind", synth::to_string(req.kind)}, {"attempt", req.attempt}, {"prompt", req.prompt}});
  synth::SynthResult res;
  try {
    res = backend_.call(req);
  } catch (const synth::TransportError& e) {
    trace("synth_error", {{"attempt", req.attempt}, {"error", e.what()}});
    return;
  }
  run.report.tokens += res.usage.total;
  trace("synth_response", {{"attempt", req.attempt},
                           {"raw", res.raw},
                           {"extracted", res.program.has_value()},
                           {"warnings", res.warnings},
                           {"tokens", res.usage.total},
                           {"tokens_estimated", res.usage.estimated}});
  if (!res.program) return;
  program_ = wm::TransitionProgram(*res.program, next_version_++, "call:" + std::to_string(req.attempt));
  run.report.program_version = program_->version();
  trace("program", {{"version", program_->version()},
                    {"provenance", program_->provenance()},
                    {"source", program_->source()},
                    {"load_error", program_->load_error()}});
}

std::optional<Mismatch> Agent::execute(Run& run, const std::vector<ll::Segment>& segments, Origin origin) {
  ReplayBuffer predicted, actual;
  auto fn = model(run);
  auto finish = [&](std::optional<Mismatch> m) {
    if (m) {
      run.pending_predicted = predicted;
      run.pending_actual = actual;
    }
    return m;
  };
  for (const auto& seg : segments) {
    for (const auto& a : seg.actions) {
      if (run.report.env_steps >= opts_.budgets.env_steps) return std::nullopt;
      LowState before = run.s;
      LowState pred;
      try {
        pred = fn(before, a);
      } catch (const wm::SimulationError& e) {
        Mismatch m;
        m.label = seg.label;
        m.segment_start = seg.start;
        m.before = before;
        m.action = a;
        m.segment_actions = {a};
        m.error = e.what();
        return finish(m);
      }
      auto out = env_.step(before, a);
      ++run.report.env_steps;
      run.s = out.state;
      predicted.push({before, a, 0.0, pred, seg.label, Origin::Predicted, outcome_name(env_.status(pred))});
      actual.push({before, a, 0.0, out.state, seg.label, origin, outcome_name(out.terminal)});
      bool match = pred == out.state;
      trace("transition", {{"label", seg.label},
                           {"origin", to_string(origin)},
                           {"action", a},
                           {"next", state_json(out.state)},
                           {"outcome", outcome_name(out.terminal)},
                           {"predicted_match", match},
                           {"step", run.report.env_steps}});
      if (!match) {
        auto m = detect_mismatch(predicted, actual);
        trace("mismatch", {{"label", m->label},
                           {"index", m->index},
                           {"action", m->action},
                           {"predicted", state_json(m->predicted)},
                           {"actual", state_json(m->actual)},
                           {"diff", render_diff(m->diff)}});
        return finish(m);
      }
      if (out.terminal != env::Terminal::None) return std::nullopt;
    }
  }
  return std::nullopt;
}

std::optional<Mismatch> Agent::random_probe(Run& run) {
  ll::Segment seg;
  seg.label = "";
  seg.start = run.s;
  const auto& actions = env_.actions();
  for (int i = 0; i < opts_.budgets.warmup_actions; ++i) seg.actions.push_back(actions[run.rng() % actions.size()]);
  trace("random_probe", {{"actions", seg.actions}});
  return execute(run, {seg}, Origin::Exploration);
}

std::optional<Mismatch> Agent::explore(Run& run) {
  ++run.report.explorations;
  auto problem = env_.problem(run.level, run.s);
  auto cands = enumerate_exploration(problem.init, pddl::ground(env_.domain(), problem));
  json labels = json::array();
  for (const auto& c : cands) labels.push_back(c.label());
  trace("exploration", {{"candidates", labels}});
  auto fn = model(run);
  auto dead = [this](const LowState& x) { return env_.status(x) == env::Terminal::Loss; };
  ll::Budget budget = opts_.budgets.planner;
  budget.max_nodes = std::min<std::size_t>(budget.max_nodes, 200'000);
  for (std::size_t k = 0; k < cands.size(); ++k) {
    std::size_t idx = (run.explore_cursor + k) % cands.size();
    const auto& op = cands[idx];
    ll::SubplanResult r;
    try {
      r = ll::solve_subplan(fn, env_.actions(), run.s, run.checkers, op.effect_literals(), budget, dead);
    } catch (const wm::SimulationError& e) {
      Mismatch m;
      m.label = op.label();
      m.segment_start = run.s;
      m.before = run.crash_state;
      m.action = run.crash_action;
      m.error = e.what();
      run.pending_predicted = {};
      run.pending_actual = {};
      return m;
    }
    if (r.status != ll::SearchStatus::Solved || r.actions.empty()) continue;
    run.explore_cursor = idx + 1;
    trace("exploration_plan", {{"label", op.label()}, {"actions", r.actions}});
    ll::Segment seg;
    seg.label = op.label();
    seg.start = run.s;
    seg.actions = r.actions;
    return execute(run, {seg}, Origin::Exploration);
  }
  return random_probe(run);
}

LevelReport Agent::run_level(const env::Level& level) {
  auto t0 = std::chrono::steady_clock::now();
  Run run(level, opts_.seed ^ fnv1a(level.name), env_.checkers(level));
  run.report.level = level.name;
  run.report.program_version = program_ ? program_->version() : 0;
  trace("level_start", {{"env", env_.id()},
                        {"level", level.name},
                        {"initial", state_json(level.initial)},
                        {"program_version", run.report.program_version},
                        {"bilevel", opts_.bilevel}});
  auto done = [&](LevelStatus st) {
    run.report.status = st;
    run.report.solved = st == LevelStatus::Solved;
    run.report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto& r = run.report;
    trace("level_report", {{"level", r.level},
                           {"solved", r.solved},
                           {"status", to_string(r.status)},
                           {"synth_calls", r.synth_calls},
                           {"env_steps", r.env_steps},
                           {"plans_attempted", r.plans_attempted},
                           {"refinements", r.refinements},
                           {"explorations", r.explorations},
                           {"tokens", r.tokens},
                           {"program_version", r.program_version}});
    return run.report;
  };
  auto reset = [&](const std::string& why) {
    run.s = run.s0;
    trace("reset", {{"reason", why}});
  };

  if (env_.status(run.s0) != env::Terminal::Win && !program_) {
    run.warmup = warmup(env_, level, opts_.budgets.warmup_actions, run.rng);
    run.report.env_steps += static_cast<int>(run.warmup.size());
    trace("warmup", {{"transitions", transitions_json(run.warmup)}});
  }

  const auto dead = [this](const LowState& x) { return env_.status(x) == env::Terminal::Loss; };
  for (;;) {
    auto st = env_.status(run.s);
    if (st == env::Terminal::Win) return done(LevelStatus::Solved);
    if (st == env::Terminal::Loss) reset("loss");

    if (!program_) {
      if (run.report.synth_calls >= opts_.budgets.synth_calls) return done(LevelStatus::CallBudget);
      call_synth(run, synth::build_init_prompt(run.s0, env_.actions(), run.warmup, env_.description()));
      continue;
    }
    if (run.pending) {
      if (run.report.synth_calls >= opts_.budgets.synth_calls) return done(LevelStatus::CallBudget);
      ++run.report.refinements;
      call_synth(run, synth::build_refine_prompt(*program_, run.pending_predicted, run.pending_actual, *run.pending,
                                                 env_.description()));
      run.pending.reset();
      continue;
    }
    if (run.report.env_steps >= opts_.budgets.env_steps) return done(LevelStatus::StepBudget);

    auto problem = env_.problem(level, run.s);
    hl::HighLevelPlan plan;
    try {
      plan = hl::plan_high(env_.domain(), problem);
    } catch (const std::runtime_error&) {  // unsolvable or over the node budget
      if (!(run.s == run.s0)) {
        reset("abstract problem unsolvable from the current state");
        continue;
      }
      trace("plan_high", {{"solvable", false}});
      return done(LevelStatus::UnsolvableAbstract);
    }
    ++run.report.plans_attempted;
    trace("plan_high", {{"solvable", true}, {"steps", plan.labels()}});

    auto fn = model(run);
    ll::PlanResult low;
    try {
      low = opts_.bilevel ? ll::solve_plan(fn, env_.actions(), run.s, plan, problem.goal, run.checkers,
                                           opts_.budgets.planner, dead)
                          : ll::solve_flat(fn, env_.actions(), run.s, problem.goal, run.checkers, opts_.budgets.planner,
                                           dead);
    } catch (const wm::SimulationError& e) {
      Mismatch m;
      m.label = plan.steps.empty() ? "" : plan.steps.front().label();
      m.segment_start = run.s;
      m.before = run.crash_state;
      m.action = run.crash_action;
      m.segment_actions = {run.crash_action};
      m.error = e.what();
      trace("model_error", {{"label", m.label}, {"action", m.action}, {"error", m.error}});
      run.pending = std::move(m);
      run.pending_predicted = {};
      run.pending_actual = {};
      continue;
    }
    json segs = json::array();
    for (const auto& seg : low.segments)
      segs.push_back({{"label", seg.label}, {"actions", seg.actions}, {"status", ll::to_string(seg.status)}});
    trace("plan_low", {{"status", ll::to_string(low.status)},
                       {"segments", segs},
                       {"expanded", low.stats.expanded},
                       {"generated", low.stats.generated}});

    if (low.status != ll::SearchStatus::Solved) {
      run.pending = explore(run);
      continue;
    }
    run.pending = execute(run, low.segments, Origin::Actual);
    if (run.pending || env_.status(run.s) != env::Terminal::None) continue;
    if (run.report.env_steps >= opts_.budgets.env_steps) continue;

    bool eff = plan.steps.empty() || wm::check_effects(run.checkers, run.s, plan.steps.back());
    bool goal = wm::check_literals(run.checkers, run.s, problem.goal);
    trace("goal_check", {{"final_effects_hold", eff}, {"goal_holds", goal}, {"win", false}});
    run.pending = explore(run);
  }
}

}  // namespace groundwork::agent
