#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>

#include "groundwork/cli.hpp"

namespace py = pybind11;
using namespace groundwork;

namespace {

struct Env {
  std::shared_ptr<env::Environment> impl;

  wm::LowState state(const std::string& json) const {
    auto s = wm::LowState::from_json(json);
    impl->validate(s);
    return s;
  }
};

py::tuple env_step(const Env& e, const std::string& state, const std::string& action) {
  auto out = e.impl->step(e.state(state), action);
  return py::make_tuple(out.state.to_json(), env::to_string(out.terminal));
}

py::dict level_dict(const env::Level& l) {
  py::dict d;
  d["name"] = l.name;
  d["env"] = l.env_id;
  d["initial"] = l.initial.to_json();
  d["goal"] = l.goal;
  return d;
}

std::string simulate(const std::string& source, const std::string& state, const std::string& action) {
  wm::TransitionProgram prog(source, 1, "python");
  wm::Simulator sim;
  return sim.simulate(prog, wm::LowState::from_json(state), action).to_json();
}

std::string plan(const std::string& game, const std::string& level, bool bilevel, std::size_t max_nodes,
                 double max_seconds) {
  auto e = env::make_environment(game);
  auto levels = cli::resolve_levels(*e, {level});
  if (levels.size() != 1) throw cli::ConfigError("expected exactly one level");
  const auto& l = levels.front();
  auto model = ll::program_model(e->builtin_program());
  auto prob = e->problem(l);
  auto cs = e->checkers(l);
  ll::Budget budget{max_nodes, max_seconds, 400};
  auto dead = [&](const wm::LowState& s) { return e->status(s) == env::Terminal::Loss; };
  ll::PlanResult r;
  {
    py::gil_scoped_release release;
    r = bilevel ? ll::solve_plan(model, e->actions(), l.initial, hl::plan_high(e->domain(), prob), prob.goal, cs,
                                 budget, dead)
                : ll::solve_flat(model, e->actions(), l.initial, prob.goal, cs, budget, dead);
  }
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& s : r.segments)
    segs.push_back({{"label", s.label}, {"actions", s.actions}, {"status", ll::to_string(s.status)}});
  return nlohmann::json{{"status", ll::to_string(r.status)},
                        {"segments", segs},
                        {"expanded", r.stats.expanded},
                        {"generated", r.stats.generated}}
      .dump();
}

std::string run(const std::string& game, const std::vector<std::string>& levels, const std::string& backend,
                const std::string& mock_dir, const std::string& endpoint, int budget_calls, int budget_steps,
                bool bilevel, std::uint64_t seed, const std::string& out_dir) {
  cli::ExperimentConfig c;
  c.game = game;
  c.levels = levels;
  c.backend = backend;
  c.mock_dir = mock_dir;
  c.endpoint = endpoint;
  c.budgets.synth_calls = budget_calls;
  c.budgets.env_steps = budget_steps;
  c.bilevel = bilevel;
  c.seed = seed;
  c.out_dir = out_dir;
  py::gil_scoped_release release;
  auto s = out_dir.empty() ? cli::run(c, nullptr) : cli::run_to_directory(c);
  return s.to_json().dump();
}

std::vector<nlohmann::json> load_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cli::ConfigError("cannot open trace " + path);
  return cli::read_trace(in);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bilevel planning agent core";

  py::register_exception<cli::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<cli::TraceError>(m, "TraceError", PyExc_RuntimeError);
  py::register_exception<wm::SimulationError>(m, "SimulationError", PyExc_RuntimeError);

  m.def("environment_ids", &env::environment_ids);
  m.def("asset_dir", &env::asset_dir);

  py::class_<Env>(m, "Environment")
      .def(py::init([](const std::string& id) { return Env{env::make_environment(id)}; }), py::arg("id"))
      .def_property_readonly("id", [](const Env& e) { return e.impl->id(); })
      .def_property_readonly("actions", [](const Env& e) { return e.impl->actions(); })
      .def("step", &env_step, py::arg("state"), py::arg("action"))
      .def("status", [](const Env& e, const std::string& s) { return env::to_string(e.impl->status(e.state(s))); })
      .def("render", [](const Env& e, const std::string& s) { return e.impl->render(e.state(s)); })
      .def("levels", [](const Env& e) {
        py::list out;
        for (const auto& l : e.impl->shipped_levels()) out.append(level_dict(l));
        return out;
      })
      .def("parse_level", [](const Env& e, const std::string& text) { return level_dict(e.impl->parse_level(text)); })
      .def("random_level",
           [](const Env& e, std::uint64_t seed, int width, int height, int boxes) {
             env::LevelParams p;
             p.width = width;
             p.height = height;
             p.boxes = boxes;
             return level_dict(e.impl->random_level(seed, p));
           },
           py::arg("seed"), py::arg("width") = 7, py::arg("height") = 7, py::arg("boxes") = 1)
      .def("builtin_program", [](const Env& e) { return e.impl->builtin_program_source(); })
      .def("description", [](const Env& e) { return e.impl->description(); });

  m.def("simulate", &simulate, py::arg("source"), py::arg("state"), py::arg("action"));
  m.def("plan", &plan, py::arg("game"), py::arg("level"), py::arg("bilevel") = true,
        py::arg("max_nodes") = 2'000'000, py::arg("max_seconds") = 500.0);
  m.def("run", &run, py::arg("game") = "sokoban", py::arg("levels") = std::vector<std::string>{"all"},
        py::arg("backend") = "oracle", py::arg("mock_dir") = "", py::arg("endpoint") = "", py::arg("budget_calls") = 6,
        py::arg("budget_steps") = 500, py::arg("bilevel") = true, py::arg("seed") = 0, py::arg("out_dir") = "");
  m.def("replay", [](const std::string& path) {
    std::ostringstream os;
    cli::replay(load_trace(path), os);
    return os.str();
  });
  m.def("summarize_trace", [](const std::string& path) { return cli::summarize_trace(load_trace(path)).to_json().dump(); });
  m.def("extract_code", [](const std::string& text) { return synth::extract_code(text); });
  m.def("learning_efficiency", &agent::learning_efficiency, py::arg("completed"), py::arg("total"), py::arg("steps"));
}
