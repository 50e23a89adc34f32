import json

import pytest

import groundwork as gw


def test_environments_listed():
    assert gw.environment_ids() == ["sokoban", "pushboulders", "keke", "clusterbox", "babyai"]


def test_step_and_builtin_program_agree():
    env = gw.Environment("sokoban")
    level = env.levels()[0]
    state = level["initial"]
    for action in env.actions:
        native, outcome = env.step(state, action)
        assert outcome in ("none", "win", "loss")
        assert gw.simulate(env.builtin_program(), state, action) == json.loads(native)


def test_render_has_one_line_per_row():
    env = gw.Environment("sokoban")
    state = json.loads(env.levels()[0]["initial"])
    assert len(env.render(json.dumps(state)).splitlines()) >= state["height"]


def test_plan_bilevel_and_flat():
    bi = gw.plan("sokoban", "level1")
    flat = gw.plan("sokoban", "level1", bilevel=False)
    assert bi["status"] == "solved"
    assert flat["status"] == "solved"
    assert [s["label"] for s in flat["segments"]] == ["flat"]
    steps = sum(len(s["actions"]) for s in bi["segments"])
    assert steps >= len(flat["segments"][0]["actions"])


def test_oracle_run_and_trace(tmp_path):
    summary = gw.run(levels=["level1", "level2"], out_dir=tmp_path)
    assert summary["totals"]["synth_call_vector"] == [1, 0]
    assert summary["totals"]["solved"] == 2
    trace = tmp_path / "trace.jsonl"
    assert gw.summarize_trace(trace) == summary
    assert "*** WIN ***" in gw.replay(str(trace))


def test_empty_level_list():
    summary = gw.run(levels=[])
    assert summary["levels"] == []
    assert summary["totals"]["learning_efficiency"] == 0.0


def test_errors_map_to_python_exceptions(tmp_path):
    with pytest.raises(ValueError):
        gw.run(game="chess")
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"event": "run_start", "seq": 0')
    with pytest.raises(gw.TraceError):
        gw.replay(str(bad))
    with pytest.raises(gw.SimulationError):
        gw.simulate("def transition(state, action):\n    return state['nope']\n", '{"width": 2, "height": 2}', "up")


def test_helpers():
    assert gw.extract_code("```python\nx = 1\n```") == "x = 1\n"
    assert gw.extract_code("none") is None
    assert abs(gw.learning_efficiency(5, 5, 197) - 0.025381) < 1e-6
