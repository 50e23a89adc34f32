"""Bilevel planning agent with learned transition programs."""

import json
import os
from pathlib import Path

_bundled = Path(__file__).with_name("assets")
if "GROUNDWORK_ASSETS" not in os.environ and _bundled.is_dir():
    os.environ["GROUNDWORK_ASSETS"] = str(_bundled)

from . import _core  # noqa: E402
from ._core import (  # noqa: E402
    ConfigError,
    Environment,
    SimulationError,
    TraceError,
    asset_dir,
    environment_ids,
    extract_code,
    learning_efficiency,
    replay,
)

__all__ = [
    "ConfigError",
    "Environment",
    "SimulationError",
    "TraceError",
    "asset_dir",
    "environment_ids",
    "extract_code",
    "learning_efficiency",
    "plan",
    "replay",
    "run",
    "simulate",
    "summarize_trace",
]


def simulate(source, state, action):
    """Next state (a dict) under a transition program given as source text."""
    text = state if isinstance(state, str) else json.dumps(state)
    return json.loads(_core.simulate(source, text, action))


def plan(game, level, bilevel=True, max_nodes=2_000_000, max_seconds=500.0):
    return json.loads(_core.plan(game, level, bilevel, max_nodes, max_seconds))


def run(game="sokoban", levels=("all",), backend="oracle", mock_dir="", endpoint="",
        budget_calls=6, budget_steps=500, bilevel=True, seed=0, out_dir=""):
    return json.loads(_core.run(game, list(levels), backend, str(mock_dir), endpoint,
                                budget_calls, budget_steps, bilevel, seed, str(out_dir)))


def summarize_trace(path):
    return json.loads(_core.summarize_trace(str(path)))
