"""Shared fixtures.  The desk-scale scenario runs are session-scoped because
they take tens of seconds each and several test modules inspect them."""

from __future__ import annotations

import dataclasses
from pathlib import Path

import pytest

from res_sim.fixtures import demo_config
from res_sim.scenario import load_scenario, run

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"


@pytest.fixture(scope="session")
def scenario1():
    config = load_scenario(SCENARIOS / "scenario1.toml")
    return config, run(config)


@pytest.fixture(scope="session")
def scenario2():
    config = load_scenario(SCENARIOS / "scenario2.toml")
    return config, run(config)


@pytest.fixture(scope="session")
def scenario1_halved_dt():
    config = load_scenario(SCENARIOS / "scenario1.toml",
                           overrides={"dt": 5e-4, "dt_c": 1e-3})
    return config, run(config)


@pytest.fixture(scope="session")
def demo_record():
    config = demo_config()
    return config, run(config)


@pytest.fixture()
def short_demo():
    """Demo scenario cut to one year: a fast full closed loop."""
    config = demo_config()
    schedule = dataclasses.replace(config.schedule, t_end=1.0)
    return dataclasses.replace(config, schedule=schedule)
