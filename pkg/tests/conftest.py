import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from adversim.config import apply_overrides, load_scenario_file, parse_scenario
from adversim.engine import ScenarioEngine

REGRESSION_SCENARIOS = ("cib_c7", "cib_c12", "two_lead_povs", "ramp_merge",
                        "three_pov_oncoming")

AGGRESSIVE_OVERRIDES = [
    "vehicles.0.policy.idm.a_max=2.6",
    "vehicles.0.policy.idm.v0=28.0",
    "vehicles.0.policy.v_floor=null",
]


class RegressionRun:
    def __init__(self, name, overrides=()):
        doc = apply_overrides(load_scenario_file(name), list(overrides))
        self.config = parse_scenario(doc)
        self.engine = ScenarioEngine(self.config)
        t0 = time.perf_counter()
        self.log = self.engine.run(record_captures=True)
        self.wall_seconds = time.perf_counter() - t0


@pytest.fixture(scope="session")
def regression_runs():
    """One run of every bundled scenario, shared across the suite."""
    return {name: RegressionRun(name) for name in REGRESSION_SCENARIOS}


@pytest.fixture(scope="session")
def aggressive_cib_run():
    return RegressionRun("cib_c7", AGGRESSIVE_OVERRIDES)
