import os
import random
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from recanon.dataset import load_schema
from recanon.synth import random_instance

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", max_examples=300, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

TOY = Path(__file__).resolve().parents[1] / "src" / "recanon" / "data" / "toy"


@pytest.fixture
def toy_dir() -> Path:
    return TOY


@pytest.fixture
def toy_schema():
    schema, _ = load_schema(TOY / "schema.json")
    return schema


def make_instance(seed: int, n: int = 60, n_qi: int = 2, max_lattice: int | None = 200):
    return random_instance(random.Random(seed), n, n_qi, max_lattice=max_lattice)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call":
                continue
            props = dict(rep.user_properties)
            if "criterion" in props:
                lines.append((props["criterion"], outcome.upper()))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, outcome in sorted(lines, key=lambda x: int(x[0].split(".")[0])):
        terminalreporter.write_line(f"[{'PASS' if outcome == 'PASSED' else 'FAIL'}] {criterion}")
