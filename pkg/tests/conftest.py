import pathlib
import sys

import pytest
from hypothesis import settings

sys.path.insert(0, str(pathlib.Path(__file__).parent))

from coalguard import ActionQueue, ActionRequest, EngineConfig, Model, SystemState, parse_formula

settings.register_profile("suite", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("suite")

SCENARIO_DIR = pathlib.Path(__file__).parent.parent / "scenarios"

# one line per acceptance criterion, echoed after the run so pass/fail
# verdicts survive pytest's output capture
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def example1_model():
    return Model(
        agents=("a1", "a2", "a3", "a4", "a5"),
        variables=("v1", "v7", "v8", "v3", "v2", "v6", "v4", "v5", "v9"),
        partition={
            "a1": ("v1", "v7", "v8"),
            "a2": ("v3",),
            "a3": ("v2", "v6"),
            "a4": ("v4", "v5"),
            "a5": ("v9",),
        },
        critical_formulas=(
            parse_formula("v1 & v2 & (~v3 | v5 | ~v4)"),
            parse_formula("(~v5 | ~v3) & ~v6"),
            parse_formula("v7 & (~v8 | ~v6)"),
            parse_formula("(v8 | v5 | ~v9) & v2 & v1"),
        ),
    )


@pytest.fixture(scope="session")
def example1_state():
    return SystemState(
        0,
        {
            "v1": False,
            "v2": True,
            "v3": True,
            "v4": True,
            "v5": False,
            "v6": True,
            "v7": True,
            "v8": True,
            "v9": True,
        },
    )


@pytest.fixture(scope="session")
def example1_batch():
    return (
        ActionRequest("a1", "v1", True, 0),
        ActionRequest("a2", "v3", False, 1),
        ActionRequest("a4", "v4", False, 2),
        ActionRequest("a3", "v6", False, 3),
    )


@pytest.fixture
def example1_queue(example1_model, example1_batch):
    return ActionQueue(example1_model, example1_batch)


@pytest.fixture
def example1_config():
    return EngineConfig(
        max_actions_per_tick="auto", policy="greedy", tie_break="fifo", random_seed=0
    )


@pytest.fixture(scope="session")
def xor_model():
    return Model(
        agents=("a1", "a2"),
        variables=("A", "B"),
        partition={"a1": ("A",), "a2": ("B",)},
        critical_formulas=(parse_formula("(~A & B) | (A & ~B)"),),
    )


@pytest.fixture(scope="session")
def scenario_dir():
    return SCENARIO_DIR
