"""Scenario files and trace serialization.

A scenario is a YAML document with top-level keys:

  agents:    mapping agent -> list of variables it controls
  formulas:  list of critical formulas (surface syntax strings)
  initial:   mapping variable -> boolean starting value
  queue:     ordered list of {agent, var, value} write requests
  config:    optional {max_actions_per_tick, policy, blocking_strategy,
             tie_break, seed}

Variable order is first appearance across the agent lists; formula order
defines the critical-formula indices. Traces serialize one tick per line as
canonical JSON (sorted keys, no spaces) so equal runs are byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import yaml

from . import blocking
from .engine import (
    ActionQueue,
    ActionRequest,
    BlockForRandomInterval,
    BlockUntilTick,
    BlockingStrategy,
    DropTick,
    EngineConfig,
    SilentFreeze,
    TickRecord,
)
from .errors import (
    CoalGuardError,
    FormulaSyntaxError,
    InsecureStartError,
    ScenarioError,
)
from .formula import eval_formula, parse_formula
from .model import Model, SystemState, validate_model

_TOP_KEYS = {"agents", "formulas", "initial", "queue", "config"}
_CONFIG_KEYS = {"max_actions_per_tick", "policy", "blocking_strategy", "tie_break", "seed"}
_QUEUE_KEYS = {"agent", "var", "value"}


@dataclass(frozen=True)
class Scenario:
    model: Model
    initial_state: SystemState
    queue: ActionQueue
    config: EngineConfig


def _require_mapping(value, what: str) -> Mapping:
    if not isinstance(value, Mapping):
        raise ScenarioError(f"{what} must be a mapping, got {type(value).__name__}")
    return value


def _require_bool(value, what: str) -> bool:
    if not isinstance(value, bool):
        raise ScenarioError(f"{what} must be a boolean, got {value!r}")
    return value


def parse_strategy(value) -> BlockingStrategy:
    """Accepts "drop_tick", "silent_freeze", {block_until_tick: T}, or
    {block_for_random_interval: {low, high, seed?}}."""
    if value == "drop_tick":
        return DropTick()
    if value == "silent_freeze":
        return SilentFreeze()
    if isinstance(value, Mapping) and len(value) == 1:
        (name, body), = value.items()
        if name == "block_until_tick":
            if not isinstance(body, int) or isinstance(body, bool):
                raise ScenarioError("block_until_tick takes an integer tick")
            return BlockUntilTick(body)
        if name == "block_for_random_interval":
            body = _require_mapping(body, "block_for_random_interval")
            extra = set(body) - {"low", "high", "seed"}
            if extra:
                raise ScenarioError(f"block_for_random_interval: unknown keys {sorted(extra)}")
            try:
                return BlockForRandomInterval(
                    int(body["low"]), int(body["high"]), body.get("seed")
                )
            except (KeyError, ValueError) as exc:
                raise ScenarioError(f"block_for_random_interval: {exc}") from exc
    raise ScenarioError(f"unknown blocking_strategy: {value!r}")


def config_from_mapping(data: Optional[Mapping]) -> EngineConfig:
    if data is None:
        return EngineConfig()
    data = _require_mapping(data, "config")
    extra = set(data) - _CONFIG_KEYS
    if extra:
        raise ScenarioError(f"config: unknown keys {sorted(extra)}")
    kwargs = {}
    if "max_actions_per_tick" in data:
        kwargs["max_actions_per_tick"] = data["max_actions_per_tick"]
    if "policy" in data:
        kwargs["policy"] = data["policy"]
    if "blocking_strategy" in data:
        kwargs["blocking_strategy"] = parse_strategy(data["blocking_strategy"])
    if "tie_break" in data:
        kwargs["tie_break"] = data["tie_break"]
    if "seed" in data:
        seed = data["seed"]
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ScenarioError("config: seed must be an integer")
        kwargs["random_seed"] = seed
    try:
        return EngineConfig(**kwargs)
    except ValueError as exc:
        raise ScenarioError(f"config: {exc}") from exc


def scenario_from_mapping(data: Mapping, allow_insecure_start: bool = False) -> Scenario:
    data = _require_mapping(data, "scenario")
    extra = set(data) - _TOP_KEYS
    if extra:
        raise ScenarioError(f"unknown top-level keys {sorted(extra)}")
    missing = {"agents", "formulas", "initial", "queue"} - set(data)
    if missing:
        raise ScenarioError(f"missing top-level keys {sorted(missing)}")

    agents_map = _require_mapping(data["agents"], "agents")
    if not agents_map:
        raise ScenarioError("agents mapping is empty")
    agents = []
    variables = []
    partition = {}
    for agent, owned in agents_map.items():
        if not isinstance(agent, str):
            raise ScenarioError(f"agent names must be strings, got {agent!r}")
        if owned is None:
            owned = []
        if not isinstance(owned, list) or not all(isinstance(v, str) for v in owned):
            raise ScenarioError(f"agents[{agent}] must be a list of variable names")
        agents.append(agent)
        partition[agent] = tuple(owned)
        for v in owned:
            if v not in variables:
                variables.append(v)

    raw_formulas = data["formulas"]
    if not isinstance(raw_formulas, list) or not all(isinstance(f, str) for f in raw_formulas):
        raise ScenarioError("formulas must be a list of strings")
    formulas = []
    for index, text in enumerate(raw_formulas):
        try:
            formulas.append(parse_formula(text))
        except FormulaSyntaxError as exc:
            raise ScenarioError(f"formulas[{index}]: {exc}") from exc

    model = Model(tuple(agents), tuple(variables), partition, tuple(formulas))
    result = validate_model(model)
    if not result.ok:
        findings = "; ".join(f"{v.kind}({v.subject})" for v in result.violations)
        raise ScenarioError(f"invalid model: {findings}")

    initial = _require_mapping(data["initial"], "initial")
    unknown = set(initial) - set(variables)
    if unknown:
        raise ScenarioError(f"initial valuation has unknown variables {sorted(unknown)}")
    absent = set(variables) - set(initial)
    if absent:
        raise ScenarioError(f"initial valuation missing variables {sorted(absent)}")
    valuation = {v: _require_bool(initial[v], f"initial[{v}]") for v in variables}
    state = SystemState(0, valuation)

    satisfied = [
        index for index, f in enumerate(formulas) if eval_formula(f, model, state)
    ]
    if satisfied and not allow_insecure_start:
        raise InsecureStartError(
            f"initial state satisfies critical formula(s) {satisfied}"
        )

    raw_queue = data["queue"]
    if raw_queue is None:
        raw_queue = []
    if not isinstance(raw_queue, list):
        raise ScenarioError("queue must be a list of requests")
    queue = ActionQueue(model)
    for index, item in enumerate(raw_queue):
        item = _require_mapping(item, f"queue[{index}]")
        extra = set(item) - _QUEUE_KEYS
        if extra:
            raise ScenarioError(f"queue[{index}]: unknown keys {sorted(extra)}")
        missing = _QUEUE_KEYS - set(item)
        if missing:
            raise ScenarioError(f"queue[{index}]: missing keys {sorted(missing)}")
        value = _require_bool(item["value"], f"queue[{index}].value")
        try:
            queue = queue.push(item["agent"], item["var"], value)
        except CoalGuardError as exc:
            raise ScenarioError(f"queue[{index}]: {exc}") from exc

    return Scenario(model, state, queue, config_from_mapping(data.get("config")))


def load_scenario(path: Union[str, Path], allow_insecure_start: bool = False) -> Scenario:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"cannot parse {path}: {exc}") from exc
    if data is None:
        raise ScenarioError(f"scenario file {path} is empty")
    return scenario_from_mapping(data, allow_insecure_start)


def override_config(
    config: EngineConfig, policy: Optional[str] = None, seed: Optional[int] = None
) -> EngineConfig:
    """Command-line overrides applied on top of the file's config."""
    changes = {}
    if policy is not None:
        changes["policy"] = policy
    if seed is not None:
        changes["random_seed"] = seed
    return replace(config, **changes) if changes else config


# ---------------------------------------------------------------------------
# trace serialization


def request_to_dict(request: ActionRequest) -> dict:
    return {
        "agent": request.agent,
        "var": request.variable,
        "value": request.new_value,
        "arrival": request.arrival_index,
    }


def _matrix_to_dict(matrix: blocking.BlockingMatrix) -> dict:
    return {
        "formulas": list(matrix.formula_indices),
        "agents": list(matrix.agents),
        "marks": [list(row) for row in matrix.marks],
        "counters": list(matrix.counters),
    }


def iteration_to_dict(item) -> dict:
    if isinstance(item, blocking.GreedyIteration):
        return {
            "kind": "greedy",
            "became_true": list(item.became_true),
            "implicated": list(item.implicated),
            "matrix": _matrix_to_dict(item.matrix),
            "ranking": list(item.ranking),
            "blocked": item.blocked_agent,
        }
    if isinstance(item, blocking.OracleRound):
        return {
            "kind": "oracle",
            "cardinality": item.cardinality,
            "candidates": [
                {"subset": list(subset), "false_count": count}
                for subset, count in item.evaluated
            ],
            "frontier": [list(subset) for subset in item.frontier],
            "representative": list(item.representative),
            "success": item.success,
        }
    raise TypeError(f"unknown iteration snapshot {type(item).__name__}")


def record_to_dict(record: TickRecord) -> dict:
    return {
        "tick": record.tick,
        "batch": [request_to_dict(r) for r in record.batch],
        "iterations": [iteration_to_dict(i) for i in record.iterations],
        "blocked": list(record.blocked),
        "executed": [request_to_dict(r) for r in record.executed],
        "valuation": dict(record.valuation),
        "secure": record.secure,
    }


def trace_line(record: TickRecord) -> str:
    return json.dumps(record_to_dict(record), sort_keys=True, separators=(",", ":"))


def trace_text(records: Sequence[TickRecord]) -> str:
    return "".join(trace_line(record) + "\n" for record in records)


def write_trace(records: Sequence[TickRecord], path: Union[str, Path]) -> None:
    Path(path).write_text(trace_text(records), encoding="utf-8")
