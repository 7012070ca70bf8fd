"""Discrete-clock action processing.

Agents ask for single-variable writes; requests wait in a FIFO queue. Each
tick takes at most n requests (n defaults to the number of critical
formulas), lets the configured blocking policy veto some requesters, applies
the surviving writes in arrival order, and records what happened.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .errors import OwnershipViolationError, QueueOrderError
from .formula import eval_formula, vars_of
from .model import Model, SystemState, is_secure

POLICIES = ("none", "greedy", "nondeterministic")
TIE_BREAKS = ("fifo", "lex")


@dataclass(frozen=True)
class ActionRequest:
    agent: str
    variable: str
    new_value: bool
    arrival_index: int


@dataclass(frozen=True)
class ActionQueue:
    """FIFO queue of requests, validated against the model's partition."""

    model: Model
    requests: tuple[ActionRequest, ...] = ()

    def enqueue(self, request: ActionRequest) -> "ActionQueue":
        owner = self.model.owner_of(request.variable)
        if owner != request.agent:
            raise OwnershipViolationError(
                f"{request.agent!r} does not control {request.variable!r} "
                f"(owned by {owner!r})"
            )
        if self.requests and request.arrival_index <= self.requests[-1].arrival_index:
            raise QueueOrderError(
                f"arrival index {request.arrival_index} not after "
                f"{self.requests[-1].arrival_index}"
            )
        return ActionQueue(self.model, self.requests + (request,))

    def push(self, agent: str, variable: str, new_value: bool) -> "ActionQueue":
        next_index = self.requests[-1].arrival_index + 1 if self.requests else 0
        return self.enqueue(ActionRequest(agent, variable, bool(new_value), next_index))

    def take_batch(self, n: int) -> tuple[tuple[ActionRequest, ...], "ActionQueue"]:
        """Remove and return the first n requests."""
        if n < 1:
            raise ValueError("batch size must be at least 1")
        return self.requests[:n], ActionQueue(self.model, self.requests[n:])

    def take_batch_excluding(
        self, n: int, blocked: Iterable[str]
    ) -> tuple[tuple[ActionRequest, ...], tuple[ActionRequest, ...], "ActionQueue"]:
        """Fill a batch of up to n requests, discarding blocked agents' requests.

        A request is considered once, when it reaches the front; if its owner
        is blocked at that moment it is consumed without effect. Returns
        (batch, dropped, remaining).
        """
        blocked = set(blocked)
        batch: list[ActionRequest] = []
        dropped: list[ActionRequest] = []
        index = 0
        while index < len(self.requests) and len(batch) < n:
            request = self.requests[index]
            (dropped if request.agent in blocked else batch).append(request)
            index += 1
        return tuple(batch), tuple(dropped), ActionQueue(self.model, self.requests[index:])

    def __len__(self) -> int:
        return len(self.requests)

    def __iter__(self):
        return iter(self.requests)


# ---------------------------------------------------------------------------
# blocking strategies (what "blocked" means for future ticks)


class BlockingStrategy:
    """How long a veto lasts. ``schedule`` maps blocked agents to the first
    tick at which they may act again; an empty mapping means the veto covers
    this tick only."""

    name = "drop_tick"

    def schedule(self, agents: Sequence[str], current_tick: int, rng: random.Random) -> dict:
        return {}


@dataclass(frozen=True)
class DropTick(BlockingStrategy):
    """Remove the agent's requests for this tick; it may ask again next tick."""

    name = "drop_tick"


@dataclass(frozen=True)
class SilentFreeze(BlockingStrategy):
    """Like drop_tick, but the agent is not told its writes were withheld."""

    name = "silent_freeze"


@dataclass(frozen=True)
class BlockUntilTick(BlockingStrategy):
    release_tick: int
    name = "block_until_tick"

    def schedule(self, agents, current_tick, rng):
        return {agent: self.release_tick for agent in agents}


@dataclass(frozen=True)
class BlockForRandomInterval(BlockingStrategy):
    """Block each agent for a uniform random number of ticks in [low, high]."""

    low: int
    high: int
    seed: Optional[int] = None
    name = "block_for_random_interval"

    def __post_init__(self):
        if self.low < 0 or self.high < self.low:
            raise ValueError("interval must satisfy 0 <= low <= high")

    def schedule(self, agents, current_tick, rng):
        # The veto itself covered tick current_tick + 1; the draw adds that
        # many further ticks before the agent's requests are considered again.
        return {agent: current_tick + 2 + rng.randint(self.low, self.high) for agent in agents}


@dataclass(frozen=True)
class EngineConfig:
    max_actions_per_tick: int | str = "auto"
    policy: str = "none"
    blocking_strategy: BlockingStrategy = DropTick()
    tie_break: str = "fifo"
    random_seed: int = 0

    def __post_init__(self):
        cap = self.max_actions_per_tick
        if cap != "auto" and (not isinstance(cap, int) or isinstance(cap, bool) or cap < 1):
            raise ValueError("max_actions_per_tick must be a positive integer or 'auto'")
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}")
        if self.tie_break not in TIE_BREAKS:
            raise ValueError(f"tie_break must be one of {TIE_BREAKS}")

    def batch_size(self, model: Model) -> int:
        if self.max_actions_per_tick == "auto":
            return len(model.critical_formulas)
        return self.max_actions_per_tick


# ---------------------------------------------------------------------------
# simulation


def apply_actions(state: SystemState, batch: Sequence[ActionRequest]) -> SystemState:
    """Apply a batch in arrival order (later writes win) and advance the clock."""
    changes = {request.variable: request.new_value for request in batch}
    return state.with_updates(changes, tick=state.tick + 1)


@dataclass(frozen=True)
class SimulationReport:
    """What a batch would do, without committing it.

    became_true holds indices into the model's critical formulas that flip
    from false to true; implicated_agents are the requesters controlling at
    least one variable of such a formula, in model agent order.
    """

    became_true: tuple[int, ...]
    implicated_agents: tuple[str, ...]
    simulated_state: SystemState


def simulate(model: Model, state: SystemState, batch: Sequence[ActionRequest]) -> SimulationReport:
    after = apply_actions(state, batch)
    became = tuple(
        index
        for index, f in enumerate(model.critical_formulas)
        if not eval_formula(f, model, state) and eval_formula(f, model, after)
    )
    requesters = {request.agent for request in batch}
    flipped_vars = set()
    for index in became:
        flipped_vars |= vars_of(model.critical_formulas[index])
    implicated = tuple(
        agent
        for agent in model.agents
        if agent in requesters and not model.owned_set(agent).isdisjoint(flipped_vars)
    )
    return SimulationReport(became, implicated, after)


# ---------------------------------------------------------------------------
# ticks


@dataclass(frozen=True)
class TickRecord:
    tick: int
    batch: tuple[ActionRequest, ...]
    iterations: tuple
    blocked: tuple[str, ...]
    executed: tuple[ActionRequest, ...]
    valuation: Mapping[str, bool]
    secure: bool


@dataclass(frozen=True)
class TickOutcome:
    state: SystemState
    queue: ActionQueue
    registry: dict
    record: TickRecord


def tick(
    model: Model,
    state: SystemState,
    queue: ActionQueue,
    config: EngineConfig,
    blocked_registry: Optional[Mapping[str, int]] = None,
    rng: Optional[random.Random] = None,
    strategy_rng: Optional[random.Random] = None,
) -> TickOutcome:
    """Advance the system by one tick under the configured policy."""
    from . import blocking  # deferred: blocking builds on simulate()

    rng = rng if rng is not None else random.Random(config.random_seed)
    strategy_rng = strategy_rng if strategy_rng is not None else rng
    forming = state.tick + 1  # registry entries name the first tick an agent may act in
    registry = {
        agent: release
        for agent, release in (blocked_registry or {}).items()
        if release > forming
    }

    n = config.batch_size(model)
    if n == 0:
        batch: tuple[ActionRequest, ...] = ()
        remaining = queue
    else:
        batch, _, remaining = queue.take_batch_excluding(n, registry)

    if config.policy == "none":
        report = blocking.BlockReport("none", (), batch, (), None)
    elif config.policy == "greedy":
        report = blocking.greedy_block(model, state, batch, tie_break=config.tie_break)
    else:
        report = blocking.nondet_block(model, state, batch, rng=rng)

    new_state = apply_actions(state, report.allowed_batch)
    registry.update(config.blocking_strategy.schedule(report.blocked, state.tick, strategy_rng))
    record = TickRecord(
        tick=new_state.tick,
        batch=batch,
        iterations=report.iterations,
        blocked=report.blocked,
        executed=report.allowed_batch,
        valuation=new_state.valuation,
        secure=is_secure(model, new_state),
    )
    return TickOutcome(new_state, remaining, registry, record)


@dataclass
class RunResult:
    final_state: SystemState
    queue: ActionQueue
    records: list[TickRecord]

    @property
    def all_secure(self) -> bool:
        return all(record.secure for record in self.records)


def run_ticks(
    model: Model,
    state: SystemState,
    queue: ActionQueue,
    config: EngineConfig,
    ticks: int,
) -> RunResult:
    """Run a fixed number of ticks, threading queue, registry, and RNG state."""
    rng = random.Random(config.random_seed)
    strategy = config.blocking_strategy
    own_seed = getattr(strategy, "seed", None)
    strategy_rng = random.Random(own_seed) if own_seed is not None else rng
    registry: dict = {}
    records = []
    for _ in range(ticks):
        outcome = tick(model, state, queue, config, registry, rng, strategy_rng)
        state, queue, registry = outcome.state, outcome.queue, outcome.registry
        records.append(outcome.record)
    return RunResult(state, queue, records)
