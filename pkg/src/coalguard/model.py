"""Agents, variable ownership, system states, and the security predicate.

A model fixes a finite set of agents, a finite set of boolean variables,
and a partition assigning every variable to exactly one controlling agent.
Critical formulas describe situations that must never become true: a state
is secure exactly when all of them evaluate false.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .errors import (
    BudgetExceededError,
    ModalFormulaError,
    UnknownAgentError,
    UnknownVariableError,
)
from .formula import (
    DIAMOND_VARIABLE_CAP,
    Formula,
    agents_of,
    coalitions_of,
    eval_formula,
    has_diamond,
    vars_of,
)


@dataclass(frozen=True)
class Model:
    agents: tuple[str, ...]
    variables: tuple[str, ...]
    partition: Mapping[str, tuple[str, ...]]
    critical_formulas: tuple[Formula, ...] = ()
    _owner: dict = field(init=False, repr=False, compare=False)
    _owned_sets: dict = field(init=False, repr=False, compare=False)
    _variable_set: frozenset = field(init=False, repr=False, compare=False)
    _agent_set: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "variables", tuple(self.variables))
        normalized = {agent: tuple(owned) for agent, owned in self.partition.items()}
        object.__setattr__(self, "partition", normalized)
        object.__setattr__(self, "critical_formulas", tuple(self.critical_formulas))
        owner = {}
        for agent in self.agents:
            for variable in normalized.get(agent, ()):
                owner.setdefault(variable, agent)
        object.__setattr__(self, "_owner", owner)
        object.__setattr__(
            self, "_owned_sets", {a: frozenset(normalized.get(a, ())) for a in self.agents}
        )
        object.__setattr__(self, "_variable_set", frozenset(self.variables))
        object.__setattr__(self, "_agent_set", frozenset(self.agents))

    @property
    def variable_set(self) -> frozenset[str]:
        return self._variable_set

    @property
    def agent_set(self) -> frozenset[str]:
        return self._agent_set

    def owner_of(self, variable: str) -> str:
        try:
            return self._owner[variable]
        except KeyError:
            raise UnknownVariableError(f"no agent controls {variable!r}") from None

    def owned(self, agent: str) -> tuple[str, ...]:
        if agent not in self._owned_sets:
            raise UnknownAgentError(f"unknown agent: {agent!r}")
        return self.partition.get(agent, ())

    def owned_set(self, agent: str) -> frozenset[str]:
        try:
            return self._owned_sets[agent]
        except KeyError:
            raise UnknownAgentError(f"unknown agent: {agent!r}") from None

    def coalition_variables(self, coalition: Iterable[str]) -> tuple[str, ...]:
        """Variables the coalition controls, in model variable order."""
        members = set(coalition)
        missing = members - self._agent_set
        if missing:
            raise UnknownAgentError(f"unknown agents: {sorted(missing)}")
        owned = set()
        for agent in members:
            owned |= self._owned_sets[agent]
        return tuple(v for v in self.variables if v in owned)


def controller_of(model: Model, variable: str) -> str:
    """The unique agent whose partition cell contains the variable."""
    return model.owner_of(variable)


@dataclass(frozen=True)
class SystemState:
    """A clock value plus a total valuation of the model's variables."""

    tick: int
    valuation: Mapping[str, bool]

    def __post_init__(self):
        object.__setattr__(self, "valuation", dict(self.valuation))

    def value(self, variable: str) -> bool:
        try:
            return self.valuation[variable]
        except KeyError:
            raise UnknownVariableError(f"state does not assign {variable!r}") from None

    def with_updates(self, changes: Mapping[str, bool], tick: Optional[int] = None) -> "SystemState":
        valuation = dict(self.valuation)
        valuation.update(changes)
        return SystemState(self.tick if tick is None else tick, valuation)


@dataclass(frozen=True)
class PartialValuation:
    """An assignment to some of a coalition's variables, used as a witness."""

    coalition: frozenset[str]
    assignment: Mapping[str, bool]

    def __post_init__(self):
        object.__setattr__(self, "coalition", frozenset(self.coalition))
        object.__setattr__(self, "assignment", dict(self.assignment))


@dataclass(frozen=True)
class Violation:
    kind: str
    subject: str
    message: str


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[Violation, ...]
    warnings: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_model(model: Model, strict_formula_control: bool = True) -> ValidationResult:
    """Check the partition conditions and formula well-formedness.

    Every variable must be controlled by exactly one agent, identifiers must
    be declared, and each critical formula must mention variables of at least
    two distinct agents (downgraded to a warning when
    ``strict_formula_control`` is false).
    """
    violations: list[Violation] = []
    warnings: list[Violation] = []

    if not model.agents:
        violations.append(Violation("empty-agent-set", "", "model declares no agents"))
    if not model.variables:
        violations.append(Violation("empty-variable-set", "", "model declares no variables"))

    declared_vars = set(model.variables)
    seen: dict[str, str] = {}
    for agent in model.partition:
        if agent not in model.agents:
            violations.append(
                Violation("unknown-agent", agent, f"partition names undeclared agent {agent!r}")
            )
    for agent in model.agents:
        for variable in model.partition.get(agent, ()):
            if variable not in declared_vars:
                violations.append(
                    Violation(
                        "unknown-variable",
                        variable,
                        f"{agent!r} claims undeclared variable {variable!r}",
                    )
                )
            if variable in seen:
                violations.append(
                    Violation(
                        "doubly-owned-variable",
                        variable,
                        f"{variable!r} owned by both {seen[variable]!r} and {agent!r}",
                    )
                )
            else:
                seen[variable] = agent
    for variable in model.variables:
        if variable not in seen:
            violations.append(
                Violation("uncovered-variable", variable, f"no agent controls {variable!r}")
            )

    for index, f in enumerate(model.critical_formulas):
        subject = f"formula {index}"
        used = vars_of(f)
        undeclared = used - declared_vars
        for variable in sorted(undeclared):
            violations.append(
                Violation(
                    "unknown-variable", subject, f"{subject} mentions undeclared {variable!r}"
                )
            )
        for coalition in coalitions_of(f):
            for agent in sorted(coalition - set(model.agents)):
                violations.append(
                    Violation("unknown-agent", subject, f"{subject} names undeclared {agent!r}")
                )
        if undeclared:
            continue
        controllers = {seen[v] for v in used if v in seen}
        if len(controllers) < 2:
            item = Violation(
                "single-agent-formula",
                subject,
                f"{subject} is controlled by fewer than two agents",
            )
            (violations if strict_formula_control else warnings).append(item)

    return ValidationResult(tuple(violations), tuple(warnings))


def is_secure(model: Model, state: SystemState) -> bool:
    """True when every critical formula evaluates false at the state."""
    return all(not eval_formula(f, model, state) for f in model.critical_formulas)


def diamond_holds(
    model: Model, state: SystemState, coalition: Iterable[str], f: Formula
) -> tuple[bool, Optional[PartialValuation]]:
    """Can the coalition make f true by setting only its own variables?

    Returns (verdict, witness). The witness assigns the coalition's
    variables that occur in f; applying it to the state makes f true.
    Enumeration is exhaustive over those variables and capped at 20.
    """
    if has_diamond(f):
        raise ModalFormulaError("ability checks take a propositional formula")
    members = frozenset(coalition)
    owned = model.coalition_variables(members)
    unknown = vars_of(f) - model.variable_set
    if unknown:
        raise UnknownVariableError(f"unknown variables: {sorted(unknown)}")
    relevant = tuple(v for v in owned if v in vars_of(f))
    if len(relevant) > DIAMOND_VARIABLE_CAP:
        raise BudgetExceededError(
            f"coalition controls {len(relevant)} variables of the formula, "
            f"cap is {DIAMOND_VARIABLE_CAP}"
        )
    for combo in itertools.product((False, True), repeat=len(relevant)):
        assignment = dict(zip(relevant, combo))
        trial = state.with_updates(assignment)
        if eval_formula(f, model, trial):
            return True, PartialValuation(members, assignment)
    return False, None
