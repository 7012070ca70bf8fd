"""Whole-state-space analyses: flip graphs, reachability, and audits.

The state graph has one vertex per total valuation and one edge per single
variable flip, labeled with the variable's controller. On top of it sit
connectivity checks, secure-path search, single-flip attacker detection, and
an exhaustive minimal-coalition vulnerability audit.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union

from .errors import BudgetExceededError, ModalFormulaError, PreconditionError, UnknownVariableError
from .formula import (
    Formula,
    HornDisjunction,
    Not,
    Var,
    conjoin,
    disjoin,
    eval_formula,
    find_horn_labeling,
    has_diamond,
    to_horn_disjunction,
    vars_of,
)
from .model import Model, PartialValuation, SystemState, diamond_holds

GRAPH_VARIABLE_CAP = 16
AUDIT_AGENT_CAP = 12
SURVEY_VARIABLE_CAP = 4


@dataclass(frozen=True)
class StateGraph:
    """Hypercube of valuations; bit j of a vertex index is variables[j].

    Edges are implicit: vertex i joins i XOR (1 << j) for every j, labeled
    edge_labels[j] (the controller of variables[j]). secure[i] records
    whether every critical formula is false at vertex i.
    """

    variables: tuple[str, ...]
    edge_labels: tuple[str, ...]
    secure: tuple[bool, ...]

    @property
    def num_vertices(self) -> int:
        return 1 << len(self.variables)

    @property
    def num_edges(self) -> int:
        n = len(self.variables)
        return n * (1 << (n - 1)) if n else 0

    def valuation_of(self, index: int) -> dict[str, bool]:
        return {v: bool((index >> j) & 1) for j, v in enumerate(self.variables)}

    def vertex_index(self, state: Union[SystemState, Mapping[str, bool]]) -> int:
        valuation = state.valuation if isinstance(state, SystemState) else state
        mismatch = set(valuation) ^ set(self.variables)
        if mismatch:
            raise UnknownVariableError(
                f"state variables do not match the graph: {sorted(mismatch)}"
            )
        index = 0
        for j, v in enumerate(self.variables):
            if valuation[v]:
                index |= 1 << j
        return index

    def neighbors(self, index: int) -> Iterator[tuple[int, str]]:
        for j, label in enumerate(self.edge_labels):
            yield index ^ (1 << j), label

    def edges(self) -> Iterator[tuple[int, int, str]]:
        """Every undirected edge once, as (smaller index, larger index, agent)."""
        for i in range(self.num_vertices):
            for j, label in enumerate(self.edge_labels):
                k = i ^ (1 << j)
                if k > i:
                    yield i, k, label

    def secure_indices(self) -> tuple[int, ...]:
        return tuple(i for i, flag in enumerate(self.secure) if flag)


def build_state_graph(model: Model) -> StateGraph:
    """Enumerate all valuations and flag the ones where no formula holds."""
    n = len(model.variables)
    if n > GRAPH_VARIABLE_CAP:
        raise BudgetExceededError(
            f"{n} variables exceed the state-graph cap of {GRAPH_VARIABLE_CAP}"
        )
    labels = tuple(model.owner_of(v) for v in model.variables)
    secure = []
    for index in range(1 << n):
        valuation = {v: bool((index >> j) & 1) for j, v in enumerate(model.variables)}
        secure.append(
            not any(eval_formula(f, model, valuation) for f in model.critical_formulas)
        )
    return StateGraph(tuple(model.variables), labels, tuple(secure))


def _connected(members: Sequence[bool], num_vars: int) -> bool:
    """Is the induced subgraph on the flagged vertices connected?"""
    total = sum(members)
    if total <= 1:
        return True
    start = members.index(True)
    seen = bytearray(len(members))
    seen[start] = 1
    frontier = deque([start])
    reached = 1
    while frontier:
        current = frontier.popleft()
        for j in range(num_vars):
            neighbor = current ^ (1 << j)
            if members[neighbor] and not seen[neighbor]:
                seen[neighbor] = 1
                reached += 1
                frontier.append(neighbor)
    return reached == total


def is_connected(graph: StateGraph, restrict_to_secure: bool = False) -> bool:
    """Connectivity of the full graph or of its secure-vertex subgraph."""
    n = len(graph.variables)
    if restrict_to_secure:
        return _connected(list(graph.secure), n)
    return _connected([True] * graph.num_vertices, n)


def secure_path(
    graph: StateGraph, start: SystemState, goal: SystemState
) -> Optional[tuple[SystemState, ...]]:
    """Shortest single-flip path staying inside secure vertices, or None.

    The returned states advance the tick by one per flip, starting from the
    start state's tick.
    """
    source = graph.vertex_index(start)
    target = graph.vertex_index(goal)
    if not graph.secure[source]:
        raise PreconditionError("start state is not secure")
    if not graph.secure[target]:
        raise PreconditionError("goal state is not secure")
    parents: dict[int, int] = {source: -1}
    frontier = deque([source])
    while frontier and target not in parents:
        current = frontier.popleft()
        for neighbor, _ in graph.neighbors(current):
            if graph.secure[neighbor] and neighbor not in parents:
                parents[neighbor] = current
                frontier.append(neighbor)
    if target not in parents:
        return None
    indices = [target]
    while indices[-1] != source:
        indices.append(parents[indices[-1]])
    indices.reverse()
    return tuple(
        SystemState(start.tick + offset, graph.valuation_of(index))
        for offset, index in enumerate(indices)
    )


def single_flip_agents(
    model: Model,
    state: SystemState,
    formula: Formula,
    rewriting: Optional[HornDisjunction] = None,
) -> frozenset[str]:
    """Agents able to make a currently-false formula true with one flip.

    Candidate variables are those mentioned by the rewriting's disjuncts
    (default: the formula's full minterm expansion). An agent qualifies when
    it controls a candidate variable whose lone flip satisfies the formula.
    """
    if has_diamond(formula):
        raise ModalFormulaError("single-flip analysis takes a propositional formula")
    if eval_formula(formula, model, state):
        raise PreconditionError("formula is already true at this state")
    if rewriting is None:
        rewriting = to_horn_disjunction(formula, model)
    mentioned = set()
    for disjunct in rewriting.disjuncts:
        mentioned |= vars_of(disjunct)
    unknown = mentioned - set(model.variables)
    if unknown:
        raise UnknownVariableError(f"unknown variables in rewriting: {sorted(unknown)}")
    agents = set()
    for variable in mentioned:
        flipped = state.with_updates({variable: not state.value(variable)})
        if eval_formula(formula, model, flipped):
            agents.add(model.owner_of(variable))
    return frozenset(agents)


@dataclass(frozen=True)
class VulnerabilityFinding:
    """One inclusion-minimal coalition able to satisfy a critical formula."""

    formula_index: int
    formula: Formula
    coalition: tuple[str, ...]
    witness: PartialValuation


def audit_vulnerabilities(model: Model, state: SystemState) -> tuple[VulnerabilityFinding, ...]:
    """All minimal coalitions that could make some critical formula true.

    Coalitions are enumerated by ascending size; supersets of an already
    reported coalition are skipped, which is exact because ability is
    monotone under adding agents.
    """
    if len(model.agents) > AUDIT_AGENT_CAP:
        raise BudgetExceededError(
            f"{len(model.agents)} agents exceed the audit cap of {AUDIT_AGENT_CAP}"
        )
    for f in model.critical_formulas:
        if has_diamond(f):
            raise ModalFormulaError("the audit requires propositional critical formulas")
    findings = []
    for index, f in enumerate(model.critical_formulas):
        minimal: list[frozenset[str]] = []
        for size in range(1, len(model.agents) + 1):
            for combo in itertools.combinations(model.agents, size):
                members = frozenset(combo)
                if any(found <= members for found in minimal):
                    continue
                holds, witness = diamond_holds(model, state, combo, f)
                if holds:
                    minimal.append(members)
                    findings.append(VulnerabilityFinding(index, f, combo, witness))
    return tuple(findings)


# ---------------------------------------------------------------------------
# truth-table survey: secure-set connectivity vs. Horn relabelability


def formula_from_truth_table(num_vars: int, table: int) -> Formula:
    """Minimal clause form of the function given by a truth-table integer.

    Valuation masks assign variable x{j+1} the j-th bit; bit m of the table
    is the function's value at mask m. The result conjoins every minimal
    clause the function entails (iterated resolution from the falsified
    rows, subsumed clauses dropped), so equivalent functions get identical
    formulas and clause-level properties reflect the function, not one
    arbitrary way of writing it down.
    """
    if num_vars < 1:
        raise ValueError("need at least one variable")
    names = tuple(f"x{j + 1}" for j in range(num_vars))
    # clauses as frozensets of (variable index, positive)
    clauses = set()
    for mask in range(1 << num_vars):
        if (table >> mask) & 1:
            continue
        clauses.add(frozenset((j, not ((mask >> j) & 1)) for j in range(num_vars)))
    while True:
        fresh = set()
        for c1, c2 in itertools.combinations(clauses, 2):
            for j, positive in c1:
                if (j, not positive) in c2:
                    merged = (c1 - {(j, positive)}) | (c2 - {(j, not positive)})
                    if len({k for k, _ in merged}) == len(merged) and merged not in clauses:
                        fresh.add(merged)
        if not fresh:
            break
        clauses |= fresh
    minimal = [c for c in clauses if not any(other < c for other in clauses)]
    minimal.sort(key=lambda c: (len(c), sorted(c)))
    parts = []
    for clause in minimal:
        literals = [
            Var(names[j]) if positive else Not(Var(names[j]))
            for j, positive in sorted(clause)
        ]
        parts.append(disjoin(literals))
    return conjoin(parts)


@dataclass(frozen=True)
class SurveyRow:
    table: int
    connected: bool
    relabelable: bool


@dataclass(frozen=True)
class ConnectivitySurvey:
    """Joint record of secure-set connectivity and Horn relabelability."""

    num_vars: int
    reading: str
    rows: tuple[SurveyRow, ...]
    counterexamples: tuple[int, ...]
    converse_counterexamples: tuple[int, ...]

    @property
    def claim_holds(self) -> bool:
        """Every function with a connected secure set admits a relabeling."""
        return not self.counterexamples


def survey_secure_connectivity(
    num_vars: int,
    reading: str = "falsifying",
    tables: Optional[Iterable[int]] = None,
) -> ConnectivitySurvey:
    """Check, per truth table, whether a connected secure vertex set implies
    a sign-flip relabeling turning the minimal clause form Horn.

    reading picks which vertices count as secure: "falsifying" (the default)
    takes the states where the function is false, "satisfying" the others.
    Without an explicit table sample the sweep is exhaustive and therefore
    limited to 3 variables (2^(2^3) tables).
    """
    if reading not in ("falsifying", "satisfying"):
        raise ValueError(f"unknown reading: {reading!r}")
    if num_vars < 1 or num_vars > SURVEY_VARIABLE_CAP:
        raise BudgetExceededError(
            f"survey supports 1..{SURVEY_VARIABLE_CAP} variables, got {num_vars}"
        )
    states = 1 << num_vars
    if tables is None:
        if num_vars > 3:
            raise BudgetExceededError(
                "exhaustive sweeps stop at 3 variables; pass an explicit table sample"
            )
        chosen: Iterable[int] = range(1 << states)
    else:
        chosen = tables
    rows = []
    counterexamples = []
    converse = []
    for table in chosen:
        if not 0 <= table < (1 << states):
            raise ValueError(f"table {table} out of range for {num_vars} variables")
        if reading == "falsifying":
            members = [not ((table >> m) & 1) for m in range(states)]
        else:
            members = [bool((table >> m) & 1) for m in range(states)]
        connected = _connected(members, num_vars)
        relabelable = find_horn_labeling(formula_from_truth_table(num_vars, table)) is not None
        rows.append(SurveyRow(table, connected, relabelable))
        if connected and not relabelable:
            counterexamples.append(table)
        if relabelable and not connected:
            converse.append(table)
    return ConnectivitySurvey(
        num_vars, reading, tuple(rows), tuple(counterexamples), tuple(converse)
    )


def iter_edge_lines(graph: StateGraph) -> Iterator[str]:
    """Text edge list: vertex bits, vertex bits, controlling agent.

    Bit strings put variables[0] leftmost, '1' meaning true.
    """
    n = len(graph.variables)

    def bits(index: int) -> str:
        return "".join("1" if (index >> j) & 1 else "0" for j in range(n))

    for i, k, label in graph.edges():
        yield f"{bits(i)} {bits(k)} {label}"
