"""Propositional formulas with a coalition-ability modality.

Surface syntax accepted by :func:`parse_formula`:

    true            constant truth
    v3              variable (letters, digits, underscore; not starting with a digit)
    ~f              negation, binds tightest
    f & g           conjunction, desugared to ~(~f | ~g)
    f | g           disjunction
    <>{a1,a2} f     the coalition {a1, a2} can make f true on its own
    ( f )           grouping

Binary operators associate to the left and ``&`` binds tighter than ``|``.
The AST keeps five node kinds only (Top, Var, Not, Or, Diamond); ``&`` is
surface sugar and never appears in a parsed tree, so formatting a formula
prints negations and disjunctions instead.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Iterable, Iterator, Mapping, NamedTuple, Optional

from .errors import (
    BudgetExceededError,
    FormulaSyntaxError,
    ModalFormulaError,
    UnknownAgentError,
    UnknownVariableError,
)

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_RESERVED = {"true"}

DIAMOND_VARIABLE_CAP = 20
HORN_VARIABLE_CAP = 16


class Formula:
    """Base class for formula nodes. Instances are immutable and hashable."""

    __slots__ = ()

    def __invert__(self) -> "Formula":
        return Not(self)

    def __or__(self, other: "Formula") -> "Formula":
        return Or(self, other)

    def __and__(self, other: "Formula") -> "Formula":
        # Conjunction is sugar; keep the core AST at five node kinds.
        return Not(Or(Not(self), Not(other)))

    def __str__(self) -> str:
        return format_formula(self)


@dataclass(frozen=True)
class Top(Formula):
    pass


TOP = Top()


@dataclass(frozen=True)
class Var(Formula):
    name: str

    def __post_init__(self):
        if not _IDENT_RE.fullmatch(self.name) or self.name in _RESERVED:
            raise ValueError(f"invalid variable name: {self.name!r}")


@dataclass(frozen=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Diamond(Formula):
    """<>{C} f: the coalition C can choose values for its variables making f true."""

    coalition: frozenset[str]
    child: Formula

    def __init__(self, coalition: Iterable[str], child: Formula):
        names = frozenset(coalition)
        if not names:
            raise ValueError("coalition must be nonempty")
        object.__setattr__(self, "coalition", names)
        object.__setattr__(self, "child", child)


def conjoin(parts: Iterable[Formula]) -> Formula:
    """Left-associated conjunction of ``parts``; Top for an empty sequence."""
    parts = list(parts)
    if not parts:
        return TOP
    return reduce(lambda a, b: a & b, parts)


def disjoin(parts: Iterable[Formula]) -> Formula:
    parts = list(parts)
    if not parts:
        return Not(TOP)
    return reduce(Or, parts)


# ---------------------------------------------------------------------------
# parsing


class _Token(NamedTuple):
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if text.startswith("<>", i):
            tokens.append(_Token("<>", "<>", i))
            i += 2
            continue
        if ch in "~&|(){},":
            tokens.append(_Token(ch, ch, i))
            i += 1
            continue
        m = _IDENT_RE.match(text, i)
        if m:
            word = m.group()
            kind = "true" if word == "true" else "ident"
            tokens.append(_Token(kind, word, i))
            i = m.end()
            continue
        raise FormulaSyntaxError(f"unexpected character {ch!r}", i)
    tokens.append(_Token("end", "", n))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.index = 0

    def peek(self) -> _Token:
        return self.tokens[self.index]

    def advance(self) -> _Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def expect(self, kind: str, what: str) -> _Token:
        token = self.peek()
        if token.kind != kind:
            raise FormulaSyntaxError(f"expected {what}", token.pos)
        return self.advance()

    def parse(self) -> Formula:
        node = self.disjunction()
        token = self.peek()
        if token.kind != "end":
            raise FormulaSyntaxError(f"unexpected {token.text!r}", token.pos)
        return node

    def disjunction(self) -> Formula:
        node = self.conjunction()
        while self.peek().kind == "|":
            self.advance()
            node = Or(node, self.conjunction())
        return node

    def conjunction(self) -> Formula:
        node = self.unary()
        while self.peek().kind == "&":
            self.advance()
            node = node & self.unary()
        return node

    def unary(self) -> Formula:
        token = self.peek()
        if token.kind == "~":
            self.advance()
            return Not(self.unary())
        if token.kind == "<>":
            self.advance()
            self.expect("{", "'{' after '<>'")
            names = [self.expect("ident", "agent name").text]
            while self.peek().kind == ",":
                self.advance()
                names.append(self.expect("ident", "agent name").text)
            self.expect("}", "'}' closing the coalition")
            return Diamond(names, self.unary())
        return self.atom()

    def atom(self) -> Formula:
        token = self.peek()
        if token.kind == "true":
            self.advance()
            return TOP
        if token.kind == "ident":
            self.advance()
            return Var(token.text)
        if token.kind == "(":
            self.advance()
            node = self.disjunction()
            self.expect(")", "')'")
            return node
        raise FormulaSyntaxError("expected a formula", token.pos)


def parse_formula(text: str) -> Formula:
    """Parse surface syntax into a five-node-kind AST.

    Raises FormulaSyntaxError with a character position on malformed input.
    """
    return _Parser(_tokenize(text)).parse()


def format_formula(f: Formula) -> str:
    """Render a formula so that parse_formula(format_formula(f)) == f.

    The conjunction pattern ~(~a | ~b) that & builds is printed back as
    a & b; parentheses appear only where precedence or associativity needs
    them.
    """
    return _fmt(f, _DISJ)


_DISJ, _CONJ, _UNARY = 0, 1, 2  # binding strength, loosest first


def _as_conjunction(f: Formula) -> Optional[tuple[Formula, Formula]]:
    if (
        isinstance(f, Not)
        and isinstance(f.child, Or)
        and isinstance(f.child.left, Not)
        and isinstance(f.child.right, Not)
    ):
        return f.child.left.child, f.child.right.child
    return None


def _fmt(f: Formula, need: int) -> str:
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Var):
        return f.name
    pair = _as_conjunction(f)
    if pair is not None:
        left, right = pair
        text = f"{_fmt(left, _CONJ)} & {_fmt(right, _UNARY)}"
        own = _CONJ
    elif isinstance(f, Or):
        text = f"{_fmt(f.left, _DISJ)} | {_fmt(f.right, _CONJ)}"
        own = _DISJ
    elif isinstance(f, Not):
        text = "~" + _fmt(f.child, _UNARY)
        own = _UNARY
    elif isinstance(f, Diamond):
        names = ",".join(sorted(f.coalition))
        text = "<>{" + names + "}" + _fmt(f.child, _UNARY)
        own = _UNARY
    else:
        raise TypeError(f"not a formula: {f!r}")
    return f"({text})" if own < need else text


# ---------------------------------------------------------------------------
# structure queries


@lru_cache(maxsize=None)
def vars_of(f: Formula) -> frozenset[str]:
    """Variables occurring in f. Coalition names are agents, not variables."""
    if isinstance(f, (Top,)):
        return frozenset()
    if isinstance(f, Var):
        return frozenset((f.name,))
    if isinstance(f, Not):
        return vars_of(f.child)
    if isinstance(f, Or):
        return vars_of(f.left) | vars_of(f.right)
    if isinstance(f, Diamond):
        return vars_of(f.child)
    raise TypeError(f"not a formula: {f!r}")


def coalitions_of(f: Formula) -> frozenset[frozenset[str]]:
    if isinstance(f, (Top, Var)):
        return frozenset()
    if isinstance(f, Not):
        return coalitions_of(f.child)
    if isinstance(f, Or):
        return coalitions_of(f.left) | coalitions_of(f.right)
    if isinstance(f, Diamond):
        return coalitions_of(f.child) | frozenset((f.coalition,))
    raise TypeError(f"not a formula: {f!r}")


def has_diamond(f: Formula) -> bool:
    return bool(coalitions_of(f))


def agents_of(f: Formula, model) -> tuple[str, ...]:
    """Agents controlling at least one variable of f, in model agent order."""
    used = vars_of(f)
    unknown = used - set(model.variables)
    if unknown:
        raise UnknownVariableError(f"unknown variables: {sorted(unknown)}")
    return tuple(a for a in model.agents if not model.owned_set(a).isdisjoint(used))


# ---------------------------------------------------------------------------
# evaluation


def eval_formula(f: Formula, model, state) -> bool:
    """Evaluate f at a state of the model.

    Diamond nodes quantify existentially over assignments to the coalition's
    variables, everything else held fixed. ``state`` may be a SystemState or
    a plain variable -> bool mapping.
    """
    valuation = getattr(state, "valuation", state)
    unknown = vars_of(f) - model.variable_set
    if unknown:
        raise UnknownVariableError(f"unknown variables: {sorted(unknown)}")
    for coalition in coalitions_of(f):
        missing = coalition - model.agent_set
        if missing:
            raise UnknownAgentError(f"unknown agents: {sorted(missing)}")
    return _eval(f, model, valuation)


def _eval(f: Formula, model, valuation: Mapping[str, bool]) -> bool:
    if isinstance(f, Top):
        return True
    if isinstance(f, Var):
        return valuation[f.name]
    if isinstance(f, Not):
        return not _eval(f.child, model, valuation)
    if isinstance(f, Or):
        return _eval(f.left, model, valuation) or _eval(f.right, model, valuation)
    if isinstance(f, Diamond):
        relevant = [v for v in model.coalition_variables(f.coalition) if v in vars_of(f.child)]
        if len(relevant) > DIAMOND_VARIABLE_CAP:
            raise BudgetExceededError(
                f"coalition controls {len(relevant)} variables of the formula, "
                f"cap is {DIAMOND_VARIABLE_CAP}"
            )
        for combo in itertools.product((False, True), repeat=len(relevant)):
            trial = dict(valuation)
            trial.update(zip(relevant, combo))
            if _eval(f.child, model, trial):
                return True
        return False
    raise TypeError(f"not a formula: {f!r}")


def evaluate_propositional(f: Formula, assignment: Mapping[str, bool]) -> bool:
    """Evaluate a Diamond-free formula under a plain assignment."""
    if isinstance(f, Top):
        return True
    if isinstance(f, Var):
        return assignment[f.name]
    if isinstance(f, Not):
        return not evaluate_propositional(f.child, assignment)
    if isinstance(f, Or):
        return evaluate_propositional(f.left, assignment) or evaluate_propositional(
            f.right, assignment
        )
    if isinstance(f, Diamond):
        raise ModalFormulaError("modality not allowed here")
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# clause form


class Literal(NamedTuple):
    variable: str
    positive: bool


@dataclass(frozen=True)
class ClauseSet:
    """A CNF as a canonically ordered tuple of literal sets.

    Tautological clauses are dropped and duplicate clauses merged at
    construction. The empty tuple is truth; a member empty clause is falsity.
    """

    clauses: tuple[frozenset[Literal], ...]

    @classmethod
    def from_clauses(cls, clauses: Iterable[Iterable[Literal]]) -> "ClauseSet":
        cleaned = set()
        for clause in clauses:
            clause = frozenset(clause)
            variables = [lit.variable for lit in clause]
            if len(set(variables)) < len(variables):  # v and ~v together
                continue
            cleaned.add(clause)
        ordered = sorted(cleaned, key=lambda c: sorted((l.variable, l.positive) for l in c))
        return cls(tuple(ordered))

    def variables(self) -> frozenset[str]:
        return frozenset(lit.variable for clause in self.clauses for lit in clause)

    def evaluate(self, assignment: Mapping[str, bool]) -> bool:
        return all(
            any(assignment[lit.variable] == lit.positive for lit in clause)
            for clause in self.clauses
        )

    def is_horn(self, labeling: Optional["HornLabeling"] = None) -> bool:
        """True when every clause has at most one positive literal.

        With a labeling, positivity is judged after flipping the labeled
        variables.
        """
        flipped = labeling.flipped if labeling is not None else frozenset()
        for clause in self.clauses:
            positives = sum(1 for lit in clause if lit.positive != (lit.variable in flipped))
            if positives > 1:
                return False
        return True


def to_cnf(f: Formula) -> ClauseSet:
    """Convert a Diamond-free formula to an equivalent clause set."""
    if has_diamond(f):
        raise ModalFormulaError("cannot convert a modal formula to clauses")
    return ClauseSet.from_clauses(_cnf(f, False))


def _cnf(f: Formula, negated: bool) -> list[frozenset[Literal]]:
    if isinstance(f, Top):
        return [frozenset()] if negated else []
    if isinstance(f, Var):
        return [frozenset((Literal(f.name, not negated),))]
    if isinstance(f, Not):
        return _cnf(f.child, not negated)
    if isinstance(f, Or):
        if negated:  # ~(a|b) = ~a & ~b
            return _cnf(f.left, True) + _cnf(f.right, True)
        left = _cnf(f.left, False)
        right = _cnf(f.right, False)
        return [l | r for l in left for r in right]
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# Horn tooling


@dataclass(frozen=True)
class HornDisjunction:
    """An equivalent disjunction of minterms over the formula's variables.

    Each disjunct is a conjunction of one literal per variable, so each is a
    Horn clause set under the identity labeling.
    """

    variables: tuple[str, ...]
    disjuncts: tuple[Formula, ...]

    def as_formula(self) -> Formula:
        return disjoin(self.disjuncts)


def to_horn_disjunction(f: Formula, model=None) -> HornDisjunction:
    """Expand a Diamond-free formula into its satisfying minterms.

    Variable order follows the model when one is given, else sorts the
    formula's variables. The expansion is exponential in the variable count
    and capped at 16 variables.
    """
    if has_diamond(f):
        raise ModalFormulaError("cannot expand a modal formula")
    used = vars_of(f)
    if model is not None:
        unknown = used - set(model.variables)
        if unknown:
            raise UnknownVariableError(f"unknown variables: {sorted(unknown)}")
        order = tuple(v for v in model.variables if v in used)
    else:
        order = tuple(sorted(used))
    if len(order) > HORN_VARIABLE_CAP:
        raise BudgetExceededError(
            f"formula has {len(order)} variables, minterm cap is {HORN_VARIABLE_CAP}"
        )
    disjuncts = []
    for combo in itertools.product((False, True), repeat=len(order)):
        assignment = dict(zip(order, combo))
        if evaluate_propositional(f, assignment):
            literals = [Var(v) if assignment[v] else Not(Var(v)) for v in order]
            disjuncts.append(conjoin(literals))
    return HornDisjunction(order, tuple(disjuncts))


@dataclass(frozen=True)
class HornLabeling:
    """Per-variable polarity: names in ``flipped`` are renamed, the rest kept."""

    variables: tuple[str, ...]
    flipped: frozenset[str]

    def is_flipped(self, variable: str) -> bool:
        return variable in self.flipped


def find_horn_labeling(f: Formula) -> Optional[HornLabeling]:
    """Find a per-variable renaming that makes to_cnf(f) a Horn clause set.

    Returns the identity labeling when the clause form is already Horn, a
    labeling found by the standard 2-SAT reduction otherwise, or None when no
    labeling of that clause form exists. Renamability is judged on the clause
    form produced by to_cnf, not on every equivalent CNF.
    """
    cnf = to_cnf(f)
    variables = tuple(sorted(vars_of(f)))
    if cnf.is_horn():
        return HornLabeling(variables, frozenset())

    # For every pair of literals in a clause, at most one may stay positive
    # after renaming: flip-literal(l) = s_v when l is positive, ~s_v when
    # negative; each pair contributes (flip(l1) | flip(l2)).
    constraints = []
    for clause in cnf.clauses:
        lits = sorted(clause)
        for l1, l2 in itertools.combinations(lits, 2):
            constraints.append(((l1.variable, l1.positive), (l2.variable, l2.positive)))
    constrained = {v for pair in constraints for v, _ in pair}

    solution = _solve_2sat(sorted(constrained), constraints)
    if solution is None:
        return None
    flipped = frozenset(v for v, flip in solution.items() if flip)
    return HornLabeling(variables, flipped)


def _solve_2sat(variables, clauses):
    """Satisfy clauses of pairs of (variable, wanted-value) literals.

    Tries each variable's True branch first; if its implication closure
    conflicts, the opposite value is forced. A consistent closure can always
    be committed in 2-SAT, so no deeper backtracking is needed.
    """
    implications: dict[tuple[str, bool], list[tuple[str, bool]]] = {}
    for a, b in clauses:
        implications.setdefault(_negate(a), []).append(b)
        implications.setdefault(_negate(b), []).append(a)

    assignment: dict[str, bool] = {}
    for variable in variables:
        if variable in assignment:
            continue
        closure = None
        for value in (True, False):
            closure = _close((variable, value), assignment, implications)
            if closure is not None:
                break
        if closure is None:
            return None
        assignment.update(closure)
    return assignment


def _negate(literal):
    variable, value = literal
    return (variable, not value)


def _close(start, assignment, implications):
    trial: dict[str, bool] = {}
    stack = [start]
    while stack:
        variable, value = stack.pop()
        current = assignment.get(variable, trial.get(variable))
        if current is not None:
            if current != value:
                return None
            continue
        trial[variable] = value
        stack.extend(implications.get((variable, value), ()))
    return trial
