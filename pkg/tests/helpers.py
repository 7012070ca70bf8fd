"""Shared test oracles, deliberately independent of the library internals."""

import itertools
import random

from coalguard import (
    ActionRequest,
    Diamond,
    Model,
    Not,
    Or,
    SystemState,
    Top,
    Var,
)


# ---------------------------------------------------------------------------
# plain recursive evaluation (no model, no caches)


def truth_eval(f, valuation):
    if isinstance(f, Top):
        return True
    if isinstance(f, Var):
        return valuation[f.name]
    if isinstance(f, Not):
        return not truth_eval(f.child, valuation)
    if isinstance(f, Or):
        return truth_eval(f.left, valuation) or truth_eval(f.right, valuation)
    raise ValueError(f"no modal nodes here: {f!r}")


def vars_in(f):
    if isinstance(f, Top):
        return set()
    if isinstance(f, Var):
        return {f.name}
    if isinstance(f, Not):
        return vars_in(f.child)
    if isinstance(f, Or):
        return vars_in(f.left) | vars_in(f.right)
    if isinstance(f, Diamond):
        return vars_in(f.child)
    raise ValueError(f"not a formula: {f!r}")


def brute_diamond(model, state, coalition, f):
    """Exhaustive check of the coalition ability operator."""
    owned = [v for v in model.variables if model.owner_of(v) in set(coalition)]
    for bits in itertools.product((False, True), repeat=len(owned)):
        merged = dict(state.valuation)
        merged.update(zip(owned, bits))
        if truth_eval(f, merged):
            return True
    return False


# ---------------------------------------------------------------------------
# Horn labeling by brute force


def enumerate_labelings(clause_set):
    """All flip sets under which every clause has <= 1 positive literal."""
    names = sorted(clause_set.variables())
    good = []
    for k in range(len(names) + 1):
        for combo in itertools.combinations(names, k):
            flipped = frozenset(combo)
            ok = True
            for clause in clause_set.clauses:
                positives = sum(
                    1 for lit in clause if lit.positive != (lit.variable in flipped)
                )
                if positives > 1:
                    ok = False
                    break
            if ok:
                good.append(flipped)
    return good


# ---------------------------------------------------------------------------
# random structures


def random_formula(rng, names, depth=3):
    """Random Diamond-free formula over the given variable names."""
    if depth == 0 or rng.random() < 0.3:
        if rng.random() < 0.05:
            return Top()
        return Var(rng.choice(names))
    pick = rng.random()
    if pick < 0.3:
        return Not(random_formula(rng, names, depth - 1))
    left = random_formula(rng, names, depth - 1)
    right = random_formula(rng, names, depth - 1)
    if pick < 0.65:
        return Or(left, right)
    return left & right


def random_model(rng, max_vars=10, max_agents=6, max_formulas=4):
    """Random model whose critical formulas each span >= 2 agents.

    Formulas are small disjunctions of literal conjunctions: the shape a
    coalition attack takes, and easy to falsify so secure starts exist.
    """
    num_vars = rng.randint(2, max_vars)
    num_agents = rng.randint(2, min(max_agents, num_vars))
    variables = tuple(f"v{i + 1}" for i in range(num_vars))
    agents = tuple(f"a{i + 1}" for i in range(num_agents))
    dealt = list(variables)
    rng.shuffle(dealt)
    partition = {a: [] for a in agents}
    for i, v in enumerate(dealt):
        partition[agents[i % num_agents]].append(v)

    def literal_conjunction(span_vars):
        parts = [
            Var(v) if rng.random() < 0.5 else Not(Var(v)) for v in span_vars
        ]
        out = parts[0]
        for p in parts[1:]:
            out = out & p
        return out

    formulas = []
    for _ in range(rng.randint(1, max_formulas)):
        a, b = rng.sample(agents, 2)
        span = [rng.choice(partition[a]), rng.choice(partition[b])]
        extras = rng.randint(0, 2)
        span += rng.sample(variables, min(extras, len(variables)))
        seen = []
        for v in span:
            if v not in seen:
                seen.append(v)
        f = literal_conjunction(seen)
        if rng.random() < 0.3:
            f = Or(f, literal_conjunction(rng.sample(variables, rng.randint(1, 2))))
        formulas.append(f)
    return Model(
        agents=agents,
        variables=variables,
        partition={a: tuple(vs) for a, vs in partition.items()},
        critical_formulas=tuple(formulas),
    )


def random_secure_state(rng, model):
    """A valuation falsifying every critical formula, or None."""
    names = model.variables
    masks = list(range(1 << len(names)))
    rng.shuffle(masks)
    for mask in masks[: min(len(masks), 2048)]:
        valuation = {v: bool((mask >> j) & 1) for j, v in enumerate(names)}
        if not any(truth_eval(f, valuation) for f in model.critical_formulas):
            return SystemState(0, valuation)
    return None


def random_requests(rng, model, max_requests=8):
    requests = []
    for arrival in range(rng.randint(1, max_requests)):
        agent = rng.choice(model.agents)
        variable = rng.choice(model.owned(agent))
        requests.append(ActionRequest(agent, variable, rng.random() < 0.5, arrival))
    return tuple(requests)


def random_scenario(rng, max_vars=10, max_agents=6, max_formulas=4, max_requests=8):
    """(model, secure state, request batch); retries until the start is secure."""
    while True:
        model = random_model(rng, max_vars, max_agents, max_formulas)
        state = random_secure_state(rng, model)
        if state is None:
            continue
        return model, state, random_requests(rng, model, max_requests)


# ---------------------------------------------------------------------------
# independent blocking oracles


def run_batch(valuation, batch, blocked=()):
    """Final valuation after executing the unblocked requests in order."""
    out = dict(valuation)
    banned = set(blocked)
    for request in batch:
        if request.agent not in banned:
            out[request.variable] = request.new_value
    return out


def stays_secure(model, state, batch, blocked):
    after = run_batch(state.valuation, batch, blocked)
    return not any(truth_eval(f, after) for f in model.critical_formulas)


def oracle_min_block(model, state, batch):
    """Smallest blocked set keeping every critical formula false."""
    requesters = []
    for request in batch:
        if request.agent not in requesters:
            requesters.append(request.agent)
    for size in range(len(requesters) + 1):
        for blocked in itertools.combinations(requesters, size):
            if stays_secure(model, state, batch, blocked):
                return frozenset(blocked)
    raise AssertionError("even blocking every requester fails; start was insecure")


# ---------------------------------------------------------------------------
# trace replay


def replay_matches(initial_valuation, records):
    """Re-apply each tick's executed actions; valuations must match exactly."""
    current = dict(initial_valuation)
    for record in records:
        current = run_batch(current, record.executed)
        if current != dict(record.valuation):
            return False
    return True
