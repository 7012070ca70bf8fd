import itertools
import random

import pytest
from hypothesis import given, strategies as st

from coalguard import (
    BudgetExceededError,
    Model,
    ModalFormulaError,
    PreconditionError,
    SystemState,
    UnknownVariableError,
    audit_vulnerabilities,
    build_state_graph,
    eval_formula,
    find_horn_labeling,
    formula_from_truth_table,
    is_connected,
    is_secure,
    iter_edge_lines,
    parse_formula,
    secure_path,
    single_flip_agents,
    survey_secure_connectivity,
    to_cnf,
)
from helpers import random_model, truth_eval


def two_var_model():
    return Model(
        ("a1", "a2"),
        ("A", "B"),
        {"a1": ("A",), "a2": ("B",)},
        (parse_formula("A & B"),),
    )


# ---------------------------------------------------------------------------
# state graph


def test_two_variable_graph_shape():
    graph = build_state_graph(two_var_model())
    assert graph.num_vertices == 4
    assert graph.num_edges == 4
    assert sorted(graph.edges()) == [
        (0, 1, "a1"),
        (0, 2, "a2"),
        (1, 3, "a2"),
        (2, 3, "a1"),
    ]
    assert list(iter_edge_lines(graph)) == [
        "00 10 a1",
        "00 01 a2",
        "10 11 a2",
        "01 11 a1",
    ]
    assert graph.secure_indices() == (0, 1, 2)


def test_vertex_index_round_trip():
    graph = build_state_graph(two_var_model())
    for index in range(graph.num_vertices):
        assert graph.vertex_index(graph.valuation_of(index)) == index
    with pytest.raises(UnknownVariableError):
        graph.vertex_index({"A": True})


def test_edge_count_formula_up_to_five():
    for n in range(1, 6):
        variables = tuple(f"x{i}" for i in range(n))
        m = Model(("a1",), variables, {"a1": variables})
        graph = build_state_graph(m)
        assert graph.num_vertices == 2**n
        assert graph.num_edges == n * 2 ** (n - 1)
        assert sum(1 for _ in graph.edges()) == graph.num_edges
        assert is_connected(graph)


def test_graph_budget():
    variables = tuple(f"x{i}" for i in range(17))
    m = Model(("a1",), variables, {"a1": variables})
    with pytest.raises(BudgetExceededError):
        build_state_graph(m)


def test_xor_secure_set_disconnected(xor_model):
    graph = build_state_graph(xor_model)
    assert is_connected(graph)
    assert not is_connected(graph, restrict_to_secure=True)
    assert graph.secure_indices() == (0, 3)


# ---------------------------------------------------------------------------
# secure paths


def test_secure_path_trivial_and_blocked(xor_model):
    graph = build_state_graph(xor_model)
    both_false = SystemState(0, {"A": False, "B": False})
    both_true = SystemState(0, {"A": True, "B": True})
    assert secure_path(graph, both_false, both_false) == (both_false,)
    assert secure_path(graph, both_false, both_true) is None


def test_secure_path_steps_through_secure_states():
    graph = build_state_graph(two_var_model())
    start = SystemState(0, {"A": False, "B": False})
    goal = SystemState(0, {"A": True, "B": False})
    path = secure_path(graph, start, goal)
    assert path is not None
    assert [dict(s.valuation) for s in path] == [
        {"A": False, "B": False},
        {"A": True, "B": False},
    ]
    assert [s.tick for s in path] == [0, 1]


def test_secure_path_rejects_insecure_endpoints():
    graph = build_state_graph(two_var_model())
    secure = SystemState(0, {"A": False, "B": False})
    insecure = SystemState(0, {"A": True, "B": True})
    with pytest.raises(PreconditionError):
        secure_path(graph, insecure, secure)
    with pytest.raises(PreconditionError):
        secure_path(graph, secure, insecure)


@given(st.integers(0, 2**32 - 1))
def test_secure_path_properties(seed):
    rng = random.Random(seed)
    model = random_model(rng, max_vars=6, max_agents=4, max_formulas=2)
    graph = build_state_graph(model)
    secure = graph.secure_indices()
    if len(secure) < 2:
        return
    start_i, goal_i = rng.sample(secure, 2)
    start = SystemState(0, graph.valuation_of(start_i))
    goal = SystemState(0, graph.valuation_of(goal_i))
    path = secure_path(graph, start, goal)
    if path is None:
        return
    assert dict(path[0].valuation) == dict(start.valuation)
    assert dict(path[-1].valuation) == dict(goal.valuation)
    for a, b in zip(path, path[1:]):
        differing = [v for v in model.variables if a.value(v) != b.value(v)]
        assert len(differing) == 1
    for s in path:
        assert is_secure(model, s)


# ---------------------------------------------------------------------------
# single-flip reachability


def test_single_flip_agents_golden():
    m = two_var_model()
    formula = m.critical_formulas[0]
    near = SystemState(0, {"A": True, "B": False})
    far = SystemState(0, {"A": False, "B": False})
    assert single_flip_agents(m, near, formula) == frozenset({"a2"})
    assert single_flip_agents(m, far, formula) == frozenset()


def test_single_flip_agents_rejects_true_formula():
    m = two_var_model()
    hot = SystemState(0, {"A": True, "B": True})
    with pytest.raises(PreconditionError):
        single_flip_agents(m, hot, m.critical_formulas[0])


def test_single_flip_agents_rejects_modal(example1_model, example1_state):
    with pytest.raises(ModalFormulaError):
        single_flip_agents(example1_model, example1_state, parse_formula("<>{a1} v1"))


@given(st.integers(0, 2**32 - 1))
def test_single_flip_agents_match_reference(seed):
    rng = random.Random(seed)
    model = random_model(rng, max_vars=6, max_agents=4, max_formulas=1)
    formula = model.critical_formulas[0]
    masks = list(range(1 << len(model.variables)))
    rng.shuffle(masks)
    for mask in masks:
        valuation = {
            v: bool((mask >> j) & 1) for j, v in enumerate(model.variables)
        }
        if not truth_eval(formula, valuation):
            break
    else:
        return
    state = SystemState(0, valuation)
    expected = set()
    for v in model.variables:
        flipped = dict(valuation)
        flipped[v] = not flipped[v]
        if truth_eval(formula, flipped):
            expected.add(model.owner_of(v))
    assert single_flip_agents(model, state, formula) == frozenset(expected)


# ---------------------------------------------------------------------------
# vulnerability audit


def test_audit_example1(example1_model, example1_state):
    findings = audit_vulnerabilities(example1_model, example1_state)
    compact = [
        (f.formula_index, f.coalition, dict(f.witness.assignment)) for f in findings
    ]
    assert compact == [
        (0, ("a1", "a2"), {"v1": True, "v3": False}),
        (0, ("a1", "a4"), {"v1": True, "v4": False, "v5": False}),
        (1, ("a3",), {"v6": False}),
        (2, ("a1",), {"v7": True, "v8": False}),
        (2, ("a3",), {"v6": False}),
        (3, ("a1",), {"v1": True, "v8": True}),
    ]
    # each witness actually fires its formula
    for finding in findings:
        merged = dict(example1_state.valuation)
        merged.update(finding.witness.assignment)
        assert truth_eval(finding.formula, merged)


def test_audit_reports_only_minimal_coalitions(example1_model, example1_state):
    findings = audit_vulnerabilities(example1_model, example1_state)
    by_formula = {}
    for f in findings:
        by_formula.setdefault(f.formula_index, []).append(frozenset(f.coalition))
    for coalitions in by_formula.values():
        for a, b in itertools.permutations(coalitions, 2):
            assert not a < b


def test_audit_agent_budget():
    agents = tuple(f"a{i}" for i in range(13))
    variables = tuple(f"x{i}" for i in range(13))
    m = Model(agents, variables, {a: (v,) for a, v in zip(agents, variables)},
              (parse_formula("x0 & x1"),))
    with pytest.raises(BudgetExceededError):
        audit_vulnerabilities(m, SystemState(0, {v: False for v in variables}))


# ---------------------------------------------------------------------------
# truth-table formulas


def test_truth_table_formula_edge_tables():
    from coalguard import format_formula

    assert format_formula(formula_from_truth_table(2, 0b1111)) == "true"
    assert format_formula(formula_from_truth_table(2, 0b0000)) == "~true"
    assert format_formula(formula_from_truth_table(2, 0b1000)) == "x1 & x2"
    assert format_formula(formula_from_truth_table(2, 0b0110)) == "(~x1 | ~x2) & (x1 | x2)"


@given(st.integers(1, 3), st.integers(0, 255))
def test_truth_table_formula_matches_table(num_vars, table):
    table %= 1 << (1 << num_vars)
    f = formula_from_truth_table(num_vars, table)
    for mask in range(1 << num_vars):
        valuation = {f"x{j + 1}": bool((mask >> j) & 1) for j in range(num_vars)}
        assert truth_eval(f, valuation) == bool((table >> mask) & 1)


def test_truth_table_formula_is_representation_minimal():
    # equal functions written differently collapse to the same clauses
    f = formula_from_truth_table(2, 0b1000)
    assert to_cnf(f).clauses == to_cnf(parse_formula("x1 & x2")).clauses


# ---------------------------------------------------------------------------
# connectivity survey


def test_survey_counts_falsifying():
    expected = {
        1: (4, 4, 4, 0, 0),
        2: (16, 14, 16, 0, 2),
        3: (256, 168, 242, 0, 74),
    }
    for num_vars, (tables, connected, relabelable, cex, conv) in expected.items():
        survey = survey_secure_connectivity(num_vars, "falsifying")
        assert len(survey.rows) == tables
        assert sum(r.connected for r in survey.rows) == connected
        assert sum(r.relabelable for r in survey.rows) == relabelable
        assert len(survey.counterexamples) == cex
        assert len(survey.converse_counterexamples) == conv
        assert survey.claim_holds


def test_survey_satisfying_reading_fails_at_three_vars():
    survey = survey_secure_connectivity(3, "satisfying")
    assert survey.counterexamples == (126, 189, 219, 231)
    assert not survey.claim_holds


def test_survey_xor_is_a_converse_witness():
    survey = survey_secure_connectivity(2, "falsifying")
    assert 6 in survey.converse_counterexamples
    assert 9 in survey.converse_counterexamples


def test_survey_relabelable_matches_semantic_oracle():
    # a function admits a labeling iff some flip makes its satisfying
    # set closed under componentwise AND
    for num_vars in (1, 2, 3):
        survey = survey_secure_connectivity(num_vars, "falsifying")
        for row in survey.rows:
            sat = {m for m in range(1 << num_vars) if (row.table >> m) & 1}
            renamable = False
            for r in range(1 << num_vars):
                flipped = {m ^ r for m in sat}
                if all((a & b) in flipped for a in flipped for b in flipped):
                    renamable = True
                    break
            assert row.relabelable == renamable, row.table


def test_survey_guard_rails():
    with pytest.raises(ValueError):
        survey_secure_connectivity(2, "sideways")
    with pytest.raises(BudgetExceededError):
        survey_secure_connectivity(5)
    with pytest.raises(BudgetExceededError):
        survey_secure_connectivity(4)  # needs an explicit sample
    sample = survey_secure_connectivity(4, tables=[0, 1, 65535])
    assert len(sample.rows) == 3
    with pytest.raises(ValueError):
        survey_secure_connectivity(2, tables=[99999])
