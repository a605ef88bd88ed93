import random

import pytest

from graphilp import brute_force, generate, lp_relaxation, solve
from graphilp.encode import (BINARY, SLACK_REAL, IlpProblem, ObjectiveFunc, Row,
                             Variable)
from graphilp.vne_model import two_links_model, two_links_spec
from graphilp.solve import BruteForceTooLarge

from conftest import random_problem


def simple(rows, obj_terms, sense="min", n=2, constant=0.0):
    variables = [Variable(f"x{i}", BINARY) for i in range(n)]
    return IlpProblem(variables, rows, ObjectiveFunc(sense, obj_terms, constant))


def test_two_links_problem_selects_exactly_one_candidate():
    _, g = two_links_model()
    problem, table = generate(two_links_spec(), g)
    sol = solve(problem)
    assert sol.status == "optimal"
    chosen = [v for v, val in sol.assignment.items() if val == 1]
    assert len(chosen) == 1
    assert sol.objective_value == pytest.approx(0.5)  # the half-full link wins
    assert sol.stats["nodes"] >= 1 and sol.stats["wall_time_s"] >= 0


def test_empty_problem_is_optimal_constant():
    p = IlpProblem([], [], ObjectiveFunc("min", {}, 42.0))
    sol = solve(p)
    assert sol.status == "optimal"
    assert sol.objective_value == 42.0
    assert sol.assignment == {}
    assert brute_force(p).objective_value == 42.0


def test_contradictory_constant_row_is_infeasible():
    p = IlpProblem([Variable("x0", BINARY)], [Row({}, ">=", 1)],
                   ObjectiveFunc("min", {"x0": 1}))
    assert solve(p).status == "infeasible"
    assert brute_force(p).status == "infeasible"


def test_single_variable_agrees_with_brute_force():
    p = simple([Row({"x0": 1}, "<=", 1)], {"x0": -2}, n=1)
    s, b = solve(p), brute_force(p)
    assert s.status == b.status == "optimal"
    assert s.objective_value == b.objective_value == -2


def test_oracle_equivalence_on_random_problems():
    rng = random.Random(123)
    for _ in range(150):
        p = random_problem(rng)
        s, b = solve(p), brute_force(p)
        assert s.status == b.status
        if s.status == "optimal":
            assert s.objective_value == pytest.approx(b.objective_value, abs=1e-9)


def test_optimal_assignment_satisfies_every_row():
    rng = random.Random(321)
    for _ in range(80):
        p = random_problem(rng)
        s = solve(p)
        if s.status != "optimal":
            continue
        for row in p.constraints:
            val = sum(c * s.assignment[v] for v, c in row.coeffs.items())
            if row.rel == "<=":
                assert val <= row.rhs + 1e-9
            elif row.rel == ">=":
                assert val >= row.rhs - 1e-9
            else:
                assert abs(val - row.rhs) <= 1e-9


def test_root_relaxation_bounds_integer_optimum():
    rng = random.Random(555)
    checked = 0
    for _ in range(200):
        p = random_problem(rng)
        status, bound = lp_relaxation(p)
        s = solve(p)
        if status != "optimal" or s.status != "optimal":
            continue
        checked += 1
        if p.objective.sense == "min":
            assert bound <= s.objective_value + 1e-7
        else:
            assert bound >= s.objective_value - 1e-7
    assert checked > 20


def test_sense_duality():
    rng = random.Random(777)
    for _ in range(60):
        p = random_problem(rng)
        neg_obj = ObjectiveFunc("min" if p.objective.sense == "max" else "max",
                                {v: -c for v, c in p.objective.terms.items()},
                                -p.objective.constant)
        q = IlpProblem(p.variables, p.constraints, neg_obj)
        sp, sq = solve(p), solve(q)
        assert sp.status == sq.status
        if sp.status == "optimal":
            assert sp.objective_value == pytest.approx(-sq.objective_value, abs=1e-9)


def test_brute_force_lexicographic_tie_break():
    # two symmetric optima; enumeration order makes x0=0,x1=1 the smaller one
    p = simple([Row({"x0": 1, "x1": 1}, "=", 1)], {"x0": 1, "x1": 1})
    b = brute_force(p)
    assert (b.assignment["x0"], b.assignment["x1"]) == (0, 1)


def test_brute_force_rejects_oversized_problems():
    p = IlpProblem([Variable(f"x{i}", BINARY) for i in range(23)], [],
                   ObjectiveFunc("min", {}))
    with pytest.raises(BruteForceTooLarge):
        brute_force(p)


def test_node_budget_triggers_timeout_status():
    rng = random.Random(9)
    # a problem that needs some branching
    p = random_problem(rng, max_vars=12, max_rows=12)
    sol = solve(p, node_budget=1)
    assert sol.status in ("timeout", "optimal", "infeasible")
    forced = solve(p, node_budget=0)
    assert forced.status == "timeout"
    assert forced.objective_value is None


def test_time_limit_zero_times_out():
    p = simple([Row({"x0": 1, "x1": 1}, "<=", 1)], {"x0": -1, "x1": -1})
    sol = solve(p, time_limit=0.0)
    assert sol.status == "timeout"


def test_real_slack_variable_resolved_by_relaxation():
    variables = [Variable("x0", BINARY), Variable("s", SLACK_REAL, 0.0, float("inf"))]
    rows = [Row({"x0": 1, "s": 1}, "=", 1.5), Row({"s": 1}, "<=", 3)]
    p = IlpProblem(variables, rows, ObjectiveFunc("min", {"x0": 1, "s": 1}))
    s, b = solve(p), brute_force(p)
    assert s.status == b.status == "optimal"
    # x0=0, s=1.5 gives 1.5; x0=1, s=0.5 gives 1.5: both optimal
    assert s.objective_value == pytest.approx(1.5)
    assert b.objective_value == pytest.approx(1.5)


def test_solution_is_deterministic():
    rng = random.Random(31337)
    for _ in range(25):
        p = random_problem(rng)
        a, b = solve(p), solve(p)
        assert a.status == b.status
        assert a.assignment == b.assignment
        assert a.stats["nodes"] == b.stats["nodes"]
