"""Simplex and branch-and-bound checked against enumeration and scipy."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from vlcopt.lp import (
    LinearProgram,
    LpStatus,
    MilpStatus,
    MixedIntegerProgram,
    solve_lp,
    solve_milp,
)

_REL_SIGN = {"<=": -1.0, ">=": 1.0}


def lagrangian_bound(p: LinearProgram, y: np.ndarray) -> float:
    """Dual bound valid for any y with the right row signs.

    Every feasible x satisfies c.x >= y.b + sum_j min over [lb_j, ub_j] of
    (c - a.T y)_j * x_j, so this never exceeds the optimal value.
    """
    red = p.c - p.a.T @ y
    total = float(y @ p.b)
    for j in range(p.n_vars):
        lo, hi = p.lb[j], p.ub[j]
        if red[j] >= 0:
            total += red[j] * lo
        elif math.isinf(hi):
            return -math.inf
        else:
            total += red[j] * hi
    return total


def assert_primal_feasible(p: LinearProgram, x: np.ndarray, tol: float = 1e-7):
    assert np.all(x >= p.lb - tol) and np.all(x <= p.ub + tol)
    ax = p.a @ x
    for i, rel in enumerate(p.rel):
        if rel == "<=":
            assert ax[i] <= p.b[i] + tol
        elif rel == ">=":
            assert ax[i] >= p.b[i] - tol
        else:
            assert abs(ax[i] - p.b[i]) <= tol


def assert_duals_consistent(p: LinearProgram, sol, tol: float = 1e-6):
    y = sol.duals
    for i, rel in enumerate(p.rel):
        if rel == "<=":
            assert y[i] <= tol
        elif rel == ">=":
            assert y[i] >= -tol
    assert lagrangian_bound(p, y) == pytest.approx(sol.objective, abs=tol)


# -- basics ----------------------------------------------------------------------

def test_single_bound_row():
    p = LinearProgram(c=[1.0], a=[[1.0]], rel=(">=",), b=[3.0])
    sol = solve_lp(p)
    assert sol.status is LpStatus.OPTIMAL
    assert sol.x[0] == pytest.approx(3.0)
    assert sol.objective == pytest.approx(3.0)
    assert sol.duals[0] == pytest.approx(1.0)


def test_contradictory_rows_infeasible():
    p = LinearProgram(c=[1.0], a=[[1.0], [1.0]], rel=("<=", ">="), b=[1.0, 2.0])
    assert solve_lp(p).status is LpStatus.INFEASIBLE


def test_free_descent_unbounded():
    p = LinearProgram(c=[-1.0], a=[[0.0]], rel=("<=",), b=[1.0])
    assert solve_lp(p).status is LpStatus.UNBOUNDED


def test_equality_row_dual_free():
    p = LinearProgram(c=[1.0, 2.0], a=[[1.0, 1.0]], rel=("==",), b=[4.0],
                      ub=[10.0, 10.0])
    sol = solve_lp(p)
    assert sol.status is LpStatus.OPTIMAL
    assert sol.x == pytest.approx([4.0, 0.0])
    assert_duals_consistent(p, sol)


def test_bad_inputs_rejected():
    with pytest.raises(ValueError):
        LinearProgram(c=[1.0], a=[[1.0]], rel=("<",), b=[1.0])
    with pytest.raises(ValueError):
        LinearProgram(c=[1.0], a=[[1.0]], rel=("<=",), b=[np.nan])
    with pytest.raises(ValueError):
        LinearProgram(c=[1.0], a=[[1.0]], rel=("<=",), b=[1.0],
                      lb=[-np.inf])
    with pytest.raises(ValueError):
        LinearProgram(c=[1.0, 1.0], a=[[1.0, 0.0]], rel=("<=", "<="), b=[1.0])


# -- enumeration oracle -------------------------------------------------------------

def _random_box_lp(rng: np.random.Generator, n: int, m: int) -> LinearProgram:
    # rows are anchored at an interior point so the program is never empty,
    # and the finite box keeps it bounded
    x0 = rng.uniform(0.5, 2.5, size=n)
    a = rng.uniform(-1.0, 1.0, size=(m, n))
    rel = tuple(rng.choice(["<=", ">="], size=m))
    slack = rng.uniform(0.1, 1.0, size=m)
    b = a @ x0 + np.where(np.array(rel) == "<=", slack, -slack)
    return LinearProgram(c=rng.uniform(-1.0, 1.0, size=n), a=a, rel=rel, b=b,
                         ub=np.full(n, 3.0))


def _vertex_minimum(p: LinearProgram) -> float:
    """Smallest objective over basic feasible points, found by brute force."""
    n = p.n_vars
    rows = [(p.a[i], p.b[i]) for i in range(p.n_rows)]
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        rows.append((e, p.lb[j]))
        rows.append((e, p.ub[j]))
    best = math.inf
    for combo in itertools.combinations(range(len(rows)), n):
        a_eq = np.array([rows[i][0] for i in combo])
        b_eq = np.array([rows[i][1] for i in combo])
        if abs(np.linalg.det(a_eq)) < 1e-10:
            continue
        x = np.linalg.solve(a_eq, b_eq)
        if np.any(x < p.lb - 1e-9) or np.any(x > p.ub + 1e-9):
            continue
        ax = p.a @ x
        ok = all(
            ax[i] <= p.b[i] + 1e-9 if r == "<=" else
            ax[i] >= p.b[i] - 1e-9 if r == ">=" else
            abs(ax[i] - p.b[i]) <= 1e-9
            for i, r in enumerate(p.rel)
        )
        if ok:
            best = min(best, float(p.c @ x))
    return best


def test_matches_vertex_enumeration():
    rng = np.random.default_rng(42)
    for trial in range(30):
        n = int(rng.integers(2, 5))
        p = _random_box_lp(rng, n, m=int(rng.integers(1, 5)))
        sol = solve_lp(p)
        assert sol.status is LpStatus.OPTIMAL, trial
        assert sol.objective == pytest.approx(_vertex_minimum(p), abs=1e-7)
        assert_primal_feasible(p, sol.x)
        assert_duals_consistent(p, sol)


def test_matches_scipy_on_random_10x10():
    rng = np.random.default_rng(7)
    for trial in range(20):
        p = _random_box_lp(rng, n=10, m=10)
        sol = solve_lp(p)
        assert sol.status is LpStatus.OPTIMAL, trial

        sign = np.array([_REL_SIGN[r] for r in p.rel])
        ref = linprog(p.c, A_ub=p.a * -sign[:, None], b_ub=p.b * -sign,
                      bounds=list(zip(p.lb, p.ub)), method="highs")
        assert ref.status == 0
        assert sol.objective == pytest.approx(ref.fun, abs=1e-6)
        assert_primal_feasible(p, sol.x)
        assert_duals_consistent(p, sol)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 4), st.integers(1, 4))
def test_weak_duality_holds(seed, n, m):
    p = _random_box_lp(np.random.default_rng(seed), n, m)
    sol = solve_lp(p)
    assert sol.status is LpStatus.OPTIMAL
    assert lagrangian_bound(p, sol.duals) <= sol.objective + 1e-7
    assert_primal_feasible(p, sol.x)


# -- branch and bound ---------------------------------------------------------------

def _knapsack(values, weights, cap) -> MixedIntegerProgram:
    n = len(values)
    lp = LinearProgram(c=-np.asarray(values, float), a=[list(weights)],
                       rel=("<=",), b=[cap], ub=np.ones(n))
    return MixedIntegerProgram(lp, np.ones(n, dtype=bool))


def test_knapsack_matches_exhaustion():
    values, weights, cap = [6.0, 5.0, 4.0], [5.0, 4.0, 3.0], 8.0
    best = min(
        -sum(v * t for v, t in zip(values, take))
        for take in itertools.product((0, 1), repeat=3)
        if sum(w * t for w, t in zip(weights, take)) <= cap
    )
    sol = solve_milp(_knapsack(values, weights, cap))
    assert sol.status is MilpStatus.OPTIMAL
    assert sol.objective == pytest.approx(best)
    assert sol.objective >= sol.best_bound - 1e-9
    assert np.allclose(sol.x, np.round(sol.x), atol=1e-9)


def test_integral_relaxation_needs_one_node():
    lp = LinearProgram(c=[-1.0], a=[[1.0]], rel=("<=",), b=[1.0], ub=[1.0])
    sol = solve_milp(MixedIntegerProgram(lp, np.array([True])))
    assert sol.status is MilpStatus.OPTIMAL
    assert sol.nodes == 1
    assert sol.objective == pytest.approx(-1.0)


def test_fractional_equality_infeasible_in_integers():
    # the relaxation admits (0.5, 0) but no 0/1 point hits the row exactly
    lp = LinearProgram(c=[1.0, 1.0], a=[[2.0, 2.0]], rel=("==",), b=[1.0],
                       ub=[1.0, 1.0])
    sol = solve_milp(MixedIntegerProgram(lp, np.array([True, True])))
    assert sol.status is MilpStatus.INFEASIBLE


def test_node_budget_returns_seeded_incumbent():
    mip = _knapsack([6.0, 5.0, 4.0], [5.0, 4.0, 3.0], 8.0)
    seed = np.array([1.0, 0.0, 1.0])  # weight 8, value 10
    sol = solve_milp(mip, node_limit=1, incumbents=[seed])
    assert sol.status is MilpStatus.FEASIBLE
    assert np.allclose(sol.x, seed)
    assert sol.objective == pytest.approx(-10.0)
    assert sol.best_bound <= sol.objective
    assert 0 < sol.gap < math.inf


def test_infeasible_incumbent_seeds_ignored():
    mip = _knapsack([6.0, 5.0, 4.0], [5.0, 4.0, 3.0], 8.0)
    over_cap = np.array([1.0, 1.0, 1.0])
    sol = solve_milp(mip, incumbents=[over_cap])
    assert sol.status is MilpStatus.OPTIMAL
    assert sol.objective == pytest.approx(-10.0)


def test_random_binary_programs_match_exhaustion():
    rng = np.random.default_rng(11)
    for trial in range(20):
        n = int(rng.integers(2, 6))
        m = int(rng.integers(1, 4))
        a = rng.uniform(-2.0, 2.0, size=(m, n))
        rel = tuple(rng.choice(["<=", ">="], size=m))
        b = rng.uniform(-1.0, float(n), size=m)
        c = rng.uniform(-1.0, 1.0, size=n)
        lp = LinearProgram(c=c, a=a, rel=rel, b=b, ub=np.ones(n))
        best = math.inf
        for bits in itertools.product((0.0, 1.0), repeat=n):
            x = np.array(bits)
            ax = a @ x
            if all(ax[i] <= b[i] + 1e-9 if r == "<=" else ax[i] >= b[i] - 1e-9
                   for i, r in enumerate(rel)):
                best = min(best, float(c @ x))
        sol = solve_milp(MixedIntegerProgram(lp, np.ones(n, dtype=bool)))
        if math.isinf(best):
            assert sol.status is MilpStatus.INFEASIBLE, trial
        else:
            assert sol.status is MilpStatus.OPTIMAL, trial
            assert sol.objective == pytest.approx(best, abs=1e-7)
            assert sol.objective >= sol.best_bound - 1e-9
