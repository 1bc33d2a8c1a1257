"""Self-contained linear programming with exact dual extraction.

Dense two-phase tableau simplex: Dantzig pricing that falls back to Bland's
rule when the objective stalls, deterministic lowest-index tie-breaking, and
a final refinement step that re-solves the optimal basis to recover primal
values and row duals at full precision. A branch-and-bound wrapper handles
mixed integrality with most-fractional branching and best-bound search.

Problem sizes here are desk scale (at most a couple of thousand columns), so
a dense tableau is deliberate: it keeps the pivot arithmetic transparent and
the whole state inspectable.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

FEAS_TOL = 1e-7          # absolute primal feasibility slack
DUALITY_REL_TOL = 1e-6   # relative primal/dual objective agreement at optimal
RC_TOL = 1e-9            # reduced-cost threshold for entering columns
PIVOT_TOL = 1e-9         # minimum magnitude of an acceptable pivot element
INT_TOL = 1e-7           # integrality recognition threshold
_STALL_LIMIT = 200       # degenerate pivots tolerated before Bland's rule


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL = "numerical"


class MilpStatus(str, Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"  # search budget exhausted with an incumbent
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL = "numerical"


@dataclass
class LinearProgram:
    """min c.x subject to a x {<=,>=,==} b and lb <= x <= ub (lb finite)."""

    c: np.ndarray
    a: np.ndarray
    rel: tuple[str, ...]
    b: np.ndarray
    lb: Optional[np.ndarray] = None
    ub: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.shape[0]
        self.a = np.asarray(self.a, dtype=float).reshape(-1, n)
        self.b = np.asarray(self.b, dtype=float)
        m = self.a.shape[0]
        if self.b.shape != (m,):
            raise ValueError(f"b must have shape ({m},), got {self.b.shape}")
        if len(self.rel) != m:
            raise ValueError(f"rel must have {m} entries")
        if any(r not in ("<=", ">=", "==") for r in self.rel):
            raise ValueError("row relations must be one of <=, >=, ==")
        self.rel = tuple(self.rel)
        self.lb = np.zeros(n) if self.lb is None else np.asarray(self.lb, dtype=float)
        self.ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float)
        if self.lb.shape != (n,) or self.ub.shape != (n,):
            raise ValueError("bound vectors must match the number of variables")
        if not np.all(np.isfinite(self.lb)):
            raise ValueError("lower bounds must be finite")
        for arr, name in ((self.c, "c"), (self.a, "a"), (self.b, "b")):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]

    @property
    def n_rows(self) -> int:
        return self.b.shape[0]


@dataclass
class LpSolution:
    status: LpStatus
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    duals: Optional[np.ndarray] = None
    iterations: int = 0


@dataclass
class MixedIntegerProgram:
    lp: LinearProgram
    integer: np.ndarray  # boolean mask over variables

    def __post_init__(self) -> None:
        self.integer = np.asarray(self.integer, dtype=bool)
        if self.integer.shape != (self.lp.n_vars,):
            raise ValueError("integer mask must match the number of variables")


@dataclass
class MilpSolution:
    status: MilpStatus
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    best_bound: float = -math.inf
    nodes: int = 0
    gap: float = math.inf


# ---------------------------------------------------------------------------
# simplex core


class _Tableau:
    """Dense simplex state over the standard-form expansion of a program."""

    def __init__(self, p: LinearProgram):
        n = p.n_vars
        if np.any(p.ub - p.lb < -FEAS_TOL):
            raise _Infeasible
        shift_b = p.b - p.a @ p.lb
        rows = [p.a]
        rhs = [shift_b]
        rels = list(p.rel)
        # finite upper bounds become explicit rows in the shifted space
        ub_rows = np.nonzero(np.isfinite(p.ub))[0]
        for i in ub_rows:
            e = np.zeros(n)
            e[i] = 1.0
            rows.append(e[None, :])
            rhs.append(np.array([max(p.ub[i] - p.lb[i], 0.0)]))
            rels.append("<=")
        a = np.vstack(rows)
        b = np.concatenate(rhs)
        m = a.shape[0]
        flip = b < 0.0
        a[flip] *= -1.0
        b[flip] *= -1.0
        swapped = {"<=": ">=", ">=": "<=", "==": "=="}
        rels = [swapped[r] if f else r for r, f in zip(rels, flip)]

        n_slack = sum(1 for r in rels if r != "==")
        n_art = sum(1 for r in rels if r != "<=")
        total = n + n_slack + n_art
        t = np.zeros((m, total + 1))
        t[:, :n] = a
        t[:, -1] = b
        basis = np.empty(m, dtype=int)
        art_cols: list[int] = []
        si = n
        ai = n + n_slack
        for i, r in enumerate(rels):
            if r == "<=":
                t[i, si] = 1.0
                basis[i] = si
                si += 1
            elif r == ">=":
                t[i, si] = -1.0
                si += 1
                t[i, ai] = 1.0
                basis[i] = ai
                art_cols.append(ai)
                ai += 1
            else:
                t[i, ai] = 1.0
                basis[i] = ai
                art_cols.append(ai)
                ai += 1

        self.p = p
        self.t = t
        self.basis = basis
        self.n = n
        self.n_structural = n
        self.total = total
        self.art_cols = np.array(art_cols, dtype=int)
        self.flip = flip
        self.n_user_rows = p.n_rows
        self.ub_rows = ub_rows
        self.row_alive = np.ones(m, dtype=bool)
        self.iterations = 0

    def _pivot(self, prow: int, pcol: int, r: np.ndarray) -> None:
        t = self.t
        t[prow] /= t[prow, pcol]
        col = t[:, pcol].copy()
        col[prow] = 0.0
        mask = col != 0.0
        if np.any(mask):
            t[mask] -= np.outer(col[mask], t[prow])
        r -= r[pcol] * t[prow, :-1]
        self.basis[prow] = pcol
        self.iterations += 1

    def _run_phase(self, cost: np.ndarray, banned: np.ndarray) -> str:
        """Pivot until optimal/unbounded for the given cost vector."""
        t = self.t
        r = cost - cost[self.basis] @ t[:, :-1]
        r[banned] = 0.0  # banned columns may never enter
        bland = False
        stall = 0
        last_obj = math.inf
        max_iter = 2000 + 60 * (t.shape[0] + self.total)
        while True:
            if self.iterations > max_iter:
                raise _Numerical("simplex iteration cap exceeded")
            if bland:
                cand = np.nonzero(r < -RC_TOL)[0]
                if cand.size == 0:
                    return "optimal"
                pcol = int(cand[0])
            else:
                pcol = int(np.argmin(r))
                if r[pcol] >= -RC_TOL:
                    return "optimal"
            alive = self.row_alive
            col = t[:, pcol]
            ratios = np.full(t.shape[0], np.inf)
            ok = alive & (col > PIVOT_TOL)
            if not np.any(ok):
                return "unbounded"
            ratios[ok] = t[ok, -1] / col[ok]
            best = np.min(ratios)
            ties = np.nonzero(ratios <= best + 1e-12)[0]
            # leaving tie-break: smallest basis column index (anti-cycling)
            prow = int(min(ties, key=lambda i: self.basis[i]))
            self._pivot(prow, pcol, r)
            r[banned] = 0.0
            obj = float(cost[self.basis] @ t[:, -1])
            if obj < last_obj - 1e-12:
                stall = 0
            else:
                stall += 1
                if stall > _STALL_LIMIT:
                    bland = True
            last_obj = obj

    def solve(self) -> tuple[np.ndarray, np.ndarray]:
        """Returns (shifted structural solution, internal duals per live row)."""
        m = self.t.shape[0]
        banned = np.zeros(self.total, dtype=bool)
        if self.art_cols.size:
            cost1 = np.zeros(self.total)
            cost1[self.art_cols] = 1.0
            out = self._run_phase(cost1, banned)
            if out == "unbounded":  # cannot happen: phase-1 objective >= 0
                raise _Numerical("phase-1 reported unbounded")
            obj1 = float(cost1[self.basis] @ self.t[:, -1])
            if obj1 > FEAS_TOL * (1.0 + float(np.max(np.abs(self.t[:, -1])))):
                raise _Infeasible
            self._evict_artificials()
            banned[self.art_cols] = True
        cost2 = np.zeros(self.total)
        cost2[: self.n_structural] = self.p.c
        out = self._run_phase(cost2, banned)
        if out == "unbounded":
            raise _Unbounded
        return self._extract(cost2)

    def _evict_artificials(self) -> None:
        """Pivot zero-level artificials out of the basis; drop redundant rows."""
        art_set = set(self.art_cols.tolist())
        for prow in range(self.t.shape[0]):
            if not self.row_alive[prow] or self.basis[prow] not in art_set:
                continue
            row = self.t[prow, : self.total]
            cands = np.nonzero(np.abs(row) > 1e-7)[0]
            cands = [c for c in cands if c not in art_set]
            if cands:
                r = np.zeros(self.total)
                self._pivot(prow, int(cands[0]), r)
            else:
                # redundant constraint: retire the row
                self.row_alive[prow] = False
                self.t[prow, :] = 0.0

    def _extract(self, cost2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        m = self.t.shape[0]
        x_hat = np.zeros(self.total)
        for i in range(m):
            if self.row_alive[i]:
                x_hat[self.basis[i]] = self.t[i, -1]
        # refine through the explicit basis for accuracy
        live = np.nonzero(self.row_alive)[0]
        duals_int = np.zeros(m)
        if live.size:
            cols = self.basis[live]
            bmat = self._column(cols)[live]
            try:
                xb = np.linalg.solve(bmat, self._rhs0()[live])
                y = np.linalg.solve(bmat.T, cost2[cols])
            except np.linalg.LinAlgError as exc:
                raise _Numerical(f"singular basis: {exc}") from exc
            x_hat[:] = 0.0
            x_hat[cols] = xb
            duals_int[live] = y
        return x_hat[: self.n_structural], duals_int

    def _column(self, cols: np.ndarray) -> np.ndarray:
        """Original standard-form columns (pre-pivot) for the basis solve."""
        return self._a0[:, cols]

    def _rhs0(self) -> np.ndarray:
        return self._b0

    def snapshot_original(self) -> None:
        self._a0 = self.t[:, : self.total].copy()
        self._b0 = self.t[:, -1].copy()


class _Infeasible(Exception):
    pass


class _Unbounded(Exception):
    pass


class _Numerical(Exception):
    def __init__(self, msg: str = ""):
        self.msg = msg


def solve_lp(p: LinearProgram) -> LpSolution:
    """Solve a linear program; duals follow the shadow-price convention
    (dual of a >= row is >= 0, of a <= row is <= 0, of an equality free)."""
    try:
        tab = _Tableau(p)
    except _Infeasible:
        return LpSolution(LpStatus.INFEASIBLE)
    tab.snapshot_original()
    try:
        x_hat, duals_int = tab.solve()
    except _Infeasible:
        return LpSolution(LpStatus.INFEASIBLE, iterations=tab.iterations)
    except _Unbounded:
        return LpSolution(LpStatus.UNBOUNDED, iterations=tab.iterations)
    except _Numerical:
        return LpSolution(LpStatus.NUMERICAL, iterations=tab.iterations)

    x = p.lb + x_hat
    objective = float(p.c @ x)

    # translate internal duals back to user rows (undo the sign flips)
    duals = np.empty(p.n_rows)
    for i in range(p.n_rows):
        duals[i] = -duals_int[i] if tab.flip[i] else duals_int[i]

    if not _verify(p, x, duals, duals_int, tab, objective):
        return LpSolution(LpStatus.NUMERICAL, x=x, objective=objective,
                          duals=duals, iterations=tab.iterations)
    return LpSolution(LpStatus.OPTIMAL, x=x, objective=objective,
                      duals=duals, iterations=tab.iterations)


def _verify(p: LinearProgram, x: np.ndarray, duals: np.ndarray,
            duals_int: np.ndarray, tab: _Tableau, objective: float) -> bool:
    scale = 1.0 + float(np.max(np.abs(p.b))) if p.n_rows else 1.0
    ax = p.a @ x if p.n_rows else np.zeros(0)
    for i, r in enumerate(p.rel):
        resid = ax[i] - p.b[i]
        if r == "<=" and resid > FEAS_TOL * scale:
            return False
        if r == ">=" and resid < -FEAS_TOL * scale:
            return False
        if r == "==" and abs(resid) > FEAS_TOL * scale:
            return False
    if np.any(x < p.lb - FEAS_TOL) or np.any(x > p.ub + FEAS_TOL):
        return False
    # strong duality in the internal (shifted, flipped) space
    z_int = objective - float(p.c @ p.lb)
    z_dual = float(duals_int @ tab._b0)
    return abs(z_int - z_dual) <= DUALITY_REL_TOL * (1.0 + abs(z_int))


# ---------------------------------------------------------------------------
# branch and bound


def solve_milp(
    mip: MixedIntegerProgram,
    time_budget: Optional[float] = None,
    abs_gap: float = 1e-9,
    node_limit: Optional[int] = None,
    incumbents: Optional[Sequence[np.ndarray]] = None,
) -> MilpSolution:
    """Branch-and-bound over LP relaxations.

    Branches on the most fractional integer variable (ties to the lowest
    index), explores nodes in best-bound order, and stops when the tree is
    exhausted or bounds agree within abs_gap. `incumbents` may seed feasible
    integer points for early pruning; infeasible seeds are ignored.
    """
    p = mip.lp
    int_idx = np.nonzero(mip.integer)[0]
    deadline = None if time_budget is None else time.monotonic() + time_budget

    best_x: Optional[np.ndarray] = None
    best_obj = math.inf
    if incumbents:
        for cand in incumbents:
            cand = np.asarray(cand, dtype=float)
            obj = _check_incumbent(p, mip.integer, cand)
            if obj is not None and obj < best_obj:
                best_obj = obj
                best_x = cand.copy()

    root = solve_lp(p)
    nodes = 1
    if root.status == LpStatus.INFEASIBLE:
        if best_x is not None:
            return MilpSolution(MilpStatus.OPTIMAL, best_x, best_obj, best_obj, nodes, 0.0)
        return MilpSolution(MilpStatus.INFEASIBLE, nodes=nodes)
    if root.status == LpStatus.UNBOUNDED:
        return MilpSolution(MilpStatus.UNBOUNDED, nodes=nodes)
    if root.status == LpStatus.NUMERICAL:
        return MilpSolution(MilpStatus.NUMERICAL, nodes=nodes)

    counter = 0
    heap: list[tuple[float, int, np.ndarray, np.ndarray, LpSolution]] = []
    heapq.heappush(heap, (root.objective, counter, p.lb.copy(), p.ub.copy(), root))

    while heap:
        bound, _, lb, ub, rel = heapq.heappop(heap)
        if bound >= best_obj - abs_gap:
            continue  # cannot improve
        if (deadline is not None and time.monotonic() > deadline) or (
            node_limit is not None and nodes >= node_limit
        ):
            counter += 1
            heapq.heappush(heap, (bound, counter, lb, ub, rel))
            break
        x = rel.x
        frac_var = _most_fractional(x, int_idx)
        if frac_var is None:
            snapped = x.copy()
            snapped[int_idx] = np.round(snapped[int_idx])
            obj = float(p.c @ snapped)
            if obj < best_obj:
                best_obj, best_x = obj, snapped
            continue
        base = math.floor(x[frac_var] + INT_TOL)
        for side in (0, 1):
            lb2, ub2 = lb.copy(), ub.copy()
            if side == 0:
                ub2[frac_var] = min(ub2[frac_var], float(base))
            else:
                lb2[frac_var] = max(lb2[frac_var], float(base + 1))
            if lb2[frac_var] > ub2[frac_var] + 1e-12:
                continue
            child = solve_lp(LinearProgram(p.c, p.a, p.rel, p.b, lb2, ub2))
            nodes += 1
            if child.status == LpStatus.INFEASIBLE:
                continue
            if child.status in (LpStatus.UNBOUNDED, LpStatus.NUMERICAL):
                return MilpSolution(MilpStatus.NUMERICAL, best_x,
                                    None if best_x is None else best_obj, nodes=nodes)
            if child.objective < best_obj - abs_gap:
                counter += 1
                heapq.heappush(heap, (child.objective, counter, lb2, ub2, child))

    open_bounds = [entry[0] for entry in heap]
    best_bound = min(open_bounds) if open_bounds else best_obj
    if best_x is None:
        if heap:
            return MilpSolution(MilpStatus.FEASIBLE, nodes=nodes, best_bound=best_bound)
        return MilpSolution(MilpStatus.INFEASIBLE, nodes=nodes)
    best_bound = min(best_bound, best_obj)
    gap = best_obj - best_bound
    status = MilpStatus.OPTIMAL if not heap or gap <= abs_gap else MilpStatus.FEASIBLE
    return MilpSolution(status, best_x, best_obj, best_bound, nodes, max(gap, 0.0))


def _most_fractional(x: np.ndarray, int_idx: np.ndarray) -> Optional[int]:
    if int_idx.size == 0:
        return None
    vals = x[int_idx]
    frac = np.abs(vals - np.round(vals))
    worst = int(np.argmax(frac))  # argmax returns the first (lowest) index on ties
    if frac[worst] <= INT_TOL:
        return None
    return int(int_idx[worst])


def _check_incumbent(p: LinearProgram, integer: np.ndarray, x: np.ndarray) -> Optional[float]:
    if x.shape != (p.n_vars,):
        return None
    if np.any(np.abs(x[integer] - np.round(x[integer])) > INT_TOL):
        return None
    if np.any(x < p.lb - FEAS_TOL) or np.any(x > p.ub + FEAS_TOL):
        return None
    ax = p.a @ x if p.n_rows else np.zeros(0)
    scale = 1.0 + (float(np.max(np.abs(p.b))) if p.n_rows else 0.0)
    for i, r in enumerate(p.rel):
        resid = ax[i] - p.b[i]
        if r == "<=" and resid > FEAS_TOL * scale:
            return None
        if r == ">=" and resid < -FEAS_TOL * scale:
            return None
        if r == "==" and abs(resid) > FEAS_TOL * scale:
            return None
    return float(p.c @ x)
