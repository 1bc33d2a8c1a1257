"""Column generation over independent sets of downlinks.

The master problem time-shares activation patterns (columns) so that every
terminal's demand is met within a unit scheduling frame while room lighting
stays inside its illuminance band; leftover frame time falls back to the
cheapest lighting-only state. The restricted master is a small LP whose
duals drive a pricing MILP that searches for the activation pattern with the
most negative reduced cost; the loop carries both an incumbent objective and
a certified lower bound, so it can stop either at proven optimality or at a
caller-chosen multiplicative gap. A final validation pass recomputes link
rates with the interference each column actually generates and re-optimizes
the time shares over the scheduled columns alone.

Illuminance and transmitter-budget rows are generated lazily: LPs start from
a small working set of grid points, every candidate solution is checked
against the full grid, and violated rows join the working set until the
check is clean. Solutions are exact for the full row set.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .capacity import LinkRate, physical_capacity
from .conflict import ConflictGraph, ScheduleVector, build_conflict_graph, is_independent
from .lp import (
    LinearProgram,
    LpStatus,
    MilpStatus,
    MixedIntegerProgram,
    solve_lp,
    solve_milp,
)
from .optics import channel_gain, illum_gain_many, lambertian_order, BeamPose
from .scenario import Link, Scenario, build_candidate_links

KAPPA = 1.0                    # convexity-row multiplier in the lower bound
RATE_SCALE = 1e6               # demand rows are expressed in Mbit/s
SHORTFALL_COST = 1e6           # W per Mbit/s of unmet demand (big-M column)
REDUCED_COST_TOL = 1e-9        # pricing outcome treated as non-negative above this
ILLUM_SLACK = 1e-6             # lux tolerance when validating bounds
_ROW_CHECK_TOL = 5e-7          # lazy-row violation threshold (lux / W)
_OMEGA_TOL = 1e-9
_SHORTFALL_TOL_BPS = 1.0


class CgStatus(str, Enum):
    OPTIMAL = "optimal"                # pricing proves no improving column
    EPSILON_BOUNDED = "epsilon_bounded"  # bound ratio within 1 + epsilon
    INFEASIBLE = "infeasible"          # demands unmet at proven optimum
    ITERATION_LIMIT = "iteration_limit"


class IlluminationInfeasible(ValueError):
    """Lighting bounds unattainable; carries the witness grid point."""

    def __init__(self, point_index: int, point: tuple, detail: str):
        self.point_index = point_index
        self.point = tuple(float(v) for v in point)
        super().__init__(f"illuminance bounds unattainable at grid point "
                         f"{point_index} {self.point}: {detail}")


class CgError(RuntimeError):
    pass


@dataclass(frozen=True)
class IndependentSetColumn:
    """One activation pattern with its optimal lighting state and rates."""

    schedule: ScheduleVector
    dc_power: tuple[float, ...]          # optical W per lighting-capable chip
    p_ac_electrical: float               # W, sum over active links
    p_dc_electrical: float               # W, lighting converters included
    rate_per_ut: tuple[float, ...]       # bit/s delivered to each terminal
    link_rates: tuple[LinkRate, ...]

    @property
    def electrical_total(self) -> float:
        return self.p_ac_electrical + self.p_dc_electrical


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    z_upper: float
    z_lower: float
    reduced_cost: float
    wall_ms: float


@dataclass
class RmpResult:
    omega: np.ndarray
    z_upper: float
    lambda_bps: np.ndarray
    mu: float
    shortfall_bps: np.ndarray

    @property
    def feasible(self) -> bool:
        return float(np.sum(self.shortfall_bps)) <= _SHORTFALL_TOL_BPS


@dataclass
class CgSolution:
    stage: str                 # "protocol" or "reality"
    status: CgStatus
    columns: tuple[IndependentSetColumn, ...]
    omega: np.ndarray
    z_upper: float
    z_lower: float
    p_illumi_min: float        # electrical W of the lighting-only state
    dc_min: tuple[float, ...]  # optical W per lighting chip, lighting-only state
    epsilon: Optional[float]
    sir_threshold: Optional[float]
    iterations: int
    last_reduced_cost: float
    lambda_bps: tuple[float, ...]
    mu: float
    shortfall_bps: tuple[float, ...]
    iteration_log: tuple[IterationRecord, ...]
    wall_ms: float

    @property
    def feasible(self) -> bool:
        return (
            self.status in (CgStatus.OPTIMAL, CgStatus.EPSILON_BOUNDED)
            and sum(self.shortfall_bps) <= _SHORTFALL_TOL_BPS
        )

    def active(self) -> list[tuple[IndependentSetColumn, float]]:
        return [
            (col, float(w))
            for col, w in zip(self.columns, self.omega)
            if w > _OMEGA_TOL
        ]


class SchedulingInstance:
    """Precomputed tables shared by every optimization pass on one scenario."""

    def __init__(
        self,
        s: Scenario,
        sir_threshold: Optional[float] = None,
        links: Optional[Sequence[Link]] = None,
        graph: Optional[ConflictGraph] = None,
    ):
        self.s = s
        self.links: list[Link] = list(links) if links is not None else build_candidate_links(s)
        if graph is not None:
            self.graph = graph
            self.sir_threshold = graph.sir_threshold
        elif sir_threshold is not None:
            self.graph = build_conflict_graph(self.links, sir_threshold)
            self.sir_threshold = float(sir_threshold)
        else:
            self.graph = None
            self.sir_threshold = None

        L = len(self.links)
        M = len(s.uts)
        self.demands = np.array([ut.demand_bps for ut in s.uts])
        self.pts = s.grid_points()
        K = self.pts.shape[0]
        rho = s.constants.luminosity_efficacy
        self.e_lo = np.full(K, s.illum.lower_lux - s.illum.ambient_lux)
        self.e_hi = np.full(K, s.illum.upper_lux - s.illum.ambient_lux)

        self.dc_txs = s.dc_transmitters()
        T = len(self.dc_txs)
        self.dc_eta = np.array([s.aps[a].chips[c].eta_dc for a, c in self.dc_txs])
        self.dc_cap = np.array([s.aps[a].chips[c].p_max for a, c in self.dc_txs])
        self.dc_light = np.empty((T, K))  # lux per optical W
        for t, (a, c) in enumerate(self.dc_txs):
            chip = s.aps[a].chips[c]
            pose = BeamPose(s.aps[a].position, (0.0, 0.0, -1.0),
                            lambertian_order(chip.theta_half_dc_deg))
            self.dc_light[t] = rho * illum_gain_many(pose, self.pts)

        self.ac_light = np.empty((L, K))  # lux contributed by each active link
        self.cap = np.empty(L)
        self.ut_of_link = np.empty(L, dtype=int)
        self.p_ac_pp = np.empty(L)
        self.p_ac_elec = np.empty(L)
        for i, ln in enumerate(self.links):
            self.ac_light[i] = rho * ln.p_ac_avg * illum_gain_many(ln.ac_pose, self.pts)
            self.cap[i] = ln.capacity_protocol
            self.ut_of_link[i] = ln.ut_index
            self.p_ac_pp[i] = ln.p_ac_pp
            self.p_ac_elec[i] = ln.p_ac_avg / ln.eta_ac

        # links whose data beam draws on the same power budget as lighting chip t:
        # same chip for single-chip layouts, whole access point for config c
        self.budget_links: list[list[int]] = []
        for a, c in self.dc_txs:
            if s.config_kind == "c":
                members = [i for i, ln in enumerate(self.links) if ln.ap_index == a]
            else:
                members = [
                    i for i, ln in enumerate(self.links)
                    if (ln.ap_index, ln.chip_index) == (a, c)
                ]
            self.budget_links.append(members)

        # cross gains: _h_cross[i, j] is the gain of link j's beam at link i's
        # receiver (same channel only, zero on the diagonal)
        self._h_cross = np.zeros((L, L))
        for i, a in enumerate(self.links):
            for j, b in enumerate(self.links):
                if i == j or a.channel_index != b.channel_index:
                    continue
                self._h_cross[i, j] = channel_gain(
                    b.ac_pose, a.rx_position, a.rx_normal,
                    area_m2=a.receiver.area_m2,
                    fov_half_deg=a.receiver.fov_half_deg,
                    filter_gain=a.receiver.filter_gain,
                    lens_index=a.receiver.lens_index,
                )

        # lazy working sets of illuminance grid rows
        stride = max(1, K // 48)
        seed = list(range(0, K, stride))
        if K - 1 not in seed:
            seed.append(K - 1)
        self._lo_rows: list[int] = list(seed)
        self._hi_rows: list[int] = list(seed)
        self._lo_set = set(seed)
        self._hi_set = set(seed)

        self._p0: Optional[tuple[float, np.ndarray]] = None
        self._static_rows: Optional[tuple] = None
        self._last_pricing: Optional[np.ndarray] = None

    # -- lighting -----------------------------------------------------------

    def min_illumination_power(self) -> tuple[float, np.ndarray]:
        """Cheapest lighting-only state: (electrical W, optical W per chip)."""
        if self._p0 is None:
            dc = self._solve_dc(())
            self._p0 = (float(np.sum(dc / self.dc_eta)), dc)
        return self._p0

    def optimize_dc_for_schedule(self, active: Sequence[int]) -> np.ndarray:
        """Optimal lighting currents (optical W per chip) alongside a pattern."""
        return self._solve_dc(tuple(active))

    def _ac_field(self, active: Sequence[int]) -> np.ndarray:
        if len(active) == 0:
            return np.zeros(self.pts.shape[0])
        return self.ac_light[list(active)].sum(axis=0)

    def _dc_caps_for(self, active: Sequence[int]) -> np.ndarray:
        caps = self.dc_cap.copy()
        active_set = set(active)
        for t, members in enumerate(self.budget_links):
            drawn = sum(self.p_ac_pp[i] for i in members if i in active_set)
            caps[t] -= drawn
        return caps

    def _solve_dc(self, active: tuple[int, ...]) -> np.ndarray:
        ac = self._ac_field(active)
        lo = self.e_lo - ac
        hi = self.e_hi - ac
        k_bad = int(np.argmin(hi))
        if hi[k_bad] < -ILLUM_SLACK:
            raise IlluminationInfeasible(
                k_bad, tuple(self.pts[k_bad]),
                "data beams alone exceed the upper illuminance bound")
        caps = self._dc_caps_for(active)
        if np.any(caps < -1e-9):
            raise IlluminationInfeasible(
                -1, (), "active data beams exceed a transmitter power budget")
        caps = np.maximum(caps, 0.0)
        reachable = self.dc_light.T @ caps  # max attainable lighting, per point
        short = np.argmax(lo - reachable)
        if lo[short] - reachable[short] > ILLUM_SLACK:
            raise IlluminationInfeasible(
                int(short), tuple(self.pts[int(short)]),
                "lower illuminance bound exceeds what capped chips can deliver")

        T = self.dc_light.shape[0]
        cost = 1.0 / self.dc_eta
        for _ in range(200):
            a_rows, rels, rhs = [], [], []
            for k in self._lo_rows:
                if lo[k] > 0.0:
                    a_rows.append(self.dc_light[:, k])
                    rels.append(">=")
                    rhs.append(lo[k])
            for k in self._hi_rows:
                a_rows.append(self.dc_light[:, k])
                rels.append("<=")
                rhs.append(hi[k])
            lp = LinearProgram(
                c=cost,
                a=np.array(a_rows) if a_rows else np.zeros((0, T)),
                rel=tuple(rels),
                b=np.array(rhs) if rhs else np.zeros(0),
                ub=caps,
            )
            sol = solve_lp(lp)
            if sol.status == LpStatus.INFEASIBLE:
                raise IlluminationInfeasible(
                    -1, (), "conflicting lower and upper bounds across grid points")
            if sol.status != LpStatus.OPTIMAL:
                raise CgError(f"lighting LP failed with status {sol.status}")
            dc = np.maximum(sol.x, 0.0)
            field = dc @ self.dc_light
            new = self._collect_violations(field, lo, hi)
            if not new:
                return dc
        raise CgError("lighting row generation did not settle")

    def _collect_violations(self, field: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> int:
        added = 0
        for viol, rows, row_set in (
            (lo - field, self._lo_rows, self._lo_set),
            (field - hi, self._hi_rows, self._hi_set),
        ):
            bad = np.nonzero(viol > _ROW_CHECK_TOL)[0]
            if bad.size:
                worst = bad[np.argsort(viol[bad])[::-1][:30]]
                for k in worst.tolist():
                    if k not in row_set:
                        row_set.add(k)
                        rows.append(k)
                        added += 1
        return added

    # -- columns ------------------------------------------------------------

    def build_column(self, active: Sequence[int],
                     dc: Optional[np.ndarray] = None) -> IndependentSetColumn:
        active = tuple(sorted(active))
        if dc is None:
            dc = self._solve_dc(active)
        rate = np.zeros(len(self.s.uts))
        link_rates = []
        for i in active:
            rate[self.ut_of_link[i]] += self.cap[i]
            link_rates.append(LinkRate(i, float(self.cap[i])))
        return IndependentSetColumn(
            schedule=ScheduleVector(active),
            dc_power=tuple(float(v) for v in dc),
            p_ac_electrical=float(np.sum(self.p_ac_elec[list(active)])) if active else 0.0,
            p_dc_electrical=float(np.sum(dc / self.dc_eta)),
            rate_per_ut=tuple(float(v) for v in rate),
            link_rates=tuple(link_rates),
        )

    def initial_columns(self) -> list[IndependentSetColumn]:
        cols = []
        for i in range(len(self.links)):
            try:
                cols.append(self.build_column((i,)))
            except IlluminationInfeasible:
                continue  # a beam nobody can light around; unusable as a column
        if not cols:
            raise CgError("no candidate link admits a lighting-feasible column")
        return cols

    def column_is_valid(self, col: IndependentSetColumn, tol: float = ILLUM_SLACK) -> bool:
        """Recheck independence, power budgets and the illuminance band."""
        if self.graph is not None and not is_independent(col.schedule, self.graph, self.s):
            return False
        dc = np.asarray(col.dc_power)
        if np.any(dc < -1e-12):
            return False
        caps = self._dc_caps_for(col.schedule.active)
        if np.any(dc > caps + 1e-9):
            return False
        field = dc @ self.dc_light + self._ac_field(col.schedule.active)
        return bool(
            np.all(field >= self.e_lo - tol) and np.all(field <= self.e_hi + tol)
        )

    # -- restricted master ----------------------------------------------------

    def solve_rmp(self, columns: Sequence[IndependentSetColumn]) -> RmpResult:
        p0_elec, _ = self.min_illumination_power()
        M = len(self.s.uts)
        Q = len(columns)
        n = Q + M  # omega then one shortfall column per terminal
        c = np.empty(n)
        for q, col in enumerate(columns):
            c[q] = col.electrical_total - p0_elec
        c[Q:] = SHORTFALL_COST
        a = np.zeros((M + 1, n))
        b = np.empty(M + 1)
        rel = [">="] * M + ["<="]
        for j in range(M):
            for q, col in enumerate(columns):
                a[j, q] = col.rate_per_ut[j] / RATE_SCALE
            a[j, Q + j] = 1.0
            b[j] = self.demands[j] / RATE_SCALE
        a[M, :Q] = 1.0
        b[M] = 1.0
        sol = solve_lp(LinearProgram(c=c, a=a, rel=tuple(rel), b=b))
        if sol.status != LpStatus.OPTIMAL:
            raise CgError(f"restricted master LP failed with status {sol.status}")
        omega = np.maximum(sol.x[:Q], 0.0)
        shortfall = np.maximum(sol.x[Q:], 0.0) * RATE_SCALE
        lam = np.maximum(sol.duals[:M], 0.0) / RATE_SCALE
        mu = min(float(sol.duals[M]), 0.0)
        z_upper = float(sol.objective) + p0_elec
        return RmpResult(omega, z_upper, lam, mu, shortfall)

    # -- pricing --------------------------------------------------------------

    def _require_graph(self) -> ConflictGraph:
        if self.graph is None:
            raise CgError("this operation needs a conflict graph; pass sir_threshold")
        return self.graph

    def _static_pattern_rows(self) -> list[tuple[np.ndarray, str, float]]:
        """Rows over x alone: conflict cliques and multiplicity caps."""
        if self._static_rows is not None:
            return self._static_rows
        g = self._require_graph()
        L = len(self.links)
        rows: list[tuple[np.ndarray, str, float]] = []
        seen: set[tuple[tuple[int, ...], float]] = set()

        def emit(members: Sequence[int], cap: float) -> None:
            key = (tuple(sorted(members)), cap)
            if len(members) >= 2 and key not in seen:
                seen.add(key)
                coef = np.zeros(L)
                coef[list(members)] = 1.0
                rows.append((coef, "<=", cap))

        for q in _clique_cover(g.adjacency):
            emit(q, 1.0)
        groups: dict[str, dict] = {"tx": {}, "rx": {}, "ap": {}, "ut": {}}
        for i, ln in enumerate(self.links):
            groups["tx"].setdefault((ln.ap_index, ln.chip_index), []).append(i)
            groups["rx"].setdefault((ln.ut_index, ln.rx_index), []).append(i)
            groups["ap"].setdefault(ln.ap_index, []).append(i)
            groups["ut"].setdefault(ln.ut_index, []).append(i)
        for members in groups["tx"].values():
            emit(members, 1.0)
        for members in groups["rx"].values():
            emit(members, 1.0)
        for ap_index, members in groups["ap"].items():
            emit(members, float(self.s.ap_concurrency_cap(ap_index)))
        for ut_index, members in groups["ut"].items():
            emit(members, float(self.s.uts[ut_index].n_receivers))
        self._static_rows = rows
        return rows

    def solve_pricing(self, lambda_bps: np.ndarray, mu: float,
                      ) -> tuple[IndependentSetColumn, float, float]:
        """Most negative reduced-cost activation pattern under the given duals.

        Returns the pattern as a column, its reduced cost, and a certified
        lower bound on the reduced cost over all patterns (the enumeration
        tree's bound less its termination slack), which is what the dual
        bound on the master objective must be built from.
        """
        self._require_graph()
        p0_elec, dc_min = self.min_illumination_power()
        lam = np.maximum(np.asarray(lambda_bps, dtype=float), 0.0)
        mu = min(float(mu), 0.0)
        L = len(self.links)
        T = len(self.dc_txs)
        n = L + T
        c = np.empty(n)
        c[:L] = self.p_ac_elec - lam[self.ut_of_link] * self.cap
        c[L:] = 1.0 / self.dc_eta
        lb = np.zeros(n)
        ub = np.concatenate([np.ones(L), np.full(T, np.inf)])
        integer = np.concatenate([np.ones(L, bool), np.zeros(T, bool)])

        base_rows = list(self._static_pattern_rows())
        incumbent0 = np.concatenate([np.zeros(L), dc_min])
        for _ in range(200):
            a_rows, rels, rhs = [], [], []
            for coef, rel, cap in base_rows:
                row = np.zeros(n)
                row[:L] = coef
                a_rows.append(row)
                rels.append(rel)
                rhs.append(cap)
            for t in range(T):
                row = np.zeros(n)
                row[L + t] = 1.0
                for i in self.budget_links[t]:
                    row[i] = self.p_ac_pp[i]
                a_rows.append(row)
                rels.append("<=")
                rhs.append(float(self.dc_cap[t]))
            for k in self._lo_rows:
                row = np.zeros(n)
                row[:L] = self.ac_light[:, k]
                row[L:] = self.dc_light[:, k]
                a_rows.append(row)
                rels.append(">=")
                rhs.append(float(self.e_lo[k]))
            for k in self._hi_rows:
                row = np.zeros(n)
                row[:L] = self.ac_light[:, k]
                row[L:] = self.dc_light[:, k]
                a_rows.append(row)
                rels.append("<=")
                rhs.append(float(self.e_hi[k]))
            lp = LinearProgram(c=c, a=np.array(a_rows), rel=tuple(rels),
                               b=np.array(rhs), lb=lb, ub=ub)
            incumbents = [incumbent0]
            if self._last_pricing is not None and self._last_pricing.shape == (n,):
                incumbents.append(self._last_pricing)
            res = solve_milp(MixedIntegerProgram(lp, integer), incumbents=incumbents)
            if res.status not in (MilpStatus.OPTIMAL,) or res.x is None:
                raise CgError(f"pricing MILP failed with status {res.status}")
            x = res.x
            active = tuple(int(i) for i in np.nonzero(x[:L] > 0.5)[0])
            dc = np.maximum(x[L:], 0.0)
            field = dc @ self.dc_light + self._ac_field(active)
            added = self._collect_violations(field, self.e_lo, self.e_hi)
            if added == 0:
                self._last_pricing = x.copy()
                column = self.build_column(active)
                reduced = float(res.objective) - p0_elec - mu
                bound = min(float(res.best_bound), float(res.objective))
                reduced_bound = bound - 1e-9 - p0_elec - mu
                return column, reduced, reduced_bound
        raise CgError("pricing row generation did not settle")

    # -- main loop -------------------------------------------------------------

    def column_generation(self, epsilon: float,
                          max_iterations: int = 300) -> CgSolution:
        if not 0.0 <= epsilon < 1.0:
            raise ValueError(f"epsilon={epsilon}: must lie in [0, 1)")
        self._require_graph()
        t_start = time.monotonic()
        p0_elec, dc_min = self.min_illumination_power()
        pool = self.initial_columns()
        keys = {col.schedule.active for col in pool}
        z_lower = -math.inf
        log: list[IterationRecord] = []
        status = CgStatus.ITERATION_LIMIT
        rmp: Optional[RmpResult] = None
        reduced = math.nan

        for it in range(1, max_iterations + 1):
            t0 = time.monotonic()
            rmp = self.solve_rmp(pool)
            column, reduced, reduced_bound = self.solve_pricing(rmp.lambda_bps, rmp.mu)
            z_lower = max(z_lower,
                          min(rmp.z_upper + KAPPA * reduced_bound, rmp.z_upper))
            log.append(IterationRecord(
                it, rmp.z_upper, z_lower, reduced,
                (time.monotonic() - t0) * 1e3,
            ))
            # scale-aware optimality cutoff: a pool column can re-price a hair
            # negative from LP round-off, which proves nothing but convergence
            if reduced >= -REDUCED_COST_TOL * max(1.0, abs(rmp.z_upper)):
                status = CgStatus.OPTIMAL if rmp.feasible else CgStatus.INFEASIBLE
                break
            if (
                rmp.feasible
                and z_lower > 0.0
                and rmp.z_upper / z_lower <= 1.0 + epsilon + 1e-12
            ):
                status = CgStatus.EPSILON_BOUNDED
                break
            if column.schedule.active in keys:
                raise CgError(
                    f"pricing returned an already-known pattern {column.schedule.active} "
                    f"with reduced cost {reduced:.3e}; dual values are inconsistent"
                )
            pool.append(column)
            keys.add(column.schedule.active)
        else:
            # ran out of iterations after extending the pool: refresh omega
            rmp = self.solve_rmp(pool)

        assert rmp is not None
        return CgSolution(
            stage="protocol",
            status=status,
            columns=tuple(pool),
            omega=rmp.omega,
            z_upper=rmp.z_upper,
            z_lower=z_lower,
            p_illumi_min=p0_elec,
            dc_min=tuple(float(v) for v in dc_min),
            epsilon=epsilon,
            sir_threshold=self.sir_threshold,
            iterations=len(log),
            last_reduced_cost=reduced,
            lambda_bps=tuple(float(v) for v in rmp.lambda_bps),
            mu=rmp.mu,
            shortfall_bps=tuple(float(v) for v in rmp.shortfall_bps),
            iteration_log=tuple(log),
            wall_ms=(time.monotonic() - t_start) * 1e3,
        )

    # -- validation pass ---------------------------------------------------------

    def physical_rates(self, col: IndependentSetColumn) -> IndependentSetColumn:
        """Column with rates recomputed under its own concurrent interference."""
        active = col.schedule.active
        rate = np.zeros(len(self.s.uts))
        link_rates = []
        for i in active:
            ln = self.links[i]
            p_i = float(sum(self._h_cross[i, j] * self.p_ac_pp[j] for j in active))
            cap = physical_capacity(
                ln.bandwidth_hz,
                self.s.constants.responsivity,
                ln.gain,
                ln.p_ac_pp,
                p_i,
                self.s.constants.noise_variance,
            )
            rate[ln.ut_index] += cap
            link_rates.append(LinkRate(i, float(self.cap[i]), float(cap)))
        return IndependentSetColumn(
            schedule=col.schedule,
            dc_power=col.dc_power,
            p_ac_electrical=col.p_ac_electrical,
            p_dc_electrical=col.p_dc_electrical,
            rate_per_ut=tuple(float(v) for v in rate),
            link_rates=tuple(link_rates),
        )

    def reality_check(self, sol: CgSolution) -> CgSolution:
        """Re-optimize time shares over the scheduled columns at the rates they
        actually achieve when their links transmit concurrently."""
        t0 = time.monotonic()
        chosen = [col for col, _ in sol.active()]
        if not chosen:
            chosen = [self.build_column(())]
        real_cols = tuple(self.physical_rates(col) for col in chosen)
        rmp = self.solve_rmp(real_cols)
        status = CgStatus.OPTIMAL if rmp.feasible else CgStatus.INFEASIBLE
        return CgSolution(
            stage="reality",
            status=status,
            columns=real_cols,
            omega=rmp.omega,
            z_upper=rmp.z_upper,
            z_lower=sol.z_lower,
            p_illumi_min=sol.p_illumi_min,
            dc_min=sol.dc_min,
            epsilon=sol.epsilon,
            sir_threshold=self.sir_threshold,
            iterations=sol.iterations,
            last_reduced_cost=sol.last_reduced_cost,
            lambda_bps=tuple(float(v) for v in rmp.lambda_bps),
            mu=rmp.mu,
            shortfall_bps=tuple(float(v) for v in rmp.shortfall_bps),
            iteration_log=sol.iteration_log,
            wall_ms=(time.monotonic() - t0) * 1e3,
        )


def _clique_cover(adjacency: np.ndarray) -> list[tuple[int, ...]]:
    """Greedy clique cover of all edges, deterministic by index order."""
    L = adjacency.shape[0]
    covered = np.zeros_like(adjacency)
    cliques: list[tuple[int, ...]] = []
    for i in range(L):
        for j in range(i + 1, L):
            if not adjacency[i, j] or covered[i, j]:
                continue
            members = [i, j]
            mask = adjacency[i] & adjacency[j]
            mask[i] = mask[j] = False
            for v in range(L):
                if mask[v]:
                    members.append(v)
                    mask &= adjacency[v]
            members.sort()
            arr = np.array(members)
            covered[np.ix_(arr, arr)] = True
            cliques.append(tuple(members))
    return cliques


# ---------------------------------------------------------------------------
# module-level operations (thin wrappers constructing an instance per call)


def min_illumination_power(s: Scenario) -> tuple[float, np.ndarray]:
    """Electrical power and per-chip optical powers of the cheapest lighting
    state meeting the illuminance band with no data beams active."""
    return SchedulingInstance(s).min_illumination_power()


def optimize_dc_for_schedule(s: Scenario, x: ScheduleVector,
                             links: Optional[Sequence[Link]] = None) -> np.ndarray:
    return SchedulingInstance(s, links=links).optimize_dc_for_schedule(x.active)


def initial_columns(s: Scenario, links: Optional[Sequence[Link]] = None
                    ) -> list[IndependentSetColumn]:
    return SchedulingInstance(s, links=links).initial_columns()


def solve_rmp(cols: Sequence[IndependentSetColumn], s: Scenario,
              links: Optional[Sequence[Link]] = None) -> RmpResult:
    return SchedulingInstance(s, links=links).solve_rmp(cols)


def solve_pricing(lambda_bps: np.ndarray, mu: float, s: Scenario,
                  g: ConflictGraph) -> tuple[IndependentSetColumn, float]:
    inst = SchedulingInstance(s, links=list(g.links), graph=g)
    column, reduced, _ = inst.solve_pricing(lambda_bps, mu)
    return column, reduced


def column_generation(s: Scenario, epsilon: float, sir_threshold: float = 3.0,
                      max_iterations: int = 300) -> CgSolution:
    return SchedulingInstance(s, sir_threshold=sir_threshold).column_generation(
        epsilon, max_iterations=max_iterations)


def reality_check(sol: CgSolution, s: Scenario, sir_threshold: Optional[float] = None
                  ) -> CgSolution:
    inst = SchedulingInstance(s, sir_threshold=sir_threshold or sol.sir_threshold)
    return inst.reality_check(sol)


def write_iteration_csv(records: Iterable[IterationRecord], path: str | Path) -> None:
    with open(path, "w") as fh:
        fh.write("iteration,z_upper,z_lower,reduced_cost,wall_ms\n")
        for r in records:
            fh.write(f"{r.iteration},{r.z_upper!r},{r.z_lower!r},"
                     f"{r.reduced_cost!r},{r.wall_ms:.3f}\n")
