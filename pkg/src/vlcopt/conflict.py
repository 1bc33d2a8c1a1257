"""Pairwise interference conflicts and independent-set feasibility.

Two same-channel links conflict when either direction of their mutual
signal-to-interference ratio (a ratio of received optical powers, so the
photodiode responsivity cancels) falls below the scheduling threshold.
Same-channel links that share a transmitter chip or a receiver also conflict
outright. Multiplicity limits that are not pairwise (per-AP and per-terminal
activation caps, cross-channel transmitter/receiver exclusivity) are applied
by `is_independent` on top of the graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .capacity import interference_power
from .optics import channel_gain

if TYPE_CHECKING:  # pragma: no cover
    from .scenario import Link, Scenario


@dataclass(frozen=True)
class ScheduleVector:
    """Sorted indices of the links a candidate activation pattern turns on."""

    active: tuple[int, ...]

    def __post_init__(self) -> None:
        if tuple(sorted(set(self.active))) != self.active:
            raise ValueError("active link indices must be sorted and unique")


def pairwise_sir(a: "Link", b: "Link") -> tuple[float, float]:
    """(SIR at a's receiver from b, SIR at b's receiver from a).

    Ratios of received optical power. A direction with zero interference gain
    is +inf; a link whose own signal gain is zero gets 0 regardless.
    """
    return _one_way_sir(a, b), _one_way_sir(b, a)


def _one_way_sir(victim: "Link", interferer: "Link") -> float:
    signal = victim.gain * victim.p_ac_pp
    if signal <= 0.0:
        return 0.0
    rx = victim.receiver
    h = channel_gain(
        interferer.ac_pose,
        victim.rx_position,
        victim.rx_normal,
        area_m2=rx.area_m2,
        fov_half_deg=rx.fov_half_deg,
        filter_gain=rx.filter_gain,
        lens_index=rx.lens_index,
    )
    interference = h * interferer.p_ac_pp
    if interference <= 0.0:
        return math.inf
    return signal / interference


@dataclass(eq=False)
class ConflictGraph:
    links: tuple
    sir_threshold: float
    adjacency: np.ndarray  # boolean, symmetric, zero diagonal

    @property
    def n_links(self) -> int:
        return len(self.links)

    def edges(self) -> list[tuple[int, int]]:
        ii, jj = np.nonzero(np.triu(self.adjacency, k=1))
        return list(zip(ii.tolist(), jj.tolist()))

    def conflicts(self, i: int, j: int) -> bool:
        return bool(self.adjacency[i, j])


def build_conflict_graph(links: Sequence["Link"], sir_threshold: float) -> ConflictGraph:
    """Conflict graph over candidate links at one SIR threshold (>= 1).

    Edges are strict: a pair sitting exactly on the threshold stays compatible.
    Links on different channels never share an edge.
    """
    if not sir_threshold >= 1.0:
        raise ValueError(f"sir_threshold={sir_threshold}: must be >= 1")
    n = len(links)
    adj = np.zeros((n, n), dtype=bool)
    for i in range(n):
        a = links[i]
        for j in range(i + 1, n):
            b = links[j]
            if a.channel_index != b.channel_index:
                continue
            if (a.ap_index, a.chip_index) == (b.ap_index, b.chip_index):
                adj[i, j] = adj[j, i] = True
                continue
            if (a.ut_index, a.rx_index) == (b.ut_index, b.rx_index):
                adj[i, j] = adj[j, i] = True
                continue
            s_ab, s_ba = pairwise_sir(a, b)
            if min(s_ab, s_ba) < sir_threshold:
                adj[i, j] = adj[j, i] = True
    adj.setflags(write=False)
    return ConflictGraph(tuple(links), float(sir_threshold), adj)


def is_independent(x: ScheduleVector, g: ConflictGraph, s: "Scenario") -> bool:
    """True when the activation pattern violates no pairwise conflict and no
    multiplicity cap (per chip, per receiver, per access point, per terminal)."""
    idx = list(x.active)
    for i in idx:
        if not 0 <= i < g.n_links:
            raise IndexError(f"link index {i} out of range")
    for p, i in enumerate(idx):
        for j in idx[p + 1 :]:
            if g.adjacency[i, j]:
                return False
    per_tx: dict[tuple[int, int], int] = {}
    per_rx: dict[tuple[int, int], int] = {}
    per_ap: dict[int, int] = {}
    per_ut: dict[int, int] = {}
    for i in idx:
        ln = g.links[i]
        per_tx[(ln.ap_index, ln.chip_index)] = per_tx.get((ln.ap_index, ln.chip_index), 0) + 1
        per_rx[(ln.ut_index, ln.rx_index)] = per_rx.get((ln.ut_index, ln.rx_index), 0) + 1
        per_ap[ln.ap_index] = per_ap.get(ln.ap_index, 0) + 1
        per_ut[ln.ut_index] = per_ut.get(ln.ut_index, 0) + 1
    # one stream per transmitter chip and per receiver, across all channels
    if any(v > 1 for v in per_tx.values()) or any(v > 1 for v in per_rx.values()):
        return False
    for ap_index, count in per_ap.items():
        if count > s.ap_concurrency_cap(ap_index):
            return False
    for ut_index, count in per_ut.items():
        if count > s.uts[ut_index].n_receivers:
            return False
    return True


def column_interference(links: Sequence["Link"], active: Sequence[int]) -> dict[int, float]:
    """Optical interference power each active link receives from the others."""
    chosen = [links[i] for i in active]
    return {ln.index: interference_power(ln, chosen) for ln in chosen}


def write_adjacency(g: ConflictGraph, path: str | Path) -> None:
    """Debug dump: one line per link listing its conflicting neighbours."""
    with open(path, "w") as fh:
        fh.write(f"# links={g.n_links} sir_threshold={g.sir_threshold}\n")
        for i in range(g.n_links):
            neigh = np.nonzero(g.adjacency[i])[0]
            fh.write(f"{i}: {' '.join(str(j) for j in neigh.tolist())}\n")
