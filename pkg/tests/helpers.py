"""Builders and independent reference implementations shared by the tests.

The reference functions re-derive expected values straight from the model
formulas with plain math so the package code is never its own oracle.
"""

import itertools
import math

import numpy as np

from vlcopt.cg_scheduler import IlluminationInfeasible, SchedulingInstance
from vlcopt.conflict import ScheduleVector, is_independent
from vlcopt.scenario import default_config, scenario_from_dict


def tiny_config(n_uts=2, seed=1, demand_bps=5e6, channels=1, k=1, kind="a",
                **extra):
    """Desk-sized room with a 2x2 luminaire grid, small enough to enumerate."""
    doc = default_config(
        config_kind=kind,
        n_uts=n_uts,
        seed=seed,
        demand_bps=demand_bps,
        room=[2.0, 2.0, 3.0],
        aps={"grid": {"nx": 2, "ny": 2, "spacing": 1.0}},
        channels=[{"bandwidth_hz": 1e8} for _ in range(channels)],
        illum={"lower_lux": 300.0, "upper_lux": 500.0, "spacing": 0.5,
               "ambient_lux": 0.0},
        association_k=k,
    )
    doc.update(extra)
    return doc


def tiny_instance(sir=3.0, **kw):
    return SchedulingInstance(scenario_from_dict(tiny_config(**kw)),
                              sir_threshold=sir)


def pinned_config(positions, demand_bps=1e6, room=(4.0, 2.0, 3.0),
                  grid=(3, 1), **extra):
    """Terminals at explicit desk positions under a single-row luminaire grid."""
    doc = tiny_config(demand_bps=demand_bps, **extra)
    doc["room"] = list(room)
    doc["aps"] = {"grid": {"nx": grid[0], "ny": grid[1], "spacing": 1.0}}
    doc["uts"] = [
        {"position": [float(x), float(y)], "demand_bps": demand_bps}
        for x, y in positions
    ]
    return doc


def all_independent_sets(inst):
    """Every nonempty feasible activation pattern, by exhaustive subset search."""
    n = inst.graph.n_links
    found = []
    for r in range(1, n + 1):
        for combo in itertools.combinations(range(n), r):
            if is_independent(ScheduleVector(combo), inst.graph, inst.s):
                found.append(combo)
    return found


def full_pool(inst):
    """All buildable columns, idle pattern included."""
    cols = []
    for combo in [()] + all_independent_sets(inst):
        try:
            cols.append(inst.build_column(combo))
        except IlluminationInfeasible:
            continue
    return cols


def full_pool_optimum(inst):
    """Reference optimum: a single LP over every enumerable column."""
    return inst.solve_rmp(full_pool(inst))


def ref_reduced_cost(inst, col, lambda_bps, mu):
    p0 = inst.min_illumination_power()[0]
    credit = float(np.dot(lambda_bps, col.rate_per_ut))
    return col.electrical_total - p0 - credit - mu


# -- reference photometry -----------------------------------------------------

def ref_lambertian(theta_half_deg):
    return -math.log(2.0) / math.log(math.cos(math.radians(theta_half_deg)))


def ref_channel_gain(origin, direction, order, rx_pos, rx_normal, area_m2,
                     fov_half_deg, filter_gain=1.0, lens_index=1.5):
    d = np.asarray(rx_pos, float) - np.asarray(origin, float)
    dist = float(np.linalg.norm(d))
    u = d / dist
    cos_t = float(np.dot(u, np.asarray(direction, float)))
    cos_p = float(np.dot(-u, np.asarray(rx_normal, float)))
    if cos_p < math.cos(math.radians(fov_half_deg)):
        return 0.0
    conc = lens_index ** 2 / math.sin(math.radians(fov_half_deg)) ** 2
    return ((order + 1.0) * area_m2 / (2.0 * math.pi * dist * dist)
            * max(cos_t, 0.0) ** order * filter_gain * conc * max(cos_p, 0.0))


def ref_illum_gain(origin, direction, order, pt):
    """Lux per optical W per unit efficacy at an upward-facing desk point."""
    d = np.asarray(pt, float) - np.asarray(origin, float)
    dist = float(np.linalg.norm(d))
    u = d / dist
    cos_t = float(np.dot(u, np.asarray(direction, float)))
    cos_p = float(np.dot(-u, [0.0, 0.0, 1.0]))
    return ((order + 1.0) / (2.0 * math.pi * dist * dist)
            * max(cos_t, 0.0) ** order * max(cos_p, 0.0))


def ref_idle_field(s, dc):
    """Illuminance at every grid point from lighting chips alone."""
    rho = s.constants.luminosity_efficacy
    field = np.full(s.grid_points().shape[0], float(s.illum.ambient_lux))
    for (a, c), p_opt in zip(s.dc_transmitters(), dc):
        chip = s.aps[a].chips[c]
        order = ref_lambertian(chip.theta_half_dc_deg)
        for k, pt in enumerate(s.grid_points()):
            field[k] += rho * p_opt * ref_illum_gain(
                s.aps[a].position, (0.0, 0.0, -1.0), order, pt)
    return field


def ref_link_gain(ln):
    """Channel gain of a built link, recomputed from its stored geometry."""
    return ref_channel_gain(
        ln.ac_pose.origin, ln.ac_pose.direction, ln.ac_pose.ml,
        ln.rx_position, ln.rx_normal,
        ln.receiver.area_m2, ln.receiver.fov_half_deg,
        ln.receiver.filter_gain, ln.receiver.lens_index,
    )
