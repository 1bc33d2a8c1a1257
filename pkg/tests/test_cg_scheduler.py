"""Lighting optimization, master/pricing problems, and the generation loop."""

import csv
import math

import numpy as np
import pytest

import helpers
from vlcopt.cg_scheduler import (
    CgStatus,
    IlluminationInfeasible,
    IterationRecord,
    SchedulingInstance,
    column_generation,
    min_illumination_power,
    write_iteration_csv,
)
from vlcopt.conflict import ScheduleVector
from vlcopt.scenario import default_config, scenario_from_dict

# on-axis desk illuminance per optical W per unit efficacy, 70 degree chip
# 2.2 m overhead (independently derived; also pinned in the optics tests)
GAIN_BELOW_WIDE = 0.05412776651255537


def _one_lamp_doc(lower, upper, points=((1.0, 1.0),)):
    doc = helpers.tiny_config(n_uts=1)
    doc["aps"] = {"grid": {"nx": 1, "ny": 1, "spacing": 1.0}}
    doc["uts"] = [{"position": [1.0, 1.0], "demand_bps": 0.0}]
    doc["illum"] = {"points": [list(p) for p in points],
                    "lower_lux": lower, "upper_lux": upper, "ambient_lux": 0.0}
    return doc


# -- lighting-only optimum -----------------------------------------------------

def test_ambient_alone_inside_band_costs_nothing():
    doc = helpers.tiny_config(n_uts=1,
                              illum={"lower_lux": 300.0, "upper_lux": 500.0,
                                     "spacing": 0.5, "ambient_lux": 400.0})
    p0, dc = min_illumination_power(scenario_from_dict(doc))
    assert p0 == 0.0
    assert np.all(dc == 0.0)


def test_single_lamp_inversion():
    # one chip, one constraint point: required optical power inverts in closed form
    s = scenario_from_dict(_one_lamp_doc(lower=200.0, upper=500.0))
    p0, dc = min_illumination_power(s)
    want_optical = 200.0 / (300.0 * GAIN_BELOW_WIDE)
    assert dc[0] == pytest.approx(want_optical, rel=1e-9)
    assert p0 == pytest.approx(want_optical / 0.1, rel=1e-9)


def test_unreachable_floor_names_witness_point():
    # 12.5 W through the closed-form gain caps the field near 203 lux
    s = scenario_from_dict(_one_lamp_doc(lower=300.0, upper=500.0))
    with pytest.raises(IlluminationInfeasible) as exc:
        min_illumination_power(s)
    assert exc.value.point_index == 0
    assert exc.value.point[:2] == (1.0, 1.0)


def test_office_idle_field_stays_in_band():
    """Default office: recompute the optimized idle field from scratch."""
    s = scenario_from_dict(default_config())
    p0, dc = min_illumination_power(s)
    assert p0 == pytest.approx(float(np.sum(dc / 0.1)), rel=1e-12)
    field = helpers.ref_idle_field(s, dc)
    assert np.all(field >= 300.0 - 1e-4)
    assert np.all(field <= 500.0 + 1e-4)


# -- lighting alongside a schedule ------------------------------------------------

def test_idle_pattern_reduces_to_lighting_optimum():
    inst = helpers.tiny_instance(n_uts=2, seed=4)
    np.testing.assert_allclose(inst.optimize_dc_for_schedule(()),
                               inst.min_illumination_power()[1], rtol=1e-12)


def test_schedule_field_stays_in_band():
    inst = helpers.tiny_instance(n_uts=3, seed=9)
    for active in ([0], [1], [2]):
        dc = inst.optimize_dc_for_schedule(active)
        field = helpers.ref_idle_field(inst.s, dc)
        for i in active:
            ln = inst.links[i]
            order = ln.ac_pose.ml
            for k, pt in enumerate(inst.s.grid_points()):
                field[k] += 300.0 * ln.p_ac_avg * helpers.ref_illum_gain(
                    ln.ac_pose.origin, ln.ac_pose.direction, order, pt)
        assert np.all(field >= 300.0 - 1e-4)
        assert np.all(field <= 500.0 + 1e-4)


def test_bright_beam_overruns_dim_ceiling():
    """A band set below the data beam's own glare admits no lighting fix."""
    peak_ac = 300.0 * 0.05 * helpers.ref_illum_gain(
        (0.5, 0.5, 2.0), (0.0, 0.0, -1.0), helpers.ref_lambertian(70.0),
        (0.5, 0.5, 0.8))
    doc = helpers.tiny_config(n_uts=1)
    doc["room"] = [1.0, 1.0, 2.0]
    doc["aps"] = {"grid": {"nx": 1, "ny": 1, "spacing": 1.0}}
    doc["uts"] = [{"position": [0.5, 0.5], "demand_bps": 1e6}]
    doc["illum"] = {"lower_lux": 0.25 * peak_ac, "upper_lux": 0.75 * peak_ac,
                    "spacing": 0.5, "ambient_lux": 0.0}
    inst = SchedulingInstance(scenario_from_dict(doc), sir_threshold=3.0)
    inst.min_illumination_power()  # idle state must remain reachable
    with pytest.raises(IlluminationInfeasible):
        inst.optimize_dc_for_schedule([0])


# -- seed columns and the restricted master ----------------------------------------

def test_seed_pool_is_one_singleton_per_link():
    inst = helpers.tiny_instance(n_uts=3, seed=2, channels=2)
    cols = inst.initial_columns()
    assert [col.schedule.active for col in cols] == \
        [(i,) for i in range(len(inst.links))]
    assert all(inst.column_is_valid(col) for col in cols)


def test_master_with_zero_demand_idles():
    inst = helpers.tiny_instance(n_uts=2, demand_bps=0.0)
    res = inst.solve_rmp(inst.initial_columns())
    p0 = inst.min_illumination_power()[0]
    assert res.z_upper == pytest.approx(p0, abs=1e-9)
    assert res.feasible
    assert np.all(res.shortfall_bps == 0.0)


def test_master_without_columns_buys_shortfall():
    inst = helpers.tiny_instance(n_uts=2, demand_bps=5e6)
    res = inst.solve_rmp([])
    p0 = inst.min_illumination_power()[0]
    assert not res.feasible
    np.testing.assert_allclose(res.shortfall_bps, inst.demands, rtol=1e-9)
    assert res.z_upper == pytest.approx(p0 + 1e6 * 10.0, rel=1e-9)


def test_master_buys_exactly_the_needed_share():
    doc = helpers.tiny_config(n_uts=1)
    doc["uts"] = [{"position": [0.6, 0.6], "demand_bps": 1e6}]
    probe = SchedulingInstance(scenario_from_dict(doc))
    half = float(probe.cap[0]) / 2.0
    doc["uts"][0]["demand_bps"] = half
    inst = SchedulingInstance(scenario_from_dict(doc))

    col = inst.initial_columns()[0]
    res = inst.solve_rmp([col])
    p0 = inst.min_illumination_power()[0]
    assert res.omega[0] == pytest.approx(0.5, rel=1e-9)
    assert res.z_upper == pytest.approx(
        p0 + 0.5 * (col.electrical_total - p0), rel=1e-9)
    # loose budget row leaves no scarcity rent; the demand row carries the price
    assert res.mu == 0.0
    assert res.lambda_bps[0] == pytest.approx(
        (col.electrical_total - p0) / col.rate_per_ut[0], rel=1e-9)


def test_master_duals_price_the_pool():
    inst = helpers.tiny_instance(n_uts=3, seed=6)
    pool = helpers.full_pool(inst)
    res = inst.solve_rmp(pool)
    p0 = inst.min_illumination_power()[0]
    # strong duality on the master
    assert res.z_upper - p0 == pytest.approx(
        float(np.dot(res.lambda_bps, inst.demands)) + res.mu, abs=1e-6)
    # no pool column prices out negative at the optimum
    for col in pool:
        assert helpers.ref_reduced_cost(inst, col, res.lambda_bps, res.mu) >= -1e-6


# -- pricing ------------------------------------------------------------------------

def test_pricing_with_zero_duals_stays_idle():
    inst = helpers.tiny_instance(n_uts=2, seed=3)
    col, reduced, bound = inst.solve_pricing(np.zeros(2), 0.0)
    assert col.schedule.active == ()
    assert reduced == pytest.approx(0.0, abs=1e-9)
    assert bound <= reduced + 1e-12


def test_pricing_with_huge_reward_maxes_throughput():
    inst = helpers.tiny_instance(n_uts=2, seed=3)
    col, _, _ = inst.solve_pricing(np.full(2, 1.0), 0.0)
    best = max(
        sum(inst.build_column(combo).rate_per_ut)
        for combo in helpers.all_independent_sets(inst)
    )
    assert sum(col.rate_per_ut) == pytest.approx(best, rel=1e-12)


def test_pricing_dominates_exhaustive_search():
    inst = helpers.tiny_instance(n_uts=3, seed=5, channels=2)
    rng = np.random.default_rng(0)
    for _ in range(4):
        lam = rng.uniform(0.0, 4e-8, size=3)
        mu = -float(rng.uniform(0.0, 1.0))
        col, reduced, bound = inst.solve_pricing(lam, mu)
        enumerated = [helpers.ref_reduced_cost(inst, c, lam, mu)
                      for c in helpers.full_pool(inst)]
        assert reduced == pytest.approx(min(enumerated), abs=1e-6)
        assert bound <= min(enumerated) + 1e-9
        assert reduced == pytest.approx(
            helpers.ref_reduced_cost(inst, col, lam, mu), abs=1e-9)


# -- the generation loop --------------------------------------------------------------

def test_zero_demand_terminates_immediately():
    inst = helpers.tiny_instance(n_uts=2, demand_bps=0.0)
    sol = inst.column_generation(epsilon=0.0)
    assert sol.status is CgStatus.OPTIMAL
    assert sol.iterations == 1
    assert sol.z_upper == pytest.approx(sol.p_illumi_min, abs=1e-9)
    assert sol.feasible


def test_matches_full_enumeration():
    inst = helpers.tiny_instance(n_uts=4, seed=7)
    sol = inst.column_generation(epsilon=0.0)
    ref = helpers.full_pool_optimum(inst)
    assert sol.status is CgStatus.OPTIMAL
    assert sol.z_upper == pytest.approx(ref.z_upper, rel=1e-7)
    assert sol.z_lower <= ref.z_upper + 1e-6
    assert sol.feasible


def test_bounds_tighten_monotonically():
    inst = helpers.tiny_instance(n_uts=5, seed=2)
    sol = inst.column_generation(epsilon=0.0)
    log = sol.iteration_log
    assert len(log) == sol.iterations >= 1
    for earlier, later in zip(log, log[1:]):
        assert later.z_lower >= earlier.z_lower - 1e-12
        assert later.z_upper <= earlier.z_upper + 1e-9
    assert sol.z_lower <= sol.z_upper + 1e-9
    if sol.status is CgStatus.OPTIMAL and sol.z_lower > 0:
        assert sol.z_upper / sol.z_lower <= 1.0 + 1e-6


def test_generated_columns_all_valid():
    inst = helpers.tiny_instance(n_uts=4, seed=1, channels=2)
    sol = inst.column_generation(epsilon=0.0)
    assert sol.columns
    for col in sol.columns:
        assert inst.column_is_valid(col)
    assert np.all(sol.omega >= 0.0)
    assert float(np.sum(sol.omega)) <= 1.0 + 1e-9


def test_impossible_demand_reported_infeasible():
    inst = helpers.tiny_instance(n_uts=2, seed=1, demand_bps=1e12)
    sol = inst.column_generation(epsilon=0.0)
    assert sol.status is CgStatus.INFEASIBLE
    assert not sol.feasible
    assert sum(sol.shortfall_bps) > 0.0


def test_gap_setting_must_be_a_fraction():
    inst = helpers.tiny_instance()
    for eps in (-0.1, 1.0, 1.5):
        with pytest.raises(ValueError):
            inst.column_generation(epsilon=eps)


def test_loose_gap_never_needs_more_iterations():
    cfg = helpers.tiny_config(n_uts=5, seed=2)
    tight = SchedulingInstance(scenario_from_dict(cfg), 3.0).column_generation(0.0)
    loose = SchedulingInstance(scenario_from_dict(cfg), 3.0).column_generation(0.5)
    assert loose.iterations <= tight.iterations
    assert loose.feasible and tight.feasible
    assert loose.z_upper >= tight.z_upper - 1e-9


# -- validation pass -----------------------------------------------------------------

def test_concurrent_rates_never_beat_scheduled_rates():
    inst = helpers.tiny_instance(n_uts=4, seed=7)
    for combo in helpers.all_independent_sets(inst):
        try:
            col = inst.build_column(combo)
        except IlluminationInfeasible:
            continue
        real = inst.physical_rates(col)
        assert real.schedule == col.schedule
        for a, b in zip(real.rate_per_ut, col.rate_per_ut):
            assert a <= b + 1e-9
        for lr in real.link_rates:
            assert lr.capacity_physical is not None
            assert lr.capacity_physical <= lr.capacity_protocol + 1e-9


def test_interference_strictly_slows_a_shared_channel():
    # two terminals one cell apart hear each other, yet pass a loose threshold
    doc = helpers.pinned_config([(1.0, 1.0), (2.0, 1.0)],
                                room=(6.0, 2.0, 3.0), grid=(5, 1),
                                illum={"lower_lux": 50.0, "upper_lux": 500.0,
                                       "spacing": 0.5, "ambient_lux": 0.0})
    inst = SchedulingInstance(scenario_from_dict(doc), sir_threshold=1.0)
    pair = (0, 1)
    assert pair in helpers.all_independent_sets(inst)
    assert inst._h_cross[0, 1] > 0.0
    col = inst.build_column(pair)
    real = inst.physical_rates(col)
    assert sum(real.rate_per_ut) < sum(col.rate_per_ut)


def test_validation_of_singletons_changes_nothing():
    # one link at a time means no concurrent interference to discover
    inst = helpers.tiny_instance(n_uts=2, seed=3)
    sol = inst.column_generation(epsilon=0.0)
    assert all(len(col.schedule.active) <= 1 for col, _ in sol.active())
    real = inst.reality_check(sol)
    assert real.stage == "reality"
    assert real.status is CgStatus.OPTIMAL
    assert real.z_upper == pytest.approx(sol.z_upper, rel=1e-9)


def test_validation_reprices_only_scheduled_columns():
    inst = helpers.tiny_instance(n_uts=4, seed=7)
    sol = inst.column_generation(epsilon=0.0)
    real = inst.reality_check(sol)
    assert len(real.columns) == len(sol.active())
    scheduled = {col.schedule.active for col, _ in sol.active()}
    assert {col.schedule.active for col in real.columns} == scheduled
    assert real.z_upper >= sol.z_upper - 1e-9  # degraded rates cannot cost less


# -- artifacts ------------------------------------------------------------------------

def test_iteration_log_roundtrips_through_csv(tmp_path):
    records = [IterationRecord(1, 10.5, 2.25, -3.125, 7.0),
               IterationRecord(2, 9.0, 8.75, -0.0625, 1.5)]
    path = tmp_path / "iters.csv"
    write_iteration_csv(records, path)
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2
    assert int(rows[0]["iteration"]) == 1
    assert float(rows[0]["z_upper"]) == 10.5
    assert float(rows[1]["z_lower"]) == 8.75
    assert float(rows[1]["reduced_cost"]) == -0.0625


def test_module_level_entry_point():
    s = scenario_from_dict(helpers.tiny_config(n_uts=2, seed=1))
    sol = column_generation(s, epsilon=0.01, sir_threshold=3.0)
    assert sol.stage == "protocol"
    assert sol.epsilon == 0.01
    assert sol.sir_threshold == 3.0
    assert sol.feasible
