import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elid.geometry import NADIR, GeometryError, MountModel, elid_footprint, total_coverage
from elid.model import ElidUnit, RoadCorridor
from elid.placement import (
    PlacementPlan,
    brute_force_cover,
    corridor_elevation,
    coverage_gaps,
    greedy_site_cover,
    uniform_plan,
)
from elid.presets import OS1, VELARRAY
from oracles import sampled_uncovered


def test_uniform_1km(table1_road):
    plan = uniform_plan(VELARRAY, table1_road)
    assert plan.total_units == 3
    assert plan.total_sensors == 6
    assert plan.feasible
    pos = plan.positions
    assert pos[1] - pos[0] == pytest.approx(394.52, abs=0.01)


def test_uniform_short_corridor_centered():
    road = RoadCorridor(300.0)
    plan = uniform_plan(VELARRAY, road)
    assert plan.positions == [150.0]
    assert plan.feasible


def test_uniform_half_margin_doubles(table1_road):
    e = corridor_elevation(VELARRAY, table1_road)
    cov = total_coverage(VELARRAY, e)
    road = RoadCorridor(10_000.0)
    base = uniform_plan(VELARRAY, road).total_units
    half = uniform_plan(VELARRAY, road, margin=cov / 2)
    assert half.positions[1] - half.positions[0] == pytest.approx(cov / 2)
    assert abs(half.total_units - 2 * base) <= 2
    assert half.feasible


def test_uniform_margin_too_big(table1_road):
    with pytest.raises(GeometryError):
        uniform_plan(VELARRAY, table1_road, margin=500)


@given(st.floats(10, 20_000), st.sampled_from([VELARRAY, OS1]))
def test_uniform_unit_count(length, spec):
    road = RoadCorridor(length)
    plan = uniform_plan(spec, road)
    cov = total_coverage(spec, corridor_elevation(spec, road))
    assert plan.total_units == max(1, math.ceil(length / cov))
    assert plan.feasible
    assert all(0 <= p <= length for p in plan.positions)


@given(st.floats(50, 5000), st.floats(0, 0.9))
def test_uniform_overlap_at_least_margin(length, frac):
    road = RoadCorridor(length)
    cov = total_coverage(VELARRAY, corridor_elevation(VELARRAY, road))
    plan = uniform_plan(VELARRAY, road, margin=frac * cov)
    fps = [elid_footprint(u, road) for u in plan.units]
    for a, b in zip(fps, fps[1:]):
        assert a.end - b.start >= frac * cov - 1e-9
    assert plan.feasible


@pytest.mark.parametrize("tilt", [10.0, 20.0, 30.0])
def test_uniform_with_blind_zone_is_gap_free(tilt):
    road = RoadCorridor(3000.0)
    plan = uniform_plan(VELARRAY, road, MountModel.explicit(tilt))
    assert plan.feasible
    assert sampled_uncovered(plan, road, 0.05).size == 0


def test_greedy_sites_every_100m(table1_road):
    # a 100 m site grid cannot reach the continuous optimum of 3: a first mast
    # at <= 197 m, then <= 100 + 2 * 197 m, ... only reaches 897 m with three
    sites = [float(x) for x in range(0, 1001, 100)]
    g = greedy_site_cover(VELARRAY, table1_road, sites=sites)
    b = brute_force_cover(VELARRAY, table1_road, sites=sites)
    assert g.total_units == b.total_units == 4
    assert g.feasible and b.feasible
    assert brute_force_cover(VELARRAY, table1_road, sites=sites[:4] + sites[5:]).total_units == 4


def test_greedy_three_units_when_sites_allow(table1_road):
    sites = [float(x) for x in range(0, 1001, 50)]
    assert greedy_site_cover(VELARRAY, table1_road, sites=sites).total_units == 3


def test_greedy_single_site_short():
    road = RoadCorridor(200.0)
    plan = greedy_site_cover(VELARRAY, road, sites=[100.0])
    assert plan.total_units == 1 and plan.feasible


def test_greedy_infeasible_reports_gap(table1_road):
    plan = greedy_site_cover(VELARRAY, table1_road, sites=[0.0, 50.0, 100.0])
    assert not plan.feasible
    (a, b), = plan.gaps
    assert a == pytest.approx(297.26, abs=0.01)
    assert b == 1000


def test_greedy_interior_gap():
    road = RoadCorridor(2000.0)
    plan = greedy_site_cover(VELARRAY, road, sites=[100.0, 1900.0])
    assert plan.total_units == 2
    assert len(plan.gaps) == 1
    assert plan.gaps[0] == pytest.approx((297.26, 1702.74), abs=0.01)


def test_greedy_uses_corridor_sites():
    road = RoadCorridor(1000.0, candidate_sites=(200.0, 600.0, 900.0))
    assert greedy_site_cover(VELARRAY, road).positions == [200.0, 600.0, 900.0]


def test_greedy_tie_breaks_to_smaller_position():
    # both sites' footprints reach the corridor end
    road = RoadCorridor(100.0)
    plan = greedy_site_cover(VELARRAY, road, sites=[40.0, 60.0])
    assert plan.positions == [40.0]


def test_brute_force_limits(table1_road):
    with pytest.raises(ValueError):
        brute_force_cover(VELARRAY, table1_road, sites=list(range(21)))
    assert not brute_force_cover(VELARRAY, table1_road, sites=[]).feasible
    assert brute_force_cover(VELARRAY, RoadCorridor(300.0), sites=[150.0]).positions == [150.0]


def test_brute_force_lexicographic(table1_road):
    plan = brute_force_cover(VELARRAY, table1_road, sites=[150.0, 200.0, 500.0, 850.0, 900.0])
    assert plan.positions == [150.0, 500.0, 850.0]


def _random_instance(rnd):
    length = rnd.uniform(200, 2500)
    n = rnd.randint(1, 12)
    sites = sorted(round(rnd.uniform(0, length), 3) for _ in range(n))
    return RoadCorridor(length), sites


def test_greedy_matches_brute_force_random():
    rnd = random.Random(7)
    checked = 0
    for _ in range(200):
        road, sites = _random_instance(rnd)
        g = greedy_site_cover(VELARRAY, road, sites=sites)
        b = brute_force_cover(VELARRAY, road, sites=sites)
        assert g.feasible == b.feasible
        if b.feasible:
            assert g.total_units == b.total_units
            checked += 1
    assert checked >= 20


def test_coverage_gaps_examples(table1_road, velarray_plan):
    assert coverage_gaps(velarray_plan, table1_road) == []
    e = corridor_elevation(VELARRAY, table1_road)
    lone = PlacementPlan((ElidUnit(VELARRAY, 0.0, e),), ())
    (a, b), = coverage_gaps(lone, table1_road)
    assert a == pytest.approx(197.26, abs=0.01) and b == 1000
    pair = PlacementPlan((ElidUnit(VELARRAY, 0.0, e), ElidUnit(VELARRAY, 1000.0, e)), ())
    assert len(coverage_gaps(pair, table1_road)) == 1


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 1000), max_size=5), st.sampled_from([None, 20.0]))
def test_gaps_agree_with_grid_sampling(positions, tilt):
    road = RoadCorridor(1000.0)
    mount = MountModel(tilt)
    e = corridor_elevation(VELARRAY, road)
    plan = PlacementPlan(tuple(ElidUnit(VELARRAY, p, e) for p in sorted(positions)), (), 0.0, mount)
    gaps = coverage_gaps(plan, road)
    missing = sampled_uncovered(plan, road)
    assert (len(gaps) == 0) == (missing.size == 0)
    for x in missing:
        assert any(a <= x <= b for a, b in gaps)


def test_plan_totals_and_determinism(table1_road):
    spec = VELARRAY.__class__(**{**VELARRAY.__dict__, "unit_cost": 400.0})
    a = uniform_plan(spec, table1_road)
    b = uniform_plan(spec, table1_road)
    assert a.positions == b.positions
    assert a.total_cost == pytest.approx(6 * 400.0)
    assert a.total_sensors == sum(u.sensors for u in a.units)
