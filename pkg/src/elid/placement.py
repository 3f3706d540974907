"""Choosing mast positions along a corridor."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .geometry import (
    NADIR,
    GeometryError,
    MountModel,
    along_road_coverage,
    blind_zone,
    elid_footprint,
    required_elevation,
    total_coverage,
)
from .model import ElidUnit, LidarSpec, RoadCorridor, road_width

MAX_BRUTE_FORCE_SITES = 20


@dataclass(frozen=True)
class PlacementPlan:
    units: tuple
    gaps: tuple
    redundancy_margin: float = 0.0
    mount: MountModel = NADIR

    @property
    def feasible(self):
        return not self.gaps

    @property
    def total_units(self):
        return len(self.units)

    @property
    def total_sensors(self):
        return sum(u.sensors for u in self.units)

    @property
    def total_cost(self):
        return sum(u.spec.unit_cost * u.sensors for u in self.units)

    @property
    def positions(self):
        return [u.position for u in self.units]


def _tol(corridor):
    # abutting footprints computed by different float paths may miss by an ulp
    return 1e-9 * max(1.0, corridor.length)


def _merge(intervals, tol=0.0):
    merged = []
    for a, b in sorted(intervals):
        if merged and a <= merged[-1][1] + tol:
            if b > merged[-1][1]:
                merged[-1][1] = b
        else:
            merged.append([a, b])
    return merged


def _gaps_for(units, corridor, mount):
    segments = []
    for u in units:
        segments.extend(elid_footprint(u, corridor, mount).visible_segments())
    tol = _tol(corridor)
    gaps = []
    cur = 0.0
    for a, b in _merge(segments, tol):
        if a > cur + tol:
            gaps.append((cur, min(a, corridor.length)))
        cur = max(cur, b)
        if cur >= corridor.length - tol:
            break
    if cur < corridor.length - tol:
        gaps.append((cur, corridor.length))
    return tuple(gaps)


def coverage_gaps(plan: PlacementPlan, corridor: RoadCorridor):
    """Uncovered stretches of [0, length], sorted."""
    return list(_gaps_for(plan.units, corridor, plan.mount))


def _make_plan(units, corridor, mount, margin=0.0):
    units = tuple(sorted(units, key=lambda u: u.position))
    return PlacementPlan(units, _gaps_for(units, corridor, mount), margin, mount)


def corridor_elevation(spec: LidarSpec, corridor: RoadCorridor) -> float:
    return required_elevation(spec, road_width(corridor))


def uniform_plan(spec: LidarSpec, corridor: RoadCorridor, mount: MountModel = NADIR,
                 margin: float = 0.0) -> PlacementPlan:
    """Equally spaced masts, centred on the corridor.

    Consecutive footprints overlap by at least ``margin``. With a blind
    zone under the mast the pitch is additionally capped at
    ``reach - blind`` so that each mast's blind spot is seen by its
    neighbours.
    """
    elevation = corridor_elevation(spec, corridor)
    cover = total_coverage(spec, elevation, mount)
    if margin < 0 or cover <= margin:
        raise GeometryError(
            f"coverage {cover:.2f} m must exceed redundancy margin {margin} m"
        )
    reach = along_road_coverage(spec, elevation, mount)
    blind = blind_zone(spec, elevation, mount)
    pitch = cover - margin
    min_units = 1
    if blind > 0:
        if reach < 3 * blind:
            raise GeometryError(
                "blind zone too wide for uniform tiling; use greedy_site_cover"
            )
        pitch = min(pitch, reach - blind)
        min_units = 2
    L = corridor.length
    n = max(min_units, math.ceil((L - 2 * reach) / pitch) + 1 if L > 2 * reach else 1)
    first = L / 2 - (n - 1) * pitch / 2
    positions = [min(L, max(0.0, first + k * pitch)) for k in range(n)]
    units = [ElidUnit(spec, p, elevation) for p in positions]
    return _make_plan(units, corridor, mount, margin)


def _site_footprints(spec, corridor, mount, sites):
    elevation = corridor_elevation(spec, corridor)
    out = []
    for s in sorted(set(float(x) for x in sites)):
        unit = ElidUnit(spec, s, elevation)
        out.append((unit, elid_footprint(unit, corridor, mount).visible_segments()))
    return out


def greedy_site_cover(spec: LidarSpec, corridor: RoadCorridor, mount: MountModel = NADIR,
                      sites=None) -> PlacementPlan:
    """Sweep-line interval cover over candidate sites.

    At the leftmost uncovered point pick the site whose footprint reaches
    furthest right; ties go to the smaller position. Where no site covers
    the point the sweep jumps to the next footprint start and the skipped
    stretch shows up in ``gaps``. Minimal for blind-zone-free footprints.
    """
    if sites is None:
        sites = corridor.candidate_sites
    cands = _site_footprints(spec, corridor, mount, sites)
    chosen = []
    p = 0.0
    L = corridor.length
    tol = _tol(corridor)
    while p < L - tol:
        best = None
        best_end = p
        for unit, segs in cands:
            for a, b in segs:
                if a <= p + tol and p < b and b > best_end:
                    best, best_end = unit, b
        if best is None:
            starts = [a for _, segs in cands for a, _ in segs if a > p]
            if not starts:
                break
            p = min(starts)
            continue
        chosen.append(best)
        # other segments of already-chosen masts may extend the covered run
        covered = _merge((s for u, segs in cands if u in chosen for s in segs), tol)
        for a, b in covered:
            if a <= best_end + tol and best_end <= b:
                best_end = b
        p = best_end
    return _make_plan(chosen, corridor, mount)


def brute_force_cover(spec: LidarSpec, corridor: RoadCorridor, mount: MountModel = NADIR,
                      sites=None) -> PlacementPlan:
    """Exhaustive minimum-cardinality cover; the test oracle for the sweep.

    Among equal-size covers the lexicographically smallest position list
    wins. If no subset covers the corridor the plan uses every site and
    reports its gaps.
    """
    if sites is None:
        sites = corridor.candidate_sites
    uniq = sorted(set(float(x) for x in sites))
    if len(uniq) > MAX_BRUTE_FORCE_SITES:
        raise ValueError(
            f"brute force limited to {MAX_BRUTE_FORCE_SITES} sites, got {len(uniq)}"
        )
    cands = _site_footprints(spec, corridor, mount, uniq)
    units = [u for u, _ in cands]
    for k in range(1, len(units) + 1):
        for combo in itertools.combinations(units, k):
            if not _gaps_for(combo, corridor, mount):
                return _make_plan(combo, corridor, mount)
    return _make_plan(units, corridor, mount)
