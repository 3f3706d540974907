"""Mounting geometry: elevation, along-road reach, footprints, shadows, density.

Side-view convention: the mast stands at ``position`` on a 1-D corridor,
the sensor sits ``elevation`` metres above the road. A staring sensor is
turned so its horizontal FoV sweeps along the road and its vertical FoV
spans the road width.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import ElidUnit, LidarSpec, RoadCorridor, _check_finite


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class MountModel:
    """Tilt of the along-road FoV.

    ``tilt=None`` is the nadir-aligned default: the lower FoV edge points
    straight down, so coverage starts at the mast. A number is the angle
    (degrees) between nadir and the lower FoV edge.
    """

    tilt: float | None = None

    def __post_init__(self):
        if self.tilt is not None:
            _check_finite("tilt", self.tilt)
            if not 0 <= self.tilt < 90:
                raise ValueError(f"tilt must be in [0, 90), got {self.tilt}")

    @classmethod
    def nadir_aligned(cls):
        return cls(None)

    @classmethod
    def explicit(cls, tilt):
        return cls(float(tilt))

    @property
    def tilt_rad(self):
        return 0.0 if self.tilt is None else math.radians(self.tilt)

    @property
    def policy(self):
        return "NadirAlignedEdge" if self.tilt is None else "ExplicitTilt"


NADIR = MountModel()


@dataclass(frozen=True)
class Footprint:
    unit: ElidUnit
    covered_interval: tuple
    blind_intervals: tuple
    coverage_length: float

    @property
    def start(self):
        return self.covered_interval[0]

    @property
    def end(self):
        return self.covered_interval[1]

    def visible_segments(self):
        """Covered interval minus blind intervals, as sorted (start, end) pairs."""
        out = []
        cur = self.start
        for b0, b1 in self.blind_intervals:
            if b0 > cur:
                out.append((cur, b0))
            cur = max(cur, b1)
        if self.end > cur:
            out.append((cur, self.end))
        return out

    def covers(self, x):
        if not self.start <= x <= self.end:
            return False
        return not any(b0 < x < b1 for b0, b1 in self.blind_intervals)


def required_elevation(spec: LidarSpec, width: float) -> float:
    """Height at which a downward-pointing vertical FoV spans ``width``."""
    if width <= 0:
        raise GeometryError(f"road width must be > 0, got {width}")
    h = width / (2.0 * math.tan(spec.vfov_rad / 2.0))
    if h >= spec.max_range:
        raise GeometryError(
            f"{spec.name}: required elevation {h:.2f} m reaches or exceeds "
            f"range {spec.max_range} m"
        )
    return h


def ground_reach(range_m: float, elevation: float) -> float:
    if elevation < 0:
        raise GeometryError(f"elevation must be >= 0, got {elevation}")
    if elevation > range_m:
        raise GeometryError(f"elevation {elevation} exceeds range {range_m}")
    return math.sqrt(range_m * range_m - elevation * elevation)


def blind_zone(spec: LidarSpec, elevation: float, mount: MountModel = NADIR) -> float:
    """Ground distance from the mast to the first visible point, per direction.

    Rotating sensors are treated like the elevation formula treats them
    (vertical FoV mapped downward), so their lower edge reaches nadir.
    """
    if spec.rotating:
        return 0.0
    return elevation * math.tan(mount.tilt_rad)


def along_road_coverage(spec: LidarSpec, elevation: float, mount: MountModel = NADIR) -> float:
    """Far edge of coverage, measured from the mast, for one direction."""
    if elevation >= spec.max_range:
        raise GeometryError(
            f"elevation {elevation} is not below range {spec.max_range}"
        )
    reach = ground_reach(spec.max_range, elevation)
    if spec.rotating:
        return reach
    lower = mount.tilt_rad
    upper = lower + spec.hfov_rad
    if upper <= 0:
        raise GeometryError("upper FoV edge is at or above nadir")
    if upper < math.pi / 2:
        reach = min(reach, elevation * math.tan(upper))
    if reach <= blind_zone(spec, elevation, mount):
        raise GeometryError(
            f"{spec.name}: nothing visible at elevation {elevation:.2f} m "
            f"with tilt {mount.tilt}"
        )
    return reach


def total_coverage(spec: LidarSpec, elevation: float, mount: MountModel = NADIR) -> float:
    """Visible road length of one mast, both directions, before clamping."""
    reach = along_road_coverage(spec, elevation, mount)
    return 2.0 * (reach - blind_zone(spec, elevation, mount))


def elid_footprint(unit: ElidUnit, corridor: RoadCorridor, mount: MountModel = NADIR) -> Footprint:
    if not 0 <= unit.position <= corridor.length:
        raise GeometryError(
            f"unit position {unit.position} outside [0, {corridor.length}]"
        )
    reach = along_road_coverage(unit.spec, unit.elevation, mount)
    blind = blind_zone(unit.spec, unit.elevation, mount)
    p = unit.position
    start = max(0.0, p - reach)
    end = min(corridor.length, p + reach)
    blinds = ()
    if blind > 0:
        b0, b1 = max(start, p - blind), min(end, p + blind)
        if b1 > b0:
            blinds = ((b0, b1),)
    length = (end - start) - sum(b1 - b0 for b0, b1 in blinds)
    return Footprint(unit, (start, end), blinds, length)


def occlusion_shadow(elevation: float, vehicle_height: float, vehicle_distance: float) -> float:
    """Ground shadow length behind a vehicle (similar triangles, side view).

    ``vehicle_distance`` is measured from the mast base to the vehicle's far
    edge.
    """
    if vehicle_height <= 0:
        raise GeometryError(f"vehicle height must be > 0, got {vehicle_height}")
    if vehicle_height >= elevation:
        raise GeometryError(
            f"vehicle height {vehicle_height} m is not below elevation {elevation} m"
        )
    if vehicle_distance < 0:
        raise GeometryError(f"vehicle distance must be >= 0, got {vehicle_distance}")
    return vehicle_distance * vehicle_height / (elevation - vehicle_height)


def sensor_density(spec: LidarSpec, elevation: float, mount: MountModel = NADIR) -> float:
    """Sensors per km for gap-free tiling."""
    km = total_coverage(spec, elevation, mount) / 1000.0
    if km <= 0:
        raise GeometryError("mast covers no road")
    return spec.sensors_per_elid / km
