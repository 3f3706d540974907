"""Domain types shared by the geometry, placement, network and simulation code.

Units are SI internally (m, s, bit, bit/s). Angles are accepted in degrees
and stored as full field-of-view values; use the ``*_rad`` properties for
math.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


def _check_finite(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TypeError(f"{name} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


def _check_positive(name, value):
    _check_finite(name, value)
    if value <= 0:
        raise ValueError(f"{name} must be > 0, got {value!r}")


def _check_nonnegative(name, value):
    _check_finite(name, value)
    if value < 0:
        raise ValueError(f"{name} must be >= 0, got {value!r}")


@dataclass(frozen=True)
class LidarSpec:
    """One sensor product.

    A rotating sensor scans 360 degrees and one is enough per mast; a staring
    sensor has a bounded horizontal FoV and two are mounted back to back.
    """

    name: str
    hfov: float  # degrees, full angle
    vfov: float  # degrees, full angle
    max_range: float  # m
    output_rate: float  # bit/s
    rotating: bool = False
    unit_cost: float = 0.0
    frame_rate: float = 10.0  # Hz

    def __post_init__(self):
        _check_finite("hfov", self.hfov)
        if not 0 < self.hfov <= 360:
            raise ValueError(f"hfov must be in (0, 360], got {self.hfov}")
        _check_finite("vfov", self.vfov)
        if not 0 < self.vfov < 180:
            raise ValueError(f"vfov must be in (0, 180), got {self.vfov}")
        _check_positive("max_range", self.max_range)
        _check_positive("output_rate", self.output_rate)
        _check_nonnegative("unit_cost", self.unit_cost)
        _check_positive("frame_rate", self.frame_rate)
        if not isinstance(self.rotating, bool):
            raise TypeError("rotating must be a bool")
        if self.rotating and self.hfov != 360:
            raise ValueError("a rotating sensor must have hfov == 360")

    @property
    def hfov_rad(self):
        return math.radians(self.hfov)

    @property
    def vfov_rad(self):
        return math.radians(self.vfov)

    @property
    def sensors_per_elid(self):
        return 1 if self.rotating else 2

    @property
    def frame_bits(self):
        return self.output_rate / self.frame_rate


@dataclass(frozen=True)
class RoadCorridor:
    """Straight road segment with a fixed cross-section."""

    length: float
    lanes: int = 4
    lane_width: float = 3.7
    safety_margin: float = 3.0
    candidate_sites: tuple = field(default_factory=tuple)

    def __post_init__(self):
        _check_positive("length", self.length)
        if isinstance(self.lanes, bool) or not isinstance(self.lanes, int) or self.lanes < 1:
            raise ValueError(f"lanes must be an integer >= 1, got {self.lanes!r}")
        _check_positive("lane_width", self.lane_width)
        _check_nonnegative("safety_margin", self.safety_margin)
        sites = tuple(float(s) for s in self.candidate_sites)
        for s in sites:
            _check_finite("candidate site", s)
            if not 0 <= s <= self.length:
                raise ValueError(f"candidate site {s} outside [0, {self.length}]")
        if list(sites) != sorted(sites):
            raise ValueError("candidate_sites must be sorted")
        object.__setattr__(self, "candidate_sites", sites)

    @property
    def width(self):
        return road_width(self)


@dataclass(frozen=True)
class ElidUnit:
    """A mast carrying one rotating or two staring sensors."""

    spec: LidarSpec
    position: float  # m along corridor
    elevation: float  # m above road

    def __post_init__(self):
        _check_finite("position", self.position)
        _check_positive("elevation", self.elevation)
        if self.elevation >= self.spec.max_range:
            raise ValueError(
                f"elevation {self.elevation:.3f} m is not below the sensor range "
                f"{self.spec.max_range} m"
            )

    @property
    def sensors(self):
        return self.spec.sensors_per_elid


@dataclass(frozen=True)
class VehicleSpec:
    height: float
    length: float
    speed: float = 0.0

    def __post_init__(self):
        _check_positive("height", self.height)
        _check_positive("length", self.length)
        _check_nonnegative("speed", self.speed)


def road_width(corridor: RoadCorridor) -> float:
    """Full paved width seen by the sensor: lanes plus a margin on each side."""
    return corridor.lanes * corridor.lane_width + 2 * corridor.safety_margin
