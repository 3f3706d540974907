"""Backhaul arithmetic for a star of masts feeding one central location.

Distances are in km and delays in ms here, matching how fibre budgets are
usually quoted; everything else stays SI.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import _check_finite, _check_nonnegative, _check_positive

DEFAULT_SPEED_KM_PER_MS = 204.0
SPEED_BAND = (190.0, 210.0)
UTILIZATION_WARN = 0.8

DECIMAL_UNITS = {"kB": 1e3, "MB": 1e6, "GB": 1e9, "TB": 1e12}


@dataclass(frozen=True)
class FiberLink:
    length: float  # km
    capacity: float  # bit/s
    propagation_speed: float = DEFAULT_SPEED_KM_PER_MS  # km/ms

    def __post_init__(self):
        _check_positive("length", self.length)
        _check_positive("capacity", self.capacity)
        _check_finite("propagation_speed", self.propagation_speed)
        lo, hi = SPEED_BAND
        if not lo <= self.propagation_speed <= hi:
            raise ValueError(
                f"propagation_speed {self.propagation_speed} km/ms outside [{lo}, {hi}]"
            )


@dataclass(frozen=True)
class NetworkPlan:
    """Trunk to the central location plus per-mast fibre distances."""

    trunk: FiberLink
    elid_distances: tuple = field(default_factory=tuple)  # km, one per mast
    processing_budget: float = 100.0  # ms
    downlink_latency: float = 1.0  # ms

    def __post_init__(self):
        dists = tuple(float(d) for d in self.elid_distances)
        for d in dists:
            _check_nonnegative("elid distance", d)
            if d > self.trunk.length:
                raise ValueError(f"elid distance {d} km exceeds trunk length {self.trunk.length} km")
        object.__setattr__(self, "elid_distances", dists)
        _check_nonnegative("processing_budget", self.processing_budget)
        _check_nonnegative("downlink_latency", self.downlink_latency)

    @classmethod
    def uniform(cls, n_elids, distance_km=100.0, trunk_capacity=100e9,
                speed=DEFAULT_SPEED_KM_PER_MS, **kw):
        trunk = FiberLink(max(distance_km, 1e-9), trunk_capacity, speed)
        return cls(trunk, (distance_km,) * n_elids, **kw)

    def distance(self, i):
        return self.elid_distances[i] if self.elid_distances else self.trunk.length


def propagation_delay(link: FiberLink, distance: float) -> float:
    """One-way delay in ms over ``distance`` km of ``link``."""
    if distance < 0 or distance > link.length:
        raise ValueError(f"distance {distance} km outside [0, {link.length}] km")
    return distance / link.propagation_speed


def aggregate_throughput(density: float, corridor_km: float, per_sensor_rate: float) -> float:
    """Total bit/s arriving at the central location."""
    return density * corridor_km * per_sensor_rate


def max_corridor_for_budget(link: FiberLink, delay_budget: float) -> float:
    """Longest fibre run (km) whose one-way delay fits ``delay_budget`` ms."""
    if delay_budget < 0:
        raise ValueError("delay budget must be >= 0")
    return min(link.length, delay_budget * link.propagation_speed)


def data_volume(rate: float, duration: float) -> float:
    """Bytes produced at ``rate`` bit/s over ``duration`` s."""
    if rate < 0 or duration < 0:
        raise ValueError("rate and duration must be >= 0")
    return rate * duration / 8


def redundancy_factor(vehicles_per_km: float, sensors_per_km: float) -> float:
    """Per-vehicle mapping pipelines replaced by one infrastructure sensor."""
    if sensors_per_km <= 0:
        raise ValueError("sensors_per_km must be > 0")
    return vehicles_per_km / sensors_per_km


def utilization_status(load: float, capacity: float):
    """Return (utilization, status) with status in ok / warning / infeasible."""
    u = load / capacity
    if u > 1.0:
        return u, "infeasible"
    if u > UTILIZATION_WARN:
        return u, "warning"
    return u, "ok"


def format_bytes(n: float) -> str:
    for unit in ("TB", "GB", "MB", "kB"):
        if n >= DECIMAL_UNITS[unit]:
            return f"{n / DECIMAL_UNITS[unit]:.3f} {unit}"
    return f"{n:.0f} B"


def backhaul_budget(*, density, corridor_km, per_sensor_rate, trunk: FiberLink,
                    delay_budget=1.0, vehicles_per_km=200.0, storage_seconds=86400.0):
    """Everything the netbudget report shows, as a plain dict."""
    agg = aggregate_throughput(density, corridor_km, per_sensor_rate)
    util, status = utilization_status(agg, trunk.capacity)
    one_way = propagation_delay(trunk, min(corridor_km, trunk.length))
    return {
        "density_per_km": density,
        "corridor_km": corridor_km,
        "per_sensor_rate_bps": per_sensor_rate,
        "aggregate_bps": agg,
        "trunk_capacity_bps": trunk.capacity,
        "trunk_utilization": util,
        "trunk_status": status,
        "propagation_speed_km_per_ms": trunk.propagation_speed,
        "one_way_delay_ms": one_way,
        "round_trip_delay_ms": 2 * one_way,
        "delay_budget_ms": delay_budget,
        "one_way_within_budget": one_way <= delay_budget,
        "round_trip_within_budget": 2 * one_way <= delay_budget,
        "max_corridor_km_for_budget": max_corridor_for_budget(trunk, delay_budget),
        "reach_km_for_budget": delay_budget * trunk.propagation_speed,
        "storage_bytes": data_volume(agg, storage_seconds),
        "storage_seconds": storage_seconds,
        "vehicles_per_km": vehicles_per_km,
        "redundancy_factor": redundancy_factor(vehicles_per_km, density),
    }
