"""Discrete-event simulation of the sense -> backhaul -> decide -> downlink loop.

Each mast captures a frame every ``1/frame_rate`` seconds (all masts share
one clock). A frame is serialised store-and-forward on the mast's
dedicated access link, propagates over the trunk, is processed at the
central location (a pure delay unless ``cl_servers`` bounds the number of
parallel processors, in which case frames wait FIFO), and a decision message
goes back down (trunk propagation + decision serialisation + fixed
downlink latency).

At every capture tick every vehicle on the corridor is classified as
observed, or unobserved because of a coverage gap, a blind zone, or an
occlusion shadow cast by a taller vehicle between it and the mast.

Randomness comes from one ``numpy.random.Generator`` backed by PCG64
(128-bit state), seeded with ``rng_seed``. Draw order is fixed:

1. arrivals (initial fill positions in density mode, then inter-arrival gaps)
2. one speed per vehicle
3. one height class per vehicle
4. one processing time per frame (only when processing is a band)
5. one world-event offset per frame (sensing wait)
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .geometry import elid_footprint
from .model import RoadCorridor
from .netplan import NetworkPlan, propagation_delay
from .placement import PlacementPlan

CAUSES = ("gap", "blind_zone", "occluded")
STAGES = ("sensing_wait", "serialization", "uplink_propagation", "queueing",
          "processing", "downlink")


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class HeightClass:
    name: str
    height: float  # m
    length: float  # m
    probability: float


DEFAULT_CLASSES = (
    HeightClass("car", 1.5, 4.5, 0.9),
    HeightClass("truck", 4.0, 12.0, 0.1),
)


@dataclass(frozen=True)
class Vehicle:
    vehicle_id: int
    arrival_time: float  # s
    position: float  # front bumper at arrival_time, m
    speed: float  # m/s
    height: float
    length: float


@dataclass(frozen=True)
class TrafficModel:
    """Either a Poisson arrival rate, a fixed density, or explicit vehicles.

    In density mode the corridor starts filled (Poisson count, uniform
    positions) and is fed at ``density * mean_speed`` so the density holds
    in expectation. Explicit vehicles bypass the generator entirely.
    """

    arrival_rate: float | None = 0.5  # vehicles/s
    density: float | None = None  # vehicles/km
    speed_min: float = 10.0
    speed_max: float = 20.0
    classes: tuple = DEFAULT_CLASSES
    vehicles: tuple = ()

    def __post_init__(self):
        if self.speed_min < 0 or self.speed_max < self.speed_min:
            raise SimulationError("need 0 <= speed_min <= speed_max")
        if self.arrival_rate is not None and self.arrival_rate < 0:
            raise SimulationError("arrival_rate must be >= 0")
        if self.density is not None and self.density < 0:
            raise SimulationError("density must be >= 0")
        if self.classes:
            total = sum(c.probability for c in self.classes)
            if not math.isclose(total, 1.0, rel_tol=1e-9):
                raise SimulationError(f"class probabilities sum to {total}, not 1")

    @classmethod
    def empty(cls):
        return cls(arrival_rate=0.0)

    @classmethod
    def explicit(cls, vehicles):
        return cls(arrival_rate=0.0, vehicles=tuple(vehicles))


@dataclass(frozen=True)
class SimConfig:
    corridor: RoadCorridor
    plan: PlacementPlan
    net: NetworkPlan
    rng_seed: int
    traffic: TrafficModel = field(default_factory=TrafficModel)
    frame_rate: float | None = None  # Hz; None -> the sensor's own rate
    processing_delay: float | tuple = 30.0  # ms, fixed or (lo, hi)
    access_link_capacity: float = 1e9  # bit/s; inf means no serialisation
    sim_duration: float = 600.0  # s
    decision_bits: float = 10_000.0
    cl_servers: int | None = None  # None -> unlimited (pure delay stage)
    cl_queue_limit: int | None = None  # waiting frames; overflow drops oldest
    allow_gaps: bool = False

    def __post_init__(self):
        if not isinstance(self.rng_seed, (int, np.integer)) or isinstance(self.rng_seed, bool):
            raise SimulationError("rng_seed must be an integer")
        if not self.plan.units:
            raise SimulationError("plan has no units")
        if self.frame_rate is not None and not self.frame_rate > 0:
            raise SimulationError("frame_rate must be > 0")
        if not self.sim_duration > 0:
            raise SimulationError("sim_duration must be > 0")
        if not self.access_link_capacity > 0:
            raise SimulationError("access_link_capacity must be > 0")
        if self.decision_bits < 0:
            raise SimulationError("decision_bits must be >= 0")
        lo, hi = self.processing_band
        if lo < 0 or hi < lo:
            raise SimulationError("processing delay band must satisfy 0 <= lo <= hi")
        if self.cl_servers is not None and self.cl_servers < 1:
            raise SimulationError("cl_servers must be >= 1")
        if self.cl_queue_limit is not None and self.cl_queue_limit < 0:
            raise SimulationError("cl_queue_limit must be >= 0")
        if self.net.elid_distances and len(self.net.elid_distances) != len(self.plan.units):
            raise SimulationError("one fibre distance per mast required")

    @property
    def spec(self):
        return self.plan.units[0].spec

    @property
    def effective_frame_rate(self):
        return self.frame_rate if self.frame_rate is not None else self.spec.frame_rate

    @property
    def frame_bits(self):
        return self.spec.output_rate / self.effective_frame_rate

    @property
    def processing_band(self):
        if isinstance(self.processing_delay, (tuple, list)):
            lo, hi = self.processing_delay
            return float(lo), float(hi)
        return float(self.processing_delay), float(self.processing_delay)


class Event(NamedTuple):
    time: float
    seq: int
    kind: str
    elid: int
    frame: int
    data: tuple


@dataclass(frozen=True, slots=True)
class FrameRecord:
    frame_id: int
    elid_id: int
    event_time: float
    capture_time: float
    size: float
    serialize_start: float | None = None
    serialize_done: float | None = None
    arrive_cl: float | None = None
    process_start: float | None = None
    decision_done: float | None = None
    downlink_done: float | None = None
    dropped: str | None = None

    @property
    def delivered(self):
        return self.downlink_done is not None

    def stages(self):
        """Per-stage seconds; they telescope to downlink_done - event_time."""
        return {
            "sensing_wait": self.capture_time - self.event_time,
            "serialization": self.serialize_done - self.capture_time,
            "uplink_propagation": self.arrive_cl - self.serialize_done,
            "queueing": self.process_start - self.arrive_cl,
            "processing": self.decision_done - self.process_start,
            "downlink": self.downlink_done - self.decision_done,
        }

    @property
    def reaction(self):
        return self.downlink_done - self.event_time


class VisibilityRecord(NamedTuple):
    time: float
    vehicle_id: int
    position: float
    observed: bool
    cause: str | None


@dataclass(frozen=True)
class SimTrace:
    config: SimConfig
    events: tuple
    frames: tuple
    visibility: tuple
    summary: dict


def _tick_count(duration, rate):
    n = max(0, math.ceil(duration * rate))
    while n > 0 and (n - 1) / rate >= duration:
        n -= 1
    while n / rate < duration:
        n += 1
    return n


def _draw_vehicles(traffic: TrafficModel, corridor: RoadCorridor, duration, rng):
    if traffic.vehicles:
        return list(traffic.vehicles)
    fronts, times = [], []
    mean_speed = 0.5 * (traffic.speed_min + traffic.speed_max)
    if traffic.density is not None:
        n0 = int(rng.poisson(traffic.density * corridor.length / 1000.0))
        fronts.extend(np.sort(rng.uniform(0.0, corridor.length, n0)).tolist())
        times.extend([0.0] * n0)
        rate = traffic.density * mean_speed / 1000.0
    else:
        rate = traffic.arrival_rate or 0.0
    if rate > 0:
        t = 0.0
        while True:
            t += float(rng.exponential(1.0 / rate))
            if t >= duration:
                break
            times.append(t)
            fronts.append(0.0)
    n = len(times)
    speeds = rng.uniform(traffic.speed_min, traffic.speed_max, n)
    probs = np.array([c.probability for c in traffic.classes])
    kinds = rng.choice(len(traffic.classes), size=n, p=probs) if n else np.zeros(0, int)
    out = []
    for i in range(n):
        c = traffic.classes[int(kinds[i])]
        out.append(Vehicle(i, times[i], fronts[i], float(speeds[i]), c.height, c.length))
    return out


class _Queue:
    """Event list ordered by (time, sequence number)."""

    def __init__(self):
        self._heap = []
        self._seq = 0

    def push(self, time, kind, elid=-1, frame=-1):
        heapq.heappush(self._heap, (time, self._seq, kind, elid, frame))
        self._seq += 1

    def pop(self):
        return heapq.heappop(self._heap)

    def __bool__(self):
        return bool(self._heap)


class _Observer:
    """Vectorised per-tick visibility classification."""

    def __init__(self, vehicles, corridor, plan):
        self.L = corridor.length
        self.ids = np.array([v.vehicle_id for v in vehicles], dtype=np.int64)
        self.t0 = np.array([v.arrival_time for v in vehicles], dtype=float)
        self.x0 = np.array([v.position for v in vehicles], dtype=float)
        self.v = np.array([v.speed for v in vehicles], dtype=float)
        self.h = np.array([v.height for v in vehicles], dtype=float)
        self.len = np.array([v.length for v in vehicles], dtype=float)
        self.units = []
        for u in plan.units:
            fp = elid_footprint(u, corridor, plan.mount)
            self.units.append((u.position, u.elevation, fp.start, fp.end, fp.blind_intervals))

    def classify(self, t):
        if self.ids.size == 0:
            return []
        active = self.t0 <= t
        front = self.x0 + self.v * (t - self.t0)
        center = front - self.len / 2
        idx = np.nonzero(active & (center >= 0) & (center <= self.L))[0]
        if idx.size == 0:
            return []
        c, fr, h = center[idx], front[idx], self.h[idx]
        rear = fr - self.len[idx]
        n = idx.size
        observed = np.zeros(n, bool)
        occluded = np.zeros(n, bool)
        blinded = np.zeros(n, bool)
        taller = h[:, None] > h[None, :]  # [occluder, target]
        for p, E, start, end, blinds in self.units:
            inside = (c >= start) & (c <= end)
            blind = np.zeros(n, bool)
            for b0, b1 in blinds:
                blind |= (c > b0) & (c < b1)
            k = h / (E - h)
            # shadows beyond the far edge, on either side of the mast
            r_end = fr + (fr - p) * k
            right = ((fr > p)[:, None] & (c[None, :] > fr[:, None])
                     & (c[None, :] <= r_end[:, None]) & (c > p)[None, :])
            l_end = rear - (p - rear) * k
            left = ((rear < p)[:, None] & (c[None, :] < rear[:, None])
                    & (c[None, :] >= l_end[:, None]) & (c < p)[None, :])
            shadowed = ((right | left) & taller).any(axis=0)
            visible = inside & ~blind
            observed |= visible & ~shadowed
            occluded |= visible & shadowed
            blinded |= inside & blind
        recs = []
        ids = self.ids[idx]
        for j in range(n):
            if observed[j]:
                cause = None
            elif occluded[j]:
                cause = "occluded"
            elif blinded[j]:
                cause = "blind_zone"
            else:
                cause = "gap"
            recs.append(VisibilityRecord(t, int(ids[j]), float(c[j]), bool(observed[j]), cause))
        return recs


def run_sim(config: SimConfig) -> SimTrace:
    plan, corridor, net = config.plan, config.corridor, config.net
    if plan.gaps and not config.allow_gaps:
        raise SimulationError(f"plan leaves coverage gaps {list(plan.gaps)}; set allow_gaps")
    rng = np.random.Generator(np.random.PCG64(config.rng_seed))
    vehicles = _draw_vehicles(config.traffic, corridor, config.sim_duration, rng)
    min_elev = min(u.elevation for u in plan.units)
    for v in vehicles:
        if v.height >= min_elev:
            raise SimulationError(
                f"vehicle {v.vehicle_id} height {v.height} m >= mast elevation {min_elev:.2f} m"
            )

    rate = config.effective_frame_rate
    period = 1.0 / rate
    n_elid = len(plan.units)
    n_ticks = _tick_count(config.sim_duration, rate)
    n_frames = n_ticks * n_elid
    lo, hi = config.processing_band
    if hi > lo:
        proc = rng.uniform(lo, hi, n_frames) / 1000.0
    else:
        proc = np.full(n_frames, lo / 1000.0)
    offsets = rng.uniform(0.0, period, n_frames)

    size = config.frame_bits
    cap = config.access_link_capacity
    ser = size / cap
    dec_ser = config.decision_bits / cap
    prop = [propagation_delay(net.trunk, net.distance(i)) / 1000.0 for i in range(n_elid)]
    downlink_fixed = net.downlink_latency / 1000.0
    servers = config.cl_servers if config.cl_servers is not None else math.inf

    observer = _Observer(vehicles, corridor, plan)
    frames = [None] * n_frames
    events = []
    visibility = []
    link_free = [0.0] * n_elid
    busy = 0
    waiting = deque()
    q = _Queue()
    if n_ticks:
        q.push(0.0, "tick", frame=0)

    def log(t, _qseq, kind, elid, fid, data=()):
        events.append(Event(t, len(events), kind, elid, fid, data))

    def start_processing(t, fid):
        nonlocal busy
        busy += 1
        frames[fid]["process_start"] = t
        q.push(t + float(proc[fid]), "decision_done", frames[fid]["elid_id"], fid)

    while q:
        t, seq, kind, elid, fid = q.pop()
        if kind == "tick":
            k = fid
            for i in range(n_elid):
                f = k * n_elid + i
                start = max(t, link_free[i])
                done = start + ser
                link_free[i] = done
                frames[f] = {
                    "frame_id": f, "elid_id": i, "event_time": t - float(offsets[f]),
                    "capture_time": t, "size": size, "serialize_start": start,
                }
                log(t, seq, "capture", i, f, (size, frames[f]["event_time"], start))
                q.push(done, "serialize_done", i, f)
            recs = observer.classify(t)
            visibility.extend(recs)
            log(t, seq, "observe", -1, k, tuple(recs))
            if (k + 1) / rate < config.sim_duration:
                q.push((k + 1) / rate, "tick", frame=k + 1)
        elif kind == "serialize_done":
            frames[fid]["serialize_done"] = t
            log(t, seq, kind, elid, fid)
            q.push(t + prop[elid], "arrive_cl", elid, fid)
        elif kind == "arrive_cl":
            frames[fid]["arrive_cl"] = t
            log(t, seq, kind, elid, fid)
            if busy < servers:
                log(t, seq, "process_start", elid, fid)
                start_processing(t, fid)
            else:
                waiting.append(fid)
                if config.cl_queue_limit is not None and len(waiting) > config.cl_queue_limit:
                    old = waiting.popleft()
                    frames[old]["dropped"] = "cl_queue_overflow"
                    log(t, seq, "drop", frames[old]["elid_id"], old, ("cl_queue_overflow",))
        elif kind == "decision_done":
            frames[fid]["decision_done"] = t
            busy -= 1
            log(t, seq, kind, elid, fid)
            q.push(t + prop[elid] + dec_ser + downlink_fixed, "downlink_done", elid, fid)
            if waiting:
                nxt = waiting.popleft()
                log(t, seq, "process_start", frames[nxt]["elid_id"], nxt)
                start_processing(t, nxt)
        elif kind == "downlink_done":
            frames[fid]["downlink_done"] = t
            log(t, seq, kind, elid, fid)

    frame_recs = tuple(FrameRecord(**f) for f in frames)
    summary = summarize(frame_recs, visibility, n_elid, config.sim_duration, cap,
                        config.decision_bits)
    return SimTrace(config, tuple(events), frame_recs, tuple(visibility), summary)


def _stats_ms(values):
    if len(values) == 0:
        return {"count": 0, "mean": 0.0, "p50": 0.0, "p95": 0.0, "p99": 0.0, "max": 0.0, "min": 0.0}
    a = np.asarray(values) * 1000.0
    p50, p95, p99 = np.percentile(a, [50, 95, 99])
    return {
        "count": int(a.size), "mean": float(a.mean()), "p50": float(p50),
        "p95": float(p95), "p99": float(p99), "max": float(a.max()), "min": float(a.min()),
    }


def _mean_in_service(frames, horizon):
    edges = []
    for f in frames:
        if f.process_start is not None:
            edges.append((f.process_start, 1))
            edges.append((f.decision_done, -1))
    edges.sort()
    area, level, last = 0.0, 0, 0.0
    for t, d in edges:
        area += level * (t - last)
        level += d
        last = t
    return area / horizon if horizon > 0 else 0.0


def summarize(frames, visibility, n_elid, duration, capacity, decision_bits):
    """Summary statistics; a pure function of the records."""
    delivered = [f for f in frames if f.delivered]
    dropped = [f for f in frames if f.dropped]
    per_elid = []
    for i in range(n_elid):
        mine = [f for f in frames if f.elid_id == i]
        bits = sum(f.size for f in mine if f.serialize_done is not None)
        busy = sum(f.serialize_done - f.serialize_start for f in mine if f.serialize_done is not None)
        dec = sum(1 for f in mine if f.delivered) * decision_bits
        per_elid.append({
            "elid": i,
            "captured": len(mine),
            "delivered": sum(1 for f in mine if f.delivered),
            "dropped": sum(1 for f in mine if f.dropped),
            "uplink_bps": bits / duration,
            "uplink_utilization": busy / duration,
            "downlink_bps": dec / duration,
        })
    stages = {s: 0.0 for s in STAGES}
    if delivered:
        for s in STAGES:
            stages[s] = float(np.mean([f.stages()[s] for f in delivered])) * 1000.0
    causes = {c: 0 for c in CAUSES}
    for r in visibility:
        if not r.observed:
            causes[r.cause] += 1
    n_vis = len(visibility)
    horizon = max((f.downlink_done for f in delivered), default=0.0)
    horizon = max(horizon, duration)
    arrivals = sum(1 for f in frames if f.arrive_cl is not None)
    processed = [f.decision_done - f.process_start for f in frames if f.decision_done is not None]
    return {
        "frames": {"captured": len(frames), "delivered": len(delivered), "dropped": len(dropped)},
        "reaction_ms": _stats_ms([f.reaction for f in delivered]),
        "stage_mean_ms": stages,
        "visibility": {
            "vehicle_frames": n_vis,
            "observed": n_vis - sum(causes.values()),
            "unobserved": causes,
            "unobserved_fraction": {c: (causes[c] / n_vis if n_vis else 0.0) for c in CAUSES},
        },
        "links": {
            "elids": per_elid,
            "trunk_uplink_bps": sum(e["uplink_bps"] for e in per_elid),
            "trunk_downlink_bps": sum(e["downlink_bps"] for e in per_elid),
        },
        "central": {
            "horizon_s": horizon,
            "arrival_rate_hz": arrivals / horizon if horizon else 0.0,
            "mean_processing_ms": float(np.mean(processed)) * 1000.0 if processed else 0.0,
            "mean_in_service": _mean_in_service(frames, horizon),
        },
    }


def replay(trace: SimTrace):
    """Rebuild frame and visibility records from the event log alone."""
    frames = {}
    visibility = []
    for ev in trace.events:
        if ev.kind == "observe":
            visibility.extend(ev.data)
            continue
        if ev.kind == "capture":
            size, event_time, start = ev.data
            frames[ev.frame] = {"frame_id": ev.frame, "elid_id": ev.elid, "event_time": event_time,
                                "capture_time": ev.time, "size": size, "serialize_start": start}
        elif ev.kind == "drop":
            frames[ev.frame]["dropped"] = ev.data[0]
        else:
            frames[ev.frame][ev.kind] = ev.time
    recs = tuple(FrameRecord(**frames[k]) for k in sorted(frames))
    return recs, tuple(visibility)


def replay_summary(trace: SimTrace):
    cfg = trace.config
    frames, visibility = replay(trace)
    return summarize(frames, visibility, len(cfg.plan.units), cfg.sim_duration,
                     cfg.access_link_capacity, cfg.decision_bits)


def expected_mean_reaction(config: SimConfig) -> float:
    """Closed-form mean reaction (ms) assuming no queueing anywhere."""
    net = config.net
    lo, hi = config.processing_band
    n = len(config.plan.units)
    prop = np.mean([propagation_delay(net.trunk, net.distance(i)) for i in range(n)])
    cap = config.access_link_capacity
    return float(500.0 / config.effective_frame_rate
                 + 1000.0 * config.frame_bits / cap
                 + 2 * prop
                 + 0.5 * (lo + hi)
                 + 1000.0 * config.decision_bits / cap
                 + net.downlink_latency)


def latency_report(trace: SimTrace, budget_ms=100.0, human_band=(100.0, 150.0)):
    """Per-stage decomposition and pass/fail flags against the budgets."""
    delivered = [f for f in trace.frames if f.delivered]
    if not trace.frames:
        raise SimulationError("empty trace")
    worst_sum_error = 0.0
    for f in delivered:
        worst_sum_error = max(worst_sum_error, abs(sum(f.stages().values()) - f.reaction))
    s = trace.summary
    reaction = s["reaction_ms"]
    expected = expected_mean_reaction(trace.config)
    proc = s["stage_mean_ms"]["processing"]
    return {
        "stage_mean_ms": dict(s["stage_mean_ms"]),
        "reaction_ms": dict(reaction),
        "stage_sum_max_error_s": worst_sum_error,
        "closed_form_mean_ms": expected,
        "closed_form_deviation_ms": reaction["mean"] - expected,
        "budget_ms": budget_ms,
        "human_band_ms": list(human_band),
        "mean_within_budget": reaction["mean"] < budget_ms,
        "worst_within_human_band": reaction["max"] < human_band[1],
        "processing_within_budget": proc < budget_ms,
        "pass": reaction["mean"] < budget_ms and reaction["max"] < human_band[1],
    }


def visibility_report(trace: SimTrace, bin_size=0.1):
    """Unobserved fractions by cause plus an occlusion heat strip along the road."""
    length = trace.config.corridor.length
    nbins = max(1, int(math.ceil(length / bin_size - 1e-9)))
    counts = np.zeros(nbins, dtype=np.int64)
    occl = np.zeros(nbins, dtype=np.int64)
    for r in trace.visibility:
        b = min(nbins - 1, int(r.position / bin_size))
        counts[b] += 1
        if r.cause == "occluded":
            occl[b] += 1
    freq = np.divide(occl, counts, out=np.zeros(nbins), where=counts > 0)
    vis = trace.summary["visibility"]
    return {
        "vehicle_frames": vis["vehicle_frames"],
        "unobserved_fraction": dict(vis["unobserved_fraction"]),
        "unobserved_total_fraction": (sum(vis["unobserved"].values()) / vis["vehicle_frames"]
                                      if vis["vehicle_frames"] else 0.0),
        "bin_size_m": bin_size,
        "strip_counts": counts,
        "strip_occluded": occl,
        "strip_frequency": freq,
    }
