"""Domain types for the latency/bandwidth improvement plane.

Everything downstream works on one coordinate system: x is download
bandwidth in Kbps (more is better, improvement moves right) and y is
round-trip latency in ms (less is better, improvement moves down).
An improvement path is a monotone staircase on this plane built from
single-axis moves drawn from a :class:`StepSchedule`.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from enum import Enum

DEFAULT_START_LATENCY_MS = 180.0
DEFAULT_START_BANDWIDTH_KBPS = 256.0

# Relative tolerance used when checking that stored values (means, step
# sizes) are consistent with recomputed ones.
_REL_TOL = 1e-9


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= _REL_TOL * max(1.0, abs(a), abs(b))


@dataclass(frozen=True)
class NetPoint:
    """A (latency, bandwidth) coordinate on the network-performance plane."""

    latency_ms: float
    bandwidth_kbps: float

    def __post_init__(self):
        if not (self.latency_ms >= 0 and math.isfinite(self.latency_ms)):
            raise ValueError(f"latency_ms must be finite and >= 0, got {self.latency_ms}")
        if not (self.bandwidth_kbps > 0 and math.isfinite(self.bandwidth_kbps)):
            raise ValueError(f"bandwidth_kbps must be finite and > 0, got {self.bandwidth_kbps}")


@dataclass(frozen=True)
class StepSchedule:
    """Single-axis improvement steps and the bounds of the emulated plane.

    Bandwidth doubles per step until the doubling ceiling and then grows by
    a constant linear step; latency improves by a fixed decrement. The floor
    and ceiling describe the best conditions the measurement testbed can
    emulate; callers treat successors beyond them as out of bounds.
    """

    latency_step_ms: float = 10.0
    doubling_ceiling_kbps: float = 8192.0
    linear_step_kbps: float = 8192.0
    latency_floor_ms: float = 20.0
    bandwidth_ceiling_kbps: float = 307200.0

    def __post_init__(self):
        if self.latency_step_ms <= 0:
            raise ValueError("latency_step_ms must be > 0")
        if self.doubling_ceiling_kbps <= 0 or self.linear_step_kbps <= 0:
            raise ValueError("bandwidth steps must be > 0")
        if self.latency_floor_ms < 0:
            raise ValueError("latency_floor_ms must be >= 0")
        if self.doubling_ceiling_kbps > self.bandwidth_ceiling_kbps:
            raise ValueError("doubling ceiling cannot exceed the bandwidth ceiling")


def bw_successor(bw: float, schedule: StepSchedule) -> float:
    """Next bandwidth on the improvement schedule.

    Doubles below the doubling ceiling and steps linearly above it. A double
    that would overshoot the ceiling is clamped to the ceiling once, which
    keeps the schedule totally ordered for arbitrary starting bandwidths.
    The result may exceed ``bandwidth_ceiling_kbps``; callers treat such a
    candidate as out of bounds.
    """
    if bw <= 0:
        raise ValueError(f"bandwidth must be > 0, got {bw}")
    if bw < schedule.doubling_ceiling_kbps:
        return min(2.0 * bw, schedule.doubling_ceiling_kbps)
    return bw + schedule.linear_step_kbps


def lat_successor(lat: float, schedule: StepSchedule) -> float:
    """Next latency on the improvement schedule (one fixed decrement).

    May fall below ``latency_floor_ms``; callers treat such a candidate as
    out of bounds.
    """
    if lat <= 0:
        raise ValueError(f"latency must be > 0, got {lat}")
    return lat - schedule.latency_step_ms


def bandwidth_sequence(start_bw: float, schedule: StepSchedule) -> list[float]:
    """All schedule bandwidths from ``start_bw`` up to the ceiling, inclusive."""
    seq = [float(start_bw)]
    while True:
        nxt = bw_successor(seq[-1], schedule)
        if nxt > schedule.bandwidth_ceiling_kbps:
            return seq
        seq.append(nxt)


def count_bw_steps(from_bw: float, to_bw: float, schedule: StepSchedule) -> float:
    """Number of schedule steps needed to move bandwidth from one value to
    at least another. Infinite targets give ``math.inf``."""
    if math.isinf(to_bw):
        return math.inf
    steps = 0
    cur = from_bw
    while cur < to_bw:
        cur = bw_successor(cur, schedule)
        steps += 1
    return steps


def count_lat_steps(from_lat: float, to_lat: float, schedule: StepSchedule) -> float:
    """Number of latency decrements needed to reach ``to_lat`` or better."""
    steps = 0
    cur = from_lat
    while cur > to_lat:
        cur = lat_successor(cur, schedule) if cur > 0 else cur - schedule.latency_step_ms
        steps += 1
    return steps


@dataclass(frozen=True)
class PsiSample:
    """PSI measurements (lower is better) taken at one network point.

    ``mean`` is always the arithmetic mean of ``samples``; alternative
    summary statistics are computed on demand via :func:`psi_score`.
    """

    point: NetPoint
    samples: tuple[float, ...]
    mean: float

    @classmethod
    def from_samples(cls, point: NetPoint, samples) -> "PsiSample":
        samples = tuple(float(s) for s in samples)
        if not samples:
            raise ValueError("samples must be non-empty")
        return cls(point, samples, statistics.fmean(samples))

    def __post_init__(self):
        if not self.samples:
            raise ValueError("samples must be non-empty")
        for s in self.samples:
            if not (s > 0 and math.isfinite(s)):
                raise ValueError(f"PSI samples must be finite and > 0, got {s}")
        if not _close(self.mean, statistics.fmean(self.samples)):
            raise ValueError("mean is not the arithmetic mean of samples")


def psi_score(sample: PsiSample, aggregate: str = "mean") -> float:
    """Summary statistic used to compare measurements.

    The arithmetic mean is the default; a median option exists for noisy
    backends.
    """
    if aggregate == "mean":
        return sample.mean
    if aggregate == "median":
        return statistics.median(sample.samples)
    raise ValueError(f"unknown aggregate {aggregate!r} (expected 'mean' or 'median')")


@dataclass(frozen=True)
class CpiPath:
    """An ordered improvement staircase with a PSI measurement per point.

    Consecutive points differ in exactly one axis: latency strictly
    decreases by the schedule's latency step, or bandwidth strictly
    increases to the schedule successor. Latency is therefore
    non-increasing and bandwidth non-decreasing along the path.
    """

    site_id: str
    schedule: StepSchedule
    points: tuple[PsiSample, ...]

    def __post_init__(self):
        if not self.points:
            raise ValueError("a path needs at least one point")
        for i, (a, b) in enumerate(zip(self.points, self.points[1:])):
            pa, pb = a.point, b.point
            lat_changed = pa.latency_ms != pb.latency_ms
            bw_changed = pa.bandwidth_kbps != pb.bandwidth_kbps
            if lat_changed == bw_changed:
                raise ValueError(f"step {i}: exactly one axis must change per step")
            if lat_changed:
                expected = lat_successor(pa.latency_ms, self.schedule)
                if pb.latency_ms >= pa.latency_ms or not _close(pb.latency_ms, expected):
                    raise ValueError(
                        f"step {i}: latency {pa.latency_ms} -> {pb.latency_ms} "
                        f"is not one schedule step (expected {expected})"
                    )
            else:
                expected = bw_successor(pa.bandwidth_kbps, self.schedule)
                if pb.bandwidth_kbps <= pa.bandwidth_kbps or not _close(pb.bandwidth_kbps, expected):
                    raise ValueError(
                        f"step {i}: bandwidth {pa.bandwidth_kbps} -> {pb.bandwidth_kbps} "
                        f"is not one schedule step (expected {expected})"
                    )

    @property
    def start(self) -> NetPoint:
        return self.points[0].point

    @property
    def final(self) -> NetPoint:
        return self.points[-1].point


@dataclass(frozen=True)
class Envelope:
    """Axis-aligned rectangle of a network's plausible performance range."""

    provider: str
    city: str
    year: int
    lat_lo_ms: float
    lat_hi_ms: float
    bw_lo_kbps: float
    bw_hi_kbps: float

    def __post_init__(self):
        if not (0 < self.lat_lo_ms < self.lat_hi_ms):
            raise ValueError(f"need 0 < lat_lo_ms < lat_hi_ms, got [{self.lat_lo_ms}, {self.lat_hi_ms}]")
        if not (0 < self.bw_lo_kbps < self.bw_hi_kbps):
            raise ValueError(f"need 0 < bw_lo_kbps < bw_hi_kbps, got [{self.bw_lo_kbps}, {self.bw_hi_kbps}]")

    def contains(self, point: NetPoint) -> bool:
        """Closed-rectangle membership (boundaries are inclusive)."""
        return (
            self.lat_lo_ms <= point.latency_ms <= self.lat_hi_ms
            and self.bw_lo_kbps <= point.bandwidth_kbps <= self.bw_hi_kbps
        )


class CaseLabel(Enum):
    """Outcome of classifying an improvement path against an envelope.

    A and D mean the pairing is latency-limited, B and C bandwidth-limited.
    The two degenerate labels cover configurations outside the four core
    cases and are excluded from ratio statistics.
    """

    A = "A"
    B = "B"
    C = "C"
    D = "D"
    TERMINATES_INSIDE = "terminates_inside"
    BEYOND_PATH = "beyond_path"

    @property
    def is_core(self) -> bool:
        return self in (CaseLabel.A, CaseLabel.B, CaseLabel.C, CaseLabel.D)

    @property
    def is_bandwidth_limited(self) -> bool:
        return self in (CaseLabel.B, CaseLabel.C)

    @property
    def is_latency_limited(self) -> bool:
        return self in (CaseLabel.A, CaseLabel.D)
