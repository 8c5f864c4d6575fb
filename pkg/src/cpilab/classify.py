"""Classify improvement paths against network performance envelopes.

The path is treated as an axis-aligned polyline on the plane (x bandwidth,
y latency) and the envelope as a closed rectangle. Because the path is a
monotone staircase moving down and to the right, once it is inside the
rectangle it can only leave through the minimum-latency boundary (a
vertical, latency-improving segment: case A) or the maximum-bandwidth
boundary (a horizontal, bandwidth-improving segment: case B).

When path and rectangle do not meet, two staircase projections decide
between the remaining cases:

* ``lat_at(path, bw_hi)`` is the best latency the path reaches while its
  bandwidth is still at most the envelope's right edge.
* ``bw_at(path, lat_lo)`` is the bandwidth of the last point where the
  path's latency is still at or above the envelope's bottom edge.

If the path needs more bandwidth than ``bw_hi`` to be reached (case C),
less latency than ``lat_lo`` (case D), both (resolved by counting schedule
steps, ties to D), or neither, the pair is respectively C, D, the step
count winner, or beyond the path entirely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import (
    CaseLabel,
    CpiPath,
    Envelope,
    count_bw_steps,
    count_lat_steps,
)


class DegeneratePath(ValueError):
    """Classification is undefined for paths with fewer than two points."""


class EmptyInput(ValueError):
    """Ratio statistics need at least one classification row."""


def lat_at(path: CpiPath, bw: float) -> float:
    """Latency of the last path point whose bandwidth is <= ``bw``.

    Returns ``math.inf`` when ``bw`` is below the path's minimum bandwidth
    (the whole path lies to the right of the query) and the final point's
    latency when ``bw`` exceeds the path's maximum bandwidth.
    """
    result = math.inf
    for sample in path.points:
        if sample.point.bandwidth_kbps <= bw:
            result = sample.point.latency_ms
    return result


def bw_at(path: CpiPath, lat: float) -> float:
    """Bandwidth of the last path point whose latency is >= ``lat``.

    Mirror of :func:`lat_at` with the axes swapped: returns ``math.inf``
    when the whole path lies below the query latency, and the final point's
    bandwidth when the query is at or below the path's minimum latency.
    """
    result = math.inf
    for sample in path.points:
        if sample.point.latency_ms >= lat:
            result = sample.point.bandwidth_kbps
    return result


@dataclass(frozen=True)
class Classification:
    """A case label plus which rule produced it.

    ``via`` is "exit" for paths that touch the envelope, "projection" for
    the single-sided no-intersection rules, and "tiebreak" when both
    projections demanded improvement and schedule step counts decided.
    """

    label: CaseLabel
    via: str


def classify_explained(path: CpiPath, env: Envelope) -> Classification:
    if len(path.points) < 2:
        raise DegeneratePath(f"path {path.site_id!r} has fewer than 2 points; classification undefined")

    # Intersection pass: remember the last inside-to-outside transition.
    exit_label: CaseLabel | None = None
    touched = False
    pts = [s.point for s in path.points]
    for a, b in zip(pts, pts[1:]):
        if a.bandwidth_kbps == b.bandwidth_kbps:
            # Vertical segment, latency decreasing from a to b.
            x = a.bandwidth_kbps
            if (env.bw_lo_kbps <= x <= env.bw_hi_kbps
                    and b.latency_ms <= env.lat_hi_ms
                    and a.latency_ms >= env.lat_lo_ms):
                touched = True
                if b.latency_ms < env.lat_lo_ms:
                    exit_label = CaseLabel.A
        else:
            # Horizontal segment, bandwidth increasing from a to b.
            y = a.latency_ms
            if (env.lat_lo_ms <= y <= env.lat_hi_ms
                    and a.bandwidth_kbps <= env.bw_hi_kbps
                    and b.bandwidth_kbps >= env.bw_lo_kbps):
                touched = True
                if b.bandwidth_kbps > env.bw_hi_kbps:
                    exit_label = CaseLabel.B
    if exit_label is not None:
        return Classification(exit_label, "exit")
    if touched:
        return Classification(CaseLabel.TERMINATES_INSIDE, "exit")

    lat_proj = lat_at(path, env.bw_hi_kbps)
    bw_proj = bw_at(path, env.lat_lo_ms)
    needs_bw = bw_proj > env.bw_hi_kbps
    needs_lat = lat_proj < env.lat_lo_ms
    if needs_bw and not needs_lat:
        return Classification(CaseLabel.C, "projection")
    if needs_lat and not needs_bw:
        return Classification(CaseLabel.D, "projection")
    if needs_bw and needs_lat:
        n_bw = count_bw_steps(env.bw_hi_kbps, bw_proj, path.schedule)
        n_lat = count_lat_steps(env.lat_lo_ms, lat_proj, path.schedule)
        label = CaseLabel.C if n_bw < n_lat else CaseLabel.D
        return Classification(label, "tiebreak")
    return Classification(CaseLabel.BEYOND_PATH, "projection")


def classify(path: CpiPath, env: Envelope) -> CaseLabel:
    """Deterministically assign exactly one case label to a (path, envelope) pair."""
    return classify_explained(path, env).label


@dataclass(frozen=True)
class ClassificationRow:
    site_id: str
    provider: str
    city: str
    year: int | None
    label: CaseLabel | None
    error: str | None = None


@dataclass(frozen=True)
class InvalidEnvelope:
    """An envelope that failed ingestion, kept so batch output can annotate it."""

    provider: str
    city: str
    year: int | None
    reason: str


def _row_key(row: ClassificationRow):
    return (row.site_id, row.provider, row.city, row.year if row.year is not None else -(10 ** 9))


def classify_batch(paths, envelopes, invalid_envelopes=()) -> list[ClassificationRow]:
    """One row per (path, envelope) pair, errors annotated instead of raised.

    Invalid envelopes and degenerate paths become error rows so the batch
    never aborts; rows come back sorted by site, then provider, city, year.
    """
    rows: list[ClassificationRow] = []
    for path in paths:
        for env in envelopes:
            try:
                label = classify(path, env)
                rows.append(ClassificationRow(path.site_id, env.provider, env.city, env.year, label))
            except DegeneratePath as exc:
                rows.append(ClassificationRow(path.site_id, env.provider, env.city, env.year, None, str(exc)))
        for bad in invalid_envelopes:
            rows.append(ClassificationRow(path.site_id, bad.provider, bad.city, bad.year, None, bad.reason))
    rows.sort(key=_row_key)
    return rows


@dataclass(frozen=True)
class CaseCounts:
    a: int = 0
    b: int = 0
    c: int = 0
    d: int = 0
    terminates_inside: int = 0
    beyond_path: int = 0
    errors: int = 0

    @property
    def core_total(self) -> int:
        return self.a + self.b + self.c + self.d

    @property
    def total(self) -> int:
        return self.core_total + self.terminates_inside + self.beyond_path + self.errors


@dataclass(frozen=True)
class RatioSummary:
    """Bandwidth-limitation statistics over the core A-D labels.

    ``ratio`` is (B+C)/(A+D), None when no A or D rows exist; ``share`` is
    (B+C) over all core rows, None when there are no core rows. Degenerate
    labels and error rows are counted but excluded from both statistics.
    """

    counts: CaseCounts
    ratio: float | None
    share: float | None


def case_ratio(rows) -> RatioSummary:
    rows = list(rows)
    if not rows:
        raise EmptyInput("no classification rows")
    tally = {"a": 0, "b": 0, "c": 0, "d": 0, "terminates_inside": 0, "beyond_path": 0, "errors": 0}
    for row in rows:
        if row.label is None:
            tally["errors"] += 1
        elif row.label is CaseLabel.A:
            tally["a"] += 1
        elif row.label is CaseLabel.B:
            tally["b"] += 1
        elif row.label is CaseLabel.C:
            tally["c"] += 1
        elif row.label is CaseLabel.D:
            tally["d"] += 1
        elif row.label is CaseLabel.TERMINATES_INSIDE:
            tally["terminates_inside"] += 1
        else:
            tally["beyond_path"] += 1
    counts = CaseCounts(**tally)
    limited = counts.b + counts.c
    conventional = counts.a + counts.d
    ratio = limited / conventional if conventional > 0 else None
    share = limited / counts.core_total if counts.core_total > 0 else None
    return RatioSummary(counts, ratio, share)


def aggregate_rows(rows, key_fields: tuple[str, ...]) -> list[tuple[tuple, RatioSummary]]:
    """Group rows by the given ClassificationRow fields and summarize each group.

    Groups come back in deterministic sorted key order.
    """
    groups: dict[tuple, list[ClassificationRow]] = {}
    for row in rows:
        key = tuple(getattr(row, f) for f in key_fields)
        groups.setdefault(key, []).append(row)

    def _sort_key(key: tuple):
        return tuple(v if v is not None else -(10 ** 9) for v in key)

    return [(key, case_ratio(groups[key])) for key in sorted(groups, key=_sort_key)]
