"""Greedy construction of the improvement path.

From a deliberately bad starting point, each step measures at most two
candidates, one latency step down and one bandwidth step up, and appends
whichever has the lower summary PSI. Ties go to the latency candidate so
repeated runs classify identically. The walk ends when both moves would
leave the schedule bounds, or earlier when an optional plateau threshold
says the best candidate no longer improves PSI enough to matter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .backends import BackendError, PsiBackend
from .model import (
    CpiPath,
    NetPoint,
    PsiSample,
    StepSchedule,
    bw_successor,
    lat_successor,
    psi_score,
)


def candidates(current: NetPoint, schedule: StepSchedule) -> list[NetPoint]:
    """In-bounds single-axis improvements of ``current``, latency move first.

    An empty list means the search has reached the schedule bounds.
    """
    out = []
    lat = lat_successor(current.latency_ms, schedule)
    if lat >= schedule.latency_floor_ms:
        out.append(NetPoint(lat, current.bandwidth_kbps))
    bw = bw_successor(current.bandwidth_kbps, schedule)
    if bw <= schedule.bandwidth_ceiling_kbps:
        out.append(NetPoint(current.latency_ms, bw))
    return out


@dataclass(frozen=True)
class StepDecision:
    """Both measured candidates of one step and which was appended."""

    latency_candidate: PsiSample | None
    bandwidth_candidate: PsiSample | None
    chosen_axis: str  # "latency" or "bandwidth"

    @property
    def chosen(self) -> PsiSample:
        sample = self.latency_candidate if self.chosen_axis == "latency" else self.bandwidth_candidate
        assert sample is not None
        return sample


@dataclass(frozen=True)
class SearchTrace:
    """One decision record per appended point, plus how the search stopped.

    ``plateau_probe`` holds candidates that were measured at the stopping
    step but not appended (only possible with a plateau threshold set).
    """

    decisions: tuple[StepDecision, ...]
    stop_reason: str  # "bounds" | "plateau" | "aborted"
    plateau_probe: tuple[PsiSample, ...] = field(default=())


class SearchAborted(RuntimeError):
    """A backend failed mid-search.

    Carries the valid path prefix measured so far (None when the starting
    point itself failed) and the completed decision records, for diagnosis.
    """

    def __init__(self, message: str, partial_path: CpiPath | None, trace: SearchTrace):
        super().__init__(message)
        self.partial_path = partial_path
        self.trace = trace


def search_trace(
    start: NetPoint,
    schedule: StepSchedule,
    backend: PsiBackend,
    trials: int | None = None,
    plateau_epsilon: float | None = None,
    *,
    site_id: str = "site",
    aggregate: str = "mean",
) -> tuple[CpiPath, SearchTrace]:
    """Run the greedy search and record every measured candidate.

    Candidates are measured sequentially in declared order (latency first)
    so seeded backends reproduce byte-identical runs. With
    ``plateau_epsilon`` set, the search additionally stops once the best
    candidate improves the summary PSI by less than the threshold; the
    candidates measured at that final step are returned in the trace but
    not appended.
    """
    if trials is None:
        trials = backend.descriptor.trials_default
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if plateau_epsilon is not None and plateau_epsilon < 0:
        raise ValueError("plateau_epsilon must be >= 0")

    decisions: list[StepDecision] = []
    points: list[PsiSample] = []

    def _measure(point: NetPoint) -> PsiSample:
        try:
            return backend.measure(point, trials)
        except BackendError as exc:
            partial = CpiPath(site_id, schedule, tuple(points)) if points else None
            raise SearchAborted(str(exc), partial, SearchTrace(tuple(decisions), "aborted")) from exc

    current = _measure(start)
    points.append(current)

    stop_reason = "bounds"
    probe: tuple[PsiSample, ...] = ()
    while True:
        moves = candidates(current.point, schedule)
        if not moves:
            break
        lat_sample: PsiSample | None = None
        bw_sample: PsiSample | None = None
        for move in moves:
            sample = _measure(move)
            if move.bandwidth_kbps == current.point.bandwidth_kbps:
                lat_sample = sample
            else:
                bw_sample = sample
        if lat_sample is not None and (
            bw_sample is None
            or psi_score(lat_sample, aggregate) <= psi_score(bw_sample, aggregate)
        ):
            best, axis = lat_sample, "latency"
        else:
            assert bw_sample is not None
            best, axis = bw_sample, "bandwidth"
        if plateau_epsilon is not None:
            improvement = psi_score(current, aggregate) - psi_score(best, aggregate)
            if improvement < plateau_epsilon:
                stop_reason = "plateau"
                probe = tuple(s for s in (lat_sample, bw_sample) if s is not None)
                break
        decisions.append(StepDecision(lat_sample, bw_sample, axis))
        points.append(best)
        current = best

    path = CpiPath(site_id, schedule, tuple(points))
    return path, SearchTrace(tuple(decisions), stop_reason, probe)


def search(
    start: NetPoint,
    schedule: StepSchedule,
    backend: PsiBackend,
    trials: int | None = None,
    plateau_epsilon: float | None = None,
    *,
    site_id: str = "site",
    aggregate: str = "mean",
) -> CpiPath:
    """Run the greedy search and return just the resulting path."""
    path, _ = search_trace(
        start, schedule, backend, trials, plateau_epsilon,
        site_id=site_id, aggregate=aggregate,
    )
    return path
