"""Shared helpers for the test suite."""

from __future__ import annotations

import pytest

from cpilab.model import CpiPath, NetPoint, PsiSample, StepSchedule, bw_successor, lat_successor


def make_path(moves: str, start=(180.0, 256.0), schedule: StepSchedule | None = None,
              site_id: str = "site", psis=None) -> CpiPath:
    """Build a staircase path from a move string ('l' latency, 'b' bandwidth).

    PSI values default to a strictly decreasing ramp; pass ``psis`` (one per
    point, including the start) to control them.
    """
    schedule = schedule or StepSchedule()
    lat, bw = float(start[0]), float(start[1])
    points = [NetPoint(lat, bw)]
    for move in moves:
        if move == "l":
            lat = lat_successor(lat, schedule)
        elif move == "b":
            bw = bw_successor(bw, schedule)
        else:
            raise ValueError(f"unknown move {move!r}")
        points.append(NetPoint(lat, bw))
    if psis is None:
        psis = [1000.0 - 5.0 * i for i in range(len(points))]
    samples = tuple(PsiSample.from_samples(p, [v]) for p, v in zip(points, psis))
    return CpiPath(site_id, schedule, samples)


@pytest.fixture
def default_schedule() -> StepSchedule:
    return StepSchedule()
