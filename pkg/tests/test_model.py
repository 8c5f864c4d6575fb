import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cpilab.model import (
    CpiPath,
    Envelope,
    NetPoint,
    PsiSample,
    StepSchedule,
    bandwidth_sequence,
    bw_successor,
    count_bw_steps,
    count_lat_steps,
    lat_successor,
    psi_score,
)

from conftest import make_path


class TestSuccessors:
    def test_doubling_regime(self, default_schedule):
        assert bw_successor(256, default_schedule) == 512

    def test_linear_regime_after_ceiling(self, default_schedule):
        # 2 * 8192 overshoots the doubling ceiling, so the step is linear.
        assert bw_successor(8192, default_schedule) == 16384

    def test_doubling_exactly_reaches_ceiling(self, default_schedule):
        assert bw_successor(4096, default_schedule) == 8192

    def test_overshooting_double_clamps_to_ceiling_once(self, default_schedule):
        # Arbitrary start between half the ceiling and the ceiling.
        assert bw_successor(5000, default_schedule) == 8192
        assert bw_successor(8192, default_schedule) == 16384

    def test_bw_successor_rejects_nonpositive(self, default_schedule):
        with pytest.raises(ValueError):
            bw_successor(0, default_schedule)

    @given(st.floats(min_value=0.001, max_value=1e6, allow_nan=False))
    def test_bw_successor_strictly_increasing(self, bw):
        schedule = StepSchedule()
        assert bw_successor(bw, schedule) > bw

    def test_lat_successor(self, default_schedule):
        assert lat_successor(180, default_schedule) == 170
        assert lat_successor(30, default_schedule) == 20

    def test_lat_successor_below_floor_is_callers_problem(self, default_schedule):
        # The successor itself is pure arithmetic; the caller rejects 15 < 20.
        assert lat_successor(25, default_schedule) == 15

    def test_lat_successor_rejects_nonpositive(self, default_schedule):
        with pytest.raises(ValueError):
            lat_successor(0, default_schedule)


class TestBandwidthSequence:
    def test_default_sequence_from_256(self, default_schedule):
        expected = [256.0, 512.0, 1024.0, 2048.0, 4096.0, 8192.0]
        value = 8192.0
        while value + 8192.0 <= 307200.0:
            value += 8192.0
            expected.append(value)
        assert bandwidth_sequence(256, default_schedule) == expected
        assert expected[-1] == 303104.0

    def test_prefix_matches_doubling_then_linear(self, default_schedule):
        seq = bandwidth_sequence(256, default_schedule)
        assert seq[:8] == [256, 512, 1024, 2048, 4096, 8192, 16384, 24576]


class TestStepCounts:
    def test_single_bandwidth_step(self, default_schedule):
        assert count_bw_steps(900, 1024, default_schedule) == 1

    def test_two_bandwidth_steps(self, default_schedule):
        # 500 -> 1000 -> 2000 is the first value at or past 1024.
        assert count_bw_steps(500, 1024, default_schedule) == 2

    def test_infinite_target(self, default_schedule):
        assert count_bw_steps(500, math.inf, default_schedule) == math.inf

    def test_target_already_reached(self, default_schedule):
        assert count_bw_steps(2048, 2048, default_schedule) == 0

    def test_latency_steps(self, default_schedule):
        assert count_lat_steps(172, 170, default_schedule) == 1
        assert count_lat_steps(150, 100, default_schedule) == 5
        assert count_lat_steps(100, 100, default_schedule) == 0


class TestTypes:
    def test_netpoint_validation(self):
        NetPoint(0, 1)
        with pytest.raises(ValueError):
            NetPoint(-1, 100)
        with pytest.raises(ValueError):
            NetPoint(10, 0)

    def test_schedule_validation(self):
        with pytest.raises(ValueError):
            StepSchedule(latency_step_ms=0)
        with pytest.raises(ValueError):
            StepSchedule(latency_floor_ms=-1)
        with pytest.raises(ValueError):
            StepSchedule(doubling_ceiling_kbps=500000, bandwidth_ceiling_kbps=400000)

    def test_psi_sample_mean(self):
        sample = PsiSample.from_samples(NetPoint(10, 100), [1, 2, 3])
        assert sample.mean == 2.0
        with pytest.raises(ValueError):
            PsiSample.from_samples(NetPoint(10, 100), [])
        with pytest.raises(ValueError):
            PsiSample.from_samples(NetPoint(10, 100), [1, -2])
        with pytest.raises(ValueError):
            PsiSample(NetPoint(10, 100), (1.0, 2.0), 99.0)

    def test_psi_score_aggregates(self):
        sample = PsiSample.from_samples(NetPoint(10, 100), [1, 1, 100])
        assert psi_score(sample) == sample.mean == 34.0
        assert psi_score(sample, "median") == 1.0
        with pytest.raises(ValueError):
            psi_score(sample, "mode")

    def test_envelope_validation(self):
        Envelope("p", "c", 2020, 40, 80, 8000, 32000)
        with pytest.raises(ValueError):
            Envelope("p", "c", 2020, 80, 40, 8000, 32000)
        with pytest.raises(ValueError):
            Envelope("p", "c", 2020, 40, 80, 32000, 8000)
        with pytest.raises(ValueError):
            Envelope("p", "c", 2020, 0, 80, 8000, 32000)

    def test_envelope_contains_is_closed(self):
        env = Envelope("p", "c", 2020, 40, 80, 8000, 32000)
        assert env.contains(NetPoint(40, 8000))
        assert env.contains(NetPoint(80, 32000))
        assert not env.contains(NetPoint(39.999, 8000))


class TestStaircaseValidation:
    def test_valid_staircase(self):
        path = make_path("bblbl")
        lats = [s.point.latency_ms for s in path.points]
        bws = [s.point.bandwidth_kbps for s in path.points]
        assert lats == [180, 180, 180, 170, 170, 160]
        assert bws == [256, 512, 1024, 1024, 2048, 2048]

    def test_single_point_is_allowed(self):
        assert len(make_path("").points) == 1

    def test_rejects_both_axes_changing(self, default_schedule):
        points = (
            PsiSample.from_samples(NetPoint(180, 256), [10]),
            PsiSample.from_samples(NetPoint(170, 512), [9]),
        )
        with pytest.raises(ValueError, match="exactly one axis"):
            CpiPath("s", default_schedule, points)

    def test_rejects_wrong_latency_step(self, default_schedule):
        points = (
            PsiSample.from_samples(NetPoint(180, 256), [10]),
            PsiSample.from_samples(NetPoint(165, 256), [9]),
        )
        with pytest.raises(ValueError, match="latency"):
            CpiPath("s", default_schedule, points)

    def test_rejects_wrong_direction(self, default_schedule):
        points = (
            PsiSample.from_samples(NetPoint(180, 512), [10]),
            PsiSample.from_samples(NetPoint(180, 256), [9]),
        )
        with pytest.raises(ValueError, match="bandwidth"):
            CpiPath("s", default_schedule, points)

    def test_rejects_off_schedule_bandwidth(self, default_schedule):
        points = (
            PsiSample.from_samples(NetPoint(180, 256), [10]),
            PsiSample.from_samples(NetPoint(180, 700), [9]),
        )
        with pytest.raises(ValueError, match="bandwidth"):
            CpiPath("s", default_schedule, points)

    @given(st.lists(st.sampled_from("lb"), max_size=25))
    def test_random_move_strings_build_valid_paths(self, moves):
        path = make_path("".join(moves), start=(400.0, 64.0))
        lats = [s.point.latency_ms for s in path.points]
        bws = [s.point.bandwidth_kbps for s in path.points]
        assert all(a >= b for a, b in zip(lats, lats[1:]))
        assert all(a <= b for a, b in zip(bws, bws[1:]))
