import pytest

from cpilab.backends import MissingGridPoint, ReplayGridBackend, SyntheticBackend
from cpilab.model import NetPoint, PsiSample, StepSchedule, bandwidth_sequence
from cpilab.search import SearchAborted, candidates, search, search_trace


class TestCandidates:
    def test_both_moves_from_start(self, default_schedule):
        got = candidates(NetPoint(180, 256), default_schedule)
        assert got == [NetPoint(170, 256), NetPoint(180, 512)]

    def test_termination_at_both_bounds(self, default_schedule):
        assert candidates(NetPoint(20, 307200), default_schedule) == []

    def test_termination_just_inside_both_bounds(self, default_schedule):
        # 25 - 10 = 15 is below the floor and the bandwidth is at the ceiling.
        assert candidates(NetPoint(25, 307200), default_schedule) == []

    def test_latency_only_near_ceiling(self, default_schedule):
        got = candidates(NetPoint(100, 307200), default_schedule)
        assert got == [NetPoint(90, 307200)]

    def test_bandwidth_only_at_floor(self, default_schedule):
        got = candidates(NetPoint(20, 256), default_schedule)
        assert got == [NetPoint(20, 512)]


def separable_surface_path(lat_coeff, bw_coeff, start, schedule):
    """Brute-force reference walk: evaluate the closed form at both
    candidates, move to the smaller, latency on ties. Independent of the
    search implementation; schedule stepping is re-derived inline."""
    def value(lat, bw):
        return lat_coeff * lat + bw_coeff / bw

    lat, bw = start
    points = [(lat, bw)]
    while True:
        moves = []
        if lat - schedule.latency_step_ms >= schedule.latency_floor_ms:
            moves.append(("latency", lat - schedule.latency_step_ms, bw))
        if bw < schedule.doubling_ceiling_kbps:
            nxt = min(2 * bw, schedule.doubling_ceiling_kbps)
        else:
            nxt = bw + schedule.linear_step_kbps
        if nxt <= schedule.bandwidth_ceiling_kbps:
            moves.append(("bandwidth", lat, nxt))
        if not moves:
            return points
        best = min(moves, key=lambda m: (value(m[1], m[2]), m[0] != "latency"))
        lat, bw = best[1], best[2]
        points.append((lat, bw))


class TestSearch:
    def test_first_decision_on_reference_surface(self, default_schedule):
        backend = SyntheticBackend(base=0, lat_coeff=5, bw_coeff=200000)
        path, trace = search_trace(NetPoint(180, 256), default_schedule, backend, trials=1)
        first = trace.decisions[0]
        assert first.latency_candidate.mean == 1631.25
        assert first.bandwidth_candidate.mean == 1290.625
        assert first.chosen_axis == "bandwidth"
        assert path.points[1].point == NetPoint(180, 512)

    def test_default_trials_come_from_backend(self, default_schedule):
        backend = SyntheticBackend(base=0, lat_coeff=5, bw_coeff=200000)
        path = search(NetPoint(180, 256), default_schedule, backend)
        assert all(len(s.samples) == 7 for s in path.points)

    def test_tie_breaks_toward_latency(self, default_schedule):
        grid = {
            (180.0, 256.0): [1000.0],
            (170.0, 256.0): [700.0],
            (180.0, 512.0): [700.0],
        }
        backend = ReplayGridBackend("s", grid)
        with pytest.raises(SearchAborted) as err:
            search(NetPoint(180, 256), default_schedule, backend, trials=1)
        partial = err.value.partial_path
        assert partial.points[1].point == NetPoint(170, 256)

    def test_abort_carries_partial_path_and_complete_decisions(self, default_schedule):
        grid = {
            (180.0, 256.0): [1000.0],
            (170.0, 256.0): [900.0],
            (180.0, 512.0): [950.0],
            (160.0, 256.0): [850.0],
            # (170.0, 512.0) missing: abort during the second decision.
        }
        backend = ReplayGridBackend("s", grid)
        with pytest.raises(SearchAborted) as err:
            search_trace(NetPoint(180, 256), default_schedule, backend, trials=1)
        aborted = err.value
        assert isinstance(aborted.__cause__, MissingGridPoint)
        assert [s.point for s in aborted.partial_path.points] == [NetPoint(180, 256), NetPoint(170, 256)]
        assert len(aborted.trace.decisions) == len(aborted.partial_path.points) - 1
        assert aborted.trace.stop_reason == "aborted"

    def test_abort_on_start_has_no_partial_path(self, default_schedule):
        backend = ReplayGridBackend("s", {(1.0, 1.0): [1.0]})
        with pytest.raises(SearchAborted) as err:
            search(NetPoint(180, 256), default_schedule, backend, trials=1)
        assert err.value.partial_path is None
        assert err.value.trace.decisions == ()

    def test_matches_brute_force_on_separable_surface(self, default_schedule):
        lat_coeff, bw_coeff = 5.0, 200000.0
        backend = SyntheticBackend(base=0, lat_coeff=lat_coeff, bw_coeff=bw_coeff)
        path = search(NetPoint(180, 256), default_schedule, backend, trials=1)
        expected = separable_surface_path(lat_coeff, bw_coeff, (180.0, 256.0), default_schedule)
        assert [(s.point.latency_ms, s.point.bandwidth_kbps) for s in path.points] == expected

    def test_every_step_improves_on_monotone_separable_surface(self, default_schedule):
        backend = SyntheticBackend(base=50, lat_coeff=2.5, bw_coeff=80000)
        path = search(NetPoint(180, 256), default_schedule, backend, trials=1)
        means = [s.mean for s in path.points]
        assert all(a > b for a, b in zip(means, means[1:]))

    def test_path_length_bound(self, default_schedule):
        backend = SyntheticBackend(base=0, lat_coeff=1, bw_coeff=1e6)
        path = search(NetPoint(180, 256), default_schedule, backend, trials=1)
        lat_steps = int((180 - default_schedule.latency_floor_ms) // default_schedule.latency_step_ms)
        bw_steps = len(bandwidth_sequence(256, default_schedule)) - 1
        assert len(path.points) <= 1 + lat_steps + bw_steps

    def test_trace_replay_reproduces_recorded_means(self, default_schedule):
        backend = SyntheticBackend(base=7, lat_coeff=3, bw_coeff=90000)
        _, trace = search_trace(NetPoint(180, 256), default_schedule, backend, trials=1)
        for decision in trace.decisions:
            for sample in (decision.latency_candidate, decision.bandwidth_candidate):
                if sample is not None:
                    assert sample.mean == backend.surface_value(sample.point)

    def test_search_equals_search_trace_path(self, default_schedule):
        backend_a = SyntheticBackend(base=1, lat_coeff=1, bw_coeff=50000, noise_stddev=2, seed=5)
        backend_b = SyntheticBackend(base=1, lat_coeff=1, bw_coeff=50000, noise_stddev=2, seed=5)
        path_a = search(NetPoint(180, 256), default_schedule, backend_a, trials=3)
        path_b, _ = search_trace(NetPoint(180, 256), default_schedule, backend_b, trials=3)
        assert path_a == path_b

    def test_sole_candidate_appended_even_when_worse_without_plateau(self):
        # Negative latency coefficient: improving latency worsens PSI. From
        # the ceiling only the latency move remains; without a plateau rule
        # the walk still runs to the bounds.
        schedule = StepSchedule(latency_floor_ms=20)
        backend = SyntheticBackend(base=1000, lat_coeff=-1, bw_coeff=1000)
        path = search(NetPoint(50, 307200), schedule, backend, trials=1)
        assert path.final == NetPoint(20, 307200)

    def test_rejects_bad_arguments(self, default_schedule):
        backend = SyntheticBackend()
        with pytest.raises(ValueError):
            search(NetPoint(180, 256), default_schedule, backend, trials=0)
        with pytest.raises(ValueError):
            search(NetPoint(180, 256), default_schedule, backend, trials=1, plateau_epsilon=-1)


class TestPlateau:
    def test_flat_surface_stops_immediately_but_probes_candidates(self, default_schedule):
        backend = SyntheticBackend(base=100)
        path, trace = search_trace(
            NetPoint(180, 256), default_schedule, backend, trials=1, plateau_epsilon=1.0
        )
        assert len(path.points) == 1
        assert trace.decisions == ()
        assert trace.stop_reason == "plateau"
        assert len(trace.plateau_probe) == 2

    def test_sole_candidate_is_probed_when_plateau_set(self, default_schedule):
        backend = SyntheticBackend(base=100)
        path, trace = search_trace(
            NetPoint(180, 307200), default_schedule, backend, trials=1, plateau_epsilon=1.0
        )
        assert len(path.points) == 1
        assert trace.stop_reason == "plateau"
        assert len(trace.plateau_probe) == 1

    def test_plateau_stops_once_gains_fall_below_epsilon(self, default_schedule):
        from cpilab.model import bw_successor

        backend = SyntheticBackend(base=0, lat_coeff=5, bw_coeff=200000)
        path, trace = search_trace(
            NetPoint(180, 256), default_schedule, backend, trials=1, plateau_epsilon=1.0
        )
        # Latency steps gain a constant 50, so the descent reaches the floor;
        # the diminishing bandwidth tail then drops under the threshold
        # before the ceiling.
        assert trace.stop_reason == "plateau"
        final = path.final
        assert final.latency_ms == 20
        assert 8192 < final.bandwidth_kbps < 307200
        next_bw = bw_successor(final.bandwidth_kbps, default_schedule)
        declined = backend.surface_value(final) - backend.surface_value(NetPoint(20, next_bw))
        assert declined < 1.0
        taken = path.points[-2].mean - path.points[-1].mean
        assert taken >= 1.0

    def test_zero_epsilon_stops_only_on_strict_worsening(self, default_schedule):
        # A flat surface improves by exactly 0, which is not < 0, so the
        # walk still runs to the bounds.
        backend = SyntheticBackend(base=100)
        _, trace = search_trace(
            NetPoint(180, 256), default_schedule, backend, trials=1, plateau_epsilon=0.0
        )
        assert trace.stop_reason == "bounds"
        # With a worsening sole candidate, zero epsilon does stop the walk.
        worsening = SyntheticBackend(base=1000, lat_coeff=-1, bw_coeff=1000)
        path, trace = search_trace(
            NetPoint(50, 307200), default_schedule, worsening, trials=1, plateau_epsilon=0.0
        )
        assert trace.stop_reason == "plateau"
        assert len(path.points) == 1


class TestAggregateOption:
    def grid_backend(self):
        return ReplayGridBackend("s", {
            (180.0, 256.0): [50.0, 50.0, 50.0],
            (170.0, 256.0): [1.0, 1.0, 100.0],   # mean 34, median 1
            (180.0, 512.0): [30.0, 30.0, 30.0],  # mean 30, median 30
        })

    def test_mean_prefers_bandwidth_candidate(self, default_schedule):
        with pytest.raises(SearchAborted) as err:
            search(NetPoint(180, 256), default_schedule, self.grid_backend(), trials=3)
        assert err.value.partial_path.points[1].point == NetPoint(180, 512)

    def test_median_prefers_latency_candidate(self, default_schedule):
        with pytest.raises(SearchAborted) as err:
            search(NetPoint(180, 256), default_schedule, self.grid_backend(), trials=3,
                   aggregate="median")
        assert err.value.partial_path.points[1].point == NetPoint(170, 256)


class TestFig2Semantics:
    def test_recorded_1000_900_800_first_step_goes_to_more_bandwidth(self, default_schedule):
        grid = {
            (180.0, 256.0): [1000.0],
            (170.0, 256.0): [900.0],
            (180.0, 512.0): [800.0],
        }
        backend = ReplayGridBackend("s", grid)
        with pytest.raises(SearchAborted) as err:
            search(NetPoint(180, 256), default_schedule, backend, trials=1)
        partial = err.value.partial_path
        assert partial.points[1].point == NetPoint(180, 512)
        assert err.value.trace.decisions[0].chosen_axis == "bandwidth"
