import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bedsim.errors import TimeRegressionError
from bedsim.metrics import (
    EpisodeCounts,
    EventLog,
    SummaryResponses,
    TimeWeightedAccumulator,
    episode_counts,
    finalize,
    summarize,
)
from bedsim.model import InitialHospitalStatus, ModelParameters, simulate_log

DEFAULTS = ModelParameters()


def empty_log(until=10.0, seeded=0):
    return EventLog.from_rows([], population=1582, bed_count=66, until=until,
                              initial_sick=seeded, initial_hospital=seeded,
                              initial_departures=[], initial_arrival=None)


class TestAccumulator:
    def test_constant(self):
        acc = TimeWeightedAccumulator(last_value=5.0)
        acc.record(10.0, 5.0)
        assert acc.mean() == 5.0
        assert acc.std() == 0.0

    def test_step(self):
        acc = TimeWeightedAccumulator()
        acc.record(3.0, 10.0)
        acc.record(10.0, 10.0)
        assert acc.mean() == pytest.approx(7.0)
        assert acc.zero_fraction() == pytest.approx(0.3)

    def test_regression(self):
        acc = TimeWeightedAccumulator()
        acc.record(2.0, 1.0)
        with pytest.raises(TimeRegressionError):
            acc.record(1.0, 1.0)

    @given(
        st.integers(0, 5),
        st.lists(st.tuples(st.floats(0, 100, allow_nan=False), st.integers(0, 5)), max_size=40),
        st.floats(0, 50),
    )
    def test_from_steps_matches_record(self, initial, steps, start):
        steps.sort(key=lambda s: s[0])
        end = start + 60.0
        times = [t for t, _ in steps]
        values = [v for _, v in steps]
        batch = TimeWeightedAccumulator.from_steps(initial, times, values, start, end)

        acc = TimeWeightedAccumulator(last_time=start, start_time=start)
        value = initial
        for t, v in steps:
            if t <= start:
                value = v
        acc.last_value = value
        for t, v in steps:
            if start < t <= end:
                acc.record(t, v)
        acc.record(end, acc.last_value)

        assert batch.integral == pytest.approx(acc.integral, abs=1e-9)
        assert batch.integral_sq == pytest.approx(acc.integral_sq, abs=1e-9)
        assert batch.zero_time == pytest.approx(acc.zero_time, abs=1e-9)
        assert batch.integral_sq >= 0 and batch.zero_time <= end - start + 1e-9

    def test_from_steps_rejects_unsorted(self):
        with pytest.raises(TimeRegressionError):
            TimeWeightedAccumulator.from_steps(0, [2.0, 1.0], [1, 2], 0.0, 3.0)


class TestFinalize:
    def test_empty_system(self):
        r, _ = summarize(empty_log())
        assert r.p_hospital_empty == 1.0
        others = [getattr(r, n) for n in SummaryResponses.field_names() if n != "p_hospital_empty"]
        assert others == [0.0] * len(others)

    def test_nonpositive_horizon(self):
        acc = TimeWeightedAccumulator()
        with pytest.raises(ValueError):
            finalize(acc, acc, EpisodeCounts(), 10)

    def test_constant_full_hospital(self):
        r, _ = summarize(empty_log(seeded=66))
        assert r.avg_beds == 66 and r.std_beds == 0 and r.p_hospital_empty == 0


@pytest.fixture(scope="module")
def long_run():
    log = simulate_log(DEFAULTS, "empty", 978, 100_000)
    responses, counts = summarize(log)
    return log, responses, counts


class TestRunProperties:
    def test_proportion_is_scaled_mean(self, long_run):
        _, r, _ = long_run
        assert r.avg_proportion_sick * 1582 == pytest.approx(r.avg_sick, rel=1e-15)

    def test_ranges(self, long_run):
        _, r, _ = long_run
        for name in ("p_hospital_empty", "proportion_healed_in_hospital", "avg_proportion_sick"):
            assert 0 <= getattr(r, name) <= 1
        assert r.std_sick >= 0 and r.std_beds >= 0
        assert r.avg_sick <= 1582 and r.avg_beds <= 66

    def test_littles_law(self, long_run):
        _, r, _ = long_run
        assert r.avg_sick / r.avg_sickness_time == pytest.approx(
            (1 / 300) * (1582 - r.avg_sick), rel=0.05)

    def test_episode_accounting(self, long_run):
        log, _, c = long_run
        assert c.hospital + c.home + c.rejected == c.episodes == int((log.kind == 0).sum())

    def test_heal_time_only_on_heal_rows(self, long_run):
        log, _, _ = long_run
        heal = log.kind == 1
        assert not np.isnan(log.heal_time[heal]).any()
        assert np.isnan(log.heal_time[~heal]).all()
        assert np.isnan(log.interarrival[heal]).all()

    def test_std_matches_stationary_binomial(self, long_run):
        # stationary sick count is Binomial(N, rho/(1+rho)) when nobody is rejected
        _, r, _ = long_run
        q = (9.2 / 300) / (1 + 9.2 / 300)
        assert r.std_sick == pytest.approx(math.sqrt(1582 * q * (1 - q)), rel=0.05)


@pytest.mark.parametrize("status", [InitialHospitalStatus.HALF_FULL, InitialHospitalStatus.FULL])
@pytest.mark.parametrize("seed", [978, 979])
def test_seeded_hospital_drains(status, seed):
    log = simulate_log(DEFAULTS, status, seed, 50.0)
    assert log.num_hospital.min() < 15


def test_warmup_drops_early_episodes():
    log = simulate_log(DEFAULTS, "full", 978, 1000)
    full = episode_counts(log)
    trimmed = episode_counts(log, warmup=100.0)
    assert trimmed.episodes < full.episodes
    r, _ = summarize(log, warmup=100.0)
    assert math.isfinite(r.avg_sick)
    with pytest.raises(ValueError):
        summarize(log, warmup=1000.0)
