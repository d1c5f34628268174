import math
import random
import statistics

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from rbis5g.clockcore import Instant, TimeSpan
from rbis5g.errors import OrderingError, UninitializedError
from rbis5g.estimator import (
    OffsetSample,
    SyncState,
    TimestampTuple,
    corrected_local_time,
    offset_of,
    predict_offset,
    replay,
    skew_of,
    update,
)

MS10 = 10**10


def tup(m_ps, s_ps):
    return TimestampTuple(Instant(m_ps), Instant(s_ps))


def off(theta_ps, at_ps):
    return OffsetSample(TimeSpan(theta_ps), Instant(at_ps))


# --- offset_of / skew_of -----------------------------------------------------

def test_offset_examples():
    assert offset_of(tup(10**12, 10**12)).theta_hat == TimeSpan(0)
    assert offset_of(tup(10**12, 10**12 + 10_000)).theta_hat == TimeSpan.from_ns(10)
    t = 10_240_000_000_000
    assert offset_of(tup(t, t - 2690)).theta_hat == TimeSpan.from_ns("-2.69")


def test_skew_examples():
    assert skew_of(off(500, 0), off(500, 7 * MS10)).gamma_hat_ppm == 0.0
    assert skew_of(off(0, 0), off(10_000, MS10)).gamma_hat_ppm == 1.0
    assert skew_of(off(0, 0), off(13_600, MS10)).gamma_hat_ppm == 1.36


def test_skew_ordering_error():
    with pytest.raises(OrderingError):
        skew_of(off(0, MS10), off(0, MS10))


# --- update ------------------------------------------------------------------

def test_first_tuple():
    s = update(SyncState(4), tup(0, 5))
    assert s.last_offset == off(5, 0)
    assert len(s.skew_window) == 0
    assert s.filtered_skew_ppm == 0.0


def test_single_sample_window():
    s = SyncState(1).update(tup(0, 0)).update(tup(MS10, MS10 + 10_000))
    assert s.filtered_skew_ppm == 1.0


def test_two_sample_mean():
    s = SyncState(2)
    for m, th in ((0, 0), (MS10, 10_000), (2 * MS10, 30_000)):
        s.update(tup(m, m + th))
    assert s.filtered_skew_ppm == 1.5


def test_window_eviction():
    s = SyncState(2)
    for k, th in enumerate((0, 10_000, 30_000, 60_000)):
        s.update(tup(k * MS10, k * MS10 + th))
    assert [x.gamma_hat_ppm for x in s.skew_window] == [2.0, 3.0]
    assert s.filtered_skew_ppm == 2.5


def test_update_rejects_non_increasing_master_time():
    s = SyncState().update(tup(MS10, 0))
    with pytest.raises(OrderingError):
        s.update(tup(MS10, 5))


def test_copy_is_independent():
    s = SyncState(3).update(tup(0, 0)).update(tup(MS10, MS10 + 1))
    c = s.copy()
    c.update(tup(2 * MS10, 2 * MS10 + 50))
    assert s.tuple_count == 2 and c.tuple_count == 3


# --- predict / corrected -----------------------------------------------------

def _state_with(theta_ps, at_ps, skew_ppm):
    """SyncState whose last offset and filtered skew are the given values."""
    s = SyncState(1)
    prev = at_ps - MS10
    # choose the previous offset so the one skew sample equals skew_ppm exactly
    s.update(tup(prev, prev + theta_ps - round(skew_ppm * 10_000)))
    s.update(tup(at_ps, at_ps + theta_ps))
    assert s.filtered_skew_ppm == pytest.approx(skew_ppm, abs=1e-12)
    return s


def test_predict_requires_tuple():
    with pytest.raises(UninitializedError):
        predict_offset(SyncState(), Instant(0))
    with pytest.raises(UninitializedError):
        corrected_local_time(SyncState(), Instant(0))


def test_predict_zero_horizon():
    s = _state_with(-2690, 5 * MS10, 1.3604)
    assert predict_offset(s, Instant(5 * MS10)) == TimeSpan(-2690)


def test_predict_one_second():
    s = _state_with(0, 0, 1.0)
    assert predict_offset(s, Instant(10**12)) == TimeSpan.from_us(1)


def test_predict_table_constants():
    s = _state_with(-2690, 0, 1.3604)
    assert predict_offset(s, Instant(MS10)) == TimeSpan.from_ns("10.914")


def test_corrected_identity_and_constant_offset():
    s = SyncState().update(tup(0, 0)).update(tup(MS10, MS10))
    assert corrected_local_time(s, Instant(123_456_789)) == Instant(123_456_789)
    s = SyncState().update(tup(0, 10_000)).update(tup(MS10, MS10 + 10_000))
    assert corrected_local_time(s, Instant(10**12)) == Instant(10**12 - 10_000)


def test_corrected_with_skew():
    s = _state_with(0, 0, 1.0)
    got = corrected_local_time(s, Instant(10**12))
    assert abs(got.ps - (10**12 - 10**6)) <= 1


@settings(max_examples=200)
@given(st.integers(-10**9, 10**9), st.floats(-100, 100), st.integers(0, 10**13))
def test_corrected_inverts_prediction(theta, skew, horizon):
    s = _state_with(theta, 0, round(skew, 4))
    local = s.local_time_of_master(Instant(horizon))
    assert abs(s.corrected_local_time(local).ps - horizon) <= 1


# --- properties --------------------------------------------------------------

@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 64))
def test_oracle_equivalence(seed, n):
    rng = random.Random(seed)
    m, s = 0, rng.randrange(-10**9, 10**9)
    tuples, state = [], SyncState(n)
    for _ in range(rng.randrange(2, 200)):
        m += rng.randrange(1, 10**11)
        s = m + rng.randrange(-10**8, 10**8)
        tuples.append((m, s))
        state.update_ps(m, s)
        assert state.last_offset.theta_hat.ps == s - m
        want = oracles.filtered_skew(tuples, n)
        assert state.filtered_skew_ppm == pytest.approx(want, rel=1e-12, abs=1e-300)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from([1, 2, 4, 8, 16, 32]))
def test_telescoping_identity(seed, n):
    rng = random.Random(seed)
    delta = MS10
    theta = [0]
    for _ in range(n + rng.randrange(0, 50)):
        theta.append(theta[-1] + rng.randrange(-10**6, 10**6))
    tuples = [(k * delta, k * delta + th) for k, th in enumerate(theta)]
    got = replay(tuples, n)[-1]
    want = oracles.telescoped_skew(theta[-1], theta[-1 - n], n, delta)
    window = oracles.skew_samples(tuples)[-n:]
    assert abs(got - want) <= oracles.double_rounding_bound(window, want)


def test_replay_matches_incremental():
    tuples = [(k * MS10, k * MS10 + 7 * k * k) for k in range(20)]
    s = SyncState(4)
    for k, (m, sl) in enumerate(tuples):
        s.update_ps(m, sl)
        assert replay(tuples[: k + 1], 4)[-1] == s.filtered_skew_ppm


def _white_noise_series(n_tuples, gamma_ppm, sigma_ps, seed):
    rng = np.random.default_rng(seed)
    k = np.arange(n_tuples, dtype=np.int64)
    m = k * MS10
    noise = np.rint(rng.normal(0, sigma_ps, n_tuples)).astype(np.int64)
    s = m + np.rint(m * gamma_ppm * 1e-6).astype(np.int64) + noise
    return list(zip(m.tolist(), s.tolist()))


def test_unbiased_and_variance_scaling():
    sigma = 65_400
    tuples = _white_noise_series(6000, 1.36, sigma, 7)
    for n in (1, 4, 16, 64):
        series = replay(tuples, n)[1024:]
        expected_sigma = math.sqrt(2) * sigma / (n * MS10) * 1e6
        assert statistics.pstdev(series) == pytest.approx(expected_sigma, rel=0.2)
        assert abs(statistics.fmean(series) - 1.36) < 4 * expected_sigma / math.sqrt(len(series) / n)


def test_prediction_residual_is_zero_mean():
    tuples = _white_noise_series(3000, 1.36, 65_400, 8)
    s = SyncState(64)
    residuals = []
    for k, (m, sl) in enumerate(tuples):
        if k > 64:
            residuals.append(sl - m - s.predict_offset(Instant(m)).ps)
        s.update_ps(m, sl)
    # a residual combines two independent timestamp noises
    assert abs(statistics.fmean(residuals)) < 4 * math.sqrt(2) * 65_400 / math.sqrt(len(residuals))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 10**13), st.integers(-10**12, 10**12)), min_size=2, max_size=40),
       st.integers(1, 8))
def test_filtered_skew_is_correctly_rounded_mean(steps, n):
    from fractions import Fraction
    m, tuples = 0, []
    for dt, theta in steps:
        m += dt
        tuples.append((m, m + theta))
    s = SyncState(n)
    for k, (a, b) in enumerate(tuples):
        s.update_ps(a, b)
        window = oracles.skew_samples(tuples[: k + 1])[-n:]
        if window:
            assert s.filtered_skew_ppm == float(sum(map(Fraction, window)) / len(window))
