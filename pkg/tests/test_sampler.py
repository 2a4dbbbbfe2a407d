import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from backupsched.density import make_grid, periodic_kde, silverman_bandwidth
from backupsched.sampler import (
    IllPosedRequest,
    SamplingDistribution,
    SupportExhausted,
    apply_exclusion,
    build_sampling_distribution,
    greedy_sample,
    mask_concurrency,
    mask_day_cap,
    uniform_distribution,
)
from backupsched.schedule import (
    IntentParams,
    JobWindow,
    PeriodConfig,
    Schedule,
    count_active,
    max_concurrency,
    validate_spacing,
)

from conftest import random_schedule

P = 168.0
N = 2016


def circ(a, b, period=P):
    d = abs(a - b) % period
    return min(d, period - d)


def density_for(schedule, **kw):
    return periodic_kde(schedule, silverman_bandwidth(schedule.centers(), schedule.P), **kw)


# -- G construction ------------------------------------------------------------


def test_alpha_one_keeps_shape(weekly):
    d = density_for(weekly)
    g = build_sampling_distribution(d, 1.0)
    np.testing.assert_allclose(g.values, d.values - d.values.min(), rtol=0, atol=1e-15)
    assert np.argmax(g.values) == np.argmax(d.values)


def test_alpha_zero_inverts(weekly):
    d = density_for(weekly)
    g = build_sampling_distribution(d, 0.0)
    np.testing.assert_allclose(g.values, d.values.max() - d.values, rtol=0, atol=1e-15)
    assert np.argmax(g.values) == np.argmin(d.values)
    assert np.argmin(g.values) == np.argmax(d.values)


def test_alpha_half_uniform(weekly):
    g = build_sampling_distribution(density_for(weekly), 0.5)
    assert g.uniform and np.all(g.values == 1.0)


@pytest.mark.parametrize("alpha", [0.0, 0.1, 0.49, 0.51, 0.9, 1.0])
def test_g_nonnegative_zero_min(weekly, alpha):
    g = build_sampling_distribution(density_for(weekly), alpha)
    assert g.values.min() == 0.0 and np.all(g.values >= 0)


def test_alpha_out_of_range(weekly):
    with pytest.raises(ValueError):
        build_sampling_distribution(density_for(weekly), 1.01)


# -- exclusion -----------------------------------------------------------------


def test_exclusion_no_collar():
    g = uniform_distribution(P, N)
    apply_exclusion(g, 50.0, 10.0, 1.0)
    for t, v in zip(g.grid, g.values):
        assert v == (0.0 if circ(t, 50.0) <= 10.0 else 1.0)
    assert g.exclusions == [(40.0, 60.0)]


def test_exclusion_full_collar_piecewise():
    g = uniform_distribution(P, N)
    apply_exclusion(g, 3.0, 8.0, 0.0)
    for t, v in zip(g.grid, g.values):
        d = circ(t, 3.0)
        expected = 0.0 if d <= 8.0 else (0.5 if d <= 16.0 else 1.0)
        assert v == expected, t


def test_overlapping_collars_multiply():
    g = uniform_distribution(P, N)
    apply_exclusion(g, 40.0, 10.0, 0.0)
    apply_exclusion(g, 70.0, 10.0, 0.0)
    # (50, 60] lies in both collars
    j = int(round(55.0 / (P / N)))
    assert g.values[j] == 0.25
    j = int(round(25.0 / (P / N)))
    assert g.values[j] == 0.5


def test_exclusion_wraps():
    g = uniform_distribution(P, N)
    apply_exclusion(g, 1.0, 5.0, 1.0)
    assert g.values[0] == 0.0
    assert g.values[-1] == 0.0
    assert g.values[int(round(163.5 * 12))] == 1.0


@settings(max_examples=60, deadline=None)
@given(st.floats(0, P - 1e-6), st.floats(0.5, P / 2), st.floats(0, 1), st.integers(0, 2**32 - 1))
def test_exclusion_soundness(tau, s, omega, seed):
    rng = np.random.default_rng(seed)
    g = SamplingDistribution(make_grid(P, N), rng.uniform(0.1, 1.0, N), 1.0, P)
    before = g.values.copy()
    apply_exclusion(g, tau, s, omega)
    d = np.minimum(np.abs(g.grid - tau) % P, P - np.abs(g.grid - tau) % P)
    assert np.all(g.values[d <= s] == 0.0)
    far = d > s + s * (1 - omega) + 1e-9
    assert np.array_equal(g.values[far], before[far])


# -- concurrency mask ----------------------------------------------------------


def test_mask_slack_limit(weekly):
    g = uniform_distribution(P, N)
    peak, _ = max_concurrency(weekly)
    assert mask_concurrency(g, weekly, 2.0, peak + 2) == 0
    assert np.all(g.values == 1.0)


def test_mask_single_window_dilation():
    s = Schedule(windows=(JobWindow("a", 80.0, 6.0),))
    g = uniform_distribution(P, N)
    mask_concurrency(g, s, 4.0, 1)
    for t, v in zip(g.grid, g.values):
        d = circ(t, 80.0)
        if abs(d - 5.0) < 1e-6:
            continue
        assert v == (0.0 if d < 3.0 + 2.0 else 1.0), t


def test_mask_full_coverage_exhausts():
    s = Schedule(windows=tuple(JobWindow("a", c, 30.0) for c in np.arange(0, P, 24.0)))
    assert min(count_active(s, t) for t in np.linspace(0, P, 5000)) >= 1
    g = uniform_distribution(P, N)
    mask_concurrency(g, s, 1.0, 1)
    assert g.exhausted()
    with pytest.raises(SupportExhausted) as err:
        greedy_sample(density_for(s), s, IntentParams(k=2, concurrency_limit=1), seed=0)
    assert err.value.iteration == 1
    assert err.value.partial.centers == []


@pytest.mark.parametrize("seed", range(12))
def test_concurrency_guard(seed):
    rng = np.random.default_rng(seed)
    limit = int(rng.integers(1, 4))
    # existing schedule already within the limit
    while True:
        s = random_schedule(rng, int(rng.integers(1, 31)), max_width=10.0)
        if max_concurrency(s)[0] <= limit:
            break
    intent = IntentParams(k=int(rng.integers(1, 5)), epsilon=float(rng.uniform(0, 20)),
                          delta=float(rng.uniform(0.5, 4)), alpha=float(rng.uniform()),
                          concurrency_limit=limit)
    try:
        out = greedy_sample(density_for(s), s, intent, seed=seed)
    except SupportExhausted as exc:
        out = exc.partial
    combined = s.with_windows(out.windows)
    assert max_concurrency(combined)[0] <= limit
    # brute force over each new window's span
    for w in out.windows:
        ts = np.linspace(w.center - w.width / 2, w.center + w.width / 2, 801)[1:-1]
        assert max(count_active(combined, t) for t in ts) <= limit


# -- day cap -------------------------------------------------------------------


def test_day_cap_two_on_tuesday():
    g = uniform_distribution(P, N)
    full = mask_day_cap(g, [26.0, 40.0], 2, 24.0)
    assert full == [1]
    tue = (g.grid >= 24.0) & (g.grid < 48.0)
    assert np.all(g.values[tue] == 0.0) and np.all(g.values[~tue] == 1.0)


def test_day_cap_below_cap():
    g = uniform_distribution(P, N)
    assert mask_day_cap(g, [2.0 + 24 * d for d in range(7)], 2, 24.0) == []
    assert np.all(g.values == 1.0)


def test_day_cap_bucket_must_divide():
    with pytest.raises(ValueError):
        mask_day_cap(uniform_distribution(P, N), [1.0], 1, 25.0)


def test_day_cap_pigeonhole():
    intent = IntentParams(k=8, epsilon=0.0, delta=1.0, daily_cap=1, bucket_hours=24.0)
    with pytest.raises(SupportExhausted) as err:
        greedy_sample(None, Schedule(), intent, seed=3)
    assert err.value.iteration == 8
    days = sorted(int(c // 24) for c in err.value.partial.centers)
    assert days == list(range(7))


# -- greedy loop ---------------------------------------------------------------


def test_empty_schedule_uniform():
    intent = IntentParams(k=3, epsilon=40.0)
    out = greedy_sample(None, Schedule(), intent, seed=11)
    assert len(out.centers) == 3
    assert validate_spacing(out.centers, 40.0, P) == []
    assert out.trace[0]["ties"] == N


def test_first_pick_depends_on_seed():
    intent = IntentParams(k=1)
    picks = {greedy_sample(None, Schedule(), intent, seed=s).centers[0] for s in range(20)}
    assert len(picks) > 10


def test_determinism(weekly):
    d = density_for(weekly)
    intent = IntentParams(k=5, epsilon=9.0, alpha=0.3, omega=0.4)
    a = greedy_sample(d, weekly, intent, seed=7)
    b = greedy_sample(d, weekly, intent, seed=7)
    assert a.centers == b.centers and a.trace == b.trace


def test_ill_posed_rejected():
    with pytest.raises(IllPosedRequest):
        greedy_sample(None, Schedule(), IntentParams(k=4, epsilon=42.0), seed=0)


def test_density_required_for_nonempty(weekly):
    with pytest.raises(ValueError):
        greedy_sample(None, weekly, IntentParams(), seed=0)


def _support_left(centers, s, grid):
    return any(all(circ(t, c) > s + 1e-9 for c in centers) for t in grid)


@pytest.mark.parametrize("seed", range(25))
def test_near_limit_spacing_matches_geometry(seed):
    intent = IntentParams(k=4, epsilon=41.0, delta=1.0, omega=1.0)
    grid = make_grid(P, N)
    try:
        out = greedy_sample(None, Schedule(), intent, seed=seed)
    except SupportExhausted as exc:
        assert not _support_left(exc.partial.centers, 41.0, grid)
        assert len(exc.partial.centers) == exc.iteration - 1
    else:
        for i in range(1, 4):
            assert _support_left(out.centers[:i], 41.0, grid)
        assert validate_spacing(out.centers, 41.0, P) == []


def test_three_wide_exclusions_cannot_fit():
    # gap between the first two picks is in (55, 84]; neither arc has room for a third
    intent = IntentParams(k=3, epsilon=55.0, omega=1.0)
    for seed in range(10):
        with pytest.raises(SupportExhausted) as err:
            greedy_sample(None, Schedule(), intent, seed=seed)
        assert err.value.iteration == 3


def test_exhaustion_only_when_all_zero(weekly):
    d = density_for(weekly)
    intent = IntentParams(k=6, epsilon=27.0, alpha=1.0, omega=0.0)
    hist: list = []
    try:
        out = greedy_sample(d, weekly, intent, seed=1, history=hist)
        n_done = len(out.centers)
        failed = False
    except SupportExhausted as exc:
        n_done = len(exc.partial.centers)
        failed = True
    for i in range(n_done):
        assert hist[i].max() > 0
    if failed:
        assert hist[n_done].max() == 0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_spacing_property(seed):
    rng = np.random.default_rng(seed)
    s = random_schedule(rng, int(rng.integers(0, 20)))
    k = int(rng.integers(1, 8))
    delta = float(rng.uniform(0.5, 4.0))
    eps = float(rng.uniform(0, P / k - 0.1))
    intent = IntentParams(k=k, epsilon=eps, delta=delta, alpha=float(rng.uniform()),
                          omega=float(rng.uniform()))
    if not intent.spacing * k < P:
        return
    d = density_for(s) if s.n else None
    try:
        out = greedy_sample(d, s, intent, seed=seed)
    except SupportExhausted as exc:
        out = exc.partial
    assert validate_spacing(out.centers, intent.spacing, P) == []


def test_stochastic_mode(weekly):
    d = density_for(weekly)
    intent = IntentParams(k=4, epsilon=20.0, alpha=0.9)
    hist: list = []
    a = greedy_sample(d, weekly, intent, seed=5, mode="stochastic", history=hist)
    b = greedy_sample(d, weekly, intent, seed=5, mode="stochastic")
    assert a.centers == b.centers
    assert validate_spacing(a.centers, 20.0, P) == []
    for i, step in enumerate(a.trace):
        assert hist[i][step["index"]] > 0


def test_bad_mode(weekly):
    with pytest.raises(ValueError):
        greedy_sample(None, Schedule(), IntentParams(), mode="sample")


def test_outcome_windows(weekly):
    out = greedy_sample(density_for(weekly), weekly, IntentParams(k=2, delta=3.0, asset="vm1"), 0)
    assert all(w.width == 3.0 and w.client == "vm1" for w in out.windows)
    doc = out.to_dict(weekly.period)
    assert doc["rng"] == "PCG64" and len(doc["windows"]) == 2
    assert set(doc["windows"][0]) >= {"start", "end"}
