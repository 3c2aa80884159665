"""Sampler distribution checks, bound enforcement, and stream determinism."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ks_2samp

from levy_contract.noise import (
    JumpRecord,
    MarkLaw,
    NoiseBounds,
    RandomStream,
    constant_mark,
    sample_brownian_increments,
    sample_conditional_times,
    sample_marks,
    sample_poisson_times,
    truncated_gaussian_mark,
    uniform_ball_mark,
)

N_DRAWS = 100_000


def test_poisson_mean_count():
    rng = RandomStream(42).generator()
    counts = np.array([sample_poisson_times(rng, 1.0, (0.0, 1.0)).size
                       for _ in range(N_DRAWS)])
    assert abs(counts.mean() - 1.0) < 0.01


def test_poisson_single_jump_probability():
    # lam=2 on a half-unit window: P(count = 1) = exp(-1)
    rng = RandomStream(7).generator()
    counts = np.array([sample_poisson_times(rng, 2.0, (0.0, 0.5)).size
                       for _ in range(N_DRAWS)])
    assert abs(np.mean(counts == 1) - np.exp(-1)) < 0.005


def test_poisson_count_distribution_matches_pmf():
    from levy_contract.bounds import poisson_prob
    lam, window = 1.5, (0.0, 2.0)
    rng = RandomStream(3).generator()
    counts = np.array([sample_poisson_times(rng, lam, window).size
                       for _ in range(N_DRAWS)])
    for k in range(9):
        p = poisson_prob(lam, *window, k)
        se = np.sqrt(p * (1 - p) / N_DRAWS)
        assert abs(np.mean(counts == k) - p) < 3 * se + 1e-12, f"k={k}"


def test_degenerate_window_rejected():
    with pytest.raises(ValueError):
        sample_poisson_times(RandomStream(0), 1.0, (0.0, 0.0))
    with pytest.raises(ValueError):
        sample_conditional_times(RandomStream(0), 2, (1.0, 0.5))


def test_conditional_zero_jumps_empty():
    assert sample_conditional_times(RandomStream(1), 0, (0.0, 1.0)).size == 0


def test_conditional_order_statistic_means():
    rng = RandomStream(11).generator()
    t1 = np.array([sample_conditional_times(rng, 1, (0.0, 1.0))[0]
                   for _ in range(N_DRAWS)])
    assert abs(t1.mean() - 0.5) < 0.005
    rng = RandomStream(12).generator()
    tmin = np.array([sample_conditional_times(rng, 2, (0.0, 1.0))[0]
                     for _ in range(N_DRAWS)])
    assert abs(tmin.mean() - 1.0 / 3.0) < 0.005


def test_conditional_matches_stratified_unconditional():
    # restricting unconditional draws to {count == 2} gives the same
    # first-arrival law as the conditional sampler
    rng = RandomStream(21).generator()
    uncond = []
    for _ in range(30_000):
        times = sample_poisson_times(rng, 1.0, (0.0, 1.0))
        if times.size == 2:
            uncond.append(times[0])
    rng = RandomStream(22).generator()
    cond = [sample_conditional_times(rng, 2, (0.0, 1.0))[0]
            for _ in range(len(uncond))]
    assert ks_2samp(uncond, cond).pvalue > 0.01


def test_brownian_increment_variance():
    rng = RandomStream(5).generator()
    dw = sample_brownian_increments(rng, np.array([0.0, 1.0]), 1)
    draws = np.array([sample_brownian_increments(rng, np.array([0.0, 1.0]), 1)[0, 0]
                      for _ in range(N_DRAWS)])
    assert abs(draws.var() - 1.0) < 0.02
    assert dw.shape == (1, 1)


def test_brownian_zero_step_and_monotonicity():
    rng = RandomStream(6).generator()
    grid = np.array([0.0, 0.5, 0.5, 1.0])
    dw = sample_brownian_increments(rng, grid, 2)
    assert np.all(dw[1] == 0.0)
    with pytest.raises(ValueError):
        sample_brownian_increments(rng, np.array([0.0, 0.4, 0.2]), 1)


def test_brownian_components_independent():
    rng = RandomStream(8).generator()
    dw = sample_brownian_increments(rng, np.linspace(0, N_DRAWS, N_DRAWS + 1), 2)
    corr = np.mean(dw[:, 0] * dw[:, 1])
    assert abs(corr) < 0.02


def test_constant_marks_repeat():
    marks = sample_marks(RandomStream(0), 3, constant_mark((0.5, 0.0)))
    assert marks.shape == (3, 2)
    assert np.all(marks == np.array([0.5, 0.0]))


def test_uniform_ball_norms_bounded():
    law = uniform_ball_mark(0.5, 2)
    marks = sample_marks(RandomStream(9), N_DRAWS, law)
    assert np.max(np.linalg.norm(marks, axis=1)) <= 0.5 + 1e-12


def test_truncated_gaussian_clipped():
    law = truncated_gaussian_mark(sigma=10.0, eta=1.0, dim=2)
    marks = sample_marks(RandomStream(10), N_DRAWS // 10, law)
    assert np.max(np.linalg.norm(marks, axis=1)) <= 1.0 + 1e-12


def test_unbounded_mark_config_rejected():
    with pytest.raises(ValueError):
        constant_mark((2.0, 0.0), eta=1.0)
    with pytest.raises(ValueError):
        sample_marks(RandomStream(0), 1, uniform_ball_mark(2.0, 2), eta=1.0)
    with pytest.raises(ValueError):
        MarkLaw("lognormal", eta=1.0)


def test_noise_bounds_validation():
    with pytest.raises(ValueError):
        NoiseBounds(-0.1, 0.0)
    with pytest.raises(ValueError):
        NoiseBounds(0.0, -1.0)
    with pytest.raises(ValueError):
        NoiseBounds(0.0, 0.0, lam=0.0)


def test_jump_record_validation():
    with pytest.raises(ValueError):
        JumpRecord(np.array([0.2, 0.1]))
    with pytest.raises(ValueError):
        JumpRecord(np.array([0.1, 0.2]), np.array([[1.0]]))
    rec = JumpRecord(np.array([0.1, 0.6]), np.array([[1.0], [2.0]]))
    assert rec.count_in(0.0, 0.5) == 1
    assert rec.max_mark_norm() == 2.0


def test_stream_determinism_byte_identical():
    a = sample_poisson_times(RandomStream(123, 4), 2.0, (0.0, 3.0))
    b = sample_poisson_times(RandomStream(123, 4), 2.0, (0.0, 3.0))
    assert a.tobytes() == b.tobytes()
    c = sample_poisson_times(RandomStream(123, 5), 2.0, (0.0, 3.0))
    assert a.tobytes() != c.tobytes()


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.integers(0, 12),
       s=st.floats(-5, 5), width=st.floats(0.1, 10))
def test_conditional_times_sorted_within_window(seed, k, s, width):
    times = sample_conditional_times(RandomStream(seed), k, (s, s + width))
    assert times.size == k
    assert np.all(times >= s) and np.all(times <= s + width)
    assert np.all(np.diff(times) >= 0)
