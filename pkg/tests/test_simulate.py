import math

import numpy as np
import pytest
import scipy.stats

from flillab.loglog import iterated_log
from flillab.paths import Grid
from flillab.simulate import (
    UniformSample,
    centered_poisson_path,
    draw_uniform_sample,
    empirical_process,
    gaussian_path,
    increment_process,
    local_empirical_process,
    poissonized_empirical,
    quantile_process,
)

GRID = Grid(16)


def _sample(values):
    values = np.asarray(values, dtype=float)
    return UniformSample(n=values.size, values=np.sort(values), seed=0)


def test_empirical_hand_values():
    g = empirical_process(_sample([0.5]), GRID)
    assert g.value_at([0.25])[0] == pytest.approx(-0.25, abs=1e-15)
    assert g.value_at([0.75])[0] == pytest.approx(0.25, abs=1e-15)
    assert g.value_at([0.5])[0] == pytest.approx(0.5, abs=1e-15)
    g2 = empirical_process(_sample([0.25, 0.75]), GRID)
    assert g2.value_at([0.5])[0] == pytest.approx(0.0, abs=1e-15)
    assert g2.value_at([0.0])[0] == 0.0
    assert g2.value_at([1.0])[0] == pytest.approx(0.0, abs=1e-12)


def test_empirical_is_cadlag_with_unit_jumps():
    sample = draw_uniform_sample(20, seed=4)
    g = empirical_process(sample, GRID)
    for u in sample.values:
        left = g.left_limit_at([u])[0]
        right = g.right_limit_at([u])[0]
        assert right - left == pytest.approx(1.0 / math.sqrt(20), abs=1e-12)
        assert g.value_at([u])[0] == pytest.approx(right, abs=1e-15)


def test_quantile_hand_values():
    b = quantile_process(_sample([0.3, 0.6]), GRID)
    s2 = math.sqrt(2.0)
    assert b.value_at([0.5])[0] == pytest.approx(s2 * (0.3 - 0.5), abs=1e-15)
    assert b.value_at([0.75])[0] == pytest.approx(s2 * (0.6 - 0.75), abs=1e-15)
    assert b.value_at([0.0])[0] == 0.0
    # left-continuous step: the order statistic switches just after k/n
    assert b.left_limit_at([0.5])[0] == pytest.approx(s2 * (0.3 - 0.5), abs=1e-15)
    assert b.right_limit_at([0.5])[0] == pytest.approx(s2 * (0.6 - 0.5), abs=1e-15)


def test_quantile_matches_order_statistic_formula():
    n = 13
    sample = draw_uniform_sample(n, seed=8)
    b = quantile_process(sample, GRID)
    ts = np.linspace(0.01, 1.0, 97)
    ks = np.ceil(n * ts).astype(int)
    expect = math.sqrt(n) * (sample.values[ks - 1] - ts)
    assert np.allclose(b.value_at(ts), expect, atol=1e-12)


def test_local_hand_value_and_normalizations():
    sample = _sample([0.1, 0.2, 0.6, 0.9])
    a = 0.25
    raw = local_empirical_process(sample, a, GRID, normalization="raw")
    # alpha_4(0.125) = 2 * (1/4 - 0.125)
    assert raw.value_at([0.5])[0] == pytest.approx(0.25, abs=1e-15)
    flil = local_empirical_process(sample, a, GRID, normalization="flil")
    norm = math.sqrt(2.0 * a * iterated_log(4))
    assert flil.value_at([0.5])[0] == pytest.approx(0.25 / norm, rel=1e-14)


def test_local_full_window_recovers_empirical():
    sample = draw_uniform_sample(50, seed=3)
    g = empirical_process(sample, GRID)
    loc = local_empirical_process(sample, 1.0, GRID, normalization="raw")
    ts = np.linspace(0.0, 1.0, 301)
    assert np.allclose(loc.value_at(ts), g.value_at(ts), atol=1e-12)


def test_increment_to_local_ratio():
    # at t0 = 0 the two processes differ only in their normalizer
    n, a = 200, 0.04
    sample = draw_uniform_sample(n, seed=12)
    inc = increment_process(sample, 0.0, a, GRID)
    loc = local_empirical_process(sample, a, GRID, normalization="flil")
    ratio = math.sqrt(math.log(1.0 / a) / iterated_log(n))
    ts = np.linspace(0.0, 1.0, 257)
    assert np.allclose(inc.value_at(ts) * ratio, loc.value_at(ts), atol=1e-12)


def test_increment_hand_value():
    sample = _sample([0.1, 0.3, 0.55, 0.7])
    t0, a = 0.25, 0.5
    inc = increment_process(sample, t0, a, GRID)
    # alpha_4(0.5) - alpha_4(0.25) = 2*((2/4 - 0.5) - (1/4 - 0.25)) = 0
    assert inc.value_at([0.5])[0] == pytest.approx(0.0, abs=1e-14)
    # alpha_4(0.75) - alpha_4(0.25) = 2*((4/4 - 0.75) - 0) = 0.5
    expect = 0.5 / math.sqrt(2.0 * a * math.log(1.0 / a))
    assert inc.value_at([1.0])[0] == pytest.approx(expect, rel=1e-14)


def test_increment_rejects_bad_window():
    sample = draw_uniform_sample(10, seed=0)
    with pytest.raises(ValueError):
        increment_process(sample, 0.8, 0.4, GRID)
    with pytest.raises(ValueError):
        increment_process(sample, 0.0, 1.0, GRID)


def test_bridge_identity_pathwise():
    grid = Grid(64)
    for seed in range(5):
        w = gaussian_path("wiener", grid, seed)
        b = gaussian_path("brownian-bridge", grid, seed)
        expect = w.point_values - grid.points * w.point_values[-1]
        assert np.allclose(b.point_values, expect, atol=1e-12)
        assert b.point_values[-1] == pytest.approx(0.0, abs=1e-12)


def test_wiener_increment_moments():
    grid = Grid(8)
    incs = np.array([np.diff(gaussian_path("wiener", grid, s).point_values) for s in range(4000)])
    assert abs(incs.mean()) < 0.01
    assert abs(incs.var() - grid.delta) < 0.01


def test_poissonized_structure():
    n = 400
    g = poissonized_empirical(n, seed=7, grid=GRID)
    assert g.value_at([0.0])[0] == 0.0
    eta = g.value_at([1.0])[0] * math.sqrt(n) + n
    assert eta == pytest.approx(round(eta), abs=1e-9)
    assert abs(eta - n) < 6.0 * math.sqrt(n)
    # drift between jumps is -sqrt(n) * dt
    j = g.knots.size // 2
    dt = g.knots[j + 1] - g.knots[j]
    assert g.left_values[j + 1] - g.right_values[j] == pytest.approx(
        -math.sqrt(n) * dt, abs=1e-9
    )


def test_centered_poisson_path_endpoints():
    grid = Grid(32)
    p = centered_poisson_path(5.0, grid, seed=2)
    assert p.value_at([0.0])[0] == 0.0
    total = p.value_at([1.0])[0] + 5.0
    assert total == pytest.approx(round(total), abs=1e-12)


def test_draw_uniform_sample_reproducible_sorted():
    s1 = draw_uniform_sample(100, seed=5)
    s2 = draw_uniform_sample(100, seed=5)
    assert np.array_equal(s1.values, s2.values)
    assert np.all(np.diff(s1.values) >= 0)
    assert s1.values[0] >= 0.0 and s1.values[-1] <= 1.0
    assert not np.array_equal(s1.values, draw_uniform_sample(100, seed=6).values)


def test_sup_statistic_matches_limit_distribution():
    # 99th percentile of sup|alpha_n| against the Kolmogorov limit law
    reps, n = 1500, 1000
    sups = np.empty(reps)
    for i in range(reps):
        sups[i] = empirical_process(draw_uniform_sample(n, seed=10_000 + i), GRID).sup_abs()
    target = scipy.stats.kstwobign.ppf(0.99)
    assert abs(np.quantile(sups, 0.99) - target) < 0.12
