import math

import numpy as np
import pytest

from flillab.paths import Grid, SmoothPath
from flillab.smallball import (
    bridge_no_exit_probability,
    exact_centered_small_ball,
    gaussian_cluster_tail,
    small_ball_cameron_martin,
    small_ball_grid_trend,
    small_ball_naive,
)

ZERO = SmoothPath(np.array([0.0, 1.0]), np.array([0.0]))

# reference values of the alternating reflection series, checked against an
# independent 3000-term eigenfunction sum when this suite was frozen
SERIES_VALUES = {
    0.3: 1.4180619888e-06,
    0.5: 9.1569902898e-03,
    1.0: 3.7077742980e-01,
    2.0: 9.0899947615e-01,
}


def test_exact_series_frozen_values():
    for eps, val in SERIES_VALUES.items():
        assert exact_centered_small_ball(eps) == pytest.approx(val, rel=1e-9)
    assert exact_centered_small_ball(50.0) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        exact_centered_small_ball(0.0)


def test_naive_matches_series():
    est = small_ball_naive(ZERO, 1.0, 0.5, 50_000, Grid(128), seed=17)
    exact = exact_centered_small_ball(0.5)
    assert abs(est.p_hat - exact) <= 4.0 * est.std_err
    assert est.method == "naive"
    assert 0.0 <= est.p_hat <= 1.0


def test_boundary_correction_removes_grid_bias():
    # coarse grid: node-only indicator inflates p by many sigma, the
    # bridge-weighted score does not
    exact = exact_centered_small_ball(0.5)
    corrected = small_ball_naive(ZERO, 1.0, 0.5, 200_000, Grid(16), seed=6)
    assert abs(corrected.p_hat - exact) <= 4.0 * corrected.std_err
    uncorrected = small_ball_naive(
        ZERO, 1.0, 0.5, 200_000, Grid(16), seed=6, boundary_correction=False
    )
    assert uncorrected.p_hat - exact > 10.0 * uncorrected.std_err


def test_grid_trend_uncorrected_decreases():
    ests = small_ball_grid_trend(ZERO, 1.0, 0.5, 100_000, (32, 64, 128), seed=4)
    ps = [e.p_hat for e in ests]
    assert ps[0] > ps[1] > ps[2]
    assert all(not e.boundary_correction for e in ests)
    assert [e.grid_m for e in ests] == [32, 64, 128]
    assert ps[2] > exact_centered_small_ball(0.5)


def test_cameron_martin_equals_naive_at_zero_target():
    nv = small_ball_naive(ZERO, 2.0, 0.5, 30_000, Grid(64), seed=9)
    cm = small_ball_cameron_martin(ZERO, 2.0, 0.5, 30_000, Grid(64), seed=9)
    assert cm.p_hat == nv.p_hat
    assert cm.std_err == nv.std_err
    assert cm.hits == nv.hits


def test_cameron_martin_matches_naive_on_shifted_target():
    f = SmoothPath(np.array([0.0, 1.0]), np.array([1.0]))
    nv = small_ball_naive(f, 2.0, 0.6, 60_000, Grid(64), seed=14)
    cm = small_ball_cameron_martin(f, 2.0, 0.6, 60_000, Grid(64), seed=15)
    joint = math.hypot(nv.std_err, cm.std_err)
    assert abs(nv.p_hat - cm.p_hat) <= 4.0 * joint
    assert cm.max_log_weight != 0.0


def test_low_count_flag():
    est = small_ball_naive(ZERO, 1.0, 0.08, 2_000, Grid(64), seed=1)
    assert est.hits == 0
    assert est.low_count
    assert est.p_hat == 0.0
    assert est.std_err == 0.0


def test_bridge_no_exit_against_eigen_series():
    def eigen(u0, u1, L, h):
        s = 0.0
        for k in range(1, 3000):
            term = (
                (2.0 / L)
                * math.sin(k * math.pi * u0 / L)
                * math.sin(k * math.pi * u1 / L)
                * math.exp(-(k * k) * math.pi * math.pi * h / (2.0 * L * L))
            )
            s += term
            if k > 10 and abs(term) < 1e-18:
                break
        free = math.exp(-((u1 - u0) ** 2) / (2.0 * h)) / math.sqrt(2.0 * math.pi * h)
        return s / free

    cases = [
        (0.5, 0.5, 1.0, 0.1),
        (0.2, 0.8, 1.0, 0.25),
        (0.9, 0.1, 1.0, 0.3),
        (0.3, 0.3, 0.6, 0.05),
        (1.2, 0.4, 2.0, 0.5),
        (0.01, 0.5, 1.0, 0.2),
    ]
    for u0, u1, L, h in cases:
        mine = float(bridge_no_exit_probability(np.array([u0]), np.array([u1]), L, np.array([h]))[0])
        assert mine == pytest.approx(eigen(u0, u1, L, h), rel=1e-12)


def test_bridge_no_exit_boundary_cases():
    q = bridge_no_exit_probability(np.array([0.0, 1.0, -0.2]), np.array([0.5, 0.5, 0.5]), 1.0,
                                   np.array([0.1, 0.1, 0.1]))
    assert np.allclose(q[:2], 0.0, atol=1e-15)
    assert q[2] == 0.0


def test_cluster_tail_zero_radius_matches_small_ball():
    rep = gaussian_cluster_tail("S1-wiener", 0.0, 1.0, 2_000, Grid(1024), seed=3)
    exact_tail = 1.0 - exact_centered_small_ball(1.0)
    # 5 sigma: the piecewise-linear sup is biased low by a hair at m=1024
    assert abs(rep.p_hat - exact_tail) <= 5.0 * rep.std_err
    assert all(b <= a for a, b in zip(rep.scan_p, rep.scan_p[1:]))
    assert rep.fitted_offset is not None


def test_cluster_tail_scan_alignment():
    rep = gaussian_cluster_tail("S2-bridge", 1.0, 0.5, 1_000, Grid(256), seed=5)
    assert len(rep.scan_c) == len(rep.scan_p) == len(rep.scan_std_err)
    assert 0.0 <= rep.p_hat <= 1.0
    assert rep.reps == 1_000
    with pytest.raises(ValueError):
        gaussian_cluster_tail("S3-thing", 1.0, 0.5, 100, Grid(16), seed=0)
