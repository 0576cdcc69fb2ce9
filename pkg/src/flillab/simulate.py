"""Seedable simulation of every stochastic object used by the experiments.

Empirical-type paths are exact step-plus-drift trajectories built on their own
jump points; Gaussian paths are sampled on a uniform grid and linearly
interpolated. All draws go through keyed Philox streams (see rng.stream), so
each object is a pure function of its structural parameters and seed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .loglog import iterated_log
from .paths import Grid, Trajectory, linear_trajectory, step_drift_trajectory
from .rng import stream


@dataclass(frozen=True)
class UniformSample:
    """n sorted uniform variates plus the seed that reproduces them."""

    n: int
    values: np.ndarray
    seed: int

    def __post_init__(self) -> None:
        values = np.ascontiguousarray(self.values, dtype=float)
        if self.n < 1:
            raise ValueError("sample size must be >= 1")
        if values.shape != (self.n,):
            raise ValueError("values must have length n")
        if np.any((values < 0.0) | (values > 1.0)):
            raise ValueError("sample values must lie in [0,1]")
        if np.any(np.diff(values) < 0):
            raise ValueError("sample values must be sorted ascending")
        object.__setattr__(self, "values", values)


def draw_uniform_sample(n: int, seed: int) -> UniformSample:
    if n < 1:
        raise ValueError("sample size must be >= 1")
    rng = stream("uniform-sample", n, seed)
    values = np.sort(rng.random(n))
    return UniformSample(n=n, values=values, seed=seed)


def empirical_process(sample: UniformSample, grid: Grid) -> Trajectory:
    """sqrt(n) * (F_n - id): unit jumps at the sample points, linear drift between."""
    n = sample.n
    scale = 1.0 / math.sqrt(n)
    return step_drift_trajectory(
        jump_ts=sample.values,
        jump_sizes=np.ones(n),
        drift=-float(n),
        scale=scale,
        grid=grid,
        meta={"n": n, "seed": sample.seed},
    )


def quantile_process(sample: UniformSample, grid: Grid) -> Trajectory:
    """sqrt(n) * (inverse empirical CDF - id), left-continuous steps at k/n.

    The generalized inverse is the k-th order statistic on ((k-1)/n, k/n]; at
    t = 0 it is taken to be 0, keeping the path 0 at the origin.
    """
    n = sample.n
    u = sample.values
    rootn = math.sqrt(n)
    knots = np.linspace(0.0, 1.0, n + 1)
    point = np.empty(n + 1)
    point[0] = 0.0
    point[1:] = rootn * (u - knots[1:])
    left = point.copy()
    right = np.empty(n + 1)
    right[:-1] = rootn * (u - knots[:-1])
    right[-1] = point[-1]
    return Trajectory(knots, point, left, right, "cadlag-step", grid,
                      meta={"n": n, "seed": sample.seed})


def local_empirical_process(
    sample: UniformSample,
    a_n: float,
    grid: Grid,
    normalization: str = "flil",
) -> Trajectory:
    """s -> alpha_n(a_n * s), optionally divided by sqrt(2 a_n loglog n).

    The flil normalizer vanishes for n <= 2 under the loglog clamping
    convention, so that mode requires n >= 3.
    """
    if not (0.0 < a_n <= 1.0):
        raise ValueError("bandwidth must lie in (0, 1]")
    if normalization not in ("flil", "raw"):
        raise ValueError("normalization must be 'flil' or 'raw'")
    n = sample.n
    if normalization == "flil":
        if n < 3:
            raise ValueError("flil normalization needs n >= 3 (normalizer is 0 below)")
        denom = math.sqrt(n) * math.sqrt(2.0 * a_n * iterated_log(n))
    else:
        denom = math.sqrt(n)
    if n * a_n < 1.0:
        warnings.warn("window n*a_n < 1: local path is almost surely jump-free", stacklevel=2)
    inside = sample.values[sample.values <= a_n]
    return step_drift_trajectory(
        jump_ts=np.clip(inside / a_n, 0.0, 1.0),
        jump_sizes=np.ones(inside.size),
        drift=-float(n) * a_n,
        scale=1.0 / denom,
        grid=grid,
        meta={"n": n, "seed": sample.seed, "a_n": a_n, "normalization": normalization},
    )


def increment_process(sample: UniformSample, t0: float, a_n: float, grid: Grid) -> Trajectory:
    """s -> (alpha_n(t0 + a_n s) - alpha_n(t0)) / sqrt(2 a_n log(1/a_n))."""
    if not (0.0 < a_n < 1.0):
        raise ValueError("bandwidth must lie in (0, 1) for the increment normalizer")
    if t0 < 0.0 or t0 + a_n > 1.0 + 1e-12:
        raise ValueError("window [t0, t0 + a_n] must lie inside [0, 1]")
    n = sample.n
    denom = math.sqrt(n) * math.sqrt(2.0 * a_n * math.log(1.0 / a_n))
    u = sample.values
    inside = u[(u > t0) & (u <= t0 + a_n)]
    return step_drift_trajectory(
        jump_ts=np.clip((inside - t0) / a_n, 0.0, 1.0),
        jump_sizes=np.ones(inside.size),
        drift=-float(n) * a_n,
        scale=1.0 / denom,
        grid=grid,
        meta={"n": n, "seed": sample.seed, "a_n": a_n, "t0": t0},
    )


def poissonized_empirical(n: int, seed: int, grid: Grid) -> Trajectory:
    """n^{-1/2} (count of the first eta uniforms at or below t - n t), eta ~ Poisson(n).

    Centering is by n*t so the path is a centered martingale matching the
    scaled centered Poisson path in distribution; with eta = 0 it degenerates
    to -sqrt(n) * t.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = stream("poissonized-empirical", n, seed)
    eta = int(rng.poisson(n))
    points = np.sort(rng.random(eta)) if eta > 0 else np.empty(0)
    return step_drift_trajectory(
        jump_ts=points,
        jump_sizes=np.ones(eta),
        drift=-float(n),
        scale=1.0 / math.sqrt(n),
        grid=grid,
        meta={"n": n, "seed": seed, "eta": eta},
    )


def gaussian_path(kind: str, grid: Grid, seed: int) -> Trajectory:
    """Wiener path by cumulative Gaussian increments, bridge as W(t) - t W(1).

    Both kinds consume the same increments for the same seed, so the bridge
    identity holds path by path, not merely in distribution.
    """
    if kind not in ("wiener", "brownian-bridge"):
        raise ValueError("kind must be 'wiener' or 'brownian-bridge'")
    rng = stream("gaussian-path", grid.m, seed)
    dw = rng.standard_normal(grid.m) * math.sqrt(grid.delta)
    w = np.concatenate([[0.0], np.cumsum(dw)])
    if kind == "brownian-bridge":
        w = w - grid.points * w[-1]
    return linear_trajectory(grid.points, w, grid, meta={"seed": seed, "kind": kind})


def centered_poisson_path(T: float, grid: Grid, seed: int) -> Trajectory:
    """s -> N(T s) - T s on the grid, N a unit-rate Poisson counting process.

    Only grid counts are drawn; jump positions between grid nodes are not
    stored, so jumps are attributed to the node that closes their cell.
    """
    if not T > 0.0:
        raise ValueError("T must be > 0")
    rng = stream("centered-poisson", grid.m, seed, float(T))
    increments = rng.poisson(T * grid.delta, size=grid.m).astype(float)
    return step_drift_trajectory(
        jump_ts=grid.points[1:],
        jump_sizes=increments,
        drift=-float(T),
        scale=1.0,
        grid=grid,
        meta={"seed": seed, "T": float(T)},
    )
