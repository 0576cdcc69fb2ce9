"""Path types: uniform grids, exact piecewise-linear trajectories, smooth certificates.

A Trajectory stores, at each node of a sorted partition of [0,1], the value,
the left limit, and the right limit, and is linear between nodes. That covers
two exact families:

* step-plus-drift paths (empirical-type processes): jumps live at the nodes,
  the drift is the linear part between them;
* sampled continuous paths (Gaussian paths): value = both limits at each node.

Because everything is linear between nodes, sup-norm quantities evaluated at
nodes and one-sided limits are exact, not grid approximations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform partition of [0,1] into m cells."""

    m: int

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError("grid cell count must be >= 1")

    @property
    def delta(self) -> float:
        return 1.0 / self.m

    @property
    def points(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.m + 1)


def _as_sorted_unit_knots(knots: np.ndarray) -> np.ndarray:
    knots = np.ascontiguousarray(knots, dtype=float)
    if knots.ndim != 1 or knots.size < 2:
        raise ValueError("knots must be a 1-d array with at least two entries")
    if not (knots[0] == 0.0 and knots[-1] == 1.0):
        raise ValueError("knots must start at 0 and end at 1")
    if np.any(np.diff(knots) <= 0):
        raise ValueError("knots must be strictly increasing")
    if np.any(~np.isfinite(knots)):
        raise ValueError("knots must be finite")
    return knots


@dataclass(frozen=True)
class Trajectory:
    """Piecewise-linear-between-nodes path with one-sided limits at nodes.

    Between knots[j] and knots[j+1] the path runs linearly from
    right_values[j] to left_values[j+1]. point_values[j] is the value exactly
    at knots[j]. Conventions: left_values[0] = point_values[0] and
    right_values[-1] = point_values[-1].
    """

    knots: np.ndarray
    point_values: np.ndarray
    left_values: np.ndarray
    right_values: np.ndarray
    interp: str  # "cadlag-step" | "linear"
    grid: Optional[Grid] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        knots = _as_sorted_unit_knots(self.knots)
        object.__setattr__(self, "knots", knots)
        for name in ("point_values", "left_values", "right_values"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=float)
            if arr.shape != knots.shape:
                raise ValueError(f"{name} must match knots in shape")
            if np.any(~np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, arr)
        if self.interp not in ("cadlag-step", "linear"):
            raise ValueError("interp must be 'cadlag-step' or 'linear'")

    # -- evaluation ---------------------------------------------------------

    def _interp_open(self, ts: np.ndarray, idx: np.ndarray) -> np.ndarray:
        """Value at ts strictly inside segment (knots[idx], knots[idx+1])."""
        x0 = self.knots[idx]
        x1 = self.knots[idx + 1]
        y0 = self.right_values[idx]
        y1 = self.left_values[idx + 1]
        w = (ts - x0) / (x1 - x0)
        return y0 + (y1 - y0) * w

    def _eval(self, ts, at_node: np.ndarray) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        if np.any((ts < 0.0) | (ts > 1.0)):
            raise ValueError("evaluation points must lie in [0,1]")
        idx = np.searchsorted(self.knots, ts, side="left")
        idx = np.clip(idx, 0, len(self.knots) - 1)
        exact = self.knots[idx] == ts
        out = np.empty_like(ts)
        out[exact] = at_node[idx[exact]]
        if np.any(~exact):
            seg = idx[~exact] - 1
            out[~exact] = self._interp_open(ts[~exact], seg)
        return out

    def value_at(self, ts) -> np.ndarray:
        return self._eval(ts, self.point_values)

    def left_limit_at(self, ts) -> np.ndarray:
        return self._eval(ts, self.left_values)

    def right_limit_at(self, ts) -> np.ndarray:
        return self._eval(ts, self.right_values)

    # -- exact sup-norm data --------------------------------------------------

    def node_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-node (min, max) over {value, left limit, right limit}.

        Since the path is linear between nodes, these bound the path exactly:
        its range over [0,1] is [min over nodes, max over nodes].
        """
        lo = np.minimum(np.minimum(self.point_values, self.left_values), self.right_values)
        hi = np.maximum(np.maximum(self.point_values, self.left_values), self.right_values)
        return lo, hi

    def sup_abs(self) -> float:
        lo, hi = self.node_bounds()
        return float(max(np.max(hi), -np.min(lo), 0.0))

    @property
    def values(self) -> np.ndarray:
        """Samples at the attached grid's points (value convention at jumps)."""
        if self.grid is None:
            return self.point_values.copy()
        return self.value_at(self.grid.points)

    @property
    def jump_points(self) -> np.ndarray:
        tol = 0.0
        jumps = (np.abs(self.point_values - self.left_values) > tol) | (
            np.abs(self.right_values - self.point_values) > tol
        )
        return self.knots[jumps]

    def scaled(self, factor: float) -> "Trajectory":
        return Trajectory(
            knots=self.knots,
            point_values=self.point_values * factor,
            left_values=self.left_values * factor,
            right_values=self.right_values * factor,
            interp=self.interp,
            grid=self.grid,
            meta=dict(self.meta),
        )


def step_drift_trajectory(
    jump_ts: np.ndarray,
    jump_sizes: np.ndarray,
    drift: float,
    scale: float,
    grid: Optional[Grid] = None,
    meta: Optional[dict] = None,
) -> Trajectory:
    """Right-continuous path t -> scale * (sum of jumps at or before t + drift * t).

    Jumps strictly inside (0,1); values at coincident jump locations merge.
    """
    jump_ts = np.asarray(jump_ts, dtype=float)
    jump_sizes = np.asarray(jump_sizes, dtype=float)
    if np.any((jump_ts < 0.0) | (jump_ts > 1.0)):
        raise ValueError("jump locations must lie in [0,1]")
    pts, inv = np.unique(jump_ts, return_inverse=True)
    sizes = np.zeros(pts.shape)
    np.add.at(sizes, inv, jump_sizes)
    knots = pts
    lead = knots.size == 0 or knots[0] > 0.0
    trail = knots.size == 0 or knots[-1] < 1.0
    knots = np.concatenate([[0.0] if lead else [], knots, [1.0] if trail else []])
    full_sizes = np.concatenate([[0.0] if lead else [], sizes, [0.0] if trail else []])
    cum = np.cumsum(full_sizes)
    point = scale * (cum + drift * knots)
    left = scale * (cum - full_sizes + drift * knots)
    right = point.copy()
    left[0] = point[0]
    return Trajectory(knots, point, left, right, "cadlag-step", grid, meta or {})


def linear_trajectory(knots: np.ndarray, values: np.ndarray, grid: Optional[Grid] = None,
                      meta: Optional[dict] = None) -> Trajectory:
    values = np.asarray(values, dtype=float)
    return Trajectory(knots, values, values.copy(), values.copy(), "linear", grid, meta or {})


@dataclass(frozen=True)
class SmoothPath:
    """Absolutely continuous candidate: constant slope per cell, f(0) = start.

    energy is the Dirichlet energy (integral of the squared slope), the squared
    Hilbert norm of the ball geometry.
    """

    knots: np.ndarray
    slopes: np.ndarray
    start: float = 0.0

    def __post_init__(self) -> None:
        knots = _as_sorted_unit_knots(self.knots)
        object.__setattr__(self, "knots", knots)
        slopes = np.ascontiguousarray(self.slopes, dtype=float)
        if slopes.shape != (knots.size - 1,):
            raise ValueError("slopes must have one entry per cell")
        if np.any(~np.isfinite(slopes)):
            raise ValueError("slopes must be finite")
        object.__setattr__(self, "slopes", slopes)

    @classmethod
    def from_grid(cls, grid: Grid, slopes: np.ndarray, start: float = 0.0) -> "SmoothPath":
        return cls(grid.points, slopes, start)

    @property
    def energy(self) -> float:
        return float(np.sum(self.slopes**2 * np.diff(self.knots)))

    @property
    def node_values(self) -> np.ndarray:
        vals = np.empty(self.knots.size)
        vals[0] = self.start
        np.cumsum(self.slopes * np.diff(self.knots), out=vals[1:])
        vals[1:] += self.start
        return vals

    def value_at(self, ts) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        return np.interp(ts, self.knots, self.node_values)

    def end_value(self) -> float:
        return float(self.node_values[-1])
