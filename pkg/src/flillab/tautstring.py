"""Minimum-energy path through a tube of box constraints (the taut string).

The tube prescribes, at each node of a partition of [0,1], an interval the
path must pass through; the path is pinned at the start and optionally at the
end. Among absolutely continuous paths satisfying the constraints, the
shortest path (computed by a funnel sweep over the vertical gates) is also the
minimizer of the Dirichlet energy, since its derivative pointwise-minimizes
every convex functional of the slope.

The sweep keeps an apex plus two slope-monotone chains (the funnel). Adding a
gate point either extends its own chain, trims it back to convexity, or, when
it falls outside the funnel cone, commits part of the opposite chain to the
output path and advances the apex. Feasibility is only a per-gate interval
check: with unconstrained slopes, distinct gates can always be joined.

With an unpinned right end the energy is convex in the end value; it is
minimized by ternary search, re-walking the remaining funnel per probe.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .paths import Grid, SmoothPath, _as_sorted_unit_knots

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def deco(f):
            return f

        return deco


@dataclass(frozen=True)
class Tube:
    """Box constraints at partition nodes, with pinned start and optional end.

    An inconsistent tube (crossing bounds, or a pin outside its interval) is a
    legal value marked infeasible, not a construction error.
    """

    knots: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    pinned_start: float = 0.0
    pinned_end: Optional[float] = None

    def __post_init__(self) -> None:
        knots = _as_sorted_unit_knots(self.knots)
        object.__setattr__(self, "knots", knots)
        for name in ("lower", "upper"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=float)
            if arr.shape != knots.shape:
                raise ValueError(f"{name} must match knots in shape")
            if np.any(np.isnan(arr)):
                raise ValueError(f"{name} must not contain NaN")
            object.__setattr__(self, name, arr)
        if np.isnan(self.pinned_start) or (self.pinned_end is not None and np.isnan(self.pinned_end)):
            raise ValueError("pinned values must not be NaN")

    @classmethod
    def from_grid(cls, grid: Grid, lower, upper, pinned_start: float = 0.0,
                  pinned_end: Optional[float] = None) -> "Tube":
        return cls(grid.points, np.asarray(lower, dtype=float),
                   np.asarray(upper, dtype=float), pinned_start, pinned_end)

    @property
    def feasible(self) -> bool:
        if np.any(self.lower > self.upper):
            return False
        if not (self.lower[0] <= self.pinned_start <= self.upper[0]):
            return False
        if self.pinned_end is not None and not (self.lower[-1] <= self.pinned_end <= self.upper[-1]):
            return False
        return True


TERNARY_TOL = 1e-10


@njit(cache=True)
def _walk_energy(ax, ay, uxs, uys, uh, uc, lxs, lys, lh, lc, xK, v):
    """Energy of the funnel walk from the apex to (xK, v), non-destructively."""
    e = 0.0
    while True:
        # constraints behind the apex are already satisfied by the fixed path
        while uc >= 1 and uxs[uh] <= ax:
            uh += 1
            uc -= 1
        while lc >= 1 and lxs[lh] <= ax:
            lh += 1
            lc -= 1
        moved = False
        if lc >= 1:
            lxh = lxs[lh]
            lyh = lys[lh]
            if (v - ay) * (lxh - ax) < (lyh - ay) * (xK - ax):
                e += (lyh - ay) * (lyh - ay) / (lxh - ax)
                ax = lxh
                ay = lyh
                lh += 1
                lc -= 1
                moved = True
        if not moved and uc >= 1:
            uxh = uxs[uh]
            uyh = uys[uh]
            if (v - ay) * (uxh - ax) > (uyh - ay) * (xK - ax):
                e += (uyh - ay) * (uyh - ay) / (uxh - ax)
                ax = uxh
                ay = uyh
                uh += 1
                uc -= 1
                moved = True
        if not moved:
            break
    e += (v - ay) * (v - ay) / (xK - ax)
    return e


@njit(cache=True)
def _funnel(x, lo, hi, y0, pin_end, y1, tern_tol):
    """Sweep the gates; returns (status, energy, path_x, path_y, n_path, end_value).

    status: 0 solved, 1 infeasible.
    """
    n = x.shape[0]
    px = np.empty(n + 2)
    py = np.empty(n + 2)
    # infeasibility: any empty gate, or a pin outside its gate
    bad = False
    for j in range(n):
        if lo[j] > hi[j]:
            bad = True
    if y0 < lo[0] or y0 > hi[0]:
        bad = True
    if pin_end and (y1 < lo[n - 1] or y1 > hi[n - 1]):
        bad = True
    if bad:
        return 1, 0.0, px, py, 0, 0.0

    uxs = np.empty(n)
    uys = np.empty(n)
    uh = 0
    uc = 0
    lxs = np.empty(n)
    lys = np.empty(n)
    lh = 0
    lc = 0
    px[0] = x[0]
    py[0] = y0
    npth = 1
    ax = x[0]
    ay = y0
    energy = 0.0

    for j in range(1, n - 1):
        xj = x[j]
        hij = hi[j]
        loj = lo[j]

        # upper gate point: trim the upper chain back to increasing slopes
        while uc >= 1:
            bx = uxs[uh + uc - 1]
            by = uys[uh + uc - 1]
            if uc >= 2:
                qx = uxs[uh + uc - 2]
                qy = uys[uh + uc - 2]
            else:
                qx = ax
                qy = ay
            if (by - qy) * (xj - bx) >= (hij - by) * (bx - qx):
                uc -= 1
            else:
                break
        if uc == 0:
            # point fell below the funnel cone: commit lower-chain wraps
            while lc >= 1:
                lxh = lxs[lh]
                lyh = lys[lh]
                if (hij - ay) * (lxh - ax) < (lyh - ay) * (xj - ax):
                    energy += (lyh - ay) * (lyh - ay) / (lxh - ax)
                    px[npth] = lxh
                    py[npth] = lyh
                    npth += 1
                    ax = lxh
                    ay = lyh
                    lh += 1
                    lc -= 1
                else:
                    break
        uxs[uh + uc] = xj
        uys[uh + uc] = hij
        uc += 1

        # lower gate point: mirror image
        while lc >= 1:
            bx = lxs[lh + lc - 1]
            by = lys[lh + lc - 1]
            if lc >= 2:
                qx = lxs[lh + lc - 2]
                qy = lys[lh + lc - 2]
            else:
                qx = ax
                qy = ay
            if (loj - by) * (bx - qx) >= (by - qy) * (xj - bx):
                lc -= 1
            else:
                break
        if lc == 0:
            while uc >= 1:
                uxh = uxs[uh]
                uyh = uys[uh]
                if (loj - ay) * (uxh - ax) > (uyh - ay) * (xj - ax):
                    energy += (uyh - ay) * (uyh - ay) / (uxh - ax)
                    px[npth] = uxh
                    py[npth] = uyh
                    npth += 1
                    ax = uxh
                    ay = uyh
                    uh += 1
                    uc -= 1
                else:
                    break
        lxs[lh + lc] = xj
        lys[lh + lc] = loj
        lc += 1

    # endgame at the final node
    xK = x[n - 1]
    if pin_end:
        v = y1
    else:
        a = lo[n - 1]
        b = hi[n - 1]
        while b - a > tern_tol:
            m1 = a + (b - a) / 3.0
            m2 = b - (b - a) / 3.0
            e1 = _walk_energy(ax, ay, uxs, uys, uh, uc, lxs, lys, lh, lc, xK, m1)
            e2 = _walk_energy(ax, ay, uxs, uys, uh, uc, lxs, lys, lh, lc, xK, m2)
            if e1 <= e2:
                b = m2
            else:
                a = m1
        v = 0.5 * (a + b)

    while True:
        while uc >= 1 and uxs[uh] <= ax:
            uh += 1
            uc -= 1
        while lc >= 1 and lxs[lh] <= ax:
            lh += 1
            lc -= 1
        moved = False
        if lc >= 1:
            lxh = lxs[lh]
            lyh = lys[lh]
            if (v - ay) * (lxh - ax) < (lyh - ay) * (xK - ax):
                energy += (lyh - ay) * (lyh - ay) / (lxh - ax)
                px[npth] = lxh
                py[npth] = lyh
                npth += 1
                ax = lxh
                ay = lyh
                lh += 1
                lc -= 1
                moved = True
        if not moved and uc >= 1:
            uxh = uxs[uh]
            uyh = uys[uh]
            if (v - ay) * (uxh - ax) > (uyh - ay) * (xK - ax):
                energy += (uyh - ay) * (uyh - ay) / (uxh - ax)
                px[npth] = uxh
                py[npth] = uyh
                npth += 1
                ax = uxh
                ay = uyh
                uh += 1
                uc -= 1
                moved = True
        if not moved:
            break
    energy += (v - ay) * (v - ay) / (xK - ax)
    px[npth] = xK
    py[npth] = v
    npth += 1
    return 0, energy, px, py, npth, v


def solve(tube: Tube, ternary_tol: float = TERNARY_TOL):
    """Run the funnel on a tube.

    Returns (energy, vertices_x, vertices_y) or None when infeasible.
    """
    x = tube.knots
    pin = tube.pinned_end is not None
    y1 = float(tube.pinned_end) if pin else 0.0
    status, energy, px, py, npth, _ = _funnel(
        x, tube.lower, tube.upper, float(tube.pinned_start), pin, y1, ternary_tol
    )
    if status != 0:
        return None
    return float(energy), px[:npth].copy(), py[:npth].copy()


def taut_string(tube: Tube) -> Optional[SmoothPath]:
    """The energy-minimal path through the tube, or None when infeasible.

    Slopes are reported per tube cell (the path's bend points are a subset of
    the tube nodes, so per-cell slopes represent it exactly).
    """
    out = solve(tube)
    if out is None:
        return None
    _, vx, vy = out
    node_values = np.interp(tube.knots, vx, vy)
    slopes = np.diff(node_values) / np.diff(tube.knots)
    return SmoothPath(tube.knots, slopes, start=float(tube.pinned_start))


def min_energy(tube: Tube) -> float:
    """Minimal tube energy; +inf when the tube is infeasible."""
    out = solve(tube)
    if out is None:
        return float("inf")
    return out[0]


def warmup() -> None:
    """Force JIT compilation so timed runs exclude it."""
    g = Grid(4)
    t = Tube.from_grid(g, -np.ones(5), np.ones(5), 0.0, 0.0)
    min_energy(t)
    t2 = Tube.from_grid(g, -np.ones(5), np.ones(5), 0.0, None)
    min_energy(t2)
