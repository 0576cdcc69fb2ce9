"""Brute-force verification oracle for the tube energy minimization.

Solves the same box-constrained quadratic program as the taut string, but by
projected Gauss-Seidel sweeps on the node values: each coordinate update is
the exact unconstrained minimizer (the Delta-weighted average of the two
neighbors) clipped to its interval. The Hessian is a path-graph Laplacian, so
the sweeps converge linearly and monotonically. Deliberately small-scale and
independent of the funnel construction; intended for tests.
"""

from __future__ import annotations

import numpy as np

from .tautstring import Tube, njit

MAX_ORACLE_NODES = 129


@njit(cache=True)
def _pgs(x, lo, hi, y0, pin_end, y1, max_sweeps, tol):
    n = x.shape[0]
    f = np.empty(n)
    for j in range(n):
        a = lo[j]
        b = hi[j]
        f[j] = 0.5 * (a + b)
    f[0] = y0
    if pin_end:
        f[n - 1] = y1
    inv = np.empty(n - 1)
    for j in range(n - 1):
        inv[j] = 1.0 / (x[j + 1] - x[j])
    for _ in range(max_sweeps):
        delta = 0.0
        for j in range(1, n - 1):
            w0 = inv[j - 1]
            w1 = inv[j]
            target = (w0 * f[j - 1] + w1 * f[j + 1]) / (w0 + w1)
            if target < lo[j]:
                target = lo[j]
            elif target > hi[j]:
                target = hi[j]
            d = abs(target - f[j])
            if d > delta:
                delta = d
            f[j] = target
        if not pin_end:
            target = f[n - 2]
            if target < lo[n - 1]:
                target = lo[n - 1]
            elif target > hi[n - 1]:
                target = hi[n - 1]
            d = abs(target - f[n - 1])
            if d > delta:
                delta = d
            f[n - 1] = target
        if delta <= tol:
            break
    e = 0.0
    for j in range(n - 1):
        dy = f[j + 1] - f[j]
        e += dy * dy * inv[j]
    return e, f


def qp_min_energy(tube: Tube, max_sweeps: int = 400_000, tol: float = 1e-13):
    """Minimal tube energy by projected Gauss-Seidel; (+inf, None) if infeasible."""
    if tube.knots.size > MAX_ORACLE_NODES:
        raise ValueError(f"oracle limited to {MAX_ORACLE_NODES} nodes")
    if not tube.feasible:
        return float("inf"), None
    pin = tube.pinned_end is not None
    y1 = float(tube.pinned_end) if pin else 0.0
    energy, f = _pgs(tube.knots, tube.lower, tube.upper, float(tube.pinned_start),
                     pin, y1, max_sweeps, tol)
    return float(energy), f


def dense_qp_distance(g, ball, tolerance: float = 1e-8) -> float:
    """Distance to the scaled ball, with tube feasibility decided by the QP.

    Same bisection contract as the production route but none of its machinery.
    """
    from .geometry import build_tube  # shared tube semantics are the contract

    csq = ball.radius * ball.radius
    hi = g.sup_abs()
    if hi == 0.0:
        return 0.0
    lo = 0.0
    if g.knots.size > MAX_ORACLE_NODES:
        raise ValueError(f"oracle limited to {MAX_ORACLE_NODES} nodes")
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        tube = build_tube(g, mid, ball.kind)
        energy, _ = qp_min_energy(tube)
        if energy <= csq + 1e-12 * max(1.0, csq):
            hi = mid
        else:
            lo = mid
    return hi


def warmup() -> None:
    x = np.linspace(0.0, 1.0, 5)
    _pgs(x, -np.ones(5), np.ones(5), 0.0, True, 0.0, 10, 1e-12)
