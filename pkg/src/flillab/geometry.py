"""Sup-norm distances and membership queries against scaled Strassen balls.

S1 is the set of absolutely continuous f with f(0)=0 and Dirichlet energy at
most 1 (the Wiener reproducing-kernel unit ball); S2 additionally pins
f(1)=0 (the bridge ball). The distance from a path g to c*ball is the
smallest eps such that some f with energy <= c^2 stays within eps of g in sup
norm. That feasibility question is an energy minimization in an eps-tube,
solved exactly by the taut string; the minimal energy is nonincreasing in
eps, so the distance falls out of a bisection.

Tube construction is exact for the step-plus-drift and sampled-linear paths
produced by the simulator: constraints are imposed at every path node on the
value and both one-sided limits, which pins the whole path in between because
both g and the candidate are linear there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .paths import SmoothPath, Trajectory
from .tautstring import Tube, min_energy, taut_string

# When set (tests do), every certificate returned by strassen_distance and
# membership is mechanically re-checked against its tube and energy budget.
VALIDATE_CERTIFICATES = False

_BALL_KINDS = ("S1", "S2")


@dataclass(frozen=True)
class BallSpec:
    kind: str
    radius: float

    def __post_init__(self) -> None:
        if self.kind not in _BALL_KINDS:
            raise ValueError("ball kind must be 'S1' or 'S2'")
        if not (self.radius >= 0.0) or math.isnan(self.radius):
            raise ValueError("ball radius must be >= 0")


@dataclass(frozen=True)
class DistanceResult:
    epsilon: float
    certificate: SmoothPath
    rigorous_bound: float
    iterations: int
    tolerance: float


@dataclass(frozen=True)
class MembershipResult:
    member: bool
    certificate: SmoothPath | None
    energy: float
    threshold: float

    def __bool__(self) -> bool:
        return self.member


def h_norm(f: SmoothPath) -> float:
    """The Hilbert norm sqrt(integral of squared slope)."""
    return math.sqrt(f.energy)


def build_tube(g: Trajectory, epsilon: float, ball_kind: str) -> Tube:
    """The eps-tube around g with ball endpoint pins, on g's own nodes.

    Node j constrains candidates to [max(value, limits) - eps,
    min(value, limits) + eps]; for paths linear between nodes this is the
    exact rendering of sup|f - g| <= eps over all of [0,1].
    """
    if ball_kind not in _BALL_KINDS:
        raise ValueError("ball kind must be 'S1' or 'S2'")
    if math.isnan(epsilon):
        raise ValueError("epsilon must not be NaN")
    lo, hi = g.node_bounds()
    return Tube(
        knots=g.knots,
        lower=hi - epsilon,
        upper=lo + epsilon,
        pinned_start=0.0,
        pinned_end=0.0 if ball_kind == "S2" else None,
    )


def min_energy_in_tube(g: Trajectory, epsilon: float, ball_kind: str) -> float:
    """Minimal candidate energy within the eps-tube; +inf when infeasible."""
    if not epsilon > 0.0:
        raise ValueError("epsilon must be > 0")
    return min_energy(build_tube(g, epsilon, ball_kind))


def _energy_tol(csq: float) -> float:
    return 1e-12 * max(1.0, csq)


def _validate_certificate(g: Trajectory, cert: SmoothPath, epsilon: float, ball: BallSpec) -> None:
    tube = build_tube(g, epsilon, ball.kind)
    vals = cert.node_values
    slack = 1e-9 * max(1.0, float(np.max(np.abs(vals))))
    if np.any(vals < tube.lower - slack) or np.any(vals > tube.upper + slack):
        raise AssertionError("certificate leaves its tube")
    if abs(vals[0] - tube.pinned_start) > 1e-12:
        raise AssertionError("certificate start is not pinned")
    if tube.pinned_end is not None and abs(vals[-1] - tube.pinned_end) > 1e-9:
        raise AssertionError("certificate end is not pinned")
    csq = ball.radius * ball.radius
    if cert.energy > csq + 1e-9:
        raise AssertionError("certificate exceeds the energy budget")


def strassen_distance(g: Trajectory, ball: BallSpec, tolerance: float = 1e-8) -> DistanceResult:
    """Smallest eps (within tolerance) with min tube energy <= radius^2.

    Bisection on [0, sup|g|]: the zero path is always feasible at
    eps = sup|g|, and min energy is nonincreasing in eps. The reported eps is
    the feasible (upper) end of the final bracket, so the certificate is a
    genuine witness.
    """
    if not tolerance > 0.0:
        raise ValueError("tolerance must be > 0")
    csq = ball.radius * ball.radius
    etol = _energy_tol(csq)
    hi = g.sup_abs()
    if hi == 0.0:
        cert = SmoothPath(g.knots, np.zeros(g.knots.size - 1))
        return DistanceResult(0.0, cert, 0.0, 0, tolerance)
    lo = 0.0
    iterations = 0
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        energy = min_energy(build_tube(g, mid, ball.kind))
        iterations += 1
        if energy <= csq + etol:
            hi = mid
        else:
            lo = mid
    cert = taut_string(build_tube(g, hi, ball.kind))
    if cert is None:  # the bracket invariant guarantees feasibility at hi
        raise RuntimeError("feasible bracket end produced no certificate")
    delta_max = float(np.max(np.diff(g.knots)))
    bound = math.sqrt(max(cert.energy, 0.0)) * math.sqrt(delta_max)
    if VALIDATE_CERTIFICATES:
        _validate_certificate(g, cert, hi, ball)
    return DistanceResult(float(hi), cert, bound, iterations, tolerance)


def membership(g: Trajectory, ball: BallSpec, epsilon: float) -> MembershipResult:
    """Is g within eps of the scaled ball? Certificate or energy excess witness."""
    if not epsilon > 0.0:
        raise ValueError("epsilon must be > 0")
    csq = ball.radius * ball.radius
    tube = build_tube(g, epsilon, ball.kind)
    energy = min_energy(tube)
    if energy <= csq + _energy_tol(csq):
        cert = taut_string(tube)
        if VALIDATE_CERTIFICATES and cert is not None:
            _validate_certificate(g, cert, epsilon, ball)
        return MembershipResult(True, cert, energy, csq)
    # witness of failure: the minimizing path when one exists (its energy
    # exceeds the budget), or nothing when the tube itself is empty
    cert = taut_string(tube) if math.isfinite(energy) else None
    return MembershipResult(False, cert, energy, csq)


def sup_norm_distance(g: Trajectory, f: SmoothPath) -> tuple[float, float]:
    """Exact sup of |g - f| over nodes and one-sided limits, plus a modulus bound.

    The value is exact for piecewise-linear g and f (extremes sit at nodes of
    the union partition). The bound sqrt(f.energy * max cell width) is the
    uncertainty radius to attach when g stands in for an unsampled continuous
    path between its nodes.
    """
    ts = np.union1d(g.knots, f.knots)
    fv = f.value_at(ts)
    dv = np.abs(g.value_at(ts) - fv)
    dl = np.abs(g.left_limit_at(ts) - fv)
    dr = np.abs(g.right_limit_at(ts) - fv)
    value = float(max(dv.max(), dl.max(), dr.max()))
    delta_max = float(np.max(np.diff(f.knots)))
    bound = math.sqrt(max(f.energy, 0.0)) * math.sqrt(delta_max)
    return value, bound
