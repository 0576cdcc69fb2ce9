"""Rate bookkeeping for Chung-type laws.

Holds the rate function applied to the iterated logarithm, the closed-form
interior constant, and the classification of target paths as interior or
boundary points of the energy ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from .geometry import h_norm
from .paths import SmoothPath

RATE_KINDS = ("bv", "linear", "custom")
CHUNG_TARGET_KINDS = ("interior", "bv-boundary")
BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class RateFnSpec:
    """Rate function for boundary targets.

    kind="bv" is the closed form L**(2/3). kind="linear" is the identity,
    the scaling the interior-target law uses. kind="custom" interpolates a
    tabulated (L, value) list and refuses queries outside the table range.
    """

    kind: str = "bv"
    table: Optional[Tuple[Tuple[float, float], ...]] = None

    def __post_init__(self):
        if self.kind not in RATE_KINDS:
            raise ValueError(f"unknown rate kind {self.kind!r}")
        if self.kind in ("bv", "linear"):
            if self.table is not None:
                raise ValueError(f"{self.kind} rate takes no table")
            return
        if self.table is None or len(self.table) < 2:
            raise ValueError("custom rate needs at least two (L, value) rows")
        ls = np.asarray([row[0] for row in self.table], dtype=float)
        vs = np.asarray([row[1] for row in self.table], dtype=float)
        if not (np.all(np.isfinite(ls)) and np.all(np.isfinite(vs))):
            raise ValueError("rate table entries must be finite")
        if ls[0] <= 0.0 or np.any(np.diff(ls) <= 0.0):
            raise ValueError("rate table abscissae must be positive and strictly increasing")
        if np.any(vs <= 0.0):
            raise ValueError("rate values must be positive")
        if np.any(np.diff(vs) < 0.0):
            raise ValueError("rate values must be nondecreasing")

    def domain(self) -> Tuple[float, float]:
        if self.kind in ("bv", "linear"):
            return (0.0, math.inf)
        return (float(self.table[0][0]), float(self.table[-1][0]))


def rate_function(spec: RateFnSpec, L: float) -> float:
    """Evaluate the rate function at L > 0."""
    if not L > 0.0:
        raise ValueError("rate function argument must be positive")
    if spec.kind == "bv":
        return float(L) ** (2.0 / 3.0)
    if spec.kind == "linear":
        return float(L)
    lo, hi = spec.domain()
    if L < lo or L > hi:
        raise ValueError(f"L={L} outside custom rate table range [{lo}, {hi}]")
    ls = np.asarray([row[0] for row in spec.table], dtype=float)
    vs = np.asarray([row[1] for row in spec.table], dtype=float)
    return float(np.interp(L, ls, vs))


@dataclass(frozen=True)
class RateScanReport:
    kind: str
    n_points: int
    max_ratio_to_linear: float
    min_ratio_to_two_thirds: float
    tail_flags: Tuple[str, ...]

    @property
    def clean(self) -> bool:
        return not self.tail_flags


def rate_side_condition_scan(spec: RateFnSpec, n_points: int = 64) -> RateScanReport:
    """Check the two tail side conditions on a log-spaced scan.

    The rate must stay below a multiple of L (ratio to L bounded above) and
    above a multiple of L**(2/3) (ratio to L**(2/3) bounded away from zero).
    Finite scans cannot certify limits, so tail misbehavior is flagged rather
    than refused: a ratio-to-linear that is still climbing at the right edge,
    or a ratio-to-two-thirds that is still sinking there.
    """
    if n_points < 8:
        raise ValueError("scan needs at least 8 points")
    if spec.kind in ("bv", "linear"):
        ls = np.logspace(0.0, 9.0, n_points)
    else:
        lo, hi = spec.domain()
        ls = np.logspace(math.log10(lo), math.log10(hi), n_points)
    vals = np.asarray([rate_function(spec, float(L)) for L in ls])
    if np.any(vals <= 0.0):
        raise ValueError("rate scan found a nonpositive value")
    if np.any(np.diff(vals) < -1e-12 * np.abs(vals[:-1])):
        raise ValueError("rate scan found a decreasing stretch")
    r_lin = vals / ls
    r_23 = vals / ls ** (2.0 / 3.0)
    tail = slice(2 * n_points // 3, None)
    flags = []
    if np.all(np.diff(r_lin[tail]) > 0.0):
        flags.append("ratio-to-linear-climbing-at-tail")
    if np.all(np.diff(r_23[tail]) < 0.0):
        flags.append("ratio-to-two-thirds-sinking-at-tail")
    return RateScanReport(
        kind=spec.kind,
        n_points=n_points,
        max_ratio_to_linear=float(r_lin.max()),
        min_ratio_to_two_thirds=float(r_23.min()),
        tail_flags=tuple(flags),
    )


def chung_constant_interior(f: SmoothPath, convention: str = "norm") -> float:
    """Closed-form liminf constant for targets strictly inside the energy ball.

    convention="norm" uses pi / (4 sqrt(1 - h)) with h the energy norm, as
    printed in the source statement; convention="squared-norm" uses the
    classical pi / (4 sqrt(1 - h^2)). Both agree at f = 0. The discrepancy is
    documented, not resolved; norm is the default.
    """
    if convention not in ("norm", "squared-norm"):
        raise ValueError(f"unknown convention {convention!r}")
    h = h_norm(f)
    if h >= 1.0:
        raise ValueError("interior constant needs energy norm below 1")
    if convention == "norm":
        return math.pi / (4.0 * math.sqrt(1.0 - h))
    return math.pi / (4.0 * math.sqrt(1.0 - h * h))


@dataclass(frozen=True)
class ChungTarget:
    """A target path together with its classification.

    kind="interior" requires energy norm strictly below 1; kind="bv-boundary"
    requires energy norm equal to 1 (within BOUNDARY_TOL). chi_f is the
    limiting constant: a float when known in closed form, the string
    "estimated" when it is an output of the experiment.
    """

    f: SmoothPath
    kind: str
    chi_f: Union[float, str] = "estimated"

    def __post_init__(self):
        if self.kind not in CHUNG_TARGET_KINDS:
            raise ValueError(f"unknown target kind {self.kind!r}")
        h = h_norm(self.f)
        if self.kind == "interior" and not h < 1.0 - BOUNDARY_TOL:
            raise ValueError(f"interior target needs energy norm < 1, got {h}")
        if self.kind == "bv-boundary" and abs(h - 1.0) > BOUNDARY_TOL:
            raise ValueError(f"boundary target needs energy norm 1, got {h}")
        if isinstance(self.chi_f, str):
            if self.chi_f != "estimated":
                raise ValueError("chi_f must be a float or the string 'estimated'")
        elif not (isinstance(self.chi_f, (int, float)) and math.isfinite(self.chi_f) and self.chi_f > 0):
            raise ValueError("numeric chi_f must be finite and positive")


def classify_chung_target(f: SmoothPath, convention: str = "norm") -> ChungTarget:
    """Classify f and fill in chi_f where a closed form exists."""
    h = h_norm(f)
    if h < 1.0 - BOUNDARY_TOL:
        return ChungTarget(f=f, kind="interior", chi_f=chung_constant_interior(f, convention))
    if abs(h - 1.0) <= BOUNDARY_TOL:
        return ChungTarget(f=f, kind="bv-boundary", chi_f="estimated")
    raise ValueError(f"target with energy norm {h} > 1 is outside the energy ball")
