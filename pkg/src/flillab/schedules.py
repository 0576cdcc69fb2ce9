"""Index and bandwidth schedules, plus the side-condition checker that
experiments consult before running bandwidth-dependent statistics.

Power bandwidths are decided symbolically from the exponent. Table bandwidths
can only be trend-checked over their finite range, so violations there are
flagged, not refused.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .loglog import iterated_log
from .rates import RateFnSpec, rate_function

INDEX_KINDS = ("geometric", "blocking")
BANDWIDTH_KINDS = ("power", "table")
REGIMES = ("local-empirical", "local-quantile", "chung")

CONDITION_DESCRIPTIONS = {
    "bandwidth-decreasing": "a_n decreases to 0",
    "window-count-grows": "n*a_n increases to infinity",
    "window-beats-loglog-7-3": "n*a_n / (log2 n)^(7/3) diverges",
    "window-beats-loglog-11-3": "n*a_n / (log2 n)^(11/3) diverges",
    "window-times-loglog-vanishes": "a_n * log2 n tends to 0",
    "window-beats-loglog-rate": "n*a_n / (log2 n * rate(log2 n)^2) diverges",
}

REGIME_CONDITIONS = {
    "local-empirical": (
        "bandwidth-decreasing",
        "window-count-grows",
        "window-beats-loglog-7-3",
    ),
    "local-quantile": (
        "bandwidth-decreasing",
        "window-count-grows",
        "window-beats-loglog-7-3",
        "window-beats-loglog-11-3",
    ),
    "chung": (
        "bandwidth-decreasing",
        "window-count-grows",
        "window-times-loglog-vanishes",
        "window-beats-loglog-rate",
    ),
}

_RATIO_EXPONENT = {
    "window-beats-loglog-7-3": 7.0 / 3.0,
    "window-beats-loglog-11-3": 11.0 / 3.0,
}


def blocking_sequence(k: int) -> int:
    """floor(exp(k * exp(-(log k)^(1/6)))) for integer k >= 2."""
    if k < 2:
        raise ValueError("blocking sequence needs k >= 2")
    return int(math.floor(math.exp(k * math.exp(-((math.log(k)) ** (1.0 / 6.0))))))


@dataclass(frozen=True)
class IndexSchedule:
    """Strictly increasing sample sizes to visit.

    geometric: n_{j+1} = ceil(ratio * n_j) starting from `start`, `count`
    entries. blocking: the sparse sequence blocking_sequence(k) for k in
    [k_min, k_max], deduplicated to keep strict increase.
    """

    kind: str = "geometric"
    start: Optional[int] = None
    ratio: Optional[float] = None
    count: Optional[int] = None
    k_min: Optional[int] = None
    k_max: Optional[int] = None

    def __post_init__(self):
        if self.kind not in INDEX_KINDS:
            raise ValueError(f"unknown index schedule kind {self.kind!r}")
        if self.kind == "geometric":
            if self.start is None or self.ratio is None or self.count is None:
                raise ValueError("geometric schedule needs start, ratio, count")
            if self.start < 1:
                raise ValueError("start must be >= 1")
            if not self.ratio > 1.0:
                raise ValueError("ratio must exceed 1")
            if self.count < 1:
                raise ValueError("count must be >= 1")
        else:
            if self.k_min is None or self.k_max is None:
                raise ValueError("blocking schedule needs k_min and k_max")
            if self.k_min < 2 or self.k_max < self.k_min:
                raise ValueError("blocking schedule needs 2 <= k_min <= k_max")

    def indices(self) -> Tuple[int, ...]:
        if self.kind == "geometric":
            out = [int(self.start)]
            for _ in range(self.count - 1):
                out.append(int(math.ceil(self.ratio * out[-1])))
            return tuple(out)
        raw = [blocking_sequence(k) for k in range(self.k_min, self.k_max + 1)]
        out = []
        for v in raw:
            if not out or v > out[-1]:
                out.append(v)
        return tuple(out)


@dataclass(frozen=True)
class BandwidthSchedule:
    """The window widths a_n.

    power: a_n = n^(-theta) with 0 < theta <= 1. theta = 1 is constructible on
    purpose so that the condition checker, not the constructor, refuses it by
    name. table: explicit (n, a_n) rows, queried by exact n.
    """

    kind: str = "power"
    theta: Optional[float] = None
    table: Optional[Tuple[Tuple[int, float], ...]] = None

    def __post_init__(self):
        if self.kind not in BANDWIDTH_KINDS:
            raise ValueError(f"unknown bandwidth kind {self.kind!r}")
        if self.kind == "power":
            if self.theta is None or self.table is not None:
                raise ValueError("power bandwidth needs theta and no table")
            if not (0.0 < self.theta <= 1.0):
                raise ValueError("power bandwidth needs 0 < theta <= 1")
            return
        if self.table is None or len(self.table) < 1:
            raise ValueError("table bandwidth needs at least one (n, a_n) row")
        ns = np.asarray([row[0] for row in self.table], dtype=float)
        avals = np.asarray([row[1] for row in self.table], dtype=float)
        if np.any(ns < 1) or np.any(ns != np.floor(ns)) or np.any(np.diff(ns) <= 0):
            raise ValueError("table n values must be strictly increasing integers >= 1")
        if np.any(avals <= 0.0) or np.any(avals > 1.0):
            raise ValueError("table a_n values must lie in (0, 1]")
        if np.any(np.diff(avals) > 0.0):
            raise ValueError("table a_n values must be nonincreasing")
        if np.any(np.diff(ns * avals) < 0.0):
            raise ValueError("table n*a_n values must be nondecreasing")

    def value(self, n: int) -> float:
        if n < 1:
            raise ValueError("n must be >= 1")
        if self.kind == "power":
            return float(n) ** (-self.theta)
        for row_n, row_a in self.table:
            if row_n == n:
                return float(row_a)
        raise ValueError(f"table bandwidth has no entry for n={n}")


@dataclass(frozen=True)
class ConditionCheck:
    condition: str
    description: str
    status: str  # holds | fails | trend-holds | trend-fails | indeterminate
    detail: str


@dataclass(frozen=True)
class ConditionReport:
    regime: str
    checks: Tuple[ConditionCheck, ...]

    @property
    def ok(self) -> bool:
        return all(c.status != "fails" for c in self.checks)

    def failures(self) -> Tuple[ConditionCheck, ...]:
        return tuple(c for c in self.checks if c.status in ("fails", "trend-fails"))


class ConditionError(ValueError):
    """A bandwidth schedule violates a named side condition."""

    def __init__(self, check: ConditionCheck, regime: str):
        self.condition = check.condition
        self.regime = regime
        super().__init__(
            f"bandwidth condition violated for regime {regime!r}: "
            f"{check.condition} ({check.description}); {check.detail}"
        )


def _power_check(condition: str, theta: float, rate: Optional[RateFnSpec]) -> ConditionCheck:
    desc = CONDITION_DESCRIPTIONS[condition]
    if condition == "bandwidth-decreasing":
        return ConditionCheck(condition, desc, "holds", f"a_n = n^(-{theta}) with positive exponent")
    if condition == "window-times-loglog-vanishes":
        return ConditionCheck(condition, desc, "holds", "n^(-theta) kills the iterated logarithm for any theta > 0")
    if condition == "window-count-grows":
        if theta < 1.0:
            return ConditionCheck(condition, desc, "holds", f"n*a_n = n^({1.0 - theta:g})")
        return ConditionCheck(condition, desc, "fails", "n*a_n is constant at theta = 1")
    if condition in _RATIO_EXPONENT:
        if theta < 1.0:
            return ConditionCheck(
                condition, desc, "holds",
                f"n^({1.0 - theta:g}) dominates every power of the iterated logarithm",
            )
        return ConditionCheck(condition, desc, "fails", "ratio tends to 0 at theta = 1")
    if condition == "window-beats-loglog-rate":
        if rate is None:
            raise ValueError("chung regime checks need a RateFnSpec")
        if rate.kind in ("bv", "linear"):
            # closed-form rates make the denominator a pure power of log2 n:
            # L^(7/3) for bv, L^3 for linear
            power = "7/3" if rate.kind == "bv" else "3"
            if theta < 1.0:
                return ConditionCheck(
                    condition, desc, "holds",
                    f"n^({1.0 - theta:g}) dominates (log2 n)^({power})",
                )
            return ConditionCheck(condition, desc, "fails", "ratio tends to 0 at theta = 1")
        return _ratio_trend_check(
            condition, desc,
            ns=np.unique(np.round(np.logspace(3.0, 12.0, 32)).astype(np.int64)),
            avals=None, theta=theta, rate=rate,
        )
    raise ValueError(f"unknown condition {condition!r}")


def _ratio_sequence(condition: str, ns: np.ndarray, avals: np.ndarray,
                    rate: Optional[RateFnSpec]) -> np.ndarray:
    lls = np.asarray([iterated_log(float(n)) for n in ns])
    if condition == "bandwidth-decreasing":
        return -avals
    if condition == "window-count-grows":
        return ns * avals
    if condition in _RATIO_EXPONENT:
        return ns * avals / lls ** _RATIO_EXPONENT[condition]
    if condition == "window-times-loglog-vanishes":
        return -(avals * lls)
    if condition == "window-beats-loglog-rate":
        rates = np.asarray([rate_function(rate, float(L)) for L in lls])
        return ns * avals / (lls * rates ** 2)
    raise ValueError(f"unknown condition {condition!r}")


def _ratio_trend_check(condition: str, desc: str, ns: np.ndarray,
                       avals: Optional[np.ndarray], theta: Optional[float],
                       rate: Optional[RateFnSpec]) -> ConditionCheck:
    if avals is None:
        avals = ns.astype(float) ** (-theta)
    try:
        seq = _ratio_sequence(condition, ns.astype(float), avals, rate)
    except ValueError as exc:
        return ConditionCheck(condition, desc, "indeterminate", f"trend not computable: {exc}")
    diffs = np.diff(seq)
    bad = np.nonzero(diffs < -1e-12 * np.maximum(np.abs(seq[:-1]), 1e-300))[0]
    if bad.size == 0:
        return ConditionCheck(
            condition, desc, "trend-holds",
            f"monotone over the {len(ns)}-point range; finite data cannot certify the limit",
        )
    j = int(bad[0])
    return ConditionCheck(
        condition, desc, "trend-fails",
        f"sequence decreases between n={int(ns[j])} and n={int(ns[j + 1])}",
    )


def check_bandwidth_conditions(schedule: BandwidthSchedule, regime: str,
                               rate: Optional[RateFnSpec] = None) -> ConditionReport:
    """Decide the regime's side conditions for a bandwidth schedule.

    Power schedules get symbolic verdicts (holds / fails). Table schedules get
    trend verdicts over their own range. The chung regime additionally needs a
    rate function; a custom rate that cannot be evaluated at the required
    iterated-log arguments yields an indeterminate verdict.
    """
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}; choose one of {REGIMES}")
    if regime == "chung" and rate is None:
        raise ValueError("chung regime checks need a RateFnSpec")
    checks = []
    for condition in REGIME_CONDITIONS[regime]:
        desc = CONDITION_DESCRIPTIONS[condition]
        if schedule.kind == "power":
            checks.append(_power_check(condition, schedule.theta, rate))
        else:
            ns = np.asarray([row[0] for row in schedule.table], dtype=np.int64)
            avals = np.asarray([row[1] for row in schedule.table], dtype=float)
            checks.append(_ratio_trend_check(condition, desc, ns, avals, None, rate))
    return ConditionReport(regime=regime, checks=tuple(checks))


def require_bandwidth_conditions(schedule: BandwidthSchedule, regime: str,
                                 rate: Optional[RateFnSpec] = None) -> ConditionReport:
    """Run the checks; raise ConditionError on a symbolic failure.

    Trend failures and indeterminate verdicts only warn: a finite table cannot
    settle a limit, so the run proceeds with the flag on record.
    """
    report = check_bandwidth_conditions(schedule, regime, rate)
    for check in report.checks:
        if check.status == "fails":
            raise ConditionError(check, regime)
        if check.status in ("trend-fails", "indeterminate"):
            warnings.warn(
                f"bandwidth condition {check.condition} for regime {regime!r}: "
                f"{check.status} ({check.detail})",
                stacklevel=2,
            )
    return report
