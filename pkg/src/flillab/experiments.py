"""Theorem-level experiment harness.

Each experiment realizes one displayed limit law at desk scale: per (n, seed)
it records a raw statistic, the scaled statistic whose limsup/liminf the law
concerns, and the running extremum of the scaled column within the seed.
Almost-sure statements are proxied by medians over seeds; every report says
so in its fields rather than pretending to certify a limit.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .geometry import BallSpec, strassen_distance, sup_norm_distance
from .loglog import iterated_log, lil_scale
from .paths import Grid, SmoothPath, Trajectory
from .rates import ChungTarget, RateFnSpec, rate_function
from .rng import stream
from .schedules import BandwidthSchedule, IndexSchedule, require_bandwidth_conditions
from .simulate import (
    draw_uniform_sample,
    empirical_process,
    increment_process,
    local_empirical_process,
    quantile_process,
)

RECORD_EXPERIMENTS = ("flil", "quantile", "local", "increments", "chung", "bahadur-kiefer")
CHECK_EXPERIMENTS = ("dkw", "poissonization")
EXPERIMENTS = RECORD_EXPERIMENTS + CHECK_EXPERIMENTS

_NEEDS_BANDWIDTH = ("local", "increments", "chung")
_PREFIX_MIN = ("chung",)
_RAW_LE_SUP = ("flil", "quantile", "local", "increments")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seeds: Tuple[int, ...]
    schedule: Optional[IndexSchedule] = None
    grid_m: int = 2048
    bandwidth: Optional[BandwidthSchedule] = None
    ball: Optional[BallSpec] = None
    target: Optional[ChungTarget] = None
    rate: Optional[RateFnSpec] = None
    chi_convention: str = "norm"
    tolerance: float = 1e-8
    t0_count: int = 16
    inner_net: bool = True
    # check-style experiments (dkw, poissonization)
    check_n: int = 10_000
    reps: int = 100_000
    lambdas: Tuple[float, ...] = (0.5, 1.0, 2.0)
    window_a: float = 0.01
    threshold_lambda: float = 0.95

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        for s in self.seeds:
            if not (0 <= s < 2 ** 64):
                raise ValueError("seeds must fit in 64 bits")
        if self.grid_m < 1:
            raise ValueError("grid_m must be >= 1")
        if not self.tolerance > 0.0:
            raise ValueError("tolerance must be positive")
        if self.experiment in RECORD_EXPERIMENTS:
            if self.schedule is None:
                raise ValueError(f"experiment {self.experiment!r} needs an index schedule")
            ns = self.schedule.indices()
            if min(ns) < 3:
                raise ValueError("schedule indices must be >= 3 so the iterated logarithm is positive")
        if self.experiment in _NEEDS_BANDWIDTH and self.bandwidth is None:
            raise ValueError(f"experiment {self.experiment!r} needs a bandwidth schedule")
        if self.experiment in ("flil", "quantile"):
            if self.ball is not None and (self.ball.kind != "S2" or self.ball.radius != 1.0):
                raise ValueError("the whole-process clustering laws are stated for the unit S2 ball")
        if self.experiment == "chung" and self.target is None:
            raise ValueError("chung experiment needs a target")
        if self.t0_count < 1:
            raise ValueError("t0_count must be >= 1")
        if self.experiment in CHECK_EXPERIMENTS:
            if self.reps < 10_000:
                raise ValueError("check experiments need reps >= 10000")
            if self.check_n < 1:
                raise ValueError("check_n must be >= 1")
        if self.experiment == "poissonization":
            if not (0.0 < self.window_a <= 1.0):
                raise ValueError("window_a must lie in (0, 1]")
            if not self.threshold_lambda > 0.0:
                raise ValueError("threshold_lambda must be positive")

    def effective_ball(self) -> BallSpec:
        if self.ball is not None:
            return self.ball
        if self.experiment in ("flil", "quantile"):
            return BallSpec("S2", 1.0)
        return BallSpec("S1", 1.0)


@dataclass(frozen=True)
class ExperimentRecord:
    experiment: str
    n: int
    seed: int
    a_n: Optional[float]
    raw: float
    scaled: float
    running_extremum: float
    diagnostics: dict = field(default_factory=dict, compare=False)


# -- per-(n, seed) statistics -------------------------------------------------


def _clustering_stat(g: Trajectory, ball: BallSpec, tolerance: float):
    res = strassen_distance(g, ball, tolerance)
    sup = g.sup_abs()
    if res.epsilon > sup + 1e-9:
        raise AssertionError(
            f"distance {res.epsilon} exceeds the sup norm {sup}; the zero path refutes this"
        )
    diag = {
        "certificate_energy": res.certificate.energy,
        "iterations": res.iterations,
        "rigorous_bound": res.rigorous_bound,
        "sup_norm": sup,
    }
    return res.epsilon, diag


def _stat_flil(config: ExperimentConfig, n: int, seed: int):
    g = empirical_process(draw_uniform_sample(n, seed), Grid(config.grid_m))
    g = g.scaled(1.0 / lil_scale(n))
    raw, diag = _clustering_stat(g, config.effective_ball(), config.tolerance)
    return None, raw, raw * iterated_log(n) ** (2.0 / 3.0), diag


def _stat_quantile(config: ExperimentConfig, n: int, seed: int):
    g = quantile_process(draw_uniform_sample(n, seed), Grid(config.grid_m))
    g = g.scaled(1.0 / lil_scale(n))
    raw, diag = _clustering_stat(g, config.effective_ball(), config.tolerance)
    return None, raw, raw * iterated_log(n) ** (2.0 / 3.0), diag


def _stat_local(config: ExperimentConfig, n: int, seed: int):
    a = config.bandwidth.value(n)
    g = local_empirical_process(draw_uniform_sample(n, seed), a, Grid(config.grid_m))
    raw, diag = _clustering_stat(g, config.effective_ball(), config.tolerance)
    return a, raw, raw * iterated_log(n) ** (2.0 / 3.0), diag


_NET_CELLS = 8
_NET_LEVEL = math.sqrt(2.0)
_NET_KNOTS = np.linspace(0.0, 1.0, _NET_CELLS + 1)


def increment_coverage_net() -> Tuple[np.ndarray, np.ndarray]:
    """The finite net over the unit energy ball used for inner coverage.

    Piecewise-linear paths on 8 equal cells with per-cell slopes from
    {-sqrt(2), 0, +sqrt(2)}, keeping those with energy <= 1 (at most four
    active cells). Returns (slopes, node_values) matrices, one row per member;
    1697 rows.
    """
    rows = []
    for combo in product((-_NET_LEVEL, 0.0, _NET_LEVEL), repeat=_NET_CELLS):
        s = np.asarray(combo)
        if float(np.sum(s * s)) / _NET_CELLS <= 1.0 + 1e-12:
            rows.append(s)
    slopes = np.asarray(rows)
    nodes = np.concatenate([np.zeros((slopes.shape[0], 1)), np.cumsum(slopes / _NET_CELLS, axis=1)], axis=1)
    return slopes, nodes


def _inner_coverage_statistic(trajs: Sequence[Trajectory],
                              slopes: np.ndarray, nodes: np.ndarray) -> float:
    """max over net members of min over windows of the exact sup distance."""
    n_members = slopes.shape[0]
    dmin = np.full(n_members, math.inf)
    for tr in trajs:
        ts = np.union1d(tr.knots, _NET_KNOTS)
        v = tr.value_at(ts)
        l = tr.left_limit_at(ts)
        r = tr.right_limit_at(ts)
        seg = np.clip(np.searchsorted(_NET_KNOTS, ts, side="right") - 1, 0, _NET_CELLS - 1)
        fv = nodes[:, seg] + slopes[:, seg] * (ts - _NET_KNOTS[seg])
        d = np.abs(v - fv)
        np.maximum(d, np.abs(l - fv), out=d)
        np.maximum(d, np.abs(r - fv), out=d)
        np.minimum(dmin, d.max(axis=1), out=dmin)
    return float(dmin.max())


def _stat_increments(config: ExperimentConfig, n: int, seed: int):
    a = config.bandwidth.value(n)
    sample = draw_uniform_sample(n, seed)
    grid = Grid(config.grid_m)
    t0s = np.linspace(0.0, 1.0 - a, config.t0_count)
    outer = 0.0
    sup = 0.0
    iterations = 0
    trajs = []
    ball = config.effective_ball()
    for t0 in t0s:
        g = increment_process(sample, float(t0), a, grid)
        trajs.append(g)
        res = strassen_distance(g, ball, config.tolerance)
        outer = max(outer, res.epsilon)
        sup = max(sup, g.sup_abs())
        iterations += res.iterations
    if outer > sup + 1e-9:
        raise AssertionError("outer statistic exceeds the largest window sup norm")
    diag = {"iterations": iterations, "sup_norm": sup, "t0_count": config.t0_count}
    if config.inner_net:
        slopes, nodes = increment_coverage_net()
        diag["inner_statistic"] = _inner_coverage_statistic(trajs, slopes, nodes)
    return a, outer, outer * math.log(1.0 / a) ** (2.0 / 3.0), diag


def _chung_nabla(config: ExperimentConfig, L: float) -> float:
    if config.target.kind == "interior":
        return L
    return rate_function(config.rate if config.rate is not None else RateFnSpec("bv"), L)


def _stat_chung(config: ExperimentConfig, n: int, seed: int):
    a = config.bandwidth.value(n)
    g = local_empirical_process(draw_uniform_sample(n, seed), a, Grid(config.grid_m))
    d, bound = sup_norm_distance(g, config.target.f)
    L = iterated_log(n)
    diag = {"sup_bound": bound, "sup_norm": g.sup_abs()}
    return a, d, _chung_nabla(config, L) * d, diag


def _stat_bahadur_kiefer(config: ExperimentConfig, n: int, seed: int):
    sample = draw_uniform_sample(n, seed)
    grid = Grid(config.grid_m)
    alpha = empirical_process(sample, grid)
    beta = quantile_process(sample, grid)
    ts = np.union1d(alpha.knots, beta.knots)
    v = alpha.value_at(ts) + beta.value_at(ts)
    l = alpha.left_limit_at(ts) + beta.left_limit_at(ts)
    r = alpha.right_limit_at(ts) + beta.right_limit_at(ts)
    raw = float(max(np.max(np.abs(v)), np.max(np.abs(l)), np.max(np.abs(r))))
    scaled = n ** 0.25 * math.log(n) ** -0.5 * iterated_log(n) ** -0.25 * raw
    return None, raw, scaled, {"union_knots": int(ts.size)}


_STATS = {
    "flil": _stat_flil,
    "quantile": _stat_quantile,
    "local": _stat_local,
    "increments": _stat_increments,
    "chung": _stat_chung,
    "bahadur-kiefer": _stat_bahadur_kiefer,
}


def _compute_one(task):
    config, n, seed = task
    a_n, raw, scaled, diag = _STATS[config.experiment](config, n, seed)
    return (n, seed), (a_n, raw, scaled, diag)


def _map_partials(config: ExperimentConfig, workers: int) -> Dict[tuple, tuple]:
    tasks = [(config, n, seed) for n in config.schedule.indices() for seed in config.seeds]
    if workers <= 1:
        results = map(_compute_one, tasks)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_compute_one, tasks))
    return dict(results)


def _assemble(config: ExperimentConfig, partials: Dict[tuple, tuple]) -> Tuple[ExperimentRecord, ...]:
    """Order-insensitive assembly: records carry their keys, the prefix
    extremum is recomputed per seed over increasing n."""
    minimize = config.experiment in _PREFIX_MIN
    ns = sorted(config.schedule.indices())
    records = []
    for seed in config.seeds:
        ext = math.inf if minimize else -math.inf
        for n in ns:
            a_n, raw, scaled, diag = partials[(n, seed)]
            ext = min(ext, scaled) if minimize else max(ext, scaled)
            records.append(ExperimentRecord(
                experiment=config.experiment, n=n, seed=seed, a_n=a_n,
                raw=raw, scaled=scaled, running_extremum=ext, diagnostics=diag,
            ))
    records.sort(key=lambda rec: (rec.n, rec.seed))
    return tuple(records)


def _run_records(config: ExperimentConfig, workers: int) -> Tuple[ExperimentRecord, ...]:
    return _assemble(config, _map_partials(config, workers))


def run_flil_clustering(config: ExperimentConfig, workers: int = 1) -> Tuple[ExperimentRecord, ...]:
    if config.experiment != "flil":
        raise ValueError("config is not a flil config")
    return _run_records(config, workers)


def run_quantile_clustering(config: ExperimentConfig, workers: int = 1) -> Tuple[ExperimentRecord, ...]:
    if config.experiment != "quantile":
        raise ValueError("config is not a quantile config")
    return _run_records(config, workers)


def run_local_clustering(config: ExperimentConfig, workers: int = 1) -> Tuple[ExperimentRecord, ...]:
    if config.experiment != "local":
        raise ValueError("config is not a local config")
    require_bandwidth_conditions(config.bandwidth, "local-empirical")
    return _run_records(config, workers)


def run_increments_law(config: ExperimentConfig, workers: int = 1) -> Tuple[ExperimentRecord, ...]:
    if config.experiment != "increments":
        raise ValueError("config is not an increments config")
    return _run_records(config, workers)


def run_chung(config: ExperimentConfig, workers: int = 1):
    """Returns (records, liminf_estimate).

    The liminf estimate is the median over seeds of the prefix minimum at the
    largest n, the desk-scale stand-in for the almost-sure liminf.
    """
    if config.experiment != "chung":
        raise ValueError("config is not a chung config")
    rate_for_check = RateFnSpec("linear") if config.target.kind == "interior" else (
        config.rate if config.rate is not None else RateFnSpec("bv"))
    require_bandwidth_conditions(config.bandwidth, "chung", rate_for_check)
    records = _run_records(config, workers)
    n_max = max(config.schedule.indices())
    finals = [rec.running_extremum for rec in records if rec.n == n_max]
    return records, float(np.median(finals))


def run_bahadur_kiefer(config: ExperimentConfig, workers: int = 1) -> Tuple[ExperimentRecord, ...]:
    if config.experiment != "bahadur-kiefer":
        raise ValueError("config is not a bahadur-kiefer config")
    return _run_records(config, workers)


# -- distribution-free checks -------------------------------------------------


def poisson_chernoff_tail(mean: float, u: float) -> float:
    """One-sided Chernoff bound exp(-mean * ((1+u) log(1+u) - u)) for
    P(X >= mean (1+u)) with X Poisson(mean)."""
    if not (mean > 0.0 and u > 0.0):
        raise ValueError("mean and u must be positive")
    return math.exp(-mean * ((1.0 + u) * math.log1p(u) - u))


def _sorted_uniform_sup_counts(rng, take: int, n: int) -> np.ndarray:
    """sup_t |N(t) - n t| over [0,1] for `take` samples of n sorted uniforms,
    in count units (multiply by 1/sqrt(n) for the process scale). Uses the
    exponential-spacing representation to avoid a per-rep sort."""
    e = rng.standard_exponential((take, n + 1))
    s = np.cumsum(e, axis=1)
    u = s[:, :n] / s[:, n:]
    j = np.arange(1, n + 1, dtype=float)
    plus = np.max(j - n * u, axis=1)
    minus = np.max(n * u - (j - 1.0), axis=1)
    return np.maximum(np.maximum(plus, minus), 0.0)


@dataclass(frozen=True)
class DkwEntry:
    lam: float
    p_hat: float
    std_err: float
    bound: float
    ok: bool


@dataclass(frozen=True)
class DkwReport:
    n: int
    reps: int
    seed: int
    entries: Tuple[DkwEntry, ...]

    @property
    def passed(self) -> bool:
        return all(e.ok for e in self.entries)


def run_dkw_check(n: int, lambda_list: Sequence[float], reps: int, seed: int) -> DkwReport:
    """Monte Carlo check of P(sup |alpha_n| >= lam) <= 2 exp(-2 lam^2)."""
    if reps < 10_000:
        raise ValueError("reps must be >= 10000")
    if n < 1:
        raise ValueError("n must be >= 1")
    lams = tuple(float(x) for x in lambda_list)
    if any(x < 0 for x in lams):
        raise ValueError("lambda values must be nonnegative")
    hits = np.zeros(len(lams), dtype=np.int64)
    rows = int(min(1 << 14, max(64, (1 << 22) // (n + 1))))
    done = 0
    chunk = 0
    sqrt_n = math.sqrt(n)
    while done < reps:
        take = min(rows, reps - done)
        rng = stream("dkw", n, seed, chunk)
        sup = _sorted_uniform_sup_counts(rng, take, n) / sqrt_n
        for i, lam in enumerate(lams):
            hits[i] += int(np.sum(sup >= lam))
        done += take
        chunk += 1
    entries = []
    for lam, h in zip(lams, hits):
        p = h / reps
        se = math.sqrt(p * (1.0 - p) / reps)
        bound = 2.0 * math.exp(-2.0 * lam * lam)
        entries.append(DkwEntry(lam=lam, p_hat=p, std_err=se, bound=bound,
                                ok=p <= bound + 4.0 * se))
    return DkwReport(n=n, reps=reps, seed=seed, entries=tuple(entries))


@dataclass(frozen=True)
class PoissonizationReport:
    n: int
    a: float
    lam: float
    reps: int
    seed: int
    threshold: float
    p_emp: float
    se_emp: float
    p_pois: float
    se_pois: float
    chernoff_u: float
    chernoff_slack: float
    forward_ok: bool
    reverse_ok: bool

    @property
    def passed(self) -> bool:
        return self.forward_ok and self.reverse_ok


def _window_sup_counts(rng, take: int, counts: np.ndarray, a: float, n: int) -> np.ndarray:
    """sup_{t in [0,a]} |N(t) - n t| in count units, for rows with the given
    point counts and iid uniform locations on (0, a).

    The piecewise-linear function is extremal only at jump one-sided values
    and at the window endpoint, where the count-vs-drift gap |counts - n a|
    takes over (it is the whole sup when a row has no points)."""
    boundary = np.abs(counts - n * a).astype(float)
    km = int(counts.max()) if counts.size else 0
    if km == 0:
        return boundary
    x = np.sort(np.where(np.arange(km) < counts[:, None], rng.random((take, km)) * a, np.inf), axis=1)
    j = np.arange(1, km + 1, dtype=float)
    valid = j <= counts[:, None]
    nx = n * x
    plus = np.max(np.where(valid, j - nx, -np.inf), axis=1)
    minus = np.max(np.where(valid, nx - (j - 1.0), -np.inf), axis=1)
    return np.maximum(np.maximum(plus, minus), boundary)


def run_poissonization_check(n: int, a: float, lam: float, reps: int, seed: int) -> PoissonizationReport:
    """Two-sided factor-2 comparison between the empirical window sup and its
    poissonized version.

    Forward: p_emp <= 2 p_pois + 4 joint-std-errs. Reverse: p_pois <= 2 p_emp
    + slack + 4 joint-std-errs, with slack = 2 exp(-n a h(u)) at
    u = sqrt(4 log2(n) / (n a)), the Chernoff cost of pinning the Poisson
    count back to n.
    """
    if reps < 10_000:
        raise ValueError("reps must be >= 10000")
    if not (0.0 < a <= 1.0):
        raise ValueError("a must lie in (0, 1]")
    if not lam > 0.0:
        raise ValueError("lam must be positive")
    threshold = lam * math.sqrt(a) * lil_scale(n)
    cut = threshold * math.sqrt(n)  # compare in count units
    hits_emp = 0
    hits_pois = 0
    rows = 4096
    done = 0
    chunk = 0
    while done < reps:
        take = min(rows, reps - done)
        # both sides share the drift n*t; only the count law differs
        rng_e = stream("poissonization-empirical", n, seed, chunk)
        k_e = rng_e.binomial(n, a, take)
        hits_emp += int(np.sum(_window_sup_counts(rng_e, take, k_e, a, n) > cut))
        rng_p = stream("poissonization-poisson", n, seed, chunk)
        k_p = rng_p.poisson(n * a, take)
        hits_pois += int(np.sum(_window_sup_counts(rng_p, take, k_p, a, n) > cut))
        done += take
        chunk += 1
    p_emp = hits_emp / reps
    p_pois = hits_pois / reps
    se_emp = math.sqrt(p_emp * (1.0 - p_emp) / reps)
    se_pois = math.sqrt(p_pois * (1.0 - p_pois) / reps)
    u = math.sqrt(4.0 * iterated_log(n) / (n * a))
    slack = 2.0 * poisson_chernoff_tail(n * a, u)
    fwd_band = 4.0 * math.hypot(se_emp, 2.0 * se_pois)
    rev_band = 4.0 * math.hypot(se_pois, 2.0 * se_emp)
    return PoissonizationReport(
        n=n, a=a, lam=lam, reps=reps, seed=seed, threshold=threshold,
        p_emp=p_emp, se_emp=se_emp, p_pois=p_pois, se_pois=se_pois,
        chernoff_u=u, chernoff_slack=slack,
        forward_ok=p_emp <= 2.0 * p_pois + fwd_band,
        reverse_ok=p_pois <= 2.0 * p_emp + slack + rev_band,
    )
