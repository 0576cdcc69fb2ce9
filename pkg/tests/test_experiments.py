import math

import numpy as np
import pytest
import scipy.stats

from flillab.experiments import (
    ExperimentConfig,
    increment_coverage_net,
    poisson_chernoff_tail,
    run_bahadur_kiefer,
    run_chung,
    run_dkw_check,
    run_flil_clustering,
    run_increments_law,
    run_local_clustering,
    run_poissonization_check,
    run_quantile_clustering,
)
from flillab.geometry import BallSpec
from flillab.loglog import iterated_log, lil_scale
from flillab.paths import Grid, SmoothPath
from flillab.rates import classify_chung_target
from flillab.schedules import BandwidthSchedule, ConditionError, IndexSchedule
from flillab.simulate import draw_uniform_sample, empirical_process

SCHED = IndexSchedule(kind="geometric", start=1000, ratio=10, count=2)
ZERO = SmoothPath(np.array([0.0, 1.0]), np.array([0.0]))


def test_increment_coverage_net_shape():
    slopes, nodes = increment_coverage_net()
    assert slopes.shape == (1697, 8)
    assert nodes.shape == (1697, 9)
    energies = np.sum(slopes**2, axis=1) / 8.0
    assert energies.max() <= 1.0 + 1e-12
    assert np.any(np.all(slopes == 0.0, axis=1))


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(experiment="nope", seeds=(1,))
    with pytest.raises(ValueError):
        ExperimentConfig(experiment="flil", seeds=())
    with pytest.raises(ValueError):
        ExperimentConfig(experiment="flil", seeds=(1,),
                         schedule=IndexSchedule(kind="geometric", start=2, ratio=10, count=2))
    with pytest.raises(ValueError):
        ExperimentConfig(experiment="flil", seeds=(1,), schedule=SCHED,
                         ball=BallSpec("S1", 1.0))
    with pytest.raises(ValueError):
        ExperimentConfig(experiment="local", seeds=(1,), schedule=SCHED)
    with pytest.raises(ValueError):
        ExperimentConfig(experiment="chung", seeds=(1,), schedule=SCHED,
                         bandwidth=BandwidthSchedule(kind="power", theta=0.5))
    with pytest.raises(ValueError):
        ExperimentConfig(experiment="dkw", seeds=(1,), reps=100)
    assert ExperimentConfig(experiment="flil", seeds=(1,), schedule=SCHED).effective_ball() == \
        BallSpec("S2", 1.0)
    assert ExperimentConfig(
        experiment="local", seeds=(1,), schedule=SCHED,
        bandwidth=BandwidthSchedule(kind="power", theta=0.5),
    ).effective_ball() == BallSpec("S1", 1.0)


def test_flil_records_structure():
    cfg = ExperimentConfig(experiment="flil", seeds=(1, 2, 3), schedule=SCHED)
    recs = run_flil_clustering(cfg)
    assert len(recs) == 6
    assert [(r.n, r.seed) for r in recs] == sorted((r.n, r.seed) for r in recs)
    for r in recs:
        assert r.a_n is None
        assert r.scaled == pytest.approx(r.raw * iterated_log(r.n) ** (2.0 / 3.0), rel=1e-12)
        assert r.raw <= r.diagnostics["sup_norm"] + 1e-9
        assert r.diagnostics["certificate_energy"] <= 1.0 + 1e-8
    by_seed = {}
    for r in recs:
        by_seed.setdefault(r.seed, []).append(r)
    for rs in by_seed.values():
        run_max = -math.inf
        for r in sorted(rs, key=lambda r: r.n):
            run_max = max(run_max, r.scaled)
            assert r.running_extremum == pytest.approx(run_max, rel=1e-15)


def test_flil_raw_is_distance_of_normalized_process():
    from flillab.geometry import strassen_distance

    cfg = ExperimentConfig(experiment="flil", seeds=(5,),
                           schedule=IndexSchedule(kind="geometric", start=1000, ratio=10, count=1))
    rec = run_flil_clustering(cfg)[0]
    g = empirical_process(draw_uniform_sample(1000, 5), Grid(cfg.grid_m))
    d = strassen_distance(g.scaled(1.0 / lil_scale(1000)), BallSpec("S2", 1.0),
                          cfg.tolerance).epsilon
    assert rec.raw == pytest.approx(d, abs=1e-12)


def test_workers_give_identical_records():
    cfg = ExperimentConfig(experiment="quantile", seeds=(1, 2, 3, 4), schedule=SCHED)
    a = run_quantile_clustering(cfg, workers=1)
    b = run_quantile_clustering(cfg, workers=2)
    assert a == b
    assert all(ra.diagnostics == rb.diagnostics for ra, rb in zip(a, b))


def test_local_with_unit_window_matches_flil():
    seeds = (3, 4)
    flil_cfg = ExperimentConfig(experiment="flil", seeds=seeds, schedule=SCHED)
    flil_recs = run_flil_clustering(flil_cfg)
    local_cfg = ExperimentConfig(
        experiment="local", seeds=seeds, schedule=SCHED,
        bandwidth=BandwidthSchedule(kind="table", table=((1000, 1.0), (10000, 1.0))),
        ball=BallSpec("S2", 1.0),
    )
    local_recs = run_local_clustering(local_cfg)
    for fr, lr in zip(flil_recs, local_recs):
        assert (fr.n, fr.seed) == (lr.n, lr.seed)
        assert lr.a_n == 1.0
        assert lr.raw == pytest.approx(fr.raw, abs=1e-12)


def test_local_refuses_theta_one():
    cfg = ExperimentConfig(
        experiment="local", seeds=(1,), schedule=SCHED,
        bandwidth=BandwidthSchedule(kind="power", theta=1.0),
    )
    with pytest.raises(ConditionError) as err:
        run_local_clustering(cfg)
    assert err.value.condition == "window-count-grows"


def test_chung_liminf_and_scaling():
    cfg = ExperimentConfig(
        experiment="chung", seeds=(1, 2, 3, 4, 5), schedule=SCHED,
        bandwidth=BandwidthSchedule(kind="power", theta=0.5),
        target=classify_chung_target(ZERO),
    )
    recs, liminf = run_chung(cfg)
    for r in recs:
        assert r.scaled == pytest.approx(iterated_log(r.n) * r.raw, rel=1e-12)
    finals = [r.running_extremum for r in recs if r.n == 10000]
    assert liminf == pytest.approx(float(np.median(finals)), rel=1e-15)
    by_seed = {}
    for r in recs:
        by_seed.setdefault(r.seed, []).append((r.n, r.running_extremum))
    for rows in by_seed.values():
        rows.sort()
        assert all(b[1] <= a[1] + 1e-15 for a, b in zip(rows, rows[1:]))


def test_bahadur_kiefer_scaling_formula():
    cfg = ExperimentConfig(experiment="bahadur-kiefer", seeds=(1, 2), schedule=SCHED)
    recs = run_bahadur_kiefer(cfg)
    for r in recs:
        n = r.n
        factor = n**0.25 * math.log(n) ** -0.5 * iterated_log(n) ** -0.25
        assert r.scaled == pytest.approx(r.raw * factor, rel=1e-12)
        assert r.raw >= 0.0


def test_increments_records_have_inner_statistic():
    cfg = ExperimentConfig(
        experiment="increments", seeds=(1, 2), schedule=SCHED,
        bandwidth=BandwidthSchedule(kind="power", theta=0.5), t0_count=4,
    )
    recs = run_increments_law(cfg)
    for r in recs:
        a = r.a_n
        assert a == pytest.approx(r.n ** -0.5, rel=1e-12)
        assert r.scaled == pytest.approx(r.raw * math.log(1.0 / a) ** (2.0 / 3.0), rel=1e-12)
        # coverage runs the other way from the outer distance: every net
        # member must be near SOME window, so few windows make it large
        assert r.diagnostics["inner_statistic"] >= 0.0
        assert np.isfinite(r.diagnostics["inner_statistic"])
        assert r.diagnostics["t0_count"] == 4


def test_dkw_check_passes_small():
    rep = run_dkw_check(200, (0.5, 1.0, 2.0), 20_000, seed=3)
    assert rep.passed
    for e in rep.entries:
        assert e.bound == pytest.approx(2.0 * math.exp(-2.0 * e.lam**2), rel=1e-12)
        assert 0.0 <= e.p_hat <= 1.0


def test_dkw_sup_formula_matches_trajectory_sup():
    for seed in range(5):
        n = 37
        sample = draw_uniform_sample(n, seed)
        u = sample.values
        j = np.arange(1, n + 1)
        count_sup = max((j - n * u).max(), (n * u - (j - 1)).max(), 0.0)
        traj_sup = empirical_process(sample, Grid(8)).sup_abs()
        assert count_sup / math.sqrt(n) == pytest.approx(traj_sup, rel=1e-12)


def test_poissonization_check_deterministic_and_consistent():
    a = run_poissonization_check(2000, 0.02, 1.2, 20_000, seed=5)
    b = run_poissonization_check(2000, 0.02, 1.2, 20_000, seed=5)
    assert a == b
    assert a.threshold == pytest.approx(1.2 * math.sqrt(0.02) * lil_scale(2000), rel=1e-12)
    assert 0.0 <= a.p_emp <= 1.0 and 0.0 <= a.p_pois <= 1.0
    assert a.chernoff_slack == pytest.approx(
        2.0 * poisson_chernoff_tail(2000 * 0.02, a.chernoff_u), rel=1e-12
    )


def test_poisson_chernoff_tail_value_and_bound():
    assert poisson_chernoff_tail(100.0, 0.2) == pytest.approx(0.15280589620356277, rel=1e-12)
    # genuine upper bound on the upper tail
    for mean, u in ((100.0, 0.2), (40.0, 0.5), (200.0, 0.1)):
        k = math.ceil(mean * (1.0 + u))
        exact = scipy.stats.poisson.sf(k - 1, mean)
        assert exact <= poisson_chernoff_tail(mean, u) + 1e-12
