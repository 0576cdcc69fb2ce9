"""Simulation laboratory for functional laws of the iterated logarithm.

Empirical, quantile, and local empirical processes as exact piecewise-linear
trajectories; sup-norm distances to Strassen-type energy balls through a
taut-string solver; Gaussian small-ball estimators; seeded trend experiments
with deterministic CSV artifacts.
"""

__version__ = "0.1.0"

from .loglog import iterated_log, lil_scale
from .rng import stream
from .paths import Grid, SmoothPath, Trajectory, linear_trajectory, step_drift_trajectory
from .simulate import (
    UniformSample,
    centered_poisson_path,
    draw_uniform_sample,
    empirical_process,
    gaussian_path,
    increment_process,
    local_empirical_process,
    poissonized_empirical,
    quantile_process,
)
from .tautstring import Tube, min_energy, taut_string
from .geometry import (
    BallSpec,
    DistanceResult,
    MembershipResult,
    build_tube,
    h_norm,
    membership,
    min_energy_in_tube,
    strassen_distance,
    sup_norm_distance,
)
from .smallball import (
    ClusterTailReport,
    SmallBallEstimate,
    bridge_no_exit_probability,
    exact_centered_small_ball,
    gaussian_cluster_tail,
    small_ball_cameron_martin,
    small_ball_grid_trend,
    small_ball_naive,
)
from .rates import (
    ChungTarget,
    RateFnSpec,
    chung_constant_interior,
    classify_chung_target,
    rate_function,
    rate_side_condition_scan,
)
from .schedules import (
    BandwidthSchedule,
    ConditionError,
    ConditionReport,
    IndexSchedule,
    blocking_sequence,
    check_bandwidth_conditions,
    require_bandwidth_conditions,
)
from .experiments import (
    DkwReport,
    ExperimentConfig,
    ExperimentRecord,
    PoissonizationReport,
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
from .records import (
    CSV_HEADER,
    RunManifest,
    canonical_config_text,
    config_digest,
    config_from_mapping,
    config_to_mapping,
    emit_records,
    read_records,
    summarize_records,
)
