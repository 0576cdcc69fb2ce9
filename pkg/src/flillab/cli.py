"""Batch front-end.

Subcommands: simulate, distance, smallball, experiment <id>, report. Each run
reads one JSON config, writes its artifacts plus a canonicalized config copy
and a manifest into --out. Exit codes: 0 success, 2 config error (including a
refused bandwidth schedule, with the violated condition named), 3 runtime
error. Thread count comes from --threads, then FLILLAB_THREADS, then the
logical core count.
"""

import argparse
import dataclasses
import json
import os
import sys
from datetime import datetime, timezone
from typing import Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .experiments import (
    CHECK_EXPERIMENTS,
    RECORD_EXPERIMENTS,
    ExperimentConfig,
    run_bahadur_kiefer,
    run_chung,
    run_dkw_check,
    run_flil_clustering,
    run_increments_law,
    run_local_clustering,
    run_poissonization_check,
    run_quantile_clustering,
)
from .geometry import BallSpec, strassen_distance
from .loglog import lil_scale
from .paths import Grid
from .records import (
    RunManifest,
    canonical_config_text,
    config_digest,
    config_from_mapping,
    config_to_mapping,
    emit_records,
    emit_summary,
    read_records,
    summarize_records,
    _fmt_float,
    _target_from_mapping,
)
from .schedules import ConditionError
from .simulate import (
    centered_poisson_path,
    draw_uniform_sample,
    empirical_process,
    gaussian_path,
    increment_process,
    local_empirical_process,
    poissonized_empirical,
    quantile_process,
)
from .smallball import (
    exact_centered_small_ball,
    gaussian_cluster_tail,
    small_ball_cameron_martin,
    small_ball_grid_trend,
    small_ball_naive,
)

PROCESS_KINDS = (
    "empirical",
    "quantile",
    "local",
    "increment",
    "poissonized",
    "wiener",
    "brownian-bridge",
    "centered-poisson",
)
_SAMPLE_PROCESSES = ("empirical", "quantile", "local", "increment")
SMALLBALL_METHODS = ("exact-series", "naive", "cameron-martin", "grid-trend", "cluster-tail")

PATHS_HEADER = "process,n,seed,t,value"
DISTANCE_HEADER = "process,n,seed,distance,rigorous_bound,iterations"


class ConfigError(ValueError):
    pass


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(x) for x in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    return obj


def _load_config_file(path: Optional[str]) -> dict:
    if path is None:
        raise ConfigError("--config PATH is required")
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as fh:
        try:
            mapping = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"{path}: parse error at line {exc.lineno} column {exc.colno}: {exc.msg}"
            ) from exc
    if not isinstance(mapping, dict):
        raise ConfigError(f"{path}: config root must be a JSON object")
    return mapping


def _parse_seed_list(text: str) -> Tuple[int, ...]:
    try:
        seeds = tuple(int(part) for part in text.split(",") if part.strip() != "")
    except ValueError as exc:
        raise ConfigError(f"--seeds must be a comma-separated integer list, got {text!r}") from exc
    if not seeds:
        raise ConfigError("--seeds list is empty")
    return seeds


def _resolve_threads(cli_value: Optional[int]) -> int:
    if cli_value is None:
        env = os.environ.get("FLILLAB_THREADS")
        if env is not None:
            try:
                cli_value = int(env)
            except ValueError as exc:
                raise ConfigError(f"FLILLAB_THREADS must be an integer, got {env!r}") from exc
        else:
            cli_value = os.cpu_count() or 1
    if cli_value < 1:
        raise ConfigError(f"thread count must be >= 1, got {cli_value}")
    return cli_value


def _require(mapping: dict, key: str, where: str):
    if key not in mapping or mapping[key] is None:
        raise ConfigError(f"{where}: field '{key}' is required")
    return mapping[key]


def _grid_from(mapping: dict) -> Grid:
    return Grid(int(mapping.get("grid_m", 2048)))


def _draw_trajectory(mapping: dict, seed: int):
    """One trajectory of the configured process family, keyed by seed."""
    process = mapping["process"]
    grid = _grid_from(mapping)
    if process in _SAMPLE_PROCESSES:
        n = int(_require(mapping, "n", "simulate"))
        sample = draw_uniform_sample(n, seed)
        if process == "empirical":
            return n, empirical_process(sample, grid)
        if process == "quantile":
            return n, quantile_process(sample, grid)
        a_n = float(_require(mapping, "a_n", f"process {process}"))
        if process == "local":
            return n, local_empirical_process(
                sample, a_n, grid, normalization=mapping.get("normalization", "flil")
            )
        return n, increment_process(sample, float(mapping.get("t0", 0.0)), a_n, grid)
    if process == "poissonized":
        n = int(_require(mapping, "n", "simulate"))
        return n, poissonized_empirical(n, seed, grid)
    if process in ("wiener", "brownian-bridge"):
        return None, gaussian_path(process, grid, seed)
    if process == "centered-poisson":
        return None, centered_poisson_path(float(mapping.get("T", 1.0)), grid, seed)
    raise ConfigError(f"unknown process {mapping['process']!r}; choose from {PROCESS_KINDS}")


def _cmd_simulate(mapping: dict, out: str, fmt: str, threads: int) -> dict:
    process = _require(mapping, "process", "simulate")
    if process not in PROCESS_KINDS:
        raise ConfigError(f"unknown process {process!r}; choose from {PROCESS_KINDS}")
    seeds = tuple(int(s) for s in _require(mapping, "seeds", "simulate"))
    path = os.path.join(out, f"paths.{fmt}")
    rows = 0
    with open(path, "w", newline="\n") as fh:
        if fmt == "csv":
            fh.write(PATHS_HEADER + "\n")
        for seed in seeds:
            n, traj = _draw_trajectory(mapping, seed)
            n_text = "" if n is None else str(n)
            for t, v in zip(traj.knots, traj.point_values):
                if fmt == "csv":
                    fh.write(f"{process},{n_text},{seed},{_fmt_float(t)},{_fmt_float(v)}\n")
                else:
                    fh.write(
                        json.dumps(
                            {
                                "process": process,
                                "n": n,
                                "seed": seed,
                                "t": float(t),
                                "value": float(v),
                            }
                        )
                        + "\n"
                    )
                rows += 1
    return {"paths": rows}


def _cmd_distance(mapping: dict, out: str, fmt: str, threads: int) -> dict:
    process = _require(mapping, "process", "distance")
    if process not in PROCESS_KINDS:
        raise ConfigError(f"unknown process {process!r}; choose from {PROCESS_KINDS}")
    seeds = tuple(int(s) for s in _require(mapping, "seeds", "distance"))
    ball_map = _require(mapping, "ball", "distance")
    ball = BallSpec(kind=ball_map["kind"], radius=float(ball_map["radius"]))
    tolerance = float(mapping.get("tolerance", 1e-8))
    scale = mapping.get("scale", "none")
    if scale not in ("none", "lil"):
        raise ConfigError(f"distance: scale must be 'none' or 'lil', got {scale!r}")
    path = os.path.join(out, f"distance.{fmt}")
    rows = 0
    with open(path, "w", newline="\n") as fh:
        if fmt == "csv":
            fh.write(DISTANCE_HEADER + "\n")
        for seed in seeds:
            n, traj = _draw_trajectory(mapping, seed)
            if scale == "lil":
                if n is None:
                    raise ConfigError("distance: scale='lil' needs a sample-size process")
                traj = traj.scaled(1.0 / lil_scale(n))
            res = strassen_distance(traj, ball, tolerance)
            n_text = "" if n is None else str(n)
            if fmt == "csv":
                fh.write(
                    f"{process},{n_text},{seed},{_fmt_float(res.epsilon)},"
                    f"{_fmt_float(res.rigorous_bound)},{res.iterations}\n"
                )
            else:
                fh.write(
                    json.dumps(
                        {
                            "process": process,
                            "n": n,
                            "seed": seed,
                            "distance": float(res.epsilon),
                            "rigorous_bound": float(res.rigorous_bound),
                            "iterations": int(res.iterations),
                        }
                    )
                    + "\n"
                )
            rows += 1
    return {"distance": rows}


def _cmd_smallball(mapping: dict, out: str, fmt: str, threads: int) -> dict:
    method = _require(mapping, "method", "smallball")
    if method not in SMALLBALL_METHODS:
        raise ConfigError(f"unknown method {method!r}; choose from {SMALLBALL_METHODS}")
    if method == "exact-series":
        eps = float(_require(mapping, "epsilon", "smallball"))
        result = {"method": method, "epsilon": eps, "p": exact_centered_small_ball(eps)}
    elif method == "cluster-tail":
        report = gaussian_cluster_tail(
            kind=_require(mapping, "kind", "smallball"),
            c=float(_require(mapping, "c", "smallball")),
            u=float(_require(mapping, "u", "smallball")),
            reps=int(_require(mapping, "reps", "smallball")),
            grid=_grid_from(mapping),
            seed=int(mapping.get("seed", 0)),
            c_scan=mapping.get("c_scan"),
        )
        result = _jsonable(report)
        result["method"] = method
    else:
        eps = float(_require(mapping, "epsilon", "smallball"))
        reps = int(_require(mapping, "reps", "smallball"))
        seed = int(mapping.get("seed", 0))
        T = float(mapping.get("T", 1.0))
        f = None
        if mapping.get("f") is not None:
            f = _target_from_mapping({"kind": "interior", "chi_f": "estimated", "f": mapping["f"]}).f
        correction = bool(mapping.get("boundary_correction", True))
        if method == "grid-trend":
            grid_ms = [int(m) for m in _require(mapping, "grid_ms", "smallball")]
            estimates = small_ball_grid_trend(
                _zero_path() if f is None else f, T, eps, reps, grid_ms, seed,
                boundary_correction=bool(mapping.get("boundary_correction", False)),
            )
            result = {"method": method, "estimates": [_jsonable(e) for e in estimates]}
        else:
            fn = small_ball_naive if method == "naive" else small_ball_cameron_martin
            est = fn(_zero_path() if f is None else f, T, eps, reps, _grid_from(mapping), seed,
                     boundary_correction=correction)
            result = _jsonable(est)
    with open(os.path.join(out, "smallball.json"), "w", newline="\n") as fh:
        json.dump(result, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return {"smallball": 1}


def _zero_path():
    from .paths import SmoothPath

    return SmoothPath(np.array([0.0, 1.0]), np.array([0.0]))


_RUNNERS = {
    "flil": run_flil_clustering,
    "quantile": run_quantile_clustering,
    "local": run_local_clustering,
    "increments": run_increments_law,
    "bahadur-kiefer": run_bahadur_kiefer,
}


def parse_config(path) -> ExperimentConfig:
    """Read and validate an experiment config file."""
    mapping = _load_config_file(path)
    try:
        return config_from_mapping(mapping)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _cmd_experiment(experiment_id: str, mapping: dict, out: str, fmt: str, threads: int) -> dict:
    if experiment_id not in RECORD_EXPERIMENTS + CHECK_EXPERIMENTS:
        raise ConfigError(
            f"unknown experiment {experiment_id!r}; choose from "
            f"{RECORD_EXPERIMENTS + CHECK_EXPERIMENTS}"
        )
    declared = mapping.get("experiment")
    if declared is not None and declared != experiment_id:
        raise ConfigError(
            f"config declares experiment {declared!r} but the command asked for {experiment_id!r}"
        )
    mapping = dict(mapping)
    mapping["experiment"] = experiment_id
    try:
        config = config_from_mapping(mapping)
    except ConditionError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc

    if experiment_id in CHECK_EXPERIMENTS:
        reports = []
        for seed in config.seeds:
            if experiment_id == "dkw":
                rep = run_dkw_check(config.check_n, config.lambdas, config.reps, seed)
            else:
                rep = run_poissonization_check(
                    config.check_n, config.window_a, config.threshold_lambda, config.reps, seed
                )
            reports.append(rep)
        payload = {
            "experiment": experiment_id,
            "passed": all(r.passed for r in reports),
            "reports": [_jsonable(r) for r in reports],
        }
        with open(os.path.join(out, "check.json"), "w", newline="\n") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return {experiment_id: len(reports)}

    if experiment_id == "chung":
        records, liminf = run_chung(config, workers=threads)
        with open(os.path.join(out, "chung.json"), "w", newline="\n") as fh:
            json.dump({"liminf_estimate": liminf}, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        records = _RUNNERS[experiment_id](config, workers=threads)
    emit_records(records, os.path.join(out, f"records.{fmt}"), fmt)
    return {experiment_id: len(records)}


def _cmd_report(mapping: dict, out: str, fmt: str, threads: int) -> dict:
    sources = _require(mapping, "records", "report")
    if isinstance(sources, str):
        sources = [sources]
    records = []
    for src in sources:
        if not os.path.exists(src):
            raise ConfigError(f"report: records file not found: {src}")
        records.extend(read_records(src))
    rows = summarize_records(records)
    emit_summary(rows, os.path.join(out, "summary.csv"))
    return {"summary": len(rows)}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flillab", description="Iterated-logarithm simulation laboratory."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config file")
    common.add_argument("--out", metavar="DIR", default=".", help="output directory")
    common.add_argument("--seeds", metavar="CSV-list", help="override the config seed list")
    common.add_argument("--threads", metavar="N", type=int, default=None,
                        help="worker processes (default: FLILLAB_THREADS or logical cores)")
    common.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    sub.add_parser("simulate", parents=[common], help="draw process trajectories")
    sub.add_parser("distance", parents=[common], help="exact sup-norm distances to a ball")
    sub.add_parser("smallball", parents=[common], help="small-ball probability estimates")
    exp = sub.add_parser("experiment", parents=[common], help="run a trend experiment or check")
    exp.add_argument("id", metavar="ID", help="experiment identifier")
    sub.add_parser("report", parents=[common], help="summarize record files")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    started = _utcnow()
    try:
        threads = _resolve_threads(args.threads)
        mapping = _load_config_file(args.config)
        if args.seeds is not None:
            override = _parse_seed_list(args.seeds)
            if args.command == "report":
                raise ConfigError("report takes no --seeds override")
            if args.command == "smallball":
                if len(override) != 1:
                    raise ConfigError("smallball takes a single seed")
                mapping = {**mapping, "seed": override[0]}
            else:
                mapping = {**mapping, "seeds": list(override)}
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "config.canonical.json"), "w", newline="\n") as fh:
            fh.write(canonical_config_text(mapping))
    except OSError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3

    try:
        if args.command == "simulate":
            counts = _cmd_simulate(mapping, args.out, args.format, threads)
        elif args.command == "distance":
            counts = _cmd_distance(mapping, args.out, args.format, threads)
        elif args.command == "smallball":
            counts = _cmd_smallball(mapping, args.out, args.format, threads)
        elif args.command == "experiment":
            counts = _cmd_experiment(args.id, mapping, args.out, args.format, threads)
        else:
            counts = _cmd_report(mapping, args.out, args.format, threads)
    except ConditionError as exc:
        print(f"config error: refused: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, TypeError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - boundary of the process
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3

    seeds = mapping.get("seeds")
    if seeds is None:
        seeds = [mapping["seed"]] if "seed" in mapping else []
    manifest = RunManifest(
        tool_version=__version__,
        config_digest=config_digest(mapping),
        seeds=tuple(int(s) for s in seeds),
        started_at=started,
        finished_at=_utcnow(),
        record_counts=tuple(sorted(counts.items())),
    )
    with open(os.path.join(args.out, "manifest.json"), "w", newline="\n") as fh:
        fh.write(manifest.to_json())
    return 0


def entry() -> int:
    return main()


if __name__ == "__main__":
    sys.exit(main())
