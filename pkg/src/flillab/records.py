"""Record and manifest I/O.

Experiment records travel as CSV (fixed seven-column header) or JSON lines.
Floats are written as their shortest round-trip decimal, so re-reading a file
reproduces the in-memory records exactly and identical runs produce
byte-identical artifacts. Configs are serialized to a canonical JSON form
(sorted keys, compact separators) whose SHA-256 digest goes into the run
manifest; recomputing the digest from the emitted copy must give the same hex
string.
"""

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from .experiments import ExperimentConfig, ExperimentRecord
from .geometry import BallSpec
from .paths import SmoothPath
from .rates import ChungTarget, RateFnSpec
from .schedules import BandwidthSchedule, IndexSchedule

CSV_HEADER = "experiment,n,seed,a_n,raw,scaled,running_extremum"
RECORD_FIELDS = tuple(CSV_HEADER.split(","))
RECORD_FORMATS = ("csv", "jsonl")


def _fmt_float(x: Optional[float]) -> str:
    if x is None:
        return ""
    return repr(float(x))


def _parse_optional_float(text: str) -> Optional[float]:
    return None if text == "" else float(text)


def record_to_row(record: ExperimentRecord) -> str:
    return ",".join(
        (
            record.experiment,
            str(record.n),
            str(record.seed),
            _fmt_float(record.a_n),
            _fmt_float(record.raw),
            _fmt_float(record.scaled),
            _fmt_float(record.running_extremum),
        )
    )


def record_to_obj(record: ExperimentRecord) -> dict:
    return {
        "experiment": record.experiment,
        "n": record.n,
        "seed": record.seed,
        "a_n": None if record.a_n is None else float(record.a_n),
        "raw": float(record.raw),
        "scaled": float(record.scaled),
        "running_extremum": float(record.running_extremum),
    }


def _record_from_parts(parts: Sequence, where: str) -> ExperimentRecord:
    if len(parts) != 7:
        raise ValueError(f"{where}: expected 7 fields, got {len(parts)}")
    exp, n, seed, a_n, raw, scaled, run = parts
    return ExperimentRecord(
        experiment=str(exp),
        n=int(n),
        seed=int(seed),
        a_n=_parse_optional_float(a_n) if isinstance(a_n, str) else a_n,
        raw=float(raw),
        scaled=float(scaled),
        running_extremum=float(run),
    )


def emit_records(records: Sequence[ExperimentRecord], path, fmt: str = "csv") -> None:
    """Write records to `path`. CSV gets the fixed header even when empty."""
    if fmt not in RECORD_FORMATS:
        raise ValueError(f"format must be one of {RECORD_FORMATS}, got {fmt!r}")
    experiments = {r.experiment for r in records}
    if len(experiments) > 1:
        raise ValueError(f"records mix experiment ids {sorted(experiments)}")
    with open(path, "w", newline="\n") as fh:
        if fmt == "csv":
            fh.write(CSV_HEADER + "\n")
            for rec in records:
                fh.write(record_to_row(rec) + "\n")
        else:
            for rec in records:
                fh.write(json.dumps(record_to_obj(rec)) + "\n")


def read_records(path, fmt: Optional[str] = None) -> Tuple[ExperimentRecord, ...]:
    if fmt is None:
        name = str(path)
        fmt = "jsonl" if name.endswith(".jsonl") else "csv"
    if fmt not in RECORD_FORMATS:
        raise ValueError(f"format must be one of {RECORD_FORMATS}, got {fmt!r}")
    out = []
    with open(path, "r", newline="\n") as fh:
        if fmt == "csv":
            header = fh.readline().rstrip("\n")
            if header != CSV_HEADER:
                raise ValueError(f"{path}: bad header {header!r}")
            for i, line in enumerate(fh, start=2):
                line = line.rstrip("\n")
                if not line:
                    continue
                out.append(_record_from_parts(line.split(","), f"{path}:{i}"))
        else:
            for i, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                parts = [obj.get(k) for k in RECORD_FIELDS]
                out.append(_record_from_parts(parts, f"{path}:{i}"))
    return tuple(out)


# -- config (de)serialization --------------------------------------------------


def _schedule_to_mapping(s: IndexSchedule) -> dict:
    if s.kind == "geometric":
        return {"kind": "geometric", "start": s.start, "ratio": s.ratio, "count": s.count}
    return {"kind": "blocking", "k_min": s.k_min, "k_max": s.k_max}


def _bandwidth_to_mapping(b: BandwidthSchedule) -> dict:
    if b.kind == "power":
        return {"kind": "power", "theta": b.theta}
    return {"kind": "table", "table": [[int(n), float(a)] for n, a in b.table]}


def _rate_to_mapping(r: RateFnSpec) -> dict:
    if r.kind == "custom":
        return {"kind": "custom", "table": [[float(u), float(v)] for u, v in r.table]}
    return {"kind": r.kind}


def _target_to_mapping(t: ChungTarget) -> dict:
    return {
        "kind": t.kind,
        "chi_f": t.chi_f if isinstance(t.chi_f, str) else float(t.chi_f),
        "f": {
            "knots": [float(x) for x in t.f.knots],
            "slopes": [float(x) for x in t.f.slopes],
            "start": float(t.f.start),
        },
    }


def config_to_mapping(config: ExperimentConfig) -> dict:
    """Plain-JSON view of a config; inverse of config_from_mapping."""
    return {
        "experiment": config.experiment,
        "seeds": [int(s) for s in config.seeds],
        "schedule": None if config.schedule is None else _schedule_to_mapping(config.schedule),
        "grid_m": config.grid_m,
        "bandwidth": None if config.bandwidth is None else _bandwidth_to_mapping(config.bandwidth),
        "ball": None if config.ball is None else {"kind": config.ball.kind, "radius": float(config.ball.radius)},
        "target": None if config.target is None else _target_to_mapping(config.target),
        "rate": None if config.rate is None else _rate_to_mapping(config.rate),
        "chi_convention": config.chi_convention,
        "tolerance": float(config.tolerance),
        "t0_count": config.t0_count,
        "inner_net": bool(config.inner_net),
        "check_n": config.check_n,
        "reps": config.reps,
        "lambdas": [float(x) for x in config.lambdas],
        "window_a": float(config.window_a),
        "threshold_lambda": float(config.threshold_lambda),
    }


def _require_keys(mapping: dict, allowed: Sequence[str], where: str) -> None:
    extra = set(mapping) - set(allowed)
    if extra:
        raise ValueError(f"{where}: unknown field(s) {sorted(extra)}")


def _schedule_from_mapping(m: dict) -> IndexSchedule:
    _require_keys(m, ("kind", "start", "ratio", "count", "k_min", "k_max"), "schedule")
    return IndexSchedule(
        kind=m.get("kind", "geometric"),
        start=m.get("start"),
        ratio=m.get("ratio"),
        count=m.get("count"),
        k_min=m.get("k_min"),
        k_max=m.get("k_max"),
    )


def _bandwidth_from_mapping(m: dict) -> BandwidthSchedule:
    _require_keys(m, ("kind", "theta", "table"), "bandwidth")
    table = m.get("table")
    if table is not None:
        table = tuple((int(n), float(a)) for n, a in table)
    return BandwidthSchedule(kind=m.get("kind", "power"), theta=m.get("theta"), table=table)


def _rate_from_mapping(m: dict) -> RateFnSpec:
    _require_keys(m, ("kind", "table"), "rate")
    table = m.get("table")
    if table is not None:
        table = tuple((float(u), float(v)) for u, v in table)
    return RateFnSpec(kind=m.get("kind", "bv"), table=table)


def _target_from_mapping(m: dict) -> ChungTarget:
    _require_keys(m, ("kind", "chi_f", "f"), "target")
    fm = m["f"]
    _require_keys(fm, ("knots", "slopes", "start"), "target.f")
    f = SmoothPath(
        np.asarray(fm["knots"], dtype=float),
        np.asarray(fm["slopes"], dtype=float),
        float(fm.get("start", 0.0)),
    )
    return ChungTarget(f=f, kind=m["kind"], chi_f=m.get("chi_f", "estimated"))


_CONFIG_KEYS = tuple(f.name for f in dataclasses.fields(ExperimentConfig))


def config_from_mapping(mapping: dict) -> ExperimentConfig:
    """Build a validated config from a plain-JSON mapping."""
    if not isinstance(mapping, dict):
        raise ValueError("config root must be a JSON object")
    _require_keys(mapping, _CONFIG_KEYS, "config")
    if "experiment" not in mapping or "seeds" not in mapping:
        raise ValueError("config: 'experiment' and 'seeds' are required")
    kwargs = {"experiment": mapping["experiment"], "seeds": tuple(int(s) for s in mapping["seeds"])}
    if mapping.get("schedule") is not None:
        kwargs["schedule"] = _schedule_from_mapping(mapping["schedule"])
    if mapping.get("bandwidth") is not None:
        kwargs["bandwidth"] = _bandwidth_from_mapping(mapping["bandwidth"])
    if mapping.get("ball") is not None:
        bm = mapping["ball"]
        _require_keys(bm, ("kind", "radius"), "ball")
        kwargs["ball"] = BallSpec(kind=bm["kind"], radius=float(bm["radius"]))
    if mapping.get("target") is not None:
        kwargs["target"] = _target_from_mapping(mapping["target"])
    if mapping.get("rate") is not None:
        kwargs["rate"] = _rate_from_mapping(mapping["rate"])
    for key in ("grid_m", "t0_count", "check_n", "reps"):
        if key in mapping and mapping[key] is not None:
            kwargs[key] = int(mapping[key])
    for key in ("tolerance", "window_a", "threshold_lambda"):
        if key in mapping and mapping[key] is not None:
            kwargs[key] = float(mapping[key])
    if "chi_convention" in mapping:
        kwargs["chi_convention"] = mapping["chi_convention"]
    if "inner_net" in mapping:
        kwargs["inner_net"] = bool(mapping["inner_net"])
    if "lambdas" in mapping and mapping["lambdas"] is not None:
        kwargs["lambdas"] = tuple(float(x) for x in mapping["lambdas"])
    return ExperimentConfig(**kwargs)


def canonical_config_text(mapping: dict) -> str:
    """Sorted keys, compact separators, trailing newline: the hashed form."""
    return json.dumps(mapping, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def config_digest(mapping: dict) -> str:
    return hashlib.sha256(canonical_config_text(mapping).encode("ascii")).hexdigest()


# -- run manifest ----------------------------------------------------------------


@dataclass(frozen=True)
class RunManifest:
    tool_version: str
    config_digest: str
    seeds: Tuple[int, ...]
    started_at: str
    finished_at: str
    record_counts: Tuple[Tuple[str, int], ...]

    def to_json(self) -> str:
        obj = {
            "tool_version": self.tool_version,
            "config_digest": self.config_digest,
            "seeds": list(self.seeds),
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "record_counts": {k: v for k, v in self.record_counts},
        }
        return json.dumps(obj, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        obj = json.loads(text)
        return cls(
            tool_version=obj["tool_version"],
            config_digest=obj["config_digest"],
            seeds=tuple(int(s) for s in obj["seeds"]),
            started_at=obj["started_at"],
            finished_at=obj["finished_at"],
            record_counts=tuple(sorted((str(k), int(v)) for k, v in obj["record_counts"].items())),
        )


def summarize_records(records: Iterable[ExperimentRecord]) -> Tuple[Tuple, ...]:
    """Per (experiment, n) medians: the tidy rows the report command emits.

    Columns: experiment, n, count, median_raw, median_scaled,
    median_running_extremum.
    """
    groups: Dict[Tuple[str, int], list] = {}
    for rec in records:
        groups.setdefault((rec.experiment, rec.n), []).append(rec)
    rows = []
    for (exp, n) in sorted(groups):
        grp = groups[(exp, n)]
        rows.append(
            (
                exp,
                n,
                len(grp),
                float(np.median([r.raw for r in grp])),
                float(np.median([r.scaled for r in grp])),
                float(np.median([r.running_extremum for r in grp])),
            )
        )
    return tuple(rows)


SUMMARY_HEADER = "experiment,n,count,median_raw,median_scaled,median_running_extremum"


def emit_summary(rows: Sequence[Tuple], path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(SUMMARY_HEADER + "\n")
        for exp, n, count, m_raw, m_scaled, m_run in rows:
            fh.write(
                f"{exp},{n},{count},{_fmt_float(m_raw)},{_fmt_float(m_scaled)},{_fmt_float(m_run)}\n"
            )
