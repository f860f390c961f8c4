"""Command-line front end.

    overbook simulate   --workload W [--strategy S ...] [--capacity C] ...
    overbook tile-stats --workload W (--size N | --shape RxC) [--capacity C]
    overbook swiftiles  --workload W --capacity C [--y Y] [--k K] [--seed S]
    overbook prescient  --workload W --capacity C [--ladder-steps N]
    overbook sweep      --config spec.json [overrides]

A workload is a Matrix Market path (resolved against ``--data-dir`` or
``$OVERBOOK_DATA_DIR`` when relative), ``corpus:<name>:<index>`` for a member
of a built-in corpus, or ``gen:<json>`` with generator fields.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

from . import experiments
from .generate import GeneratorSpec, generate
from .matrix import MatrixMarketError, SparseMatrix, load_matrix_market, transpose
from .sim import STRATEGIES, SimConfig, SimReport, output_nonzeros, simulate
from .swiftiles import SwiftilesConfig, estimate_tile_size
from .tiling import TileShape, default_ladder, occupancy_histogram, prescient_tile_size, size_to_shape

DATA_DIR_ENV = "OVERBOOK_DATA_DIR"
SCHEMA_VERSION = 1
SWEEP_AXES = ("none", "y", "k", "capacity")

# exit codes, one per failure class
EXIT_USAGE = 2
EXIT_WORKLOAD = 3
EXIT_CONFIG = 4
EXIT_PARSE = 5
EXIT_OUTPUT = 6


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# ------------------------------------------------------------ workloads

def data_dir(override: Optional[str] = None) -> str:
    return override or os.environ.get(DATA_DIR_ENV) or os.getcwd()


def load_workload(source, base_dir: Optional[str] = None) -> tuple[str, SparseMatrix]:
    """Resolve a workload source to ``(name, matrix)``."""
    if isinstance(source, dict):
        if "generator" in source:
            source = "gen:" + json.dumps(source["generator"])
        elif "corpus" in source:
            source = f"corpus:{source['corpus']}:{source.get('index', 0)}"
        elif "path" in source:
            source = source["path"]
        else:
            raise CliError(f"workload entry needs 'path', 'generator' or 'corpus': {source}", EXIT_CONFIG)
    if not isinstance(source, str) or not source:
        raise CliError(f"invalid workload source {source!r}", EXIT_CONFIG)
    if source.startswith("gen:"):
        try:
            spec = GeneratorSpec.from_dict(json.loads(source[4:]))
        except (ValueError, TypeError) as e:
            raise CliError(f"invalid generator spec: {e}", EXIT_CONFIG) from None
        return experiments.spec_name(spec), generate(spec)
    if source.startswith("corpus:"):
        parts = source.split(":")
        try:
            specs = experiments.CORPORA[parts[1]]
            spec = specs[int(parts[2]) if len(parts) > 2 else 0]
        except (KeyError, IndexError, ValueError):
            raise CliError(f"unknown corpus member {source!r}; corpora: {sorted(experiments.CORPORA)}",
                           EXIT_WORKLOAD) from None
        return experiments.spec_name(spec), generate(spec)
    path = source if os.path.isabs(source) else os.path.join(data_dir(base_dir), source)
    try:
        m = load_matrix_market(path)
    except MatrixMarketError as e:
        raise CliError(f"cannot parse {path}: {e}", EXIT_PARSE) from None
    except OSError as e:
        raise CliError(f"cannot read workload {path}: {e.strerror or e}", EXIT_WORKLOAD) from None
    return os.path.basename(path), m


# ------------------------------------------------------------ experiment spec

@dataclass
class ExperimentSpec:
    workloads: list
    strategies: list = field(default_factory=lambda: list(STRATEGIES))
    sim: dict = field(default_factory=dict)
    sweep_axis: str = "none"
    sweep_values: list = field(default_factory=list)
    seeds: list = field(default_factory=lambda: [0])
    out: Optional[str] = None
    jobs: int = 1

    def validate(self) -> None:
        if not self.workloads:
            raise CliError("experiment needs at least one workload", EXIT_CONFIG)
        if not self.strategies:
            raise CliError("experiment needs at least one strategy", EXIT_CONFIG)
        bad = [s for s in self.strategies if s not in STRATEGIES]
        if bad:
            raise CliError(f"unknown strategy {bad[0]!r}; expected one of {STRATEGIES}", EXIT_CONFIG)
        if not self.seeds:
            raise CliError("experiment needs at least one seed", EXIT_CONFIG)
        if self.sweep_axis not in SWEEP_AXES:
            raise CliError(f"unknown sweep axis {self.sweep_axis!r}; expected one of {SWEEP_AXES}", EXIT_CONFIG)
        if self.sweep_axis != "none" and not self.sweep_values:
            raise CliError(f"sweep over {self.sweep_axis} needs values", EXIT_CONFIG)
        if self.jobs < 1:
            raise CliError("jobs must be >= 1", EXIT_CONFIG)
        for point in self.points():
            self.config(STRATEGIES[0], point, self.seeds[0])

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        known = {"workloads", "strategies", "sim", "sweep", "seeds", "out", "jobs"}
        extra = set(d) - known
        if extra:
            raise CliError(f"unknown config keys: {sorted(extra)}", EXIT_CONFIG)
        sweep = d.get("sweep") or {}
        return cls(workloads=list(d.get("workloads", [])),
                   strategies=list(d.get("strategies", STRATEGIES)),
                   sim=dict(d.get("sim", {})),
                   sweep_axis=sweep.get("axis", "none"),
                   sweep_values=list(sweep.get("values", [])),
                   seeds=list(d.get("seeds", [0])),
                   out=d.get("out"),
                   jobs=int(d.get("jobs", 1)))

    def points(self) -> list:
        return [None] if self.sweep_axis == "none" else list(self.sweep_values)

    def config(self, strategy: str, point, seed: int) -> SimConfig:
        kw = dict(self.sim)
        if "ladder_steps" in kw:
            kw.pop("ladder_steps")
        if self.sweep_axis != "none":
            kw[self.sweep_axis] = point
        kw.update(strategy=strategy, seed=seed)
        if kw.get("ladder") is not None:
            kw["ladder"] = tuple(kw["ladder"])
        try:
            return SimConfig(**kw)
        except (TypeError, ValueError) as e:
            raise CliError(f"invalid simulator config: {e}", EXIT_CONFIG) from None


CSV_FIELDS = ["workload", "sweep_axis", "sweep_point", "seed"] + SimReport.field_names()


def _run_one(args):
    name, A, B, outputs, cfg = args
    if cfg.strategy == "prescient" and cfg.ladder is None:
        cfg = replace(cfg, ladder=experiments.fine_ladder(cfg.capacity, max(A.rows * A.cols, B.rows * B.cols)))
    return simulate(A, B, cfg, output_elements=outputs)


def run(spec: ExperimentSpec, base_dir: Optional[str] = None) -> dict:
    """Execute every (workload, sweep point, seed, strategy) run.

    Returns ``{"rows": [...], "summary": {...}}``; writes results.csv and
    summary.json under ``spec.out`` when set.
    """
    spec.validate()
    loaded = []
    for src in spec.workloads:
        name, A = load_workload(src, base_dir)
        B = transpose(A)
        loaded.append((name, A, B, output_nonzeros(A, B)))
    tasks, keys = [], []
    for name, A, B, outputs in loaded:
        for point in spec.points():
            for seed in spec.seeds:
                for strategy in spec.strategies:
                    tasks.append((name, A, B, outputs, spec.config(strategy, point, seed)))
                    keys.append((name, point, seed))
    try:
        if spec.jobs > 1:
            with ProcessPoolExecutor(spec.jobs) as pool:
                reports = list(pool.map(_run_one, tasks))  # map keeps task order
        else:
            reports = [_run_one(t) for t in tasks]
    except ValueError as e:
        raise CliError(f"simulation failed: {e}", EXIT_CONFIG) from None
    rows = []
    for (name, point, seed), rep in zip(keys, reports):
        row = {"workload": name, "sweep_axis": spec.sweep_axis,
               "sweep_point": "" if point is None else point, "seed": seed}
        row.update(rep.to_dict())
        rows.append(row)
    summary = summarize(rows, spec.strategies)
    if spec.out:
        write_outputs(spec.out, rows, summary)
    return {"rows": rows, "summary": summary}


def summarize(rows: list, strategies: list) -> dict:
    """Geometric-mean ratios of every strategy's traffic and cycles against a baseline."""
    baseline = "prescient" if "prescient" in strategies else strategies[0]
    groups: dict = {}
    for r in rows:
        groups.setdefault((r["workload"], str(r["sweep_point"]), r["seed"]), {})[r["strategy"]] = r
    ratios = {s: {"traffic": [], "cycles": []} for s in strategies}
    for g in groups.values():
        base = g.get(baseline)
        if base is None:
            continue
        for s, r in g.items():
            if r["parent_traffic"] > 0 and base["parent_traffic"] > 0:
                ratios[s]["traffic"].append(r["parent_traffic"] / base["parent_traffic"])
            if r["cycles"] > 0 and base["cycles"] > 0:
                ratios[s]["cycles"].append(base["cycles"] / r["cycles"])
    per = {}
    for s, d in ratios.items():
        per[s] = {
            "traffic_ratio_geomean": experiments.geometric_mean(d["traffic"]) if d["traffic"] else None,
            "speedup_geomean": experiments.geometric_mean(d["cycles"]) if d["cycles"] else None,
            "runs": len(d["traffic"]),
        }
    return {"schema_version": SCHEMA_VERSION, "baseline": baseline, "strategies": per,
            "runs": len(rows)}


def csv_text(rows: list) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in CSV_FIELDS})
    return buf.getvalue()


def write_outputs(out_dir: str, rows: list, summary: dict) -> None:
    try:
        os.makedirs(out_dir, exist_ok=True)
        stamp = time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())
        with open(os.path.join(out_dir, "results.csv"), "w", newline="") as fh:
            fh.write(f"# generated {stamp}\n")
            fh.write(csv_text(rows))
        with open(os.path.join(out_dir, "summary.json"), "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as e:
        raise CliError(f"cannot write outputs to {out_dir}: {e.strerror or e}", EXIT_OUTPUT) from None


# ------------------------------------------------------------ single commands

def tile_stats(m: SparseMatrix, shape: TileShape, capacity: Optional[int]) -> dict:
    dist = occupancy_histogram(m, shape)
    vals, counts = dist.histogram()
    _, cdf = dist.cdf()
    out = {
        "shape": str(dist.shape),
        "tiles": len(dist),
        "max": dist.max,
        "mean": dist.mean(),
        "histogram": {"occupancy": vals.tolist(), "count": counts.tolist()},
        "cdf": {"occupancy": vals.tolist(), "fraction": cdf.tolist()},
    }
    if capacity is not None:
        out["capacity"] = capacity
        out["fraction_fitting"] = 1.0 - dist.fraction_exceeding(capacity)
    return out


def _parse_shape(text: str) -> TileShape:
    try:
        r, c = text.lower().split("x")
        return TileShape(int(r), int(c))
    except ValueError:
        raise CliError(f"invalid shape {text!r}; expected RxC with positive integers", EXIT_USAGE) from None


def _parse_k(text: str):
    if text in ("all", "none", "exhaustive"):
        return None
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"k must be an integer or 'all', got {text!r}") from None


def _emit(obj, out: Optional[str]) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        try:
            with open(out, "w") as fh:
                fh.write(text)
        except OSError as e:
            raise CliError(f"cannot write {out}: {e.strerror or e}", EXIT_OUTPUT) from None
    else:
        sys.stdout.write(text)


def _common(p: argparse.ArgumentParser, workload_required=True):
    p.add_argument("--workload", required=workload_required, help="path, corpus:<name>:<i> or gen:<json>")
    p.add_argument("--data-dir", help=f"base directory for relative paths (default ${DATA_DIR_ENV})")
    p.add_argument("--out", help="output file (directory for sweep)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="overbook", description="Tile overbooking experiments")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("simulate", help="simulate A x A^T for one or more strategies")
    _common(p)
    p.add_argument("--strategy", action="append", choices=STRATEGIES)
    p.add_argument("--capacity", type=int, default=1024)
    p.add_argument("--idiom", choices=("tailor", "buffet"), default="tailor")
    p.add_argument("--fifo-size", type=int)
    p.add_argument("--y", type=float, default=0.10)
    p.add_argument("--k", type=_parse_k, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("tile-stats", help="exhaustive occupancy distribution")
    _common(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--size", type=int)
    g.add_argument("--shape")
    p.add_argument("--role", choices=("A", "B"), default="A")
    p.add_argument("--capacity", type=int)

    p = sub.add_parser("swiftiles", help="sampled tile-size estimate")
    _common(p)
    p.add_argument("--capacity", type=int, required=True)
    p.add_argument("--y", type=float, default=0.10)
    p.add_argument("--k", type=_parse_k, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--role", choices=("A", "B"), default="A")

    p = sub.add_parser("prescient", help="largest tile size with no overbooked tile")
    _common(p)
    p.add_argument("--capacity", type=int, required=True)
    p.add_argument("--role", choices=("A", "B"), default="A")
    p.add_argument("--ladder-steps", type=int, default=1, help="ladder sizes per doubling")

    p = sub.add_parser("sweep", help="run an experiment spec")
    _common(p, workload_required=False)
    p.add_argument("--config", help="JSON experiment spec")
    p.add_argument("--strategy", action="append", choices=STRATEGIES)
    p.add_argument("--capacity", type=int)
    p.add_argument("--y", type=float)
    p.add_argument("--k", type=_parse_k, default=argparse.SUPPRESS)
    p.add_argument("--seed", type=int, action="append")
    p.add_argument("--axis", choices=SWEEP_AXES)
    p.add_argument("--values", help="comma-separated sweep values")
    p.add_argument("--jobs", type=int)
    return ap


def _sweep_spec(a) -> ExperimentSpec:
    d = {}
    if a.config:
        try:
            with open(a.config) as fh:
                d = json.load(fh)
        except OSError as e:
            raise CliError(f"cannot read config {a.config}: {e.strerror or e}", EXIT_CONFIG) from None
        except json.JSONDecodeError as e:
            raise CliError(f"config {a.config} is not valid JSON: {e}", EXIT_CONFIG) from None
        if not isinstance(d, dict):
            raise CliError("config must be a JSON object", EXIT_CONFIG)
    spec = ExperimentSpec.from_dict(d)
    # flags win over file values
    if a.workload:
        spec.workloads = [a.workload]
    if a.strategy:
        spec.strategies = a.strategy
    for key in ("capacity", "y"):
        if getattr(a, key) is not None:
            spec.sim[key] = getattr(a, key)
    if hasattr(a, "k"):
        spec.sim["k"] = a.k
    if a.seed:
        spec.seeds = a.seed
    if a.axis:
        spec.sweep_axis = a.axis
    if a.values:
        spec.sweep_values = [_parse_value(spec.sweep_axis, v) for v in a.values.split(",")]
    elif spec.sweep_axis in ("k", "capacity"):
        spec.sweep_values = [_parse_value(spec.sweep_axis, v) for v in spec.sweep_values]
    if a.jobs:
        spec.jobs = a.jobs
    if a.out:
        spec.out = a.out
    return spec


def _parse_value(axis: str, v):
    if v is None or (isinstance(v, str) and v.strip() in ("all", "none", "exhaustive")):
        if axis == "k":
            return None
        raise CliError(f"sweep value {v!r} is only valid for k", EXIT_CONFIG)
    try:
        return float(v) if axis == "y" else int(v)
    except (TypeError, ValueError):
        raise CliError(f"invalid {axis} sweep value {v!r}", EXIT_CONFIG) from None


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    try:
        return _dispatch(a)
    except CliError as e:
        print(f"overbook: error: {e}", file=sys.stderr)
        return e.code


def _dispatch(a) -> int:
    if a.cmd == "sweep":
        spec = _sweep_spec(a)
        result = run(spec, a.data_dir)
        if not spec.out:
            sys.stdout.write(csv_text(result["rows"]))
        return 0

    name, m = load_workload(a.workload, a.data_dir)
    try:
        if a.cmd == "simulate":
            B = transpose(m)
            outputs = output_nonzeros(m, B)
            reports = []
            for strategy in a.strategy or list(STRATEGIES):
                cfg = SimConfig(capacity=a.capacity, strategy=strategy, idiom=a.idiom,
                                fifo_size=a.fifo_size, y=a.y, k=a.k, seed=a.seed)
                reports.append(_run_one((name, m, B, outputs, cfg)))
            rows = [dict({"workload": name, "sweep_axis": "none", "sweep_point": "", "seed": a.seed},
                         **r.to_dict()) for r in reports]
            if a.format == "csv":
                text = csv_text(rows)
                if a.out:
                    with open(a.out, "w") as fh:
                        fh.write(text)
                else:
                    sys.stdout.write(text)
            else:
                _emit({"workload": name, "reports": [r.to_dict() for r in reports]}, a.out)
        elif a.cmd == "tile-stats":
            shape = _parse_shape(a.shape) if a.shape else size_to_shape(a.size, m.shape, a.role)
            _emit(dict(tile_stats(m, shape, a.capacity), workload=name), a.out)
        elif a.cmd == "swiftiles":
            res = estimate_tile_size(m, SwiftilesConfig(a.capacity, a.y, a.k, a.seed), a.role)
            _emit({"workload": name, "t_initial": res.t_initial, "initial_shape": str(res.initial_shape),
                   "samples": None if res.distribution is None else len(res.distribution),
                   "q_y": res.q_y, "t_target": res.t_target, "shape": str(res.shape)}, a.out)
        elif a.cmd == "prescient":
            ladder = default_ladder(a.capacity, m.rows * m.cols, a.ladder_steps)
            shape = prescient_tile_size(m, a.capacity, a.role, ladder)
            _emit({"workload": name, "capacity": a.capacity, "shape": str(shape), "size": shape.size,
                   "max_occupancy": occupancy_histogram(m, shape).max}, a.out)
    except ValueError as e:
        raise CliError(f"invalid {a.cmd} arguments: {e}", EXIT_CONFIG) from None
    except OSError as e:
        raise CliError(f"cannot write output: {e.strerror or e}", EXIT_OUTPUT) from None
    return 0


if __name__ == "__main__":
    sys.exit(main())
