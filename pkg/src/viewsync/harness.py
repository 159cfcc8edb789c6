"""Batch experiment runner: sweeps, per-cell metrics, and roll-up summaries.

An experiment is a base configuration plus lists of values to sweep; the
cartesian product, crossed with a seed range, gives the cells. Each cell is
an isolated single-threaded simulation, so cells parallelise trivially with
a worker pool. One flat metrics record is written per cell (JSON lines), a
per-(n, f) aggregate table is written as CSV, and unsatisfiable cells are
reported as error rows without aborting the batch.
"""

from __future__ import annotations

import csv
import hashlib
import json
import multiprocessing
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from pathlib import Path
from typing import Any, Optional

from .constants import RESPONSE_STEPS_C, WORD_RATE_W
from .metrics import analyze
from .simnet import Corruption, SimConfig, Simulation
from .timeutil import frac_str, to_frac
from .trace import write_trace


class ExperimentError(Exception):
    """The experiment description itself is unusable."""


DEFAULT_MAX_CELLS = 20_000

# SimConfig fields a spec may set or sweep; "f" is a convenience knob that
# expands to silent corruption of the first f processors (the round-robin
# leaders of the first f groups).
_CONFIG_FIELDS = {
    "n",
    "delta_cap",
    "t",
    "k",
    "x",
    "delta_actual",
    "gst",
    "offsets",
    "corruptions",
    "network",
    "leaders",
    "drift_epsilon",
    "drift_rates",
    "sync_windows",
    "stop",
    "horizon",
    "seed",
}


@dataclass
class ExperimentSpec:
    base: dict[str, Any] = field(default_factory=dict)
    sweeps: dict[str, list] = field(default_factory=dict)
    seeds: int = 1
    base_seed: int = 0
    mode: str = "measure"
    max_cells: int = DEFAULT_MAX_CELLS
    traces_dir: Optional[str] = None

    def __post_init__(self) -> None:
        if self.mode not in ("measure", "verify", "replay"):
            raise ExperimentError(f"unknown mode {self.mode!r}")
        if self.seeds < 1:
            raise ExperimentError("seeds must be >= 1")
        for key in list(self.base) + list(self.sweeps):
            if key not in _CONFIG_FIELDS and key != "f":
                raise ExperimentError(f"unknown config field {key!r}")
        size = self.cell_count()
        if size > self.max_cells:
            raise ExperimentError(
                f"sweep expands to {size} cells, over the cap of {self.max_cells}"
            )

    def cell_count(self) -> int:
        size = self.seeds
        for values in self.sweeps.values():
            size *= len(values)
        return size

    def cells(self) -> list[dict[str, Any]]:
        keys = sorted(self.sweeps)
        out = []
        for combo in product(*(self.sweeps[k] for k in keys)):
            for s in range(self.seeds):
                cell = dict(self.base)
                cell.update(zip(keys, combo))
                cell["seed"] = self.base_seed + s
                out.append(cell)
        return out


def _normalize_corruptions(raw) -> tuple[Corruption, ...]:
    out = []
    for item in raw:
        if isinstance(item, Corruption):
            out.append(item)
        elif isinstance(item, dict):
            out.append(
                Corruption(item["proc"], item["strategy"], to_frac(item.get("time", 0)))
            )
        else:
            proc, strategy = item[0], item[1]
            when = to_frac(item[2]) if len(item) > 2 else Fraction(0)
            out.append(Corruption(proc, strategy, when))
    return tuple(out)


def build_config(cell: dict[str, Any]) -> SimConfig:
    """Expand one cell description into a SimConfig."""
    kwargs = dict(cell)
    f = kwargs.pop("f", None)
    if f is not None:
        if kwargs.get("corruptions"):
            raise ExperimentError("give either f or corruptions, not both")
        kwargs["corruptions"] = tuple(Corruption(i, "silent") for i in range(f))
    elif kwargs.get("corruptions"):
        kwargs["corruptions"] = _normalize_corruptions(kwargs["corruptions"])
    off = kwargs.get("offsets")
    if off is not None and not isinstance(off, str):
        seq = list(off)
        if seq and isinstance(seq[0], str):  # ("two_cluster", gap) form
            kwargs["offsets"] = (seq[0], *(to_frac(v) for v in seq[1:]))
        else:
            kwargs["offsets"] = tuple(to_frac(o) for o in seq)
    if kwargs.get("sync_windows") is not None:
        kwargs["sync_windows"] = tuple(
            (to_frac(s), None if e is None else to_frac(e)) for s, e in kwargs["sync_windows"]
        )
    for key in ("delta_cap", "delta_actual", "gst", "horizon", "drift_epsilon"):
        if kwargs.get(key) is not None:
            kwargs[key] = to_frac(kwargs[key])
    return SimConfig(**kwargs)


def config_hash(config: SimConfig) -> str:
    """Stable digest of a fully resolved configuration."""

    def enc(value):
        if isinstance(value, Fraction):
            return frac_str(value)
        if isinstance(value, Corruption):
            return {"proc": value.proc, "strategy": value.strategy, "time": frac_str(value.time)}
        if isinstance(value, tuple):
            return [enc(v) for v in value]
        return value

    doc = {k: enc(v) for k, v in sorted(vars(config).items())}
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def run_cell(cell: dict[str, Any], traces_dir: Optional[str] = None) -> dict[str, Any]:
    """One simulation plus analysis, reduced to the flat metrics record."""
    try:
        config = build_config(cell)
        records = Simulation(config).run()
        metrics = analyze(records)
    except (ExperimentError, ValueError, TypeError, KeyError) as exc:
        return {"error": str(exc), "cell": {k: str(v) for k, v in cell.items()}}
    digest = config_hash(config)
    if traces_dir is not None:
        path = Path(traces_dir) / f"trace-{digest}-s{config.seed}.jsonl"
        with open(path, "w", encoding="utf-8") as fh:
            write_trace(records, fh)
    cfg = records[0]["config"]
    return {
        "config": digest,
        "seed": cfg["seed"],
        "n": cfg["n"],
        "t": cfg["t"],
        "f": len(cfg["corruptions"]),
        "f_star": metrics.f_star,
        "gst": cfg["gst"],
        "delta": cfg["delta_actual"],
        "t_star": None if metrics.t_star is None else frac_str(metrics.t_star),
        "latency": None if metrics.latency is None else frac_str(metrics.latency),
        "words": metrics.words_counted,
        "violations_count": len(metrics.violations),
        "violations": [list(v) for v in metrics.violations],
    }


def _worker(args):
    index, cell, traces_dir = args
    try:
        return index, run_cell(cell, traces_dir)
    except Exception as exc:  # isolate the batch from any single blow-up
        return index, {"error": f"{type(exc).__name__}: {exc}", "cell": {k: str(v) for k, v in cell.items()}}


def replay_cell(trace_path) -> dict[str, Any]:
    """Recompute the flat metrics record from a stored trace alone."""
    from .trace import read_trace

    records = read_trace(trace_path)
    metrics = analyze(records)
    cfg = records[0]["config"]
    return {
        "config": Path(trace_path).stem.split("-")[1] if "-" in Path(trace_path).stem else None,
        "seed": cfg["seed"],
        "n": cfg["n"],
        "t": cfg["t"],
        "f": len(cfg["corruptions"]),
        "f_star": metrics.f_star,
        "gst": cfg["gst"],
        "delta": cfg["delta_actual"],
        "t_star": None if metrics.t_star is None else frac_str(metrics.t_star),
        "latency": None if metrics.latency is None else frac_str(metrics.latency),
        "words": metrics.words_counted,
        "violations_count": len(metrics.violations),
        "violations": [list(v) for v in metrics.violations],
    }


def summarize(rows: list[dict[str, Any]]) -> dict[str, Any]:
    """Aggregate flat records: per-(n, f) table plus empirical constants."""
    cells: dict[tuple[int, int], list[dict]] = {}
    errors = [r for r in rows if "error" in r]
    ok = [r for r in rows if "error" not in r]
    for r in ok:
        cells.setdefault((r["n"], r["f"]), []).append(r)
    table = []
    for (n, f), group in sorted(cells.items()):
        lat = [to_frac(r["latency"]) for r in group if r["latency"] is not None]
        words = [r["words"] for r in group]
        table.append(
            {
                "n": n,
                "f": f,
                "cells": len(group),
                "mean_latency": float(sum(lat) / len(lat)) if lat else None,
                "max_latency": float(max(lat)) if lat else None,
                "mean_words": sum(words) / len(words) if words else None,
                "max_words": max(words) if words else None,
                "violations": sum(r["violations_count"] for r in group),
            }
        )
    w_emp = max(
        (Fraction(r["words"], (r["f_star"] + 3) * r["n"]) for r in ok),
        default=Fraction(0),
    )
    return {
        "cells": len(rows),
        "errors": len(errors),
        "violations_total": sum(r["violations_count"] for r in ok),
        "per_nf": table,
        "word_rate_observed": float(w_emp),
        "word_rate_frozen": WORD_RATE_W,
        "response_steps_frozen": RESPONSE_STEPS_C,
    }


def run_experiment(
    spec: ExperimentSpec,
    metrics_path=None,
    summary_path=None,
    jobs: int = 1,
) -> dict[str, Any]:
    """Execute every cell, write metric records and the CSV summary."""
    if spec.traces_dir is not None:
        Path(spec.traces_dir).mkdir(parents=True, exist_ok=True)
    if spec.mode == "replay":
        if spec.traces_dir is None:
            raise ExperimentError("replay mode needs traces_dir")
        paths = sorted(Path(spec.traces_dir).glob("*.jsonl"))
        rows = [replay_cell(p) for p in paths]
    else:
        cells = spec.cells()
        work = [(i, cell, spec.traces_dir) for i, cell in enumerate(cells)]
        if jobs > 1 and len(work) > 1:
            with multiprocessing.Pool(jobs) as pool:
                indexed = pool.map(_worker, work)
        else:
            indexed = [_worker(w) for w in work]
        rows = [row for _i, row in sorted(indexed, key=lambda x: x[0])]
    if metrics_path is not None:
        with open(metrics_path, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
    summary = summarize(rows)
    summary["mode"] = spec.mode
    if summary_path is not None:
        with open(summary_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(
                fh,
                fieldnames=[
                    "n",
                    "f",
                    "cells",
                    "mean_latency",
                    "max_latency",
                    "mean_words",
                    "max_words",
                    "violations",
                ],
            )
            writer.writeheader()
            for row in summary["per_nf"]:
                writer.writerow(row)
    return {"rows": rows, "summary": summary}
