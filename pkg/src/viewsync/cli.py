"""Command-line surface.

Verbs:
  run <spec>      simulate the base config (sweeps ignored), write metrics
  sweep <spec>    run the full cartesian sweep from the spec file
  verify <spec>   like sweep, but exit 1 if any invariant violation or any
                  cell error turns up (CI gate)
  replay <trace>  recompute metrics from a stored trace; exit 2 on parse
                  errors (reported with line number), 1 if the trace holds
                  invariant violations

Spec files are YAML (JSON works too). Setting ``delta_units: true`` makes the
time-valued fields (gst, delta_actual, horizon, offsets lists, sync window
bounds, corruption times) multiples of delta_cap; delta_cap itself is always
absolute. Outputs land under --out: metrics.jsonl, summary.csv, summary.json,
and traces/*.jsonl when the spec sets ``traces: true``.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import yaml

from .harness import (
    ExperimentError,
    ExperimentSpec,
    replay_cell,
    run_experiment,
)
from .timeutil import to_frac
from .trace import TraceParseError

# Fields interpreted as clock/wall times when delta_units is on.
_TIME_FIELDS = {"gst", "delta_actual", "horizon"}

_SPEC_KEYS = {
    "base",
    "sweeps",
    "seeds",
    "base_seed",
    "mode",
    "max_cells",
    "traces",
    "delta_units",
}


def _scale_value(field: str, value, factor: Fraction):
    if value is None:
        return None
    if field in _TIME_FIELDS:
        return to_frac(value) * factor
    if field == "offsets" and not isinstance(value, str):
        seq = list(value)
        if seq and isinstance(seq[0], str):  # ("two_cluster", gap)
            return [seq[0]] + [to_frac(v) * factor for v in seq[1:]]
        return [to_frac(v) * factor for v in seq]
    if field == "sync_windows":
        return [
            [to_frac(s) * factor, None if e is None else to_frac(e) * factor]
            for s, e in value
        ]
    if field == "corruptions":
        out = []
        for c in value:
            c = dict(c)
            if "time" in c:
                c["time"] = to_frac(c["time"]) * factor
            out.append(c)
        return out
    return value


def _apply_delta_units(doc: dict) -> dict:
    base = dict(doc.get("base", {}))
    factor = to_frac(base.get("delta_cap", 1))
    for field in list(base):
        base[field] = _scale_value(field, base[field], factor)
    sweeps = {
        field: [_scale_value(field, v, factor) for v in values]
        for field, values in dict(doc.get("sweeps", {})).items()
    }
    out = dict(doc)
    out["base"] = base
    if sweeps:
        out["sweeps"] = sweeps
    return out


def load_spec(path, *, seed=None, horizon=None, mode=None, drop_sweeps=False):
    """Parse a spec file into an ExperimentSpec plus the traces flag."""
    with open(path, encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise ExperimentError(f"{path}: spec must be a mapping")
    unknown = set(doc) - _SPEC_KEYS
    if unknown:
        raise ExperimentError(f"{path}: unknown spec keys {sorted(unknown)}")
    base = dict(doc.get("base", {}))
    if horizon is not None:  # applied before unit scaling, so spec-file units
        base["horizon"] = horizon
        base.setdefault("stop", "horizon")
    doc = dict(doc)
    doc["base"] = base
    if doc.get("delta_units"):
        doc = _apply_delta_units(doc)
    base = doc["base"]
    spec = ExperimentSpec(
        base=base,
        sweeps={} if drop_sweeps else {k: list(v) for k, v in dict(doc.get("sweeps", {})).items()},
        seeds=int(doc.get("seeds", 1)),
        base_seed=int(doc.get("base_seed", 0)) if seed is None else seed,
        mode=mode or doc.get("mode", "measure"),
        max_cells=int(doc.get("max_cells", ExperimentSpec.max_cells)),
    )
    return spec, bool(doc.get("traces", False))


def _print_summary(summary: dict, rows: list) -> None:
    print(
        f"cells: {summary['cells']}  errors: {summary['errors']}  "
        f"violations: {summary['violations_total']}"
    )
    if summary["per_nf"]:
        header = f"{'n':>4} {'f':>3} {'cells':>6} {'mean_lat':>10} {'max_lat':>10} {'mean_words':>11} {'max_words':>10} {'viol':>5}"
        print(header)
        for row in summary["per_nf"]:
            lat_m = "-" if row["mean_latency"] is None else f"{row['mean_latency']:.2f}"
            lat_x = "-" if row["max_latency"] is None else f"{row['max_latency']:.2f}"
            print(
                f"{row['n']:>4} {row['f']:>3} {row['cells']:>6} {lat_m:>10} {lat_x:>10} "
                f"{row['mean_words']:>11.1f} {row['max_words']:>10} {row['violations']:>5}"
            )
    print(
        f"word rate: observed {summary['word_rate_observed']:.2f}, "
        f"frozen bound {summary['word_rate_frozen']} "
        f"(response steps frozen at {summary['response_steps_frozen']})"
    )
    for row in rows:
        if "error" in row:
            print(f"cell error: {row['error']}", file=sys.stderr)
        elif row["violations_count"]:
            for inv, seq, detail in row["violations"]:
                print(
                    f"violation in {row['config']} seed {row['seed']}: "
                    f"{inv} @ seq {seq} {detail}",
                    file=sys.stderr,
                )


def _run_batch(args, *, mode, drop_sweeps) -> int:
    try:
        spec, want_traces = load_spec(
            args.spec,
            seed=args.seed,
            horizon=args.horizon,
            mode=mode,
            drop_sweeps=drop_sweeps,
        )
    except (OSError, yaml.YAMLError, ExperimentError, ValueError) as exc:
        print(f"bad spec: {exc}", file=sys.stderr)
        return 2
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if want_traces:
        spec.traces_dir = str(out_dir / "traces")
    result = run_experiment(
        spec,
        metrics_path=out_dir / "metrics.jsonl",
        summary_path=out_dir / "summary.csv",
        jobs=args.jobs,
    )
    summary = result["summary"]
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _print_summary(summary, result["rows"])
    if mode == "verify" and (summary["violations_total"] or summary["errors"]):
        return 1
    return 0


def _cmd_run(args) -> int:
    return _run_batch(args, mode="measure", drop_sweeps=True)


def _cmd_sweep(args) -> int:
    return _run_batch(args, mode="measure", drop_sweeps=False)


def _cmd_verify(args) -> int:
    return _run_batch(args, mode="verify", drop_sweeps=False)


def _cmd_replay(args) -> int:
    try:
        row = replay_cell(args.trace)
    except FileNotFoundError as exc:
        print(f"cannot read trace: {exc}", file=sys.stderr)
        return 2
    except TraceParseError as exc:
        print(f"malformed trace: {exc}", file=sys.stderr)
        return 2
    text = json.dumps(row, indent=2, sort_keys=True)
    if args.out is not None:
        out = Path(args.out)
        if out.is_dir():
            out = out / "replay.json"
        out.write_text(text + "\n", encoding="utf-8")
    print(text)
    return 1 if row["violations_count"] else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="viewsync",
        description="Simulate and check the view-synchronisation protocol.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    def batch_verb(name, help_text, func):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("spec", help="YAML experiment spec")
        p.add_argument("--seed", type=int, default=None, help="override base seed")
        p.add_argument("--jobs", type=int, default=1, help="parallel worker count")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument(
            "--horizon",
            type=to_frac,
            default=None,
            help="override horizon (same units as the spec file)",
        )
        p.set_defaults(func=func)

    batch_verb("run", "simulate the base config only", _cmd_run)
    batch_verb("sweep", "run the full parameter sweep", _cmd_sweep)
    batch_verb("verify", "sweep and gate on invariant violations", _cmd_verify)

    p = sub.add_parser("replay", help="recompute metrics from a stored trace")
    p.add_argument("trace", help="ND-JSON trace file")
    p.add_argument("--out", default=None, help="write the record here as well")
    p.set_defaults(func=_cmd_replay)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
