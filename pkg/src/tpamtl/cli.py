"""Command line interface: ``tpamtl {synth,mine,train,eval,sweep}``.

Every option can also come from a ``--config`` file of ``key=value`` lines
(keys are the long option names without dashes; ``-`` and ``_`` are
interchangeable).  Command-line flags win over the file.

Exit status: 0 on success, 2 for invalid input or configuration, 1 for any
other failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from typing import List, Optional

from . import __version__
from .datafile import read_activities, write_activities
from .errors import TpamtlError, ValidationError
from .evaluation import kfold_cv, paired_t_test, relatedness_report, resubstitution_accuracy
from .model import ModelMode, save_model, train
from .optimizer import Hyperparams, SolverConfig
from .patterns import MiningConfig, mine, write_patterns
from .synthgen import benchmark_templates, generate, related_templates, separable_templates

# defaults shared by the config file and the flags
DEFAULTS = {
    "minsup": 0.01,
    "window": "avg2",
    "max_dim": 3,
    "aggregation": "max",
    "lambda": 0.05,
    "gamma": 0.001,
    "theta": 0.01,
    "mode": "amtl",
    "k": 10,
    "seed": 0,
    "jobs": 1,
    "standardize": False,
    "seconds": False,
}

PRESETS = {
    "benchmark": lambda noise: benchmark_templates(0.3 if noise is None else noise),
    "related": lambda noise: related_templates(0.2 if noise is None else noise),
    "separable": lambda noise: _with_noise(separable_templates(4), noise),
}


def _with_noise(templates, noise):
    if noise is None:
        return templates
    from dataclasses import replace

    return [replace(t, noise_rate=noise) for t in templates]


def read_config(path) -> dict:
    cfg = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValidationError(f"{path}:{lineno}: expected key=value")
            key = key.strip().replace("-", "_")
            if key not in DEFAULTS:
                raise ValidationError(f"{path}:{lineno}: unknown key {key!r}")
            cfg[key] = value.strip()
    return cfg


def _bool(value) -> bool:
    if isinstance(value, bool):
        return value
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"not a boolean: {value!r}")


def _settings(args) -> dict:
    """Merge defaults, the config file and explicit flags, with types applied."""
    merged = dict(DEFAULTS)
    if getattr(args, "config", None):
        merged.update(read_config(args.config))
    for key in DEFAULTS:
        v = getattr(args, key, None)
        if v is not None and v is not False:
            merged[key] = v
    try:
        out = {
            "minsup": float(merged["minsup"]),
            "max_dim": int(merged["max_dim"]),
            "aggregation": str(merged["aggregation"]),
            "lambda": float(merged["lambda"]),
            "gamma": float(merged["gamma"]),
            "theta": float(merged["theta"]),
            "k": int(merged["k"]),
            "seed": int(merged["seed"]),
            "jobs": int(merged["jobs"]),
            "standardize": _bool(merged["standardize"]),
            "seconds": _bool(merged["seconds"]),
        }
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    modes = merged["mode"]
    if isinstance(modes, str):
        modes = [m for m in modes.split(",") if m.strip()]
    out["modes"] = [ModelMode.parse(m) for m in modes]
    window = str(merged["window"]).strip()
    if window in ("avg2", "avg", "max"):
        out["window"], out["window_mode"] = None, window
    else:
        try:
            out["window"], out["window_mode"] = int(window), "avg2"
        except ValueError:
            raise ValidationError(f"window must be avg2, avg, max or a tick count, got {window!r}") from None
    return out


def _mining_cfg(s) -> MiningConfig:
    return MiningConfig(s["minsup"], s["window"], s["max_dim"], s["aggregation"], s["window_mode"])


def _hp(s) -> Hyperparams:
    return Hyperparams(s["lambda"], s["gamma"], s["theta"])


def _load(args, s):
    return read_activities(args.input, seconds=s["seconds"])


def _emit_json(obj, stream):
    stream.write(json.dumps(obj, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# commands


def cmd_synth(args, out) -> None:
    templates = PRESETS[args.preset](args.noise)
    acts = generate(templates, args.per_class, args.seed if args.seed is not None else 0)
    names = [t.label_name for t in templates]
    if args.output in (None, "-"):
        write_activities(acts, out, names)
    else:
        write_activities(acts, args.output, names)


def cmd_mine(args, out) -> None:
    s = _settings(args)
    acts, _ = _load(args, s)
    t0 = time.perf_counter()
    fs = mine(acts, _mining_cfg(s))
    elapsed = time.perf_counter() - t0
    if args.output:
        write_patterns(fs, args.output)
    stats = {
        "activities": len(acts),
        "window": fs.window,
        "minsup": s["minsup"],
        "patterns": len(fs),
        "patterns_by_dim": {str(d): n for d, n in sorted(fs.counts_by_dim().items())},
        "wall_time_s": round(elapsed, 6),
    }
    _emit_json(stats, out)


def cmd_train(args, out) -> None:
    s = _settings(args)
    if len(s["modes"]) != 1:
        raise ValidationError("train takes exactly one --mode")
    acts, names = _load(args, s)
    model = train(
        acts,
        _mining_cfg(s),
        _hp(s),
        s["modes"][0],
        SolverConfig(),
        label_names=names,
        standardize=s["standardize"],
        keep_fista_log=bool(args.trace_csv),
    )
    save_model(model, args.output)
    if args.trace_csv:
        with open(args.trace_csv, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iter", "objective", "step_size", "rel_change"])
            for n, rec in enumerate(model.info["fista_log"], 1):
                w.writerow([n, repr(rec["objective"]), repr(rec["step_size"]), repr(rec["rel_change"])])
    info = model.info
    summary = {
        "mode": model.mode.value,
        "activities": len(acts),
        "classes": len(names),
        "patterns": len(model.feature_space),
        "window": model.window,
        "final_objective": info["objective"],
        "outer_iterations": info["outer_iterations"],
        "nonzero_rows": info["nonzero_rows"],
        "train_accuracy": info["train_accuracy"],
    }
    _emit_json(summary, out)
    if model.omega is not None and args.relatedness:
        out.write(relatedness_report(model).format() + "\n")


def _table(rows: List[List[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in rows) + "\n"


def cmd_eval(args, out) -> None:
    s = _settings(args)
    acts, names = _load(args, s)
    records = []
    if args.resubstitution:
        rows = [["mode", "train_accuracy"]]
        for mode in s["modes"]:
            model = train(acts, _mining_cfg(s), _hp(s), mode, label_names=names, standardize=s["standardize"])
            acc = resubstitution_accuracy(model, acts)
            rows.append([mode.value, f"{acc:.4f}"])
            records.append({"type": "resubstitution", "mode": mode.value, "accuracy": acc})
        out.write(_table(rows))
    else:
        results = []
        for mode in s["modes"]:
            res = kfold_cv(
                acts,
                s["k"],
                _mining_cfg(s),
                _hp(s),
                mode,
                s["seed"],
                label_names=names,
                standardize=s["standardize"],
                jobs=s["jobs"],
            )
            results.append(res)
            records.extend(res.records())
        rows = [["mode", "mean_acc", "std_acc"] + [f"fold{i}" for i in range(s["k"])]]
        for res in results:
            rows.append([res.mode, f"{res.mean:.4f}", f"{res.std:.4f}"] + [f"{a:.3f}" for a in res.fold_accuracies])
        out.write(_table(rows))
        if len(results) > 1:
            base = results[0]
            trows = [["comparison", "p_value"]]
            for other in results[1:]:
                p = paired_t_test(base.fold_accuracies, other.fold_accuracies)
                trows.append([f"{base.mode} vs {other.mode}", f"{p:.3g}"])
                records.append({"type": "ttest", "a": base.mode, "b": other.mode, "p_value": p})
            out.write(_table(trows))
    if args.jsonl:
        with open(args.jsonl, "w", encoding="utf-8", newline="\n") as fh:
            for r in records:
                _emit_json(r, fh)


def _parse_grid(args) -> List[float]:
    if args.grid:
        try:
            return [float(v) for v in args.grid.split(",") if v.strip()]
        except ValueError:
            raise ValidationError(f"bad --grid {args.grid!r}") from None
    if args.doubling:
        try:
            lo, hi = (float(v) for v in args.doubling.split(":"))
        except ValueError:
            raise ValidationError("--doubling expects START:STOP") from None
        if not 0 < lo <= hi:
            raise ValidationError("--doubling needs 0 < START <= STOP")
        grid, v = [], lo
        while v <= hi * (1 + 1e-12):
            grid.append(v)
            v *= 2
        return grid
    raise ValidationError("sweep needs --grid or --doubling")


def cmd_sweep(args, out) -> None:
    s = _settings(args)
    if len(s["modes"]) != 1:
        raise ValidationError("sweep takes exactly one --mode")
    grid = _parse_grid(args)
    acts, names = _load(args, s)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["param", "value", "mean_accuracy"])
    for value in grid:
        local = dict(s)
        local[args.param] = int(value) if args.param == "max_dim" else value
        res = kfold_cv(
            acts,
            local["k"],
            _mining_cfg(local),
            _hp(local),
            local["modes"][0],
            local["seed"],
            label_names=names,
            standardize=local["standardize"],
            jobs=local["jobs"],
        )
        w.writerow([args.param, repr(value), repr(res.mean)])
    if args.output in (None, "-"):
        out.write(buf.getvalue())
    else:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(buf.getvalue())


# ---------------------------------------------------------------------------
# argument parsing


def _common(p: argparse.ArgumentParser, modes_multi=False) -> None:
    p.add_argument("input", help="activity file")
    p.add_argument("--config", help="key=value configuration file")
    p.add_argument("--seconds", action="store_true", default=None, help="timestamps are decimal seconds")
    g = p.add_argument_group("mining")
    g.add_argument("--minsup", type=float)
    g.add_argument("--window", help="avg2 (default), avg, max or a width in ticks")
    g.add_argument("--max-dim", dest="max_dim", type=int)
    g.add_argument("--aggregation", choices=("max", "mean"))
    g = p.add_argument_group("model")
    g.add_argument("--lambda", dest="lambda", type=float)
    g.add_argument("--gamma", type=float)
    g.add_argument("--theta", type=float)
    g.add_argument("--standardize", action="store_true", default=None)
    choices = [m.value for m in ModelMode]
    if modes_multi:
        g.add_argument("--mode", action="append", choices=choices, help="repeat to compare modes")
    else:
        g.add_argument("--mode", choices=choices)
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tpamtl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic activity corpus")
    p.add_argument("--preset", choices=sorted(PRESETS), default="benchmark")
    p.add_argument("--per-class", dest="per_class", type=int, default=40)
    p.add_argument("--noise", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("mine", help="mine frequent temporal patterns")
    _common(p)
    p.add_argument("-o", "--output", help="pattern-set file to write")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("train", help="train a model and write it to a file")
    _common(p)
    p.add_argument("-o", "--output", required=True, help="model file to write")
    p.add_argument("--trace-csv", dest="trace_csv", help="write per-iteration FISTA trace")
    p.add_argument("--relatedness", action="store_true", help="print the learned relatedness matrix")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="k-fold cross-validation")
    _common(p, modes_multi=True)
    p.add_argument("--k", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--jsonl", help="write machine-readable records here")
    p.add_argument("--resubstitution", action="store_true", help="train on everything, score on the same data")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="cross-validated accuracy over a parameter grid")
    _common(p)
    p.add_argument("--k", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--param", required=True, choices=("lambda", "gamma", "theta", "minsup", "max_dim"))
    grid = p.add_mutually_exclusive_group(required=True)
    grid.add_argument("--grid", help="comma-separated values")
    grid.add_argument("--doubling", help="START:STOP, doubling each step")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Optional[List[str]] = None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args, out)
    except ValidationError as exc:
        print(f"tpamtl: error: {exc}", file=sys.stderr)
        return 2
    except (TpamtlError, OSError) as exc:
        print(f"tpamtl: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
