"""Command-line surface: dataset generation, training runs, baseline,
ablations, checkpoint evaluation, and report assembly.

Exit codes: 0 ok, 2 usage/config error, 3 data error, 4 numeric divergence.
Output files are written via write-then-rename so interrupted runs never leave
half-written artifacts. If ALTSAMPLE_OUT_ROOT is set, relative --out paths
are resolved against it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .checkpoint import load_model, save_model
from .config import config_hash, validate_config, write_effective
from .data import save_task
from .errors import ConfigError, DataError, NumericError
from .metrics import MetricsReport, comparison_grid, emit_report, evaluate
from .network import BALANCED
from .training import VARIANTS, ablation_variant, alternate_learn, baseline_pseudo_label

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _resolve_out(out: str) -> str:
    root = os.environ.get("ALTSAMPLE_OUT_ROOT")
    if root and not os.path.isabs(out):
        return os.path.join(root, out)
    return out


def _atomic_write(path: str, payload: str) -> str:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(payload)
    os.replace(tmp, path)
    return path


def _write_json(path: str, doc) -> str:
    return _atomic_write(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _write_run_meta(out_dir: str, command: str, chash: str, seed: int, variant: str | None = None):
    _write_json(os.path.join(out_dir, "run.json"),
                {"command": command, "variant": variant, "config_hash": chash, "seed": seed})


def _final_reports(out_dir: str, reports: list[MetricsReport], chash: str, seed: int, eff: dict,
                   stem: str = "final_metrics"):
    emit_report(reports, os.path.join(out_dir, f"{stem}.txt"), "rows-text", config_hash=chash, seed=seed)
    emit_report(reports, os.path.join(out_dir, f"{stem}.json"), "structured",
                config_hash=chash, seed=seed, extra=eff)


def cmd_gen_data(args) -> int:
    train_cfg, data_cfg, eff = validate_config(args.config, args.seed)
    out = _resolve_out(args.out)
    os.makedirs(out, exist_ok=True)
    write_effective(eff, out)
    task = data_cfg.build()
    save_task(task, out, extra={"config_hash": config_hash(eff)})
    print(f"wrote dataset manifest to {out}")
    return EXIT_OK


def _train_like(args, command: str) -> int:
    train_cfg, data_cfg, eff = validate_config(args.config, args.seed)
    out = _resolve_out(args.out)
    os.makedirs(out, exist_ok=True)
    write_effective(eff, out)
    chash = config_hash(eff)
    task = data_cfg.build()
    _write_run_meta(out, command, chash, train_cfg.seed, getattr(args, "variant", None))

    if command == "train":
        trace_rows: list[dict] = []

        def on_loop_end(loop, model, row):
            save_model(model, os.path.join(out, f"checkpoint_loop{loop}.npz"), chash, {"loop": loop})
            trace_rows.append({
                "loop": loop,
                "pseudo": row.pseudo.row() if row.pseudo else None,
                "test": row.test.row() if row.test else None,
                "stage2_ce": row.stage2_ce,
                "stage3_loss": row.stage3_loss,
            })
            _write_json(os.path.join(out, "trace.json"), {"config_hash": chash, "rows": trace_rows})

        model, trace = alternate_learn(task.labeled, task.unlabeled, train_cfg,
                                       test=task.test, splits=task.splits, on_loop_end=on_loop_end)
        reports = [r.test for r in trace.rows if r.test is not None]
        pseudo_reports = [r.pseudo for r in trace.rows if r.pseudo is not None]
        if pseudo_reports:
            emit_report(pseudo_reports, os.path.join(out, "pseudo_accuracy.txt"), "rows-text",
                        config_hash=chash, seed=train_cfg.seed)
        if trace.init_test is not None:
            _final_reports(out, [trace.init_test], chash, train_cfg.seed, eff, stem="init_metrics")
        final = reports[-1] if reports else evaluate(model, BALANCED, task.test, task.splits)
    elif command == "baseline":
        model, final = baseline_pseudo_label(task.labeled, task.unlabeled, train_cfg,
                                             test=task.test, splits=task.splits)
    else:
        model, final = ablation_variant(task.labeled, task.unlabeled, train_cfg, args.variant,
                                        test=task.test, splits=task.splits)

    save_model(model, os.path.join(out, "checkpoint_final.npz"), chash, {"command": command})
    _final_reports(out, [final], chash, train_cfg.seed, eff)
    print(f"{command} done: overall={final.overall:.4f} (outputs in {out})")
    return EXIT_OK


def cmd_eval(args) -> int:
    run_dir = args.run_dir
    eff_path = os.path.join(run_dir, "effective.json")
    ckpt_path = os.path.join(run_dir, "checkpoint_final.npz")
    for p in (eff_path, ckpt_path):
        if not os.path.exists(p):
            raise DataError(f"run directory is missing {os.path.basename(p)}: {run_dir}")
    train_cfg, data_cfg, eff = validate_config(eff_path)
    task = data_cfg.build()
    model, meta = load_model(ckpt_path)
    report = evaluate(model, BALANCED, task.test, task.splits)
    out = _resolve_out(args.out) if args.out else run_dir
    os.makedirs(out, exist_ok=True)
    _final_reports(out, [report], config_hash(eff), train_cfg.seed, eff, stem="eval_metrics")
    print(f"eval: overall={report.overall:.4f} (outputs in {out})")
    return EXIT_OK


def cmd_report(args) -> int:
    rows = []
    for run_dir in args.run_dirs:
        meta_path = os.path.join(run_dir, "run.json")
        metrics_path = os.path.join(run_dir, "final_metrics.json")
        for p in (meta_path, metrics_path):
            if not os.path.exists(p):
                raise DataError(f"run directory is missing {os.path.basename(p)}: {run_dir}")
        with open(meta_path) as fh:
            meta = json.load(fh)
        with open(metrics_path) as fh:
            doc = json.load(fh)
        row = doc["rows"][-1]
        name = meta["command"] if not meta.get("variant") else f"{meta['command']}:{meta['variant']}"
        rep = MetricsReport(
            overall=row["overall"],
            split_acc={k: row[k] for k in ("many", "medium", "few")},
            per_class=np.array(doc["per_class"][-1]),
            split_counts=doc["split_counts"][-1],
            config_hash=doc["config_hash"],
            seed=doc["seed"],
        )
        rows.append((name, rep))
    grid = comparison_grid(rows)
    out = _resolve_out(args.out)
    os.makedirs(out, exist_ok=True)
    if args.format == "structured":
        _write_json(os.path.join(out, "grid.json"),
                    {"methods": [n for n, _ in rows],
                     "rows": [{"method": n, **r.row()} for n, r in rows]})
    _atomic_write(os.path.join(out, "grid.txt"), grid)
    print(grid, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="altsample",
                                     description="Alternate-sampling semi-supervised training on long-tailed data")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="path to a flat-key JSON config")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")

    p = sub.add_parser("gen-data", help="materialize a synthetic task to disk")
    common(p)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="run alternate learning end to end")
    common(p)
    p.set_defaults(func=_train_like, command_name="train")

    p = sub.add_parser("baseline", help="run the matched-budget pseudo-label baseline")
    common(p)
    p.set_defaults(func=_train_like, command_name="baseline")

    p = sub.add_parser("ablate", help="run one training-choice ablation")
    common(p)
    p.add_argument("--variant", required=True, choices=VARIANTS)
    p.set_defaults(func=_train_like, command_name="ablate")

    p = sub.add_parser("eval", help="score a finished run's final checkpoint")
    p.add_argument("run_dir", help="output directory of a previous run")
    p.add_argument("--out", default=None, help="where to write metrics (default: the run dir)")
    p.add_argument("--seed", type=int, default=None, help="ignored; evaluation is deterministic")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="merge finished runs into one comparison grid")
    p.add_argument("run_dirs", nargs="+", help="run directories to merge")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", choices=["rows-text", "structured"], default="rows-text")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "command_name", None):
            return args.func(args, args.command_name)
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as e:
        out = getattr(args, "out", None)
        if out:
            out = _resolve_out(out)
            os.makedirs(out, exist_ok=True)
            _atomic_write(os.path.join(out, "error.txt"), f"{e}\n")
        print(f"numeric error: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
