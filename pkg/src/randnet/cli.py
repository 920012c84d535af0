"""Command-line front door: estimator fitting, calibration, benchmarks.

Exit codes: 0 success, 2 usage error, 3 numerical failure, 4 partial
results (some benchmark cells failed; completed rows are still written).
Every run writes a manifest (resolved config, seed, version) next to its
outputs, and rerunning from that manifest reproduces them byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import subprocess
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .benchmark import (ESTIMATOR_IDS, SCALES, BenchmarkReport,
                        REPORT_CSV_HEADER, SimulationSpec, desk_scale,
                        generate_dataset, report_csv_rows,
                        report_to_json_dict, run_experiment)
from .errors import (NonFiniteLoss, NonFiniteRisk, RandnetError, SolveFailure,
                     UsageError)
from .gd import ScheduleConstants, schedule_from_n, train_gd
from .mlp import mlp_to_json_dict, train_adam
from .numerics import RngStream
from .random_features import (fit_lsq, sample_basis, sample_projected_basis,
                              save_estimator)
from .shallow import penalized_risk
from .targets import M1_DIVISORS, calibrate_lambda, target_function

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_PARTIAL = 4

#: (n, noise) cells in table column order.
TABLE_CELLS = ((200, 0.05), (400, 0.05), (200, 0.20), (400, 0.20))
TABLE_TARGETS = {"table1": (1, 2, 3), "table2": (4, 5, 6)}


@dataclass
class RunConfig:
    """Fully resolved options of one CLI invocation."""

    command: str
    options: Dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.options[name]
        except KeyError:
            raise AttributeError(name) from None


def _int_list(text: str) -> List[int]:
    return [int(tok) for tok in text.replace(" ", "").split(",") if tok]


def _target_list(text: str) -> List[int]:
    if text == "all":
        return [1, 2, 3, 4, 5, 6]
    out = []
    for tok in text.replace(" ", "").split(","):
        if not tok:
            continue
        out.append(int(tok[1:]) if tok.startswith("m") else int(tok))
    return out


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="randnet",
        description="shallow-network regression estimators and benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None,
                       help="master seed (default: RANDNET_SEED env or 0)")
        p.add_argument("--config", type=str, default=None,
                       help="JSON config file or run manifest; flags override")
        p.add_argument("--out-dir", type=str, default=".",
                       help="directory for outputs")
        p.add_argument("--m1-divisor", choices=M1_DIVISORS,
                       default="griewank",
                       help="divisor convention inside target m1")

    def data_args(p):
        p.add_argument("--target", type=str, required=True,
                       help="target function, e.g. m2")
        p.add_argument("--n", type=int, required=True, help="sample size")
        p.add_argument("--noise", type=float, default=0.05,
                       help="noise level sigma (e.g. 0.05 or 0.20)")

    p = sub.add_parser("calibrate", help="recompute target noise scales")
    common(p)
    p.add_argument("--targets", type=str, default="all")
    p.add_argument("--draws", type=int, default=100_000)
    p.add_argument("--repeats", type=int, default=100)
    p.add_argument("--out", type=str, default=None, help="optional JSON path")

    p = sub.add_parser("fit-gd", help="gradient-descent shallow network fit")
    common(p)
    data_args(p)
    p.add_argument("--step-cap", type=int, default=100_000)
    p.add_argument("--init-mode", choices=("zeros", "uniform-small"),
                   default="zeros")
    for c in ("c2", "c3", "c4", "c5", "c7", "c8"):
        p.add_argument(f"--{c}", type=float, default=None,
                       help=f"schedule constant {c}")
    p.add_argument("--b-n", type=float, default=None,
                   help="override the theoretical inner-weight radius")
    p.add_argument("--trace-out", type=str, default=None,
                   help="CSV path for the per-step objective trace")

    p = sub.add_parser("fit-lsq", help="random-feature least squares fit")
    common(p)
    data_args(p)
    p.add_argument("--k", type=int, required=True, help="number of features")
    p.add_argument("--b", type=float, required=True, help="inner-weight scale")
    p.add_argument("--projected", action="store_true",
                   help="use the projected (periodized) variant")
    p.add_argument("--ridge", type=float, default=None)
    p.add_argument("--beta-n", type=float, default=None,
                   help="truncation level (default: untruncated)")
    p.add_argument("--out", type=str, default=None,
                   help="JSON path for the fitted estimator")

    p = sub.add_parser("fit-mlp", help="adam-train a fully connected baseline")
    common(p)
    data_args(p)
    p.add_argument("--widths", type=str, default="16",
                   help="comma-separated hidden widths, e.g. 16,16,16")
    p.add_argument("--activation", choices=("relu", "sigmoid"),
                   default="relu")
    p.add_argument("--epochs", type=int, default=1000)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--out", type=str, default=None,
                   help="JSON path for the fitted estimator")

    def scale_args(p):
        p.add_argument("--scale", choices=tuple(SCALES), default="desk")
        p.add_argument("--reps", type=int, default=None,
                       help="override repetitions (desk scale only)")
        p.add_argument("--eval-n", type=int, default=None)
        p.add_argument("--k-grid", type=str, default=None)
        p.add_argument("--b-grid", type=str, default=None)
        p.add_argument("--widths", type=str, default=None,
                       help="baseline width grid override")
        p.add_argument("--epochs", type=int, default=None,
                       help="baseline adam epochs override")

    p = sub.add_parser("simulate", help="run one benchmark cell")
    common(p)
    data_args(p)
    scale_args(p)
    p.add_argument("--estimators", type=str, default=",".join(ESTIMATOR_IDS))

    p = sub.add_parser("reproduce-tables",
                       help="run every (target, n, noise) cell and export tables")
    common(p)
    scale_args(p)
    p.add_argument("--targets", type=str, default="all")
    p.add_argument("--pretty", action="store_true",
                   help="also print formatted tables to stdout")
    return parser


def parse_config(argv: Sequence[str]) -> RunConfig:
    """Parse flags, merge an optional JSON config file, resolve the seed.

    File values act as defaults; explicit flags win.  The fully resolved
    configuration is echoed to stderr for provenance.
    """
    parser = _build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        if exc.code in (0, None):  # --help and friends
            raise
        raise UsageError(f"argument parsing failed (exit {exc.code})") from exc
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
        file_opts = doc.get("config", doc)
        command = args.command
        defaults = {k: v for k, v in file_opts.items() if k != "command"}
        try:
            parser.set_defaults(**defaults)
            args = parser.parse_args(list(argv))
        except SystemExit as exc:
            raise UsageError(f"bad config file value (exit {exc.code})") from exc
        if file_opts.get("command", command) != command:
            raise UsageError(
                f"config file is for command {file_opts['command']!r}")
    options = vars(args).copy()
    command = options.pop("command")
    if options.get("seed") is None:
        options["seed"] = int(os.environ.get("RANDNET_SEED", "0"))
    if command in ("simulate", "reproduce-tables"):
        if options.get("scale") == "paper" and options.get("reps") is not None \
                and options["reps"] != 50:
            raise UsageError("paper scale pins reps = 50; "
                             f"drop --reps {options['reps']} or use --scale desk")
    cfg = RunConfig(command, options)
    print(f"resolved config: {json.dumps({'command': command, **options}, sort_keys=True)}",
          file=sys.stderr)
    return cfg


def _git_describe() -> Optional[str]:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent, capture_output=True,
            text=True, timeout=10)
        return out.stdout.strip() or None
    except Exception:
        return None


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _write_manifest(cfg: RunConfig, out_dir: Path) -> None:
    manifest = {
        "version": f"randnet {__version__}"
                   + (f" ({_git_describe()})" if _git_describe() else ""),
        "command": cfg.command,
        "seed": cfg.options["seed"],
        "config": {"command": cfg.command, **cfg.options},
    }
    _atomic_write(out_dir / "manifest.json",
                  json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _scale_config(cfg: RunConfig):
    config = SCALES[cfg.options["scale"]]()
    overrides = {}
    if cfg.options.get("reps") is not None:
        overrides["repetitions"] = cfg.options["reps"]
    if cfg.options.get("eval_n") is not None:
        overrides["eval_n"] = cfg.options["eval_n"]
    if cfg.options.get("k_grid"):
        overrides["k_grid"] = tuple(_int_list(cfg.options["k_grid"]))
    if cfg.options.get("b_grid"):
        overrides["b_grid"] = tuple(_int_list(cfg.options["b_grid"]))
    if cfg.options.get("widths"):
        overrides["widths"] = tuple(_int_list(cfg.options["widths"]))
    if cfg.options.get("epochs") is not None:
        overrides["epochs"] = cfg.options["epochs"]
    return replace(config, **overrides) if overrides else config


def _spec_for(cfg: RunConfig, target_index: int, n: int, noise: float,
              config, estimator_ids=ESTIMATOR_IDS) -> SimulationSpec:
    target = target_function(target_index, cfg.options["m1_divisor"])
    return SimulationSpec(
        target=target, n=n, noise_sigma=noise,
        estimator_ids=tuple(estimator_ids),
        repetitions=config.repetitions, eval_n=config.eval_n,
        master_seed=cfg.options["seed"])


def _dataset_for(cfg: RunConfig, stream_tag: str):
    target = target_function(int(cfg.options["target"].lstrip("m")),
                             cfg.options["m1_divisor"])
    spec = SimulationSpec(
        target=target, n=cfg.options["n"], noise_sigma=cfg.options["noise"],
        estimator_ids=("lsq-est",), repetitions=1, eval_n=1_000,
        master_seed=cfg.options["seed"])
    stream = RngStream(cfg.options["seed"]).substream(stream_tag)
    return target, spec, generate_dataset(spec, 0, stream)


def cmd_calibrate(cfg: RunConfig) -> int:
    rows = []
    for idx in _target_list(cfg.options["targets"]):
        stream = RngStream(cfg.options["seed"]).substream("calibrate", idx)
        lam = calibrate_lambda(idx, stream, draws=cfg.options["draws"],
                               repeats=cfg.options["repeats"],
                               m1_divisor=cfg.options["m1_divisor"])
        rows.append((idx, lam))
        print(f"m{idx}: lambda = {lam:.6g}")
    if cfg.options.get("out"):
        out = Path(cfg.options["out"])
        out.parent.mkdir(parents=True, exist_ok=True)
        _atomic_write(out, json.dumps(
            {f"m{i}": lam for i, lam in rows}, indent=2) + "\n")
    return EXIT_OK


def cmd_fit_gd(cfg: RunConfig) -> int:
    target, spec, data = _dataset_for(cfg, "fit-gd")
    defaults = ScheduleConstants()
    constants = ScheduleConstants(*[
        cfg.options.get(c) if cfg.options.get(c) is not None
        else getattr(defaults, c)
        for c in ("c2", "c3", "c4", "c5", "c7", "c8")])
    schedule = schedule_from_n(len(data), target.dimension, constants)
    if cfg.options.get("b_n") is not None:
        from .gd import custom_schedule
        schedule = custom_schedule(schedule, b_n=cfg.options["b_n"])
    est = train_gd(data, schedule,
                   step_cap=cfg.options["step_cap"],
                   rng=RngStream(cfg.options["seed"]).substream("gd-init"),
                   init_mode=cfg.options["init_mode"],
                   trace=bool(cfg.options.get("trace_out")))
    risk = penalized_risk(est.params, data, constants.c2, schedule.k_n)
    print(f"final penalized risk: {risk:.6g} "
          f"(K={schedule.k_n}, steps={min(schedule.t_n, cfg.options['step_cap'])})")
    if cfg.options.get("trace_out"):
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(("step", "risk"))
        for step, value in enumerate(est.trace):
            writer.writerow((step, repr(float(value))))
        path = Path(cfg.options["trace_out"])
        path.parent.mkdir(parents=True, exist_ok=True)
        _atomic_write(path, buf.getvalue())
    return EXIT_OK


def cmd_fit_lsq(cfg: RunConfig) -> int:
    target, spec, data = _dataset_for(cfg, "fit-lsq")
    stream = RngStream(cfg.options["seed"]).substream("fit-lsq-basis")
    sampler = sample_projected_basis if cfg.options["projected"] else sample_basis
    basis = sampler(cfg.options["k"], cfg.options["b"], target.dimension,
                    stream)
    beta_n = cfg.options["beta_n"] if cfg.options.get("beta_n") else math.inf
    est = fit_lsq(basis, data, beta_n=beta_n, ridge=cfg.options.get("ridge"))
    mse = float(np.mean((est.predict(data.x) - data.y) ** 2))
    print(f"training MSE: {mse:.6g} (kind={basis.kind}, K={basis.size}, "
          f"B={basis.b_n})")
    if cfg.options.get("out"):
        out = Path(cfg.options["out"])
        out.parent.mkdir(parents=True, exist_ok=True)
        save_estimator(est, str(out))
    return EXIT_OK


def cmd_fit_mlp(cfg: RunConfig) -> int:
    target, spec, data = _dataset_for(cfg, "fit-mlp")
    est = train_adam(data, _int_list(cfg.options["widths"]),
                     cfg.options["activation"], epochs=cfg.options["epochs"],
                     lr=cfg.options["lr"],
                     rng=RngStream(cfg.options["seed"]).substream("fit-mlp"))
    print(f"final training MSE: {est.trace[-1]:.6g} "
          f"(widths={cfg.options['widths']}, act={cfg.options['activation']})")
    if cfg.options.get("out"):
        out = Path(cfg.options["out"])
        out.parent.mkdir(parents=True, exist_ok=True)
        _atomic_write(out, json.dumps(mlp_to_json_dict(est)) + "\n")
    return EXIT_OK


def _report_csv_text(reports: List[BenchmarkReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(REPORT_CSV_HEADER)
    for report in reports:
        writer.writerows(report_csv_rows(report))
    return buf.getvalue()


def cmd_simulate(cfg: RunConfig) -> int:
    config = _scale_config(cfg)
    idx = int(cfg.options["target"].lstrip("m"))
    estimators = tuple(tok for tok in cfg.options["estimators"].split(",") if tok)
    spec = _spec_for(cfg, idx, cfg.options["n"], cfg.options["noise"],
                     config, estimators)
    report = run_experiment(spec, config)
    out_dir = Path(cfg.options["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"simulate_m{idx}_n{spec.n}_noise{int(round(spec.noise_sigma * 100))}"
    _atomic_write(out_dir / f"{stem}.csv", _report_csv_text([report]))
    _atomic_write(out_dir / f"{stem}.json",
                  json.dumps(report_to_json_dict(report), indent=2) + "\n")
    _write_manifest(cfg, out_dir)
    for est_id in spec.estimator_ids:
        print(f"{est_id}: median={report.medians[est_id]:.6g} "
              f"iqr={report.iqrs[est_id]:.6g}")
    return EXIT_OK


def _cell_key(n: int, noise: float) -> str:
    return f"n{n}_noise{int(round(noise * 100))}"


def _table_csv_text(per_target: Dict[int, Dict[str, BenchmarkReport]],
                    failed: List[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    header = ["estimator"]
    for n, noise in TABLE_CELLS:
        header += [f"{_cell_key(n, noise)}_median", f"{_cell_key(n, noise)}_iqr"]
    writer.writerow(header)
    for idx in sorted(per_target):
        for est_id in ESTIMATOR_IDS:
            row = [est_id]
            for n, noise in TABLE_CELLS:
                report = per_target[idx].get(_cell_key(n, noise))
                if report is None:
                    row += ["", ""]
                else:
                    row += [repr(report.medians[est_id]),
                            repr(report.iqrs[est_id])]
            writer.writerow(row)
    for marker in failed:
        writer.writerow([f"FAILED:{marker}"] + [""] * (len(header) - 1))
    return buf.getvalue()


def _pretty_table(idx: int, reports: Dict[str, BenchmarkReport]) -> str:
    lines = [f"--- m{idx} ---",
             f"{'estimator':<14}" + "".join(
                 f"{_cell_key(n, noise):>20}" for n, noise in TABLE_CELLS)]
    lines.append(f"{'avg-baseline':<14}" + "".join(
        f"{reports[_cell_key(n, noise)].avg_baseline:>20.4f}"
        if _cell_key(n, noise) in reports else f"{'':>20}"
        for n, noise in TABLE_CELLS))
    for est_id in ESTIMATOR_IDS:
        cells = []
        for n, noise in TABLE_CELLS:
            report = reports.get(_cell_key(n, noise))
            cells.append(
                f"{report.medians[est_id]:.4f} ({report.iqrs[est_id]:.4f})"
                if report else "")
        lines.append(f"{est_id:<14}" + "".join(f"{c:>20}" for c in cells))
    return "\n".join(lines)


def reproduce_tables(cfg: RunConfig) -> int:
    """Run all requested cells for the nine estimators and export tables."""
    config = _scale_config(cfg)
    targets = _target_list(cfg.options["targets"])
    out_dir = Path(cfg.options["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    failures: List[str] = []
    results: Dict[int, Dict[str, BenchmarkReport]] = {}
    for idx in targets:
        results[idx] = {}
        for n, noise in TABLE_CELLS:
            spec = _spec_for(cfg, idx, n, noise, config)
            try:
                results[idx][_cell_key(n, noise)] = run_experiment(spec, config)
            except (RandnetError, AssertionError) as exc:
                failures.append(f"m{idx}_{_cell_key(n, noise)}: {exc}")
    for table, table_targets in TABLE_TARGETS.items():
        selected = {i: results[i] for i in table_targets if i in results}
        if not selected:
            continue
        table_failures = [f for f in failures
                          if any(f.startswith(f"m{i}_") for i in table_targets)]
        _atomic_write(out_dir / f"{table}.csv",
                      _table_csv_text(selected, table_failures))
        doc = {f"m{i}": {cell: report_to_json_dict(r)
                         for cell, r in selected[i].items()}
               for i in selected}
        _atomic_write(out_dir / f"{table}.json",
                      json.dumps(doc, indent=2, sort_keys=True) + "\n")
        if cfg.options.get("pretty"):
            for i in sorted(selected):
                print(_pretty_table(i, selected[i]))
    _write_manifest(cfg, out_dir)
    if failures:
        print("failed cells:\n  " + "\n  ".join(failures), file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


COMMANDS = {
    "calibrate": cmd_calibrate,
    "fit-gd": cmd_fit_gd,
    "fit-lsq": cmd_fit_lsq,
    "fit-mlp": cmd_fit_mlp,
    "simulate": cmd_simulate,
    "reproduce-tables": reproduce_tables,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[cfg.command](cfg)
    except (SolveFailure, NonFiniteRisk, NonFiniteLoss) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except RandnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
