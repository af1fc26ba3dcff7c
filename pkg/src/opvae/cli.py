"""Command-line interface: generate data, train, build references, predict,
and evaluate.

Subcommands
    gen-data   --config c.cfg --out d.uqds
    train      --config c.cfg --data d.uqds [--out rundir]
    reference  --config c.cfg --obs obs.csv --out ref.uqds [--samples N] [--seed S]
    predict    --checkpoint ck.uqso --obs obs.csv --out pred.uqds
               [--samples N] [--seed S] [--stats-out stats.csv]
    evaluate   (--reference r.uqds --prediction p.uqds [--label L] | --cases cases.csv)
               --out metrics.csv [--w2-out w2.csv] [--slice x=0.5 ...] [--no-scale]

Exit codes: 0 success, 1 usage, 2 configuration/validation, 3 IO,
4 numerical failure.  All behavior flows through flags and config files;
no environment variables are read.  Given identical inputs and seeds
every subcommand writes byte-identical outputs; wall-clock timings go to
a sidecar file so the loss trace stays reproducible.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time

import numpy as np

from . import metrics as metricsmod
from .checkpoint import build_model, checkpoint_from_model, checkpoint_read, checkpoint_write
from .config import config_echo, config_load
from .datasets import OperatorDataset, dataset_read, dataset_write, generate_dataset
from .errors import (ConfigError, ContractError, DomainError, FileFormatError,
                     NumericalError, OpvaeError, SensorPlacementError, ShapeError)
from .fields import Grid2d, SensorSet
from .reference import reference_ensemble
from .training import predict_ensemble, train

__all__ = ["run_command", "main"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="opvae", description="Operator learning with uncertainty quantification")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate an operator dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the data seed")

    p = sub.add_parser("train", help="train a model on a dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None, help="run directory (default: runs/<timestamp>)")

    p = sub.add_parser("reference", help="build a GP reference ensemble for observations")
    p.add_argument("--config", required=True)
    p.add_argument("--obs", required=True, help="observation CSV (x[,y],value)")
    p.add_argument("--out", required=True)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("predict", help="sample the model's conditional ensemble")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--obs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stats-out", default=None, help="also write pointwise mean/std CSV")

    p = sub.add_parser("evaluate", help="compare prediction ensembles against references")
    p.add_argument("--reference", default=None)
    p.add_argument("--prediction", default=None)
    p.add_argument("--label", default="case")
    p.add_argument("--cases", default=None, help="CSV manifest: label,reference,prediction")
    p.add_argument("--out", required=True)
    p.add_argument("--w2-out", default=None)
    p.add_argument("--slice", action="append", default=[],
                   help="restrict 2-d errors to a grid line, e.g. x=0.5 (repeatable)")
    p.add_argument("--no-scale", action="store_true", help="report raw errors, not x100")
    return parser


# ------------------------------------------------------------------------------
# Observation CSV

def read_observations(path) -> SensorSet:
    """Load sensors from a CSV with header x,value or x,y,value."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FileFormatError(f"{path}: empty observation file")
    header = [c.strip().lower() for c in rows[0]]
    if header == ["x", "value"]:
        dim = 1
    elif header == ["x", "y", "value"]:
        dim = 2
    else:
        raise FileFormatError(f"{path}: header must be x,value or x,y,value, got {rows[0]}")
    locs, vals = [], []
    for i, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != dim + 1:
            raise FileFormatError(f"{path}: line {i}: expected {dim + 1} columns, got {len(row)}")
        try:
            nums = [float(c) for c in row]
        except ValueError as exc:
            raise FileFormatError(f"{path}: line {i}: {exc}") from exc
        locs.append(nums[:dim])
        vals.append(nums[dim])
    if not locs:
        raise FileFormatError(f"{path}: no observation rows")
    return SensorSet(np.asarray(locs), np.asarray(vals))


def write_observations(obs: SensorSet, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "value"] if obs.dim == 1 else ["x", "y", "value"])
        for loc, val in zip(obs.locations, obs.values):
            writer.writerow([repr(float(c)) for c in loc] + [repr(float(val))])


# ------------------------------------------------------------------------------
# Subcommand bodies

def _cmd_gen_data(args) -> int:
    cfg = config_load(args.config)
    if cfg.problem == "external":
        raise ConfigError("cannot generate data for problem tag 'external'")
    ds = generate_dataset(cfg.problem, cfg, seed=args.seed)
    dataset_write(ds, args.out)
    print(f"wrote {ds.n} samples to {args.out}")
    return 0


def _run_dir(requested: str | None) -> str:
    if requested:
        os.makedirs(requested, exist_ok=True)
        return requested
    stamp = time.strftime("%Y%m%d-%H%M%S")
    path = os.path.join("runs", stamp)
    os.makedirs(path, exist_ok=True)
    latest = os.path.join("runs", "latest")
    try:
        if os.path.islink(latest) or os.path.exists(latest):
            os.remove(latest)
        os.symlink(stamp, latest)
    except OSError:
        pass  # symlinks may be unavailable; the run directory still exists
    return path


def write_loss_trace(trace, run_dir: str) -> None:
    """Deterministic loss trace plus a timing sidecar (wall_ms varies per run)."""
    with open(os.path.join(run_dir, "loss_trace.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "loss", "kl_term", "recon_term"])
        for row in trace:
            writer.writerow([row.iteration, repr(row.loss), repr(row.kl), repr(row.recon)])
    with open(os.path.join(run_dir, "timing.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "wall_ms"])
        for row in trace:
            writer.writerow([row.iteration, f"{row.wall_ms:.3f}"])


def _cmd_train(args) -> int:
    cfg = config_load(args.config)
    ds = dataset_read(args.data)
    run_dir = _run_dir(args.out or (cfg.run_dir or None))
    with open(os.path.join(run_dir, "config.cfg"), "w", encoding="utf-8") as fh:
        fh.write(config_echo(cfg))

    def sink(iteration, model):
        ckpt = checkpoint_from_model(model, cfg, ds.output_grid, iteration)
        checkpoint_write(ckpt, os.path.join(run_dir, f"ckpt_{iteration:08d}.uqso"))

    result = train(ds, cfg, checkpoint_sink=sink)
    final = checkpoint_from_model(result.model, cfg, ds.output_grid,
                                  result.plan.iterations)
    checkpoint_write(final, os.path.join(run_dir, "ckpt_final.uqso"))
    write_loss_trace(result.trace, run_dir)
    print(f"trained {result.plan.iterations} iterations; artifacts in {run_dir}")
    return 0


def _cmd_reference(args) -> int:
    cfg = config_load(args.config)
    obs = read_observations(args.obs)
    ens = reference_ensemble(cfg.problem, obs, cfg, args.samples, args.seed)
    meta = {"kind": "reference", "problem": cfg.problem, "n_samples": args.samples,
            "obs_locations": obs.locations.tolist(), "obs_values": obs.values.tolist(),
            "noise": {"mode": cfg.noise_mode, "sigma": cfg.noise_sigma},
            "w2_convention": "joint Gaussian over the full evaluation grid"}
    ds = OperatorDataset("reference", ens.input_grid, ens.eval_grid,
                         ens.inputs, ens.values, args.seed, meta)
    dataset_write(ds, args.out)
    print(f"wrote reference ensemble ({args.samples} samples) to {args.out}")
    return 0


def _cmd_predict(args) -> int:
    ckpt = checkpoint_read(args.checkpoint)
    model = build_model(ckpt)
    obs = read_observations(args.obs)
    cfg = ckpt.config
    grid = ckpt.train_grid if cfg.problem == "external" else cfg.eval_grid_obj()
    points = grid.coords() if isinstance(grid, Grid2d) else grid.points()
    ens = predict_ensemble(model, obs, points, args.samples, args.seed,
                           counts=tuple(cfg.sensor_counts))
    meta = {"kind": "prediction", "problem": cfg.problem, "n_samples": args.samples,
            "obs_locations": obs.locations.tolist(), "obs_values": obs.values.tolist(),
            "checkpoint_iteration": ckpt.iteration}
    ds = OperatorDataset("prediction", grid, grid, None, ens.values, args.seed, meta)
    dataset_write(ds, args.out)
    if args.stats_out:
        with open(args.stats_out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            if isinstance(grid, Grid2d):
                writer.writerow(["x", "y", "mean", "std"])
                for (x, y), mu, sd in zip(grid.coords(), ens.mean, ens.std):
                    writer.writerow([repr(x), repr(y), repr(mu), repr(sd)])
            else:
                writer.writerow(["x", "mean", "std"])
                for x, mu, sd in zip(grid.points(), ens.mean, ens.std):
                    writer.writerow([repr(float(x)), repr(mu), repr(sd)])
    print(f"wrote prediction ensemble ({ens.values.shape[0]} samples) to {args.out}")
    return 0


def _parse_slice(spec: str) -> tuple[str, float]:
    axis, _, value = spec.partition("=")
    axis = axis.strip().lower()
    if axis not in ("x", "y") or not value:
        raise ConfigError(f"slice must look like x=0.5 or y=0.5, got {spec!r}")
    return axis, float(value)


def _load_cases(args) -> list[tuple[str, str, str]]:
    if args.cases:
        out = []
        with open(args.cases, "r", encoding="utf-8", newline="") as fh:
            for i, row in enumerate(csv.reader(fh), start=1):
                if not row or row[0].startswith("#"):
                    continue
                if [c.strip().lower() for c in row] == ["label", "reference", "prediction"]:
                    continue
                if len(row) != 3:
                    raise FileFormatError(
                        f"{args.cases}: line {i}: expected label,reference,prediction")
                out.append((row[0].strip(), row[1].strip(), row[2].strip()))
        if not out:
            raise FileFormatError(f"{args.cases}: no case rows")
        return out
    if not (args.reference and args.prediction):
        raise _UsageError("evaluate needs --reference and --prediction, or --cases")
    return [(args.label, args.reference, args.prediction)]


def _cmd_evaluate(args) -> int:
    rows = _load_cases(args)
    slices = [_parse_slice(s) for s in args.slice]
    grouped: dict[str, list] = {}
    grids: dict[str, object] = {}
    order: list[str] = []
    for label, ref_path, pred_path in rows:
        ref_ds = dataset_read(ref_path)
        pred_ds = dataset_read(pred_path)
        if ref_ds.output_grid != pred_ds.output_grid:
            raise ContractError(
                f"case {label!r}: reference and prediction grids differ")
        pair = (metricsmod.fit_gaussian(ref_ds.outputs), metricsmod.fit_gaussian(pred_ds.outputs))
        if label not in grouped:
            grouped[label] = []
            grids[label] = ref_ds.output_grid
            order.append(label)
        grouped[label].append(pair)
    cases = []
    for label in order:
        if slices:
            for axis, value in slices:
                grid = grids[label]
                if not isinstance(grid, Grid2d):
                    raise ConfigError("--slice applies only to 2-d grids")
                idx = metricsmod.grid_line_indices(grid, axis, value)
                cases.append(metricsmod.ErrorCase(f"{label}@{axis}={value:g}",
                                                  grouped[label], idx))
        else:
            cases.append(metricsmod.ErrorCase(label, grouped[label]))
    table = metricsmod.report_table(cases, scale_by_100=not args.no_scale)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(table)
    if args.w2_out:
        with open(args.w2_out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["label", "w2"])
            for label in order:
                w2s = [metricsmod.w2_gaussian(ref, pred) for ref, pred in grouped[label]]
                writer.writerow([label, repr(float(np.mean(w2s)))])
    print(f"wrote metrics for {len(cases)} case(s) to {args.out}")
    return 0


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "train": _cmd_train,
    "reference": _cmd_reference,
    "predict": _cmd_predict,
    "evaluate": _cmd_evaluate,
}


def run_command(argv) -> int:
    """Parse argv and dispatch; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:      # --help and friends
        return 0 if exc.code in (0, None) else 1
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, ContractError, ShapeError, DomainError, SensorPlacementError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (FileFormatError, OSError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 4
    except OpvaeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
