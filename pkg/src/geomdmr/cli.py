"""Command-line frontend.

Subcommands: dist, mdmr, simulate, power, print-default-config.
Exit codes: 0 success, 2 input/validation error, 3 runtime computation
error. Every command is deterministic given its flags and seed.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
import time

import numpy as np

from . import config as config_mod
from . import matrix_io
from .distances import (
    CORRELATION_FORMULAS,
    MEASURE_KINDS,
    DistanceMeasure,
    dissimilarity_matrix,
    vectorize_upper,
)
from .exceptions import GeomdmrError
from .fcsim import CohortConfig, SignalParams
from .linalg import as_spd, symmetrize
from .mdmr import PSEUDO_F_VARIANTS, gower_center, permutation_test, validate_design
from .power import GridExecutionError, StudyOptions, run_grid, simulate_replicate, build_cohort

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_RUNTIME = 3


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _collect_input_files(inputs) -> list[str]:
    if len(inputs) == 1 and os.path.isdir(inputs[0]):
        names = sorted(f for f in os.listdir(inputs[0]) if f.endswith(".csv"))
        files = [os.path.join(inputs[0], f) for f in names]
        if not files:
            raise GeomdmrError(f"{inputs[0]}: no .csv files found")
        return files
    return list(inputs)


def _load_responses(files, measure: DistanceMeasure):
    """Read response files and coerce them to the measure's input type.

    Structural problems (shape mismatches, non-SPD matrices, non-unit
    sphere vectors) are reported here with the offending file named, so
    the caller can treat them as input errors.
    """
    raw = []
    for f in files:
        raw.append((f, matrix_io.read_matrix(f)))
    ref_file, ref = raw[0]
    for f, a in raw[1:]:
        if a.shape != ref.shape:
            raise GeomdmrError(
                f"mixed input dimensions: {ref_file} has shape {ref.shape} "
                f"but {f} has shape {a.shape}")
    if measure.kind == "geodesic":
        out = []
        for f, a in raw:
            if a.shape[0] != a.shape[1]:
                raise GeomdmrError(f"{f}: geodesic measure needs square matrices, "
                                   f"got {a.shape}")
            try:
                out.append(as_spd(a))
            except GeomdmrError as exc:
                raise GeomdmrError(f"{f}: {exc}") from exc
        return out
    if measure.kind == "sphere":
        out = []
        for f, a in raw:
            v = a.ravel()
            if v.size != 3 or abs(float(np.linalg.norm(v)) - 1.0) > 1e-8:
                raise GeomdmrError(f"{f}: sphere measure needs unit vectors in R^3")
            out.append(v)
        return out
    # euclidean / correlation: vectorize square matrices, flatten vectors
    if ref.shape[0] == ref.shape[1] and ref.shape[0] > 1:
        return [vectorize_upper(symmetrize(a)) for _, a in raw]
    return [a.ravel() for _, a in raw]


def cmd_dist(args) -> int:
    try:
        measure = DistanceMeasure(kind=args.measure,
                                  correlation_formula=args.correlation_formula)
        files = _collect_input_files(args.inputs)
        if len(files) < 2:
            raise GeomdmrError("need at least two input files")
        responses = _load_responses(files, measure)
    except (GeomdmrError, OSError) as exc:
        _err(str(exc))
        return EXIT_INPUT
    try:
        d = dissimilarity_matrix(responses, measure)
    except GeomdmrError as exc:
        _err(str(exc))
        return EXIT_RUNTIME
    matrix_io.write_matrix(args.out, d)
    print(f"n={d.shape[0]} measure={args.measure} out={args.out}")
    return EXIT_OK


def cmd_mdmr(args) -> int:
    try:
        d = matrix_io.read_square_matrix(args.distances)
        d = symmetrize(d)
        x = matrix_io.read_matrix(args.design)
        x = validate_design(x)
        if x.shape[0] != d.shape[0]:
            raise GeomdmrError(
                f"design has {x.shape[0]} rows but dissimilarity matrix is "
                f"{d.shape[0]} x {d.shape[0]}")
        if args.perms < 1:
            raise GeomdmrError(f"--perms must be >= 1, got {args.perms}")
    except (GeomdmrError, OSError) as exc:
        _err(str(exc))
        return EXIT_INPUT
    try:
        g = gower_center(d)
        result = permutation_test(g, x, n_perms=args.perms, seed=args.seed,
                                  variant=args.variant,
                                  keep_permutation_stats=False)
    except GeomdmrError as exc:
        _err(str(exc))
        return EXIT_RUNTIME
    lines = ["pseudo_f,p_value,n_permutations,seed",
             ",".join([matrix_io.fmt_float(result.pseudo_f),
                       matrix_io.fmt_float(result.p_value),
                       str(result.n_permutations),
                       str(result.seed)])]
    with open(args.out, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"pseudo_f={result.pseudo_f:.6g} p_value={result.p_value:.6g} "
          f"n_permutations={result.n_permutations} seed={result.seed}")
    return EXIT_OK


def _parse_target(text):
    if text is None:
        return None
    try:
        return tuple(int(tok) for tok in text.split(",") if tok.strip() != "")
    except ValueError as exc:
        raise GeomdmrError(f"--target must be comma-separated integers: {exc}") from exc


def cmd_simulate(args) -> int:
    try:
        target = _parse_target(args.target)
        params = SignalParams(b=args.signal_size, m=args.signal_mean, s=args.signal_sd)
        if args.cohort_path:
            cfg = CohortConfig(source="file", path=args.cohort_path,
                               df_min=args.df_min, df_max=args.df_max)
        else:
            cfg = CohortConfig(dimension=args.dimension, n_base=args.n_base,
                               df_min=args.df_min, df_max=args.df_max,
                               n_blocks=args.n_blocks,
                               within_block_correlation=args.within_block_correlation,
                               template_df=args.template_df)
        options = StudyOptions(target_indices=target)
        if args.seed < 0:
            raise GeomdmrError(f"--seed must be non-negative, got {args.seed}")
        if not 0.0 <= args.blend <= 1.0:
            raise GeomdmrError(f"--blend must lie in [0, 1], got {args.blend}")
        if args.patients < 0 or args.controls < 0 or args.patients + args.controls < 1:
            raise GeomdmrError("need at least one subject across the two groups")
        cohort = build_cohort(cfg, args.seed)
        dimension = cohort[0].shape[0]
        if params.b > dimension:
            raise GeomdmrError(f"signal block size {params.b} exceeds matrix "
                               f"dimension {dimension}")
    except (GeomdmrError, OSError) as exc:
        _err(str(exc))
        return EXIT_INPUT
    try:
        drawn = simulate_replicate(cohort, args.patients, args.controls, params,
                                   args.blend, cfg, options, args.seed)
    except GeomdmrError as exc:
        _err(str(exc))
        return EXIT_RUNTIME
    os.makedirs(args.out, exist_ok=True)
    manifest = ["subject_id,group,rho,df,base_index"]
    for idx, (subject, base_idx) in enumerate(drawn):
        name = f"subject_{idx:04d}.csv"
        matrix_io.write_matrix(os.path.join(args.out, name), subject.matrix)
        rho_txt = "" if subject.rho is None else matrix_io.fmt_float(subject.rho)
        manifest.append(f"{idx},{subject.group},{rho_txt},{subject.df},{base_idx}")
    with open(os.path.join(args.out, "manifest.csv"), "w") as fh:
        fh.write("\n".join(manifest) + "\n")
    print(f"simulated {len(drawn)} subjects into {args.out} "
          f"(patients={args.patients} controls={args.controls} seed={args.seed})")
    return EXIT_OK


def cmd_power(args) -> int:
    try:
        run = config_mod.load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise GeomdmrError(f"--seed must be non-negative, got {args.seed}")
            run = dataclasses.replace(
                run, seed=args.seed,
                grid=dataclasses.replace(run.grid, seed=args.seed))
        out_dir = args.out if args.out is not None else run.out_dir
        threads = args.threads if args.threads is not None else run.threads
        if threads is None:
            threads = os.cpu_count() or 1
        if threads < 1:
            raise GeomdmrError(f"--threads must be >= 1, got {threads}")
    except (GeomdmrError, OSError) as exc:
        _err(str(exc))
        return EXIT_INPUT

    os.makedirs(out_dir, exist_ok=True)
    log_path = os.path.join(out_dir, "power_run.log")
    log = open(log_path, "w")

    def logline(msg):
        log.write(msg + "\n")
        log.flush()

    logline(f"config={args.config}")
    logline(f"seed={run.grid.seed}")
    logline(f"threads={threads}")
    logline(f"alpha={run.grid.alpha}")
    for key in run.applied_defaults:
        logline(f"defaulted {key}={_default_for(key)}")

    def on_cell_done(cell_values, seconds):
        b, m, r = cell_values
        logline(f"cell b={b} m={m:g} r={r:g} done in {seconds:.2f}s")

    from .plots import emit_power_outputs

    start = time.perf_counter()
    try:
        rows = run_grid(run.grid, run.cohort, run.options, n_workers=threads,
                        on_cell_done=on_cell_done)
    except GridExecutionError as exc:
        for (b, m, r), msg in exc.failures:
            logline(f"FAILED cell b={b} m={m:g} r={r:g}: {msg}")
        if exc.rows:
            table_path, _ = emit_power_outputs(exc.rows, out_dir)
            logline(f"partial table flushed to {table_path}")
        _err(str(exc))
        log.close()
        return EXIT_RUNTIME
    except GeomdmrError as exc:
        logline(f"FAILED: {exc}")
        _err(str(exc))
        log.close()
        return EXIT_INPUT

    table_path, plot_paths = emit_power_outputs(rows, out_dir)
    logline(f"total wall time {time.perf_counter() - start:.2f}s")
    logline(f"table={table_path}")
    for p in plot_paths:
        logline(f"plot={p}")
    log.close()
    print(f"wrote {table_path} and {len(plot_paths)} plot(s); log at {log_path}")
    return EXIT_OK


def _default_for(dotted_key):
    doc = config_mod.DEFAULT_CONFIG
    for part in dotted_key.split("."):
        doc = doc[part]
    return doc


def cmd_print_default_config(_args) -> int:
    sys.stdout.write(config_mod.default_config_text())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geomdmr",
        description="Distance-based multivariate regression on connectivity "
                    "matrices: dissimilarity matrices, permutation tests, "
                    "subject simulation, and power studies.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_dist = sub.add_parser("dist", help="pairwise dissimilarity matrix from "
                                         "response CSVs")
    p_dist.add_argument("inputs", nargs="+",
                        help="matrix/vector CSV files, or one directory of them")
    p_dist.add_argument("--measure", required=True, choices=MEASURE_KINDS)
    p_dist.add_argument("--correlation-formula", choices=CORRELATION_FORMULAS,
                        default="sqrt_two_minus_two_r")
    p_dist.add_argument("--out", required=True, help="output CSV path")
    p_dist.add_argument("--threads", type=int, default=None,
                        help="accepted for interface uniformity; computation is "
                             "single-process")
    p_dist.set_defaults(func=cmd_dist)

    p_mdmr = sub.add_parser("mdmr", help="permutation test from a dissimilarity "
                                         "matrix and a design matrix")
    p_mdmr.add_argument("distances", help="square dissimilarity CSV")
    p_mdmr.add_argument("design", help="N x (p+1) design CSV; first column all 1s")
    p_mdmr.add_argument("--perms", type=int, default=999)
    p_mdmr.add_argument("--seed", type=int, default=0)
    p_mdmr.add_argument("--variant", choices=PSEUDO_F_VARIANTS,
                        default="residual_total")
    p_mdmr.add_argument("--out", required=True, help="output result CSV path")
    p_mdmr.add_argument("--threads", type=int, default=None,
                        help="accepted for interface uniformity; the permutation "
                             "loop is already schedule-independent")
    p_mdmr.set_defaults(func=cmd_mdmr)

    p_sim = sub.add_parser("simulate", help="simulate one cohort of "
                                            "connectivity matrices")
    p_sim.add_argument("--patients", type=int, default=20)
    p_sim.add_argument("--controls", type=int, default=20)
    p_sim.add_argument("--signal-size", type=int, default=4,
                       help="number of consecutive target ROIs (table column b)")
    p_sim.add_argument("--signal-mean", type=float, default=0.55,
                       help="mean of the atanh-scale signal level (column m)")
    p_sim.add_argument("--signal-sd", type=float, default=0.267,
                       help="sd of the atanh-scale signal level (column s)")
    p_sim.add_argument("--blend", type=float, default=1.0,
                       help="signal blend fraction in [0, 1] (column r)")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--cohort-path", default=None,
                       help="CSV file or directory of base correlation matrices; "
                            "omit to synthesize a base cohort")
    p_sim.add_argument("--dimension", type=int, default=10)
    p_sim.add_argument("--n-base", type=int, default=40)
    p_sim.add_argument("--df-min", type=int, default=None)
    p_sim.add_argument("--df-max", type=int, default=150)
    p_sim.add_argument("--n-blocks", type=int, default=4)
    p_sim.add_argument("--within-block-correlation", type=float, default=0.3)
    p_sim.add_argument("--template-df", type=int, default=100)
    p_sim.add_argument("--target", default=None,
                       help="comma-separated target ROI indices (default 0..b-1)")
    p_sim.add_argument("--threads", type=int, default=None,
                       help="accepted for interface uniformity; simulation is "
                            "single-process")
    p_sim.set_defaults(func=cmd_simulate)

    p_pow = sub.add_parser("power", help="run the full power study from a "
                                         "JSON config")
    p_pow.add_argument("config", help="JSON config path (see "
                                      "print-default-config)")
    p_pow.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
    p_pow.add_argument("--threads", type=int, default=None,
                       help="worker processes for grid cells (default: config "
                            "value, else machine parallelism)")
    p_pow.add_argument("--out", default=None, help="override the config out_dir")
    p_pow.set_defaults(func=cmd_power)

    p_cfg = sub.add_parser("print-default-config",
                           help="print the default power-study config as JSON")
    p_cfg.set_defaults(func=cmd_print_default_config)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
