"""Command-line surface.

Subcommands::

    momnet gen        --spec spec.json --params params.json --n N
    momnet learn      --samples DIR --k K [--variant ...] [--als] [--refine]
    momnet eval       --result DIR --params params.json [--samples DIR]
    momnet experiment --config config.json [--plot]
    momnet distmat    --params params.json [--closed-form | --spec spec.json --n N]
                      [--scan 0.01,0.1 --trials T]

Global flags: --seed (default 0), --out-dir, --format {csv,bin},
--threads.  Every subcommand is deterministic given its flags and seed.
Exit codes: 0 ok, 2 configuration error, 3 data error, 4 numerical
error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import io
from .distmat import closed_form_M_gaussian, estimate_N, sigma_min, \
    smoothed_sigma_scan
from .errors import ConfigurationError, DataError, NumericalError
from .evalharness import (ExperimentConfig, align_and_score, mse,
                          run_experiment)
from .learner import LearnOptions, learn_two_layer
from .model import generate_samples

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _add_common(parser):
    parser.add_argument("--seed", type=int, default=0,
                        help="root seed for all substreams (default 0)")
    parser.add_argument("--out-dir", default=".", help="output directory")
    parser.add_argument("--format", choices=("csv", "bin"), default="csv",
                        help="matrix file format")
    parser.add_argument("--threads", type=int, default=1,
                        help="parallelism cap (execution is serial; results "
                             "are independent of this value)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="momnet",
        description="moment-based learning of two-layer ReLU networks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="sample a dataset from a network")
    p.add_argument("--spec", required=True, help="distribution spec JSON")
    p.add_argument("--params", required=True, help="network params JSON")
    p.add_argument("--n", type=int, required=True, help="number of samples")
    _add_common(p)

    p = sub.add_parser("learn", help="run the recovery pipeline")
    p.add_argument("--samples", required=True, help="sample directory")
    p.add_argument("--k", type=int, required=True, help="hidden units")
    p.add_argument("--variant", choices=("noisy", "noiseless"),
                   default="noisy", help="detector variant")
    p.add_argument("--als", action="store_true",
                   help="robust CP-over-probes extraction")
    p.add_argument("--refine", action="store_true",
                   help="gradient-descent polish of W")
    p.add_argument("--nonsquare", action="store_true",
                   help="project outputs when l > k")
    _add_common(p)

    p = sub.add_parser("eval", help="score a recovery against ground truth")
    p.add_argument("--result", required=True, help="recovery directory")
    p.add_argument("--params", required=True, help="ground-truth params JSON")
    p.add_argument("--samples", default=None,
                   help="optional test samples for MSE")
    _add_common(p)

    p = sub.add_parser("experiment", help="run an experiment suite")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--plot", action="store_true", help="also emit an SVG")
    _add_common(p)

    p = sub.add_parser("distmat", help="distinguishing-matrix analysis")
    p.add_argument("--params", required=True,
                   help="params JSON providing W (A ignored)")
    p.add_argument("--spec", default=None,
                   help="distribution spec JSON for Monte-Carlo estimation")
    p.add_argument("--n", type=int, default=100_000,
                   help="Monte-Carlo sample count")
    p.add_argument("--closed-form", action="store_true",
                   help="use the exact Gaussian closed form")
    p.add_argument("--augmented", action="store_true",
                   help="append the E[x o x] column")
    p.add_argument("--scan", default=None,
                   help="comma-separated rho grid for a smoothed sigma scan")
    p.add_argument("--trials", type=int, default=10,
                   help="trials per rho in the scan")
    _add_common(p)
    return parser


def _cmd_gen(args) -> int:
    spec = io.load_distribution(args.spec)
    params = io.load_params(args.params)
    if args.n < 1:
        raise ConfigurationError("--n must be >= 1")
    samples = generate_samples(params, spec, args.n, args.seed)
    io.save_samples(args.out_dir, samples, fmt=args.format)
    print(f"wrote {samples.n} samples to {args.out_dir}")
    return EXIT_OK


def _cmd_learn(args) -> int:
    samples = io.load_samples(args.samples)
    options = LearnOptions(variant=args.variant, use_als=args.als,
                           refine=args.refine, nonsquare=args.nonsquare)
    result = learn_two_layer(samples, args.k, options, seed=args.seed)
    io.save_recovery(args.out_dir, result, fmt=args.format)
    print(f"wrote recovery to {args.out_dir} "
          f"(detector gap {result.diagnostics.get('detector_gap')})")
    return EXIT_OK


def _cmd_eval(args) -> int:
    result = io.load_recovery(args.result)
    params = io.load_params(args.params)
    W_err, A_err = align_and_score(result, params)
    doc = {"W_err": W_err, "A_err": A_err}
    if args.samples:
        doc["mse"] = mse(result, io.load_samples(args.samples))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.save_json(out / "metrics.json", doc)
    print(" ".join(f"{k}={v:.6g}" for k, v in doc.items()))
    return EXIT_OK


def _experiment_config_from_json(doc: dict) -> ExperimentConfig:
    from .model import distribution_from_json
    opts = doc.get("options", {})
    known = {f for f in LearnOptions.__dataclass_fields__}
    bad = set(opts) - known
    if bad:
        raise ConfigurationError(f"unknown option fields: {sorted(bad)}")
    dist = doc.get("distribution")
    try:
        return ExperimentConfig(
            experiment=doc["experiment"],
            d=int(doc["d"]), k=int(doc["k"]), l=doc.get("l"),
            grid=tuple(doc["grid"]),
            trials=int(doc.get("trials", 5)),
            n=int(doc.get("n", 10_000)),
            noise_sigma=float(doc.get("noise_sigma", 0.0)),
            distribution=None if dist is None else distribution_from_json(dist),
            conditioned=doc.get("conditioned", "W"),
            options=LearnOptions(**opts),
            seed=int(doc.get("seed", 0)),
            test_n=int(doc.get("test_n", 10_000)),
            mse_against=doc.get("mse_against", "noisy"))
    except KeyError as exc:
        raise ConfigurationError(f"experiment config missing field {exc}")


def _cmd_experiment(args) -> int:
    config = _experiment_config_from_json(io.load_json(args.config))
    if config.seed == 0 and args.seed != 0:
        config.seed = args.seed
    rows = run_experiment(config, out_dir=args.out_dir, plot=args.plot)
    failed = sum(r.status != "ok" for r in rows)
    print(f"{len(rows)} rows written to {args.out_dir} ({failed} failed)")
    return EXIT_OK


def _cmd_distmat(args) -> int:
    params = io.load_params(args.params)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.scan:
        grid = [float(tok) for tok in args.scan.split(",") if tok]
        rows = smoothed_sigma_scan(params.W, grid, args.trials, args.seed)
        with open(out / "sigma_scan.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("rho", "trial", "sigma_min"))
            writer.writerows(rows)
        print(f"wrote {len(rows)} scan rows to {out / 'sigma_scan.csv'}")
        return EXIT_OK
    if args.closed_form:
        dm = closed_form_M_gaussian(params.W, augmented=args.augmented)
    else:
        if args.spec is None:
            raise ConfigurationError(
                "distmat needs --closed-form or --spec for Monte-Carlo")
        spec = io.load_distribution(args.spec)
        dm = estimate_N(params.W, spec, args.n, args.seed,
                        augmented=args.augmented)
    ext = ".csv" if args.format == "csv" else ".mat"
    io.save_matrix(out / ("distmat" + ext), dm.data, fmt=args.format)
    io.save_json(out / "distmat_diag.json",
                 {"sigma_min": sigma_min(dm.data), "k": dm.k, "d": dm.d,
                  "augmented": dm.augmented, "provenance": dm.provenance})
    print(f"sigma_min = {sigma_min(dm.data):.6e}")
    return EXIT_OK


_COMMANDS = {"gen": _cmd_gen, "learn": _cmd_learn, "eval": _cmd_eval,
             "experiment": _cmd_experiment, "distmat": _cmd_distmat}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        print("error[config]: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"error[config]: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        print(f"error[data]: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"error[numerical]: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
