"""Command-line front end: estimate, diagnose, sweep, phase, check.

Every subcommand reads the single-document JSON configuration (see README),
computes through the library API, and writes CSV or JSON artifacts; results
are identical to library calls with the same seeds. Exit codes: 0 success,
1 validation or usage error, 2 estimator degeneracy, 3 failed check suite.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .bounds import FisherSingularError, bound_shapes, crb, crb_clumps_scaling, sigma_s
from .checks import SUITES, format_result, run_suite
from .esprit import EstimatorDegeneracy, esprit_estimate, matching_distance
from .harness import (
    ExperimentConfig,
    config_from_json,
    phase_grid,
    phase_grid_to_csv,
    sweep,
    sweep_to_csv,
)
from .music import sample_nsc
from .signal_model import (
    ClumpsSpec,
    NoiseModel,
    min_separation,
    srf,
    steering_matrix,
    synthesize_snapshots,
)
from .subspace import empirical_covariance, signal_space

__all__ = ["main", "entrypoint"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DEGENERATE = 2
EXIT_CHECK_FAILED = 3


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1 here (argparse defaults to 2)
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _default_threads() -> int:
    env = os.environ.get("SPECTRAL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _build_parser() -> _Parser:
    parser = _Parser(prog="multisnap", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_common(p, out_default):
        p.add_argument("--config", required=True, help="JSON experiment configuration")
        p.add_argument("--seed", type=int, default=None, help="override the root seed")
        p.add_argument("--out", default=out_default, help=f"output path (default {out_default})")
        p.add_argument(
            "--threads", type=int, default=None,
            help="worker processes (default: SPECTRAL_THREADS or 1)",
        )

    add_common(sub.add_parser("music", help="empirical correlation profile to CSV"), "profile.csv")
    add_common(sub.add_parser("esprit", help="shift-invariance estimate to JSON"), "result.json")
    add_common(sub.add_parser("bounds", help="conditioning and floor diagnostics as JSON"), None)
    add_common(sub.add_parser("sweep", help="Monte-Carlo sweep to CSV"), "sweep.csv")
    add_common(sub.add_parser("phase", help="phase-transition grid to CSV"), "phase.csv")

    check = sub.add_parser("check", help="run a named reproduction suite")
    check.add_argument(
        "--suite", "--check-suite", dest="suite", required=True,
        help=f"one of: {', '.join(SUITES)}",
    )
    check.add_argument("--threads", type=int, default=None)
    return parser


def _load_config(args) -> ExperimentConfig:
    try:
        with open(args.config) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(
            f"malformed JSON in {args.config} at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    config = config_from_json(doc)
    if args.seed is not None:
        import dataclasses

        config = dataclasses.replace(config, root_seed=args.seed)
    return config


def _trial_batch(config: ExperimentConfig):
    support = config.support()
    seed = np.random.SeedSequence(config.root_seed, spawn_key=(0,))
    batch = synthesize_snapshots(
        support, config.M, config.L, noise=NoiseModel(config.nu), seed=seed
    )
    return support, batch


def _cmd_music(args) -> int:
    config = _load_config(args)
    support, batch = _trial_batch(config)
    basis = signal_space(empirical_covariance(batch), support.S)
    profile = sample_nsc(basis, config.grid_size, basis_tag="empirical")
    profile.to_csv(args.out)
    print(f"wrote {profile.grid_size}-point correlation profile to {args.out}")
    return EXIT_OK


def _cmd_esprit(args) -> int:
    config = _load_config(args)
    support, batch = _trial_batch(config)
    basis = signal_space(empirical_covariance(batch), support.S)
    solution = esprit_estimate(basis)
    md = matching_distance(support, solution.estimated_support)
    payload = {
        "estimated_support": solution.estimated_support.points.tolist(),
        "md": md,
        "eigenvalues": [
            {"re": float(z.real), "im": float(z.imag)} for z in solution.eigenvalues
        ],
    }
    with open(args.out, "w") as fh:
        json.dump(payload, fh, indent=2)
    print(f"md = {md:.3e}; wrote {args.out}")
    return EXIT_OK


def _cmd_bounds(args) -> int:
    config = _load_config(args)
    if config.nu <= 0:
        raise ValueError("bound diagnostics need a positive noise level")
    support = config.support()
    phi = steering_matrix(support, config.M)
    sig = sigma_s(phi)
    payload: dict = {"sigma_S": sig, "M": config.M, "S": support.S, "L": config.L, "nu": config.nu}
    # population amplitude covariance of the unit complex Gaussian model
    X = np.eye(support.S)
    lambda_s = 1.0
    payload["noise_level_ok"] = bool(config.nu <= sig * np.sqrt(lambda_s))
    if support.S >= 2:
        delta = min_separation(support)
        payload["srf"] = srf(support, config.M)
        shapes = {
            b.name: b.value
            for b in bound_shapes(config.M, support.S, config.L, config.nu, lambda_s, sig, delta)
        }
        payload["xi"] = shapes.pop("xi")
        payload["rho"] = shapes.pop("rho")
        payload["bounds"] = shapes
    else:
        payload["srf"] = payload["xi"] = payload["rho"] = None
        payload["bounds"] = {}
    payload["crb_trace"] = crb(support, X, config.nu, config.L, config.M).trace_bound
    geometry = config.geometry
    if isinstance(geometry, ClumpsSpec) and len(set(geometry.clump_sizes)) == 1:
        payload["crb_clumps_scaling"] = crb_clumps_scaling(geometry, X, config.nu, config.L)
    else:
        payload["crb_clumps_scaling"] = None
    text = json.dumps(payload, indent=2)
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    return EXIT_OK


def _cmd_sweep(args, threads: int) -> int:
    config = _load_config(args)
    results = sweep(config, threads=threads)
    sweep_to_csv(results, args.out)
    for res in results:
        slope = "n/a" if res.slope is None else f"{res.slope:+.3f}"
        print(f"{res.metric}: slope {slope} over {len(res.rows)} points -> {args.out}")
    return EXIT_OK


def _cmd_phase(args, threads: int) -> int:
    config = _load_config(args)
    grid = phase_grid(config, threads=threads)
    out = args.out
    crossings_out = out.rsplit(".", 1)[0] + "_crossings.csv"
    phase_grid_to_csv(grid, out, crossings_out)
    slope = "n/a" if grid.transition_slope is None else f"{grid.transition_slope:+.3f}"
    print(f"transition slope {slope}; cells -> {out}, crossings -> {crossings_out}")
    return EXIT_OK


def _cmd_check(args, threads: int) -> int:
    results = run_suite(args.suite, threads=threads)
    for result in results:
        print(format_result(result))
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    threads = args.threads if getattr(args, "threads", None) else _default_threads()
    try:
        if args.command == "music":
            return _cmd_music(args)
        if args.command == "esprit":
            return _cmd_esprit(args)
        if args.command == "bounds":
            return _cmd_bounds(args)
        if args.command == "sweep":
            return _cmd_sweep(args, threads)
        if args.command == "phase":
            return _cmd_phase(args, threads)
        if args.command == "check":
            return _cmd_check(args, threads)
        raise ValueError(f"unknown command {args.command!r}")
    except (EstimatorDegeneracy, FisherSingularError) as exc:
        print(f"estimator degeneracy: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
