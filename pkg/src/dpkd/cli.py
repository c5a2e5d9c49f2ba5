"""Command-line interface.

Every subcommand accepts ``--config FILE`` (a JSON object keyed by option
name, dashes or underscores) whose values are overridden by explicit flags.
Exit status: 0 on success, 1 on a usage or configuration error, 2 when the
input data cannot be used.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._validation import DataError
from .bounds import (
    beyond_worst_case_bound,
    gaussian_bound,
    kd_mmd_conversion,
    tau_report,
    worst_case_bound,
)
from .datagen import (
    COMPONENT_SIGMA,
    MEANS_CENTER,
    MEANS_SIGMA,
    benchmark_mixture_spec,
    sample_gaussian_mixture,
)
from .estimators import DataDependentSynthesizer, DataIndependentSynthesizer
from .experiments import (
    DEFAULT_EPSILONS,
    DEFAULT_REPETITIONS,
    SCALING_COLUMNS,
    TRADEOFF_COLUMNS,
    UNIFORM_COLUMNS,
    default_half_widths,
    scaling,
    tradeoff,
    uniform_mixture_sweep,
)
from .io import (
    read_dataset_csv,
    read_json,
    read_points_csv,
    to_json,
    write_json,
    write_points_csv,
    write_rows_csv,
    write_weighted_csv,
)
from .core_types import WeightedDataset
from .kernels import ReferenceMMD, default_eval_points, kde, kde_sup_distance, mmd
from .noise import RngStreams

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _float_list(text):
    text = text.strip()
    if not text:
        return []
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _int_list(text):
    return [int(v) for v in _float_list(text)]


def _auto_or_float(text):
    if str(text) == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {text!r}") from exc


def _seed(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _common(p):
    p.add_argument("--config", help="JSON file of option values; flags override it")
    p.add_argument("--seed", type=_seed, default=0)


def _manifest_path(output, manifest):
    if manifest:
        return Path(manifest)
    out = Path(output)
    return out.with_name(out.stem + ".manifest.json")


def _echo(args):
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config")}


def _manifest(command, args, **extra):
    return {"command": command, "version": __version__, "seed": args.seed, "config": _echo(args), **extra}


def build_parser():
    parser = _Parser(prog="dpkd", description="Differentially private synthetic data via space partitioning.")
    parser.add_argument("--version", action="version", version=f"dpkd {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("generate", help="private synthetic dataset from a CSV of points")
    _common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, help="weighted CSV (coordinates plus a weight column)")
    p.add_argument("--manifest", help="JSON run manifest; defaults next to --output")
    p.add_argument("--mode", choices=("grid", "tree"), default="grid")
    p.add_argument("--epsilon", type=float, default=1.0, help="total privacy budget")
    p.add_argument("--width", type=float, default=0.5, help="grid bin width")
    p.add_argument("--threshold", type=_auto_or_float, default="auto")
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--eps-split", type=float, default=0.5, help="fraction of epsilon spent on partitioning (tree)")
    p.add_argument("--s1", type=float, help="largest final leaf edge (tree); default R/2")
    p.add_argument("--s2", type=float, help="smallest final leaf edge (tree); default R/64")
    p.add_argument("--tau", type=_auto_or_float, default="auto")
    p.add_argument("--empty-bins", choices=("implicit", "explicit"), default="implicit")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("tradeoff", help="MMD against epsilon for grid and tree synthesizers")
    _common(p)
    p.add_argument("--input", help="CSV of points; omit to draw a Gaussian mixture")
    p.add_argument("--output", required=True)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--components", type=int, default=10)
    p.add_argument("--component-sigma", type=float, default=COMPONENT_SIGMA)
    p.add_argument("--epsilons", type=_float_list, default=list(DEFAULT_EPSILONS))
    p.add_argument("--methods", default="grid,tree")
    p.add_argument("--repetitions", type=int, default=DEFAULT_REPETITIONS)
    p.add_argument("--width", type=float, default=2.0)
    p.add_argument("--s1", type=float)
    p.add_argument("--s2", type=float)
    p.add_argument("--eps-split", type=float, default=0.5)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--bandwidth", type=float, default=1.0)
    p.set_defaults(func=cmd_tradeoff)

    p = sub.add_parser("scaling", help="grid synthesizer on Gaussian data next to the Gaussian-data bound")
    _common(p)
    p.add_argument("--output", required=True)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--ns", type=_int_list, default=[10_000])
    p.add_argument("--epsilons", type=_float_list, default=list(DEFAULT_EPSILONS))
    p.add_argument("--repetitions", type=int, default=DEFAULT_REPETITIONS)
    p.add_argument("--data-sigma", type=float, default=1.0)
    p.add_argument("--width", type=float, default=0.5)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--bandwidth", type=float, default=1.0)
    p.add_argument("--eval-points", type=int, default=2000)
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("uniform-mixture", help="KL and MMD of box mixtures against N(0, 1)")
    _common(p)
    p.add_argument("--output", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--cs", type=_float_list, default=list(default_half_widths()))
    p.add_argument("--sample-size", type=int, default=100_000)
    p.add_argument("--bandwidth", type=float, default=1.0)
    p.set_defaults(func=cmd_uniform_mixture)

    p = sub.add_parser("bounds", help="evaluate a utility bound and print it as JSON")
    _common(p)
    p.add_argument("name", choices=("worst-case", "beyond-worst-case", "gaussian", "tau", "convert"))
    p.add_argument("--output")
    p.add_argument("--R", type=float)
    p.add_argument("--w", type=float)
    p.add_argument("--d", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=float)
    p.add_argument("--M", type=float)
    p.add_argument("--epsilon", "--eps", dest="epsilon", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--data-sigma", type=float)
    p.add_argument("--h", type=int)
    p.add_argument("--hprime", type=int)
    p.add_argument("--value", type=float)
    p.add_argument("--direction", choices=("kd_to_mmd", "mmd_to_kd"), default="kd_to_mmd")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("datagen", help="draw a Gaussian-mixture dataset")
    _common(p)
    p.add_argument("--output", required=True)
    p.add_argument("--manifest")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--components", type=int, default=10)
    p.add_argument("--component-sigma", type=float, default=COMPONENT_SIGMA)
    p.add_argument("--means-center", type=float, default=MEANS_CENTER)
    p.add_argument("--means-sigma", type=float, default=MEANS_SIGMA)
    p.set_defaults(func=cmd_datagen)

    p = sub.add_parser("eval", help="MMD and KD sup distance between two datasets")
    _common(p)
    p.add_argument("--real", required=True)
    p.add_argument("--synthetic", required=True)
    p.add_argument("--output")
    p.add_argument("--bandwidth", type=float, default=1.0)
    p.add_argument("--eval-points", type=int, default=1000)
    p.set_defaults(func=cmd_eval)
    return parser


def _mixture_data(args, streams):
    spec = benchmark_mixture_spec(args.dim, streams["data"], n_components=args.components,
                              component_sigma=args.component_sigma)
    return spec, sample_gaussian_mixture(spec, args.n, streams["data"])


def cmd_generate(args):
    if not args.epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {args.epsilon}")
    X = read_points_csv(args.input)
    if args.mode == "grid":
        est = DataIndependentSynthesizer(epsilon=args.epsilon, bin_width=args.width, threshold=args.threshold,
                                         delta=args.delta, empty_bins=args.empty_bins, random_state=args.seed)
        est.fit(X)
        privacy = {"epsilon_partition": 0.0, "epsilon_release": args.epsilon, "threshold": est.threshold_}
    else:
        est = DataDependentSynthesizer(epsilon=args.epsilon, partition_fraction=args.eps_split, s1=args.s1,
                                       s2=args.s2, tau=args.tau, threshold=args.threshold, delta=args.delta,
                                       empty_bins=args.empty_bins, random_state=args.seed)
        est.fit(X)
        spec = est.privacy_spec_
        privacy = {"epsilon_partition": spec.epsilon_partition, "epsilon_release": spec.epsilon_release,
                   "threshold": spec.threshold, "tau": est.tau_, "tree": est.tree_.encode()}
    privacy["epsilon_total"] = est.ledger_.total
    write_weighted_csv(args.output, est.synthetic_)
    manifest = _manifest("generate", args, privacy=privacy, ledger=est.ledger_.to_list(),
                         stats=est.stats_, box=est.box_.to_dict())
    write_json(_manifest_path(args.output, args.manifest), manifest)
    return EXIT_OK


def cmd_tradeoff(args):
    streams = RngStreams(args.seed)
    if args.input:
        X, data_info = read_points_csv(args.input), {"input": args.input}
    else:
        spec, X = _mixture_data(args, streams)
        data_info = {"mixture": spec.to_dict()}
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    rows = tradeoff(X, args.epsilons, methods=methods, repetitions=args.repetitions, seed=args.seed,
                    bandwidth=args.bandwidth, bin_width=args.width, s1=args.s1, s2=args.s2, delta=args.delta,
                    partition_fraction=args.eps_split)
    write_rows_csv(args.output, TRADEOFF_COLUMNS, rows)
    write_json(_manifest_path(args.output, None), _manifest("tradeoff", args, data=data_info))
    return EXIT_OK


def cmd_scaling(args):
    rows = scaling(args.epsilons, args.ns, repetitions=args.repetitions, seed=args.seed, dim=args.dim,
                   data_sigma=args.data_sigma, bin_width=args.width, delta=args.delta,
                   bandwidth=args.bandwidth, n_eval=args.eval_points)
    write_rows_csv(args.output, SCALING_COLUMNS, rows)
    write_json(_manifest_path(args.output, None), _manifest("scaling", args))
    return EXIT_OK


def cmd_uniform_mixture(args):
    rows = uniform_mixture_sweep(args.k, args.cs, sample_size=args.sample_size, bandwidth=args.bandwidth,
                                 seed=args.seed)
    write_rows_csv(args.output, UNIFORM_COLUMNS, rows)
    write_json(_manifest_path(args.output, None), _manifest("uniform-mixture", args))
    return EXIT_OK


_BOUND_ARGS = {
    "worst-case": ("R", "w", "d", "n", "epsilon", "delta"),
    "beyond-worst-case": ("n", "m", "M", "epsilon", "delta", "w", "d"),
    "gaussian": ("n", "d", "data_sigma", "w", "epsilon", "delta"),
    "tau": ("h", "hprime", "n", "epsilon", "delta"),
    "convert": ("value",),
}


def cmd_bounds(args):
    needed = _BOUND_ARGS[args.name]
    missing = [name for name in needed if getattr(args, name) is None]
    if missing:
        raise UsageError(f"bounds {args.name}: missing --{', --'.join(missing)}")
    a = args
    if a.name == "worst-case":
        report = worst_case_bound(a.R, a.w, a.d, a.n, a.epsilon, a.delta).to_dict()
    elif a.name == "beyond-worst-case":
        report = beyond_worst_case_bound(a.n, a.m, a.M, a.epsilon, a.delta, a.w, a.d).to_dict()
    elif a.name == "gaussian":
        report = gaussian_bound(a.n, a.d, a.data_sigma, a.w, a.epsilon, a.delta).to_dict()
    elif a.name == "tau":
        report = tau_report(a.h, a.hprime, a.n, a.epsilon, a.delta).to_dict()
    else:
        report = {"name": "convert", "direction": a.direction, "input": a.value,
                  "value": kd_mmd_conversion(a.direction, a.value), "preconditions_met": True}
    text = to_json(report)
    if a.output:
        Path(a.output).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_datagen(args):
    for name in ("n", "dim", "components"):
        if getattr(args, name) < 1:
            raise ValueError(f"--{name} must be positive")
    streams = RngStreams(args.seed)
    spec = benchmark_mixture_spec(args.dim, streams["data"], n_components=args.components,
                              component_sigma=args.component_sigma, means_center=args.means_center,
                              means_sigma=args.means_sigma)
    X = sample_gaussian_mixture(spec, args.n, streams["data"])
    write_points_csv(args.output, X)
    write_json(_manifest_path(args.output, args.manifest), _manifest("datagen", args, mixture=spec.to_dict()))
    return EXIT_OK


def cmd_eval(args):
    p = read_dataset_csv(args.real)
    q = read_dataset_csv(args.synthetic)
    if isinstance(q, WeightedDataset) and len(q) == 0:
        # a fully filtered release is the zero measure
        net = default_eval_points(p, p, n_quasi=args.eval_points, seed=args.seed)
        distance = math.sqrt(ReferenceMMD(p, args.bandwidth).self_term)
        kd_sup = float(np.max(kde(net, p, args.bandwidth)))
    else:
        net = default_eval_points(p, q, n_quasi=args.eval_points, seed=args.seed)
        distance = mmd(p, q, args.bandwidth)
        kd_sup = kde_sup_distance(p, q, net, bandwidth=args.bandwidth)
    result = {
        "mmd": distance,
        "kd_sup": kd_sup,
        "empty_release": isinstance(q, WeightedDataset) and len(q) == 0,
        "bandwidth": args.bandwidth,
        "eval_points": int(net.shape[0]),
        "version": __version__,
    }
    text = to_json(result)
    if args.output:
        Path(args.output).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def _apply_config(parser, argv):
    """Re-parse with the config file's values installed as defaults."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    config = read_json(args.config)
    if not isinstance(config, dict):
        raise UsageError(f"{args.config}: config must be a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    defaults = {}
    for key, value in config.items():
        dest = key.replace("-", "_")
        if dest not in known or dest in ("config", "help"):
            raise UsageError(f"{args.config}: unknown option {key!r} for {args.command}")
        action = next(a for a in sub._actions if a.dest == dest)
        if action.type is not None and isinstance(value, str):
            value = action.type(value)
        elif action.type in (_float_list, _int_list) and isinstance(value, (int, float)):
            value = [value]
        defaults[dest] = value
    sub.set_defaults(**defaults)
    # required options satisfied by the config file are no longer required
    for action in sub._actions:
        if action.dest in defaults:
            action.required = False
    return parser.parse_args(argv)


def main(argv=None):
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        if not getattr(args, "command", None):
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (UsageError, ValueError, argparse.ArgumentTypeError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
