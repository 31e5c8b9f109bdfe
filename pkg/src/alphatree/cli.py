"""Command-line entry point: ``alphatree <command> [options]``.

Exit codes: 0 success, 1 usage or input error, 2 validation failure. Every
output starts with the fully resolved configuration (a ``# config:`` line in
CSV, a ``config`` key in JSON); feeding it back through
:func:`argv_from_config` regenerates the same output.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from decimal import Decimal, InvalidOperation
from pathlib import Path

from ._accel import backend
from .dimensions import (
    DEFAULT_CAP,
    ball_volume_curve,
    finite_size_distance_scaling,
    hausdorff_estimate,
    return_probability_curve,
    spectral_estimate,
)
from .exact import DEFAULT_ORACLE_CAP, all_exact_pi, growth_chain_distribution
from .growth import grow
from .limit import DEFAULT_TRUNCATION, ball_prob_finite_n, ball_prob_limit, sample_environment
from .rng import RNG_VERSION, make_rng
from .tree import TreeParseError, all_trees, decode
from .validate import validate

CONFIG_PREFIX = "# config: "
LIMIT_COMMANDS = {"ball-limit", "sample-env", "dims"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _alpha(text: str) -> float:
    try:
        value = Decimal(text)
    except InvalidOperation:
        raise argparse.ArgumentTypeError(f"alpha must be a decimal number, got {text!r}")
    if not Decimal(0) <= value <= Decimal(1):
        raise argparse.ArgumentTypeError(f"alpha must lie in [0, 1], got {text}")
    return float(value)


def _positive_int(text: str) -> int:
    try:
        value = int(float(text)) if "e" in text.lower() else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _window(text: str) -> list[float]:
    parts = text.split(",")
    try:
        lo, hi = (float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must be 'lo,hi', got {text!r}")
    if not lo < hi:
        raise argparse.ArgumentTypeError(f"window needs lo < hi, got {text}")
    return [lo, hi]


def _sizes(text: str) -> list[int]:
    return [_positive_int(p) for p in text.split(",")]


def _cap(text: str) -> int:
    return 0 if text in ("0", "none") else _positive_int(text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="alphatree", description="Alpha-model random trees and their limit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, alpha=True):
        if alpha:
            p.add_argument("--alpha", type=_alpha, required=True)
        p.add_argument("--seed", type=_seed, default=0)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("grow", help="grow trees and print them or their statistics")
    common(p)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--samples", type=_positive_int, default=1)
    p.add_argument("--radius", type=_positive_int, default=8, help="largest R for V_R columns")
    p.add_argument("--emit", choices=("stats", "code"), default="stats")

    p = sub.add_parser("exact", help="exact shape probabilities with the growth-chain oracle")
    common(p)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--oracle-cap", type=_positive_int, default=DEFAULT_ORACLE_CAP)

    p = sub.add_parser("ball-finite", help="probability of a ball shape at finite n")
    common(p)
    p.add_argument("--shape", required=True)
    p.add_argument("--radius", type=_positive_int, default=None)
    p.add_argument("--n", type=_positive_int, required=True)

    p = sub.add_parser("ball-limit", help="certified bracket for a limiting ball probability")
    common(p)
    p.add_argument("--shape", required=True)
    p.add_argument("--radius", type=_positive_int, default=None)
    p.add_argument("--truncation", type=_positive_int, default=DEFAULT_TRUNCATION)

    p = sub.add_parser("sample-env", help="sample spine environments")
    common(p)
    p.add_argument("--radius", type=_positive_int, default=4)
    p.add_argument("--samples", type=_positive_int, default=10)
    p.add_argument("--cap", type=_cap, default=DEFAULT_CAP)

    dims = sub.add_parser("dims", help="dimension estimates").add_subparsers(
        dest="estimate", required=True, parser_class=_Parser)
    p = dims.add_parser("hausdorff")
    common(p)
    p.add_argument("--radius", type=_positive_int, default=64, help="Rmax")
    p.add_argument("--samples", type=_positive_int, default=500)
    p.add_argument("--cap", type=_cap, default=DEFAULT_CAP)
    p.add_argument("--window", type=_window, default=None)
    p.add_argument("--sidecar", type=Path, default=None)
    p = dims.add_parser("spectral")
    common(p)
    p.add_argument("--tmax", type=_positive_int, default=4096)
    p.add_argument("--samples", type=_positive_int, default=100)
    p.add_argument("--method", choices=("exactDP", "walkers"), default="exactDP")
    p.add_argument("--walkers", type=_positive_int, default=1000)
    p.add_argument("--cap", type=_cap, default=DEFAULT_CAP)
    p.add_argument("--window", type=_window, default=None)
    p.add_argument("--sidecar", type=Path, default=None)
    p = dims.add_parser("finite-scaling")
    common(p)
    p.add_argument("--sizes", type=_sizes, default=[2**k for k in range(10, 18)])
    p.add_argument("--samples", type=_positive_int, default=20)
    p.add_argument("--window", type=_window, default=None)
    p.add_argument("--sidecar", type=Path, default=None)

    p = sub.add_parser("validate", help="run the invariant battery")
    common(p, alpha=False)
    p.add_argument("--alpha", type=_alpha, default=0.5)
    level = p.add_mutually_exclusive_group()
    level.add_argument("--quick", dest="level", action="store_const", const="quick")
    level.add_argument("--full", dest="level", action="store_const", const="full")
    p.set_defaults(level="quick")
    return parser


def resolved_config(args: argparse.Namespace) -> dict:
    cfg = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()}
    cfg.pop("out", None)
    cfg.pop("sidecar", None)
    cfg["rng_version"] = RNG_VERSION
    cfg["backend"] = backend()
    return cfg


def argv_from_config(config: dict) -> list[str]:
    """Command line that reproduces an output carrying ``config``."""
    argv = [config["command"]]
    if config["command"] == "dims":
        argv.append(config["estimate"])
    skip = {"command", "estimate", "rng_version", "backend", "level"}
    for key, value in config.items():
        if key in skip or value is None:
            continue
        flag = "--" + key.replace("_", "-")
        if isinstance(value, list):
            value = ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
        argv += [flag, repr(value) if isinstance(value, float) else str(value)]
    if config["command"] == "validate":
        argv.append("--" + config["level"])
    return argv


def read_config(text: str) -> dict:
    """The configuration header of a CSV or JSON output."""
    if text.startswith(CONFIG_PREFIX):
        return json.loads(text.splitlines()[0][len(CONFIG_PREFIX):])
    return json.loads(text)["config"]


def _num(x):
    return repr(float(x)) if isinstance(x, float) else x


def _render(config: dict, columns: list[str], rows: list[list], fmt: str, extra: dict | None = None) -> str:
    if fmt == "json":
        doc = {"config": config, "columns": columns, "rows": rows}
        doc.update(extra or {})
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(CONFIG_PREFIX + json.dumps(config, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_num(x) for x in row])
    return buf.getvalue()


def _reject_alpha_zero(args):
    if args.command in LIMIT_COMMANDS and args.alpha == 0:
        raise UsageError(
            "alpha = 0 is excluded here: the limit measure exists only under the "
            "hypothesis 0 < alpha <= 1"
        )


def _cmd_grow(args, config):
    R = args.radius
    if args.emit == "code":
        cols = ["sample", "n", "alpha", "seed", "code"]
    else:
        cols = ["sample", "n", "alpha", "seed", "height", "mean_leaf_depth"] + [f"V_{r}" for r in range(1, R + 1)]
    rows = []
    for i in range(args.samples):
        t = grow(args.n, args.alpha, make_rng(args.seed, "grow", i))
        if args.emit == "code":
            rows.append([i, args.n, args.alpha, args.seed, t.to_planar().code])
        else:
            counts = t.depth_counts()
            vols = [int(counts[1 : r + 1].sum()) for r in range(1, R + 1)]
            rows.append([i, args.n, args.alpha, args.seed, t.height(), t.mean_leaf_depth()] + vols)
    return cols, rows, None


def _cmd_exact(args, config):
    pis = all_exact_pi(args.n, args.alpha)
    oracle = growth_chain_distribution(args.n, args.alpha, cap=args.oracle_cap)
    rows = [[t.code, pis[t.code], float(oracle.get(t.code, 0.0))] for t in all_trees(args.n)]
    return ["tree", "exact_pi", "oracle_pi"], rows, None


def _cmd_ball_finite(args, config):
    shape = decode(args.shape)
    r = args.radius if args.radius is not None else shape.height
    p = ball_prob_finite_n(shape, args.n, args.alpha, r)
    return ["shape", "radius", "n", "alpha", "probability"], [[shape.code, r, args.n, args.alpha, p]], None


def _cmd_ball_limit(args, config):
    shape = decode(args.shape)
    r = args.radius if args.radius is not None else shape.height
    b = ball_prob_limit(shape, args.alpha, args.truncation, r)
    cols = ["shape", "radius", "alpha", "truncation", "lower", "upper", "midpoint"]
    return cols, [[shape.code, r, args.alpha, args.truncation, b.lower, b.upper, b.midpoint]], None


def _cmd_sample_env(args, config):
    R = args.radius
    cols = ["index", "capped"] + [f"V_{r}" for r in range(1, R + 1)] + ["ball"]
    rows = []
    for i in range(args.samples):
        env = sample_environment(args.alpha, max(R - 1, 1), args.seed, i, args.cap or None)
        vols = [int(v) for v in env.ball_volumes(R)[1:]]
        rows.append([i, len(env.capped)] + vols + [env.ball_code(R)])
    return cols, rows, None


def _cmd_dims(args, config):
    window = tuple(args.window) if args.window else None
    cap = getattr(args, "cap", None) or None
    if args.estimate == "hausdorff":
        curve = ball_volume_curve(args.alpha, args.radius, args.samples, args.seed, cap=cap)
        fit = hausdorff_estimate(curve, window)
        rows = [[int(r), m, s] for r, m, s in zip(curve.radii, curve.mean, curve.stderr)]
        extra = {"capped_draws": curve.capped_draws, "environments": curve.environments,
                 "target": 1 / args.alpha}
    elif args.estimate == "spectral":
        curve = return_probability_curve(args.alpha, args.tmax, args.samples, args.seed,
                                         args.method, walkers=args.walkers, cap=cap)
        fit = spectral_estimate(curve, window)
        t, m, s = curve.even()
        rows = [[int(a), b, c] for a, b, c in zip(t, m, s)]
        extra = {"capped_draws": curve.capped_draws, "environments": curve.environments,
                 "target": 2 / (1 + args.alpha), "max_error_bound": curve.max_error_bound}
    else:
        res = finite_size_distance_scaling(args.alpha, args.sizes, args.samples, args.seed, window=window)
        fit = res.fit
        rows = [[int(n), m, s] for n, m, s in zip(res.sizes, res.mean_depth, res.stderr)]
        extra = {"capped_draws": 0, "environments": args.samples * len(args.sizes),
                 "target": args.alpha}
    extra.update(fit=fit.as_dict(), seed=args.seed)
    return ["x", "y", "stderr"], rows, extra


_COMMANDS = {
    "grow": _cmd_grow,
    "exact": _cmd_exact,
    "ball-finite": _cmd_ball_finite,
    "ball-limit": _cmd_ball_limit,
    "sample-env": _cmd_sample_env,
    "dims": _cmd_dims,
}


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _reject_alpha_zero(args)
        config = resolved_config(args)
        if args.command == "validate":
            report = validate(args.level, args.alpha, args.seed)
            doc = {"config": config, **report.as_dict()}
            if args.format == "json":
                text = json.dumps(doc, indent=2, default=str) + "\n"
            else:
                text = _render(config, ["check", "passed", "value", "tolerance", "seconds"],
                               [[c.name, c.passed, json.dumps(c.value, default=str),
                                 json.dumps(c.tolerance, default=str), round(c.seconds, 3)]
                                for c in report.checks], "csv")
            _emit(text, args.out)
            return 0 if report.passed else 2
        cols, rows, extra = _COMMANDS[args.command](args, config)
        _emit(_render(config, cols, rows, args.format, extra), args.out)
        if extra is not None and args.format == "csv":
            sidecar = args.sidecar or (args.out.with_suffix(args.out.suffix + ".json") if args.out else None)
            if sidecar is not None:
                sidecar.write_text(json.dumps({"config": config, **extra}, indent=2) + "\n")
        return 0
    except UsageError as exc:
        sys.stderr.write(str(exc).rstrip("\n") + "\n")
        return 1
    except TreeParseError as exc:
        sys.stderr.write(f"alphatree: invalid shape: {exc}\n")
        return 1
    except (ValueError, MemoryError) as exc:
        sys.stderr.write(f"alphatree: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
