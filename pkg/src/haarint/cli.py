"""Command-line entry point: ``haarint <subcommand> [flags]``.

Every subcommand writes one JSON document to stdout.  Exit status is 2 for
bad flags or inputs, 1 when a check fails and 0 otherwise.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from .algebra import GaussRational, format_rational, poly_parse
from .pizzetti import ENGINES, StiefelSpec, integrate

CHECKS = ("commutators", "prop43", "clifford-lemmas", "sekiguchi", "kernel-vs-moments")


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _pair(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected SAMPLES,SEED")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise argparse.ArgumentTypeError("expected two integers") from exc


def _scalar_json(v):
    if isinstance(v, GaussRational):
        if v.im == 0:
            return format_rational(v.re)
        return {"re": format_rational(v.re), "im": format_rational(v.im)}
    return format_rational(v)


def _spec(args) -> StiefelSpec:
    if args.beta not in (1, 2, 4):
        raise UsageError("--beta must be 1, 2 or 4")
    if args.n < 1 or not 1 <= args.k <= args.n:
        raise UsageError("need 1 <= k <= n")
    return StiefelSpec(args.beta, args.n, args.k)


def _read_poly(path: str, spec: StiefelSpec):
    text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
    f = poly_parse(text, spec.layout)
    if f.layout != spec.layout:
        raise UsageError(f"polynomial layout {f.layout} does not match the flags {spec.layout}")
    return f


def _add_spec(p: argparse.ArgumentParser, required: bool = True):
    p.add_argument("--beta", type=int, required=required, default=None if required else 1)
    p.add_argument("--n", type=int, required=required, default=None if required else 4)
    p.add_argument("--k", type=int, required=required, default=None if required else 2)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="haarint", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("moment", help="exact integral of a polynomial")
    _add_spec(p)
    p.add_argument("--poly", required=True, help="polynomial JSON file, or - for stdin")
    p.add_argument("--engine", default="auto", choices=("auto",) + tuple(ENGINES))

    p = sub.add_parser("kernel", help="closed-form kernel at given singular values")
    _add_spec(p)
    p.add_argument("--lambdas", type=_floats, required=True)

    p = sub.add_parser("iz", help="Itzykson-Zuber series over SO(4)/[SO(2)xSO(2)]")
    p.add_argument("--H", type=_floats, required=True, help="e1,e2,e3,e4")
    p.add_argument("--jmax", type=int, default=40)
    p.add_argument("--convention", choices=("paper", "from_zero"), default="from_zero")
    p.add_argument("--prefactor", choices=("printed", "rederived"), default="rederived")
    p.add_argument("--tolerance", type=float, default=1e-10)
    p.add_argument("--mc-check", type=_pair, default=None, metavar="SAMPLES,SEED")
    p.add_argument("--threads", type=int, default=None)

    p = sub.add_parser("sample", help="Haar samples in flat real coordinates")
    _add_spec(p)
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("check", help="run a named invariant suite")
    p.add_argument("name", choices=CHECKS)
    _add_spec(p, required=False)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--degree", type=int, default=None)
    p.add_argument("--kappa", type=int, default=None, help="clifford-lemmas: defaults to --beta")
    p.add_argument("--m", type=int, default=None, help="clifford-lemmas: defaults to --n")
    p.add_argument("--a-max", type=int, default=4)
    p.add_argument("--lambdas", type=_floats, default=None)

    p = sub.add_parser("oracle", help="Monte Carlo or quadrature estimate of a polynomial integral")
    _add_spec(p)
    p.add_argument("--poly", required=True)
    p.add_argument("--method", choices=("mc", "quadrature"), default="mc")
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--nodes", type=int, default=64)
    return parser


# ----------------------------------------------------------------- handlers


def cmd_moment(args) -> tuple[dict, int]:
    spec = _spec(args)
    f = _read_poly(args.poly, spec)
    return {"exact": _scalar_json(integrate(spec, f, args.engine)), "engine": args.engine}, 0


def cmd_kernel(args) -> tuple[dict, int]:
    from .kernels import psi_hat

    spec = _spec(args)
    kv = psi_hat(spec, args.lambdas)
    return {"value": kv.value, "method": kv.method, "route": kv.route, "truncation": kv.truncation}, 0


def cmd_iz(args) -> tuple[dict, int]:
    from .iz import iz_monte_carlo, iz_series

    res = iz_series(args.H, args.jmax, args.convention, args.prefactor, args.tolerance)
    out = res.as_dict()
    if args.mc_check:
        samples, seed = args.mc_check
        est = iz_monte_carlo(args.H, samples, seed, threads=args.threads)
        out["mc"] = {"mean": est.mean, "stderr": est.stderr, "samples": est.samples, "seed": est.seed}
    return out, 0


def cmd_sample(args) -> tuple[dict | str, int]:
    from .haar import block_rng, sample_stiefel_batch

    spec = _spec(args)
    if args.samples < 1:
        raise UsageError("--samples must be positive")
    x = sample_stiefel_batch(spec, block_rng(args.seed, 0), args.samples)
    if args.format == "csv":
        return "\n".join(",".join(repr(float(v)) for v in row) for row in x) + "\n", 0
    return {"beta": spec.beta, "n": spec.n, "k": spec.k, "seed": args.seed, "samples": x.tolist()}, 0


def cmd_check(args) -> tuple[dict, int]:
    name = args.name
    if name == "sekiguchi":
        from .iz import sekiguchi_check

        report = sekiguchi_check(args.a_max).as_dict()
    elif name == "commutators":
        from .diffop import check_commutators

        spec = _spec(args)
        report = check_commutators(spec.layout, args.trials, args.seed, degree=args.degree or 5).as_dict()
    elif name == "prop43":
        from .pizzetti import prop43_check

        spec = _spec(args)
        report = prop43_check(spec, args.trials, args.seed, degree=args.degree or 4).as_dict()
    elif name == "clifford-lemmas":
        from .pizzetti import clifford_lemma_check, clifford_u2_check

        kappa = args.kappa or args.beta
        m = args.m or args.n
        first = clifford_lemma_check(kappa, m, args.trials, args.seed, degree=args.degree or 5)
        second = clifford_u2_check(kappa, m, args.trials, args.seed)
        report = {"passed": first.passed and second.passed, "lemmas": first.as_dict(), "u2": second.as_dict()}
    else:
        from .kernels import kernel_moment_check

        spec = _spec(args)
        if args.lambdas is None:
            raise UsageError("kernel-vs-moments needs --lambdas")
        report = kernel_moment_check(spec, args.lambdas, args.degree or 8).as_dict()
    return report, 0 if report["passed"] else 1


def cmd_oracle(args) -> tuple[dict, int]:
    from .haar import low_dim_quadrature, mc_integrate

    spec = _spec(args)
    f = _read_poly(args.poly, spec)
    if args.method == "quadrature":
        return {"value": low_dim_quadrature(spec, f, nodes=args.nodes), "nodes": args.nodes}, 0
    return mc_integrate(spec, f, args.samples, args.seed, threads=args.threads).as_dict(), 0


HANDLERS = {
    "moment": cmd_moment,
    "kernel": cmd_kernel,
    "iz": cmd_iz,
    "sample": cmd_sample,
    "check": cmd_check,
    "oracle": cmd_oracle,
}


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        out, code = HANDLERS[args.command](args)
    except (UsageError, ValueError, OSError) as exc:
        print(f"haarint: error: {exc}", file=sys.stderr)
        return 2
    if isinstance(out, str):
        sys.stdout.write(out)
    else:
        sys.stdout.write(json.dumps(out, sort_keys=True) + "\n")
    return code


def main() -> None:
    sys.exit(run())
