"""Command-line entry point: ``deltamax <subcommand> [flags]``."""

from __future__ import annotations

import argparse
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

from .experiments import SUBCOMMANDS, ExperimentConfig, run_experiment, validate

_HELP = {
    "decay": "Fourier decay envelopes of the annulus transform and the three-regime multiplier bound",
    "norms": "L^p norm ratios of the lacunary maximal operator across delta",
    "strong": "L^p norm ratios of the strong (per-axis) maximal operator across delta",
    "weaktype": "H^1 to weak L^1 ratios on mean-zero cube bumps",
    "atoms": "atomic decomposition checks and stopping times",
    "banddecay": "L^2 norm decay of the band maximal operators",
}


def _number(text: str) -> float:
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _delta_list(text: str) -> tuple[float, ...]:
    vals = tuple(_number(t) for t in text.split(",") if t.strip())
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    for v in vals:
        if not 0.0 < v < 0.5:
            raise argparse.ArgumentTypeError(f"delta {v:g} outside (0, 1/2)")
    return vals


def _p_list(text: str) -> tuple[float, ...]:
    vals = tuple(_number(t) for t in text.split(",") if t.strip())
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    for v in vals:
        if not 1.0 <= v < math.inf:
            raise argparse.ArgumentTypeError(f"p {v:g} must be finite and >= 1")
    return vals


def _bounded_int(lo: int, hi: int | None = None):
    def parse(text: str) -> int:
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
        if v < lo or (hi is not None and v > hi):
            raise argparse.ArgumentTypeError(f"{v} outside [{lo}, {hi if hi is not None else 'inf'}]")
        return v

    return parse


def _power_of_two(text: str) -> int:
    v = _bounded_int(4)(text)
    if v & (v - 1):
        raise argparse.ArgumentTypeError(f"{v} is not a power of two")
    return v


def _positive(text: str) -> float:
    v = _number(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"{v:g} must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deltamax",
        description="Sweeps of discretised spherical maximal operators on periodic grids; writes CSV.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="{" + ",".join(SUBCOMMANDS) + "}")
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=_HELP[name], description=_HELP[name])
        p.add_argument("--d", type=_bounded_int(2, 4), help="dimension")
        p.add_argument("--n", type=_power_of_two, help="samples per axis (power of two)")
        p.add_argument("--box", type=_positive, help="periodic box side length")
        p.add_argument("--delta", type=_delta_list, help="comma-separated shell thicknesses in (0, 1/2)")
        p.add_argument("--p", type=_p_list, help="comma-separated exponents (fractions such as 4/3 allowed)")
        p.add_argument("--kmin", type=int, help="smallest dilation exponent")
        p.add_argument("--kmax", type=int, help="largest dilation exponent")
        p.add_argument("--jmin", type=_bounded_int(1), help="smallest band index (banddecay)")
        p.add_argument("--jmax", type=_bounded_int(1), help="largest band index (banddecay)")
        p.add_argument("--lambda-points", type=_bounded_int(2), help="points in the geometric lambda grid")
        p.add_argument("--trials", type=_bounded_int(1), help="random inputs per class")
        p.add_argument("--seed", type=_bounded_int(0), default=0, help="PRNG seed (default 0)")
        p.add_argument("--rule", choices=("centre", "area"), help="kernel rasterisation rule (default area)")
        p.add_argument("--out", help="CSV output path (default: stdout)")
    return parser


def cli_parse(argv=None) -> ExperimentConfig:
    """Parse ``argv`` into a validated config; usage errors exit with status 2."""
    parser = build_parser()
    ns = parser.parse_args(argv)
    base = ExperimentConfig.defaults(ns.subcommand)
    k_range = base.k_range
    if ns.kmin is not None or ns.kmax is not None:
        if k_range is None and (ns.kmin is None or ns.kmax is None):
            parser.error(f"argument --kmin/--kmax: {ns.subcommand} needs both bounds")
        lo = ns.kmin if ns.kmin is not None else k_range[0]
        hi = ns.kmax if ns.kmax is not None else k_range[1]
        if lo > hi:
            parser.error(f"argument --kmin: {lo} exceeds --kmax {hi}")
        k_range = (lo, hi)
    j_range = (ns.jmin or base.j_range[0], ns.jmax or base.j_range[1])
    if j_range[0] > j_range[1]:
        parser.error(f"argument --jmin: {j_range[0]} exceeds --jmax {j_range[1]}")
    if ns.out is not None:
        parent = Path(ns.out).resolve().parent
        if not parent.is_dir() or not os.access(parent, os.W_OK):
            parser.error(f"argument --out: directory {parent} is not writable")
    cfg = ExperimentConfig.defaults(
        ns.subcommand,
        d=ns.d,
        n=ns.n,
        box_length=ns.box,
        delta_list=ns.delta,
        p_list=ns.p,
        k_range=k_range,
        j_range=j_range,
        lambda_points=ns.lambda_points,
        seed=ns.seed,
        trials=ns.trials,
        out_path=ns.out,
        rule=ns.rule,
    )
    try:
        validate(cfg)
    except ValueError as exc:
        parser.error(f"invalid configuration: {exc}")
    return cfg


def main(argv=None) -> int:
    cfg = cli_parse(argv)
    report = run_experiment(cfg)
    if cfg.out_path is None:
        sys.stdout.write(report.to_csv())
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
