"""Command-line entry point.

Exit codes: 0 success, 2 invalid input or configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import report
from .config import RunConfig
from .errors import NumericalError
from .keyrate import VARIANTS
from .leakage import VISIBILITY_KEYS

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3


def parse_vis(text: str):
    """``0.47`` or ``x01=0.48,z01=0.49,xz00=...`` (all six pulse pairs)."""
    if "=" not in text:
        try:
            return float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    out = {}
    for item in text.split(","):
        key, _, value = item.partition("=")
        key = key.strip()
        if key not in VISIBILITY_KEYS:
            raise argparse.ArgumentTypeError(f"unknown pulse pair {key!r}; expected {', '.join(VISIBILITY_KEYS)}")
        try:
            out[key] = float(value)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number for {key}: {value!r}") from None
    if set(out) != set(VISIBILITY_KEYS):
        raise argparse.ArgumentTypeError(f"map must give all of {', '.join(VISIBILITY_KEYS)}")
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--out", type=Path, help="output file (default: stdout)")
    common.add_argument("--nmax", type=int, help="Fock truncation (total photon number)")

    vis = argparse.ArgumentParser(add_help=False)
    vis.add_argument("--mu", type=float, help="HOM-test mean photon number")
    vis.add_argument("--visibility", type=parse_vis, help="PRWCP visibility, single value or six-entry map")
    vis.add_argument("--sigma", type=parse_vis, help="error bar(s) on the visibility")
    vis.add_argument("--worst-case", action="store_true", help="use visibility - sigma for the headline result")

    scan = argparse.ArgumentParser(add_help=False)
    scan.add_argument("--dmin", type=float, help="first distance in km")
    scan.add_argument("--dmax", type=float, help="last distance in km")
    scan.add_argument("--step", type=float, help="distance step in km")
    scan.add_argument("--variant", choices=VARIANTS, help="single-photon error correction formula")

    parser = argparse.ArgumentParser(prog="homcert", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("hom-curve", parents=[common], help="PRWCP HOM visibility vs single-photon visibility")
    p.add_argument("--mu", type=float, nargs="+", help="mean photon numbers (one curve each)")
    p.add_argument("--points", type=int, default=report.DEFAULT_CURVE_POINTS, help="gamma grid size")

    sub.add_parser("imbalance", parents=[common, vis], help="basis imbalance bound as JSON")

    p = sub.add_parser("keyrate", parents=[common, vis, scan], help="optimised key rate vs distance as CSV")
    p.add_argument("--delta", type=float, help="explicit basis imbalance instead of a visibility")

    sub.add_parser("certify", parents=[common, vis, scan], help="certification verdict as JSON")
    return parser


def _resolve_config(args) -> RunConfig:
    config = RunConfig.load(args.config) if args.config else RunConfig()
    mu = getattr(args, "mu", None)
    return config.with_overrides(
        mu_hom=None if isinstance(mu, list) else mu,
        n_max=args.nmax,
        d_min=getattr(args, "dmin", None),
        d_max=getattr(args, "dmax", None),
        step=getattr(args, "step", None),
        variant=getattr(args, "variant", None),
        worst_case=getattr(args, "worst_case", None),
        visibility=getattr(args, "visibility", None),
        sigma=getattr(args, "sigma", None),
    )


def run(args) -> str:
    config = _resolve_config(args)
    if args.command == "hom-curve":
        mus = args.mu if args.mu else report.DEFAULT_CURVE_MUS
        return report.hom_curve_csv(config, mus, args.points)
    if args.command == "imbalance":
        return report.dump_json(report.imbalance_report(config))
    if args.command == "keyrate":
        if args.delta is not None and config.visibility is not None:
            raise ValueError("give either --delta or a visibility, not both")
        return report.keyrate_csv(config, args.delta)
    return report.dump_json(report.certify_report(config))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = run(args)
    except NumericalError as exc:
        print(f"homcert: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"homcert: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
