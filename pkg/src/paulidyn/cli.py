"""Command-line front end.

Subcommands:

- ``mub``      construct a complete MUB family and its unbiasedness table
- ``channel``  convert / certify a static generalized Pauli channel
- ``dynamics`` integrate a rate set and run every divisibility analyzer
- ``presets``  list the bundled rate presets

Exit codes: 0 = analysis completed (verdicts live in the report, a
non-Markovian finding is still success), 2 = usage or validation problem,
3 = parse/quadrature/numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import channel as channel_mod
from . import dynamics as dyn
from .errors import (
    EvaluationError,
    InvalidInputError,
    PaulidynError,
    ParseError,
    QuadratureError,
)
from .mub import is_prime, mub_family, unbiasedness_table
from .ratefn import PRESET_NAMES, PRESET_SUMMARIES, preset_rates, rate_set

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def _float_list(text: str, name: str) -> list:
    try:
        return [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise InvalidInputError(f"{name} must be a comma-separated float list: {exc}") from exc


def _write(path: Path, content: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(content)


def _json_text(data: dict) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def cmd_mub(args) -> int:
    d = args.d
    if not is_prime(d):
        raise InvalidInputError(f"d={d} is not prime; the complete construction needs prime d")
    family = mub_family(d)
    out = Path(args.out)
    _write(out / f"mub_d{d}.json", _json_text(family.to_json_dict()))
    rows = unbiasedness_table(family)
    lines = ["alpha,beta,k,l,overlap_sq"]
    for (a, b, k, l, val) in rows:
        lines.append(f"{a},{b},{k},{l},{format(val, '.17g')}")
    _write(out / f"mub_d{d}_overlaps.csv", "\n".join(lines) + "\n")
    worst = max(abs(val - 1.0 / d) for (_, _, _, _, val) in rows)
    print(f"d={d}: {family.n_bases} bases, {len(rows)} cross-overlap rows, "
          f"max |overlap^2 - 1/d| = {worst:.3e}")
    print(f"wrote {out / f'mub_d{d}.json'} and {out / f'mub_d{d}_overlaps.csv'}")
    return EXIT_OK


def cmd_channel(args) -> int:
    d = args.d
    family = mub_family(d)
    if (args.lambdas is None) == (args.probs is None):
        raise InvalidInputError("provide exactly one of --lambdas or --probs")
    if args.lambdas is not None:
        lam = _float_list(args.lambdas, "--lambdas")
        ch = channel_mod.channel_from_eigenvalues(family, lam)
    else:
        probs = _float_list(args.probs, "--probs")
        ch = channel_mod.channel_from_probabilities(family, probs)
    check = channel_mod.is_cp_fujiwara(ch)
    choi_min = channel_mod.choi_matrix(ch).min_eigenvalue()
    if args.format == "json":
        payload = ch.to_json_dict()
        payload["cp_margin"] = check.margin
        payload["choi_min_eigenvalue"] = choi_min
        print(_json_text(payload), end="")
    else:
        print(f"dim: {d}")
        print("probabilities:", " ".join(format(x, ".17g") for x in ch.probabilities))
        print("eigenvalues:  ", " ".join(format(x, ".17g") for x in ch.eigenvalues))
        print(f"cp: {str(check.is_cp).lower()} "
              f"(margin {check.margin:.17g}; lower {check.lower_margin:.17g}, "
              f"upper {check.upper_margin:.17g})")
        print(f"choi min eigenvalue: {choi_min:.17g}")
    if args.out is not None:
        out = Path(args.out)
        _write(out / f"channel_d{d}.json", _json_text(ch.to_json_dict()))
        print(f"wrote {out / f'channel_d{d}.json'}")
    return EXIT_OK


def _resolve_rates(args):
    if args.preset is not None:
        constants = None
        if args.c is not None:
            constants = _float_list(args.c, "--c")
        return preset_rates(args.preset, d=args.d, constants=constants)
    if not args.gamma:
        raise InvalidInputError("provide --preset or at least one --gamma expression")
    if args.d is None:
        raise InvalidInputError("--d is required with explicit --gamma rates")
    return rate_set(args.d, args.gamma)


def cmd_dynamics(args) -> int:
    rates = _resolve_rates(args)
    d = rates.dim
    if not is_prime(d):
        raise InvalidInputError(f"d={d} is not prime; dynamics needs a complete MUB family")
    family = mub_family(d)
    traj, report = dyn.analyze(
        rates, family, t_max=args.t_max, steps=args.steps, seed=args.seed,
        tol=args.tol, witness_attempts=args.attempts, refine_iters=args.refine_iters,
        blp_pairs=args.blp_pairs,
    )
    out = Path(args.out)
    _write(out / "trajectory.csv", dyn.trajectory_to_csv(traj))
    _write(out / "report.json", _json_text(report.to_json_dict()))
    for v in (report.cp_map_valid, report.cp_divisible, report.p_necessary,
              report.p_sufficient, report.weyl_sufficient, report.frobenius_monotone):
        extra = ""
        if v.status == dyn.VIOLATED and v.first_violation_time is not None:
            extra = f" first at t={v.first_violation_time:.17g}"
        margin = "nan" if np.isnan(v.margin) else format(v.margin, ".6e")
        print(f"{v.criterion}: {v.status} (margin {margin}){extra}")
    for label, w in (("trace_norm_witness", report.trace_norm_witness),
                     ("blp_witness", report.blp_witness)):
        if w is None:
            print(f"{label}: none")
        else:
            print(f"{label}: found kind={w.kind} magnitude={w.magnitude:.6e} "
                  f"s={w.s:.17g} t={w.t:.17g}")
    print(f"wrote {out / 'trajectory.csv'} and {out / 'report.json'}")
    return EXIT_OK


def cmd_presets(args) -> int:
    if args.action != "list":
        raise InvalidInputError(f"unknown presets action {args.action!r}")
    for name in PRESET_NAMES:
        print(f"{name}: {PRESET_SUMMARIES[name]}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paulidyn",
        description="Generalized Pauli channels: MUB construction, static channel "
                    "certification, and divisibility analysis of rate-driven dynamics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_mub = sub.add_parser("mub", help="construct a complete MUB family (prime d)")
    p_mub.add_argument("--d", type=int, required=True, help="Hilbert space dimension (prime)")
    p_mub.add_argument("--out", default=".", help="output directory")
    p_mub.set_defaults(func=cmd_mub)

    p_ch = sub.add_parser("channel", help="convert/certify a static channel")
    p_ch.add_argument("--d", type=int, required=True)
    p_ch.add_argument("--lambdas", help="comma list lambda_1..lambda_{d+1}")
    p_ch.add_argument("--probs", help="comma list p_0..p_{d+1}")
    p_ch.add_argument("--format", choices=["text", "json"], default="text")
    p_ch.add_argument("--out", default=None, help="also write channel JSON here")
    p_ch.set_defaults(func=cmd_channel)

    p_dyn = sub.add_parser("dynamics", help="integrate rates and analyze divisibility")
    p_dyn.add_argument("--preset", choices=list(PRESET_NAMES))
    p_dyn.add_argument("--d", type=int, help="dimension (required for --gamma and most presets)")
    p_dyn.add_argument("--c", help="comma list of constants for the semigroup preset")
    p_dyn.add_argument("--gamma", action="append", default=[],
                       help="rate expression for the next alpha (repeat d+1 times)")
    p_dyn.add_argument("--t-max", type=float, default=5.0)
    p_dyn.add_argument("--steps", type=int, default=400)
    p_dyn.add_argument("--seed", type=int, default=42)
    p_dyn.add_argument("--tol", type=float, default=1e-10)
    p_dyn.add_argument("--attempts", type=int, default=2000,
                       help="random pure states for the witness search")
    p_dyn.add_argument("--refine-iters", type=int, default=50)
    p_dyn.add_argument("--blp-pairs", type=int, default=20)
    p_dyn.add_argument("--out", default=".", help="output directory")
    p_dyn.set_defaults(func=cmd_dynamics)

    p_pre = sub.add_parser("presets", help="preset utilities")
    p_pre.add_argument("action", choices=["list"])
    p_pre.set_defaults(func=cmd_presets)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help; pass both through
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ParseError, EvaluationError, QuadratureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PaulidynError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # contract: report and exit, never traceback
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
