"""Command-line front end.

Five subcommands: ``plan`` (steps and exponential count for a budget),
``sweep`` (CSV over a time/error/spins grid), ``validate`` (measured vs
bound on a random dense model), ``verify-order`` (empirical convergence
slope), and ``gen-model`` (write a random model file).  Successful runs
exit 0; failures print a single machine-readable ``error: <Type>: <detail>``
line to stderr and exit 1 (2 for argument errors, as usual for argparse).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import planner, schemes, spin_model


def _grid(text: str) -> list[float]:
    """Parse a comma-separated numeric grid; ``a:b:k`` expands to k
    geometrically spaced points from a to b."""
    if ":" in text:
        lo, hi, num = text.split(":")
        return list(np.geomspace(float(lo), float(hi), int(num)))
    return [float(tok) for tok in text.split(",") if tok]


def _add_common(p: argparse.ArgumentParser, *names: str) -> None:
    if "scheme" in names:
        p.add_argument("--scheme", required=True, action="append",
                       dest="schemes", metavar="ID",
                       help="scheme identifier, repeatable "
                            f"(known: {', '.join(schemes.SCHEME_IDS)})")
    if "time" in names:
        p.add_argument("--time", type=float, help="total evolution time T")
    if "spins" in names:
        p.add_argument("--spins", type=int, help="number of spins n")
    if "eps" in names:
        p.add_argument("--eps", type=float, help="target error budget")
    if "seed" in names:
        p.add_argument("--seed", type=int, default=0, help="RNG seed")
    if "rel-tol" in names:
        p.add_argument("--rel-tol", type=float, default=1e-6,
                       help="relative tolerance for the bound tail sums")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cfqm",
        description="Plan, sweep and validate commutator-free quasi-Magnus "
                    "propagators for time-dependent spin chains.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="steps/exponentials meeting an error budget")
    _add_common(p, "scheme", "time", "spins", "eps", "rel-tol")

    p = sub.add_parser("sweep", help="cost sweep over time, error or spins")
    p.add_argument("--axis", required=True, choices=planner.SWEEP_AXES)
    p.add_argument("--grid", required=True, type=_grid,
                   help="comma-separated values, or lo:hi:count (geometric)")
    p.add_argument("--out", required=True, help="output CSV path")
    _add_common(p, "scheme", "time", "spins", "eps", "rel-tol")

    p = sub.add_parser("validate", help="measured one-step error vs the bound")
    p.add_argument("--samples", type=int, default=25)
    p.add_argument("--out", required=True, help="output report path")
    _add_common(p, "scheme", "spins", "seed", "rel-tol")

    p = sub.add_parser("verify-order", help="empirical convergence slope")
    p.add_argument("--grid", type=_grid, default=None,
                   help="step sizes to fit over (default 0.3:0.7:5)")
    p.add_argument("--time", type=float, default=0.0, help="window start t0")
    _add_common(p, "scheme", "spins", "seed")

    p = sub.add_parser("gen-model", help="write a random Heisenberg model file")
    p.add_argument("--out", required=True, help="output model path")
    _add_common(p, "spins", "seed")

    return parser


def _require(args, *names: str) -> None:
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        flags = ", ".join("--" + n for n in missing)
        raise SystemExit(f"error: UsageError: missing required flags {flags}")


def _cmd_plan(args) -> int:
    _require(args, "time", "spins", "eps")
    mb = planner.ModelBounds(c=1.0, n=args.spins)
    for scheme_id in args.schemes:
        scheme = schemes.load_scheme(scheme_id)
        p = planner.plan(scheme, mb, args.time, args.eps, args.rel_tol)
        b = p.breakdown
        print(f"scheme={p.scheme_id} T={p.total_time:g} n={p.n} "
              f"eps={p.epsilon:g} r={p.r} h={p.h:.9g} "
              f"exponentials={p.exponentials} "
              f"suzuki_exponentials={p.suzuki_exponentials} "
              f"magnus_taylor={b.magnus_taylor:.6e} "
              f"cfqm_taylor={b.cfqm_taylor:.6e} "
              f"quadrature={b.quadrature:.6e} trotter={b.trotter:.6e}")
    return 0


def _cmd_sweep(args) -> int:
    planner.sweep(args.axis, args.grid, args.schemes, args.out,
                  total_time=args.time, epsilon=args.eps, n=args.spins,
                  rel_tol=args.rel_tol)
    print(f"wrote {args.out}")
    return 0


def _cmd_validate(args) -> int:
    _require(args, "spins")
    failed = False
    for scheme_id in args.schemes:
        scheme = schemes.load_scheme(scheme_id)
        report = planner.validate(scheme, args.seed, args.spins,
                                  args.samples, args.out,
                                  rel_tol=args.rel_tol)
        flagged = sum(1 for row in report.rows
                      if row.status not in ("ok", "violated"))
        print(f"scheme={scheme_id} samples={len(report.rows)} "
              f"flagged={flagged} max_ratio={report.max_ratio:.6g} "
              f"ok={report.ok}")
        failed = failed or not report.ok
    if failed:
        print("error: BoundViolation: measured error exceeded the bound",
              file=sys.stderr)
        return 1
    return 0


def _cmd_verify_order(args) -> int:
    _require(args, "spins")
    grid = args.grid if args.grid is not None else list(np.geomspace(0.3, 0.7, 5))
    model = spin_model.random_model(args.spins, seed=args.seed)
    failed = False
    for scheme_id in args.schemes:
        scheme = schemes.load_scheme(scheme_id)
        slope = schemes.verify_order(scheme, model, grid, t0=args.time)
        lo, hi = schemes.slope_window(scheme.s)
        ok = lo <= slope <= hi
        print(f"scheme={scheme_id} slope={slope:.4f} "
              f"window=[{lo:.2f}, {hi:.2f}] ok={ok}")
        failed = failed or not ok
    if failed:
        print("error: OrderMismatch: measured slope outside the accepted "
              "window", file=sys.stderr)
        return 1
    return 0


def _cmd_gen_model(args) -> int:
    _require(args, "spins")
    model = spin_model.random_model(args.spins, seed=args.seed)
    spin_model.save_model(model, args.out)
    print(f"wrote {args.out} (n={model.n})")
    return 0


_COMMANDS = {
    "plan": _cmd_plan,
    "sweep": _cmd_sweep,
    "validate": _cmd_validate,
    "verify-order": _cmd_verify_order,
    "gen-model": _cmd_gen_model,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except SystemExit:
        raise
    except (ValueError, KeyError, RuntimeError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
