"""Command line front end: single runs, batches and sweeps with CSV and figure output."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from ..model import MATERIALIZE_LIMIT_BITS, ParamError
from .experiment import RunRecord, fit_slope, make_params, run_batch, write_csv, write_fits
from .protocols import PROTOCOLS
from .scenarios import SCENARIOS


def _parse_sweep(text: str) -> tuple[str, list[int]]:
    axis, sep, values = text.partition("=")
    if not sep or axis not in ("n", "L"):
        raise argparse.ArgumentTypeError("expected n=v1,v2,... or L=v1,v2,...")
    try:
        vals = [int(x) for x in values.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError("sweep values must be integers") from None
    if len(set(vals)) < 3:
        raise argparse.ArgumentTypeError("a sweep needs at least 3 distinct values")
    return axis, vals


def _protocols(text: str) -> list[str]:
    names = [x for x in text.split(",") if x]
    for name in names:
        if name not in PROTOCOLS:
            raise argparse.ArgumentTypeError(f"unknown protocol {name!r}")
    return names


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="darelab", description="Simulate DARE-family consensus protocols and report costs."
    )
    ap.add_argument("--protocol", type=_protocols, default=["dare"],
                    help="one or more of %s, comma separated" % ", ".join(PROTOCOLS))
    ap.add_argument("--scenario", choices=SCENARIOS, default="good-case")
    ap.add_argument("--n", type=int, default=4, help="number of processes (must be 3t+1)")
    ap.add_argument("--L", type=int, default=1024,
                    help="value length in bits (per-proposal length for vector)")
    ap.add_argument("--kappa", type=int, default=256)
    ap.add_argument("--proof-kappa", type=int, default=2048)
    ap.add_argument("--delta", type=int, default=10)
    ap.add_argument("--gst", type=int, default=0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--reps", type=int, default=1, help="seeds seed .. seed+reps-1")
    ap.add_argument("--sweep", type=_parse_sweep, default=None, metavar="AXIS=V1,V2,...")
    ap.add_argument("--out", type=Path, default=None, help="CSV path (default: stdout)")
    ap.add_argument("--unknown-delta", action="store_true",
                    help="run without knowing delta, doubling a guess per view")
    ap.add_argument("--delta-guess", type=int, default=1)
    ap.add_argument("--no-plot", action="store_true", help="skip figures next to --out")
    return ap


def _params(args: argparse.Namespace, protocol: str, n: int, L: int):
    kw = dict(
        kappa=args.kappa,
        proof_kappa=args.proof_kappa,
        delta=args.delta,
        gst=args.gst,
        unknown_delta_mode=args.unknown_delta,
        delta_guess=args.delta_guess if args.unknown_delta else None,
    )
    return make_params(protocol, n, L=L, **kw)


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.reps < 1:
        ap.error("--reps must be at least 1")
    seeds = range(args.seed, args.seed + args.reps)
    axis, values = args.sweep if args.sweep else ("n", [args.n])

    plan = []
    for protocol in args.protocol:
        for value in values:
            n, L = (value, args.L) if axis == "n" else (args.n, value)
            try:
                p = _params(args, protocol, n, L)
            except ParamError as exc:
                ap.error(str(exc))
            if protocol == "vector" and p.L > MATERIALIZE_LIMIT_BITS:
                ap.error("vector runs need the assembled vector to fit in memory; lower --L or --n")
            plan.append((protocol, value, p))

    records: list[RunRecord] = []
    fits = []
    for protocol in args.protocol:
        means = []
        for proto, value, p in plan:
            if proto != protocol:
                continue
            batch = run_batch(protocol, args.scenario, p, seeds)
            records.extend(batch)
            means.append(sum(r.l_term_bits for r in batch) / len(batch))
        if args.sweep:
            if min(means) <= 0:
                ap.error(f"{protocol}: no L-proportional traffic after GST, cannot fit a slope")
            fits.append(fit_slope(values, means, protocol))

    if args.out is None:
        write_csv(records, sys.stdout)
        for f in fits:
            print(f"# {f.protocol}: slope {f.slope:.3f} of log(L-term bits) vs log({axis})", file=sys.stderr)
    else:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            write_csv(records, fh)
        outputs = [args.out]
        if fits:
            fit_path = args.out.with_suffix(".fit.csv")
            with open(fit_path, "w", newline="", encoding="utf-8") as fh:
                write_fits(fits, fh)
            outputs.append(fit_path)
        if not args.no_plot:
            from .plotting import plot_bits_by_kind, plot_sweep

            if fits:
                outputs.append(plot_sweep(fits, args.out.with_suffix(".slopes.png"), axis))
            outputs.append(plot_bits_by_kind(records, args.out.with_suffix(".bits.png")))
        for f in fits:
            print(f"{f.protocol}: slope {f.slope:.3f} of log(L-term bits) vs log({axis})")
        for path in outputs:
            print(f"wrote {path}")
    failed = [r for r in records if not (r.safety_ok and r.liveness_ok)]
    if failed:
        print(f"{len(failed)} run(s) violated safety or liveness", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
