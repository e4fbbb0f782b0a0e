"""Command-line entry point.

Exit codes: 0 success, 1 configuration/input error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .dynamics import potential
from .equilibria import SPLAY_BUILDERS, distance_to_consensus, equilibrium_check
from .errors import ConfigError, RankDeficient, StiefelSyncError
from .graph import cycle_graph
from .harness import classify_csv, classify_table, load_scenario, monte_carlo, run_scenario
from .io import dump_json, load_state, state_to_json
from .stability import trace_m

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


def _scenario(args):
    s = load_scenario(args.scenario)
    if args.seed is not None:
        s = s.model_copy(update={"seed": args.seed})
    return s


def cmd_simulate(args) -> int:
    res = run_scenario(_scenario(args), args.out)
    print(json.dumps(res.summary, indent=2))
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    res = monte_carlo(_scenario(args), args.trials, args.out, workers=args.workers)
    out = res.to_json()
    out.pop("per_trial")
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_classify(args) -> int:
    text = classify_csv(classify_table(args.nmax))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "classify.csv").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_splay(args) -> int:
    c = SPLAY_BUILDERS[f"splay_{args.family}"](args.N)
    state = state_to_json(c, cycle_graph(args.N))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        dump_json(state, out / "state.json")
    else:
        print(json.dumps(state))
    return EXIT_OK


def cmd_check(args) -> int:
    c, g = load_state(args.state)
    if g is None:
        if c.N < 3:
            raise ConfigError("state file has no graph and too few agents for the default ring", "graph")
        g = cycle_graph(c.N)
    cert = equilibrium_check(c, g, args.tol)
    print(json.dumps({
        "residual": cert.residual,
        "gamma_asymmetry": cert.gamma_asymmetry,
        "is_equilibrium": cert.is_equilibrium,
        "V": potential(c, g),
        "trace_m": trace_m(c, g),
        "distance_to_consensus": distance_to_consensus(c),
    }, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stiefel-sync", description="Kuramoto synchronization on Stiefel manifolds")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="integrate one scenario")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--out")
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("montecarlo", help="basin estimate over Haar-random initial states")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--out")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_montecarlo)

    sp = sub.add_parser("classify", help="almost-global synchronization table for 1 <= p < n <= nmax")
    sp.add_argument("--nmax", type=int, default=8)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("splay", help="emit a splay equilibrium on the ring H_N")
    sp.add_argument("family", choices=["circle", "sphere", "st23"])
    sp.add_argument("--N", type=int, default=5)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_splay)

    sp = sub.add_parser("check", help="equilibrium certificate for a state file")
    sp.add_argument("--state", required=True)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.set_defaults(func=cmd_check)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (RankDeficient, ArithmeticError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (StiefelSyncError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
