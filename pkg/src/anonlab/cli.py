"""Command-line surface: simulate, sweep, posterior, report.

Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
"""

import argparse
import csv
import json
import os
import sys

from .config import load_sweep_config, read_edge_file
from .errors import ConfigurationError, ResourceLimitError
from .experiments import Cell, SweepConfig, aggregate_cell, run_cell, run_sweep
from .oracle import (PERMANENT_CAP, likelihood_matrix, marginal_by_enumeration,
                     marginal_by_permanent)
from .population import MARKOV, R_STATE, TWO_STATE, ModelSpec, PriorSpec
from .report import ascii_heatmap, read_sweep_csv, render_heatmaps, write_long_csv
from .rng import substream
from .anonymize import apply, sample_permutation
from .attack import adversary_view
from .tracegen import gen_collection

DEFAULT_OUT_ENV = "ANONLAB_OUT"

TRIAL_COLUMNS = ["trial", "n", "m", "l", "alpha", "model", "attack", "verdict",
                 "matched", "n_candidates", "correct", "pe_error", "fallback",
                 "k", "ev_first_step", "ev_prior_prox", "ev_w_sep", "wall_s"]


def _default_out() -> str:
    return os.environ.get(DEFAULT_OUT_ENV, ".")


def _model_from_args(args) -> ModelSpec:
    if args.model == MARKOV:
        if not args.edges:
            raise ConfigurationError(
                "markov model requires --edges (file of 'i j' pairs)")
        return ModelSpec(MARKOV, r=args.r, edges=read_edge_file(args.edges))
    if args.model == TWO_STATE:
        return ModelSpec(TWO_STATE)
    return ModelSpec(R_STATE, r=args.r)


def _add_model_flags(parser):
    parser.add_argument("--model", required=True,
                        choices=[TWO_STATE, R_STATE, MARKOV])
    parser.add_argument("--r", type=int, default=2,
                        help="number of states (r-state / markov)")
    parser.add_argument("--edges", help="edge list file for markov models")


def cmd_simulate(args) -> int:
    spec = _model_from_args(args)
    prior = PriorSpec.uniform(spec)
    config = SweepConfig(
        spec=spec, prior=prior, n_values=(args.n,),
        betas_m=(1.0,), betas_l=(1.0,),
        trials=args.trials, seed=args.seed,
        attacks=tuple(args.attack), alpha=args.alpha)
    cell = Cell(args.n, 1.0, 1.0, m_override=args.m, l_override=args.l)
    records = run_cell(config, 0, cell, threads=args.threads)
    out_dir = args.out or _default_out()
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "trials.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRIAL_COLUMNS)
        for rec in records:
            for attack, res in rec.results.items():
                writer.writerow([
                    rec.trial, rec.n, rec.m, rec.l, f"{rec.alpha:.10g}",
                    rec.model, attack, res.verdict,
                    "" if res.matched is None else res.matched,
                    res.n_candidates, int(res.correct), int(res.pe_error),
                    int(res.fallback), rec.k, int(rec.ev_first_step),
                    int(rec.ev_prior_prox), int(rec.ev_w_sep),
                    f"{rec.wall_s:.6f}"])
    for row in aggregate_cell(config, cell, records):
        print(f"attack={row['attack']} trials={row['trials']} "
              f"accuracy={row['accuracy']:.3f} ambiguity={row['ambiguity']:.3f} "
              f"pe={row['pe']:.3f}")
    print(f"wrote {path}")
    return 0


def cmd_sweep(args) -> int:
    config, cfg_out = load_sweep_config(args.config)
    out_dir = args.out or cfg_out or _default_out()
    result = run_sweep(config, out_dir, threads=args.threads,
                       progress=lambda msg: print(msg, flush=True))
    print(f"wrote {os.path.join(out_dir, 'sweep.csv')} "
          f"({len(result.rows)} rows)")
    return 0


def cmd_posterior(args) -> int:
    if args.n > PERMANENT_CAP:
        raise ConfigurationError(f"posterior capped at n={PERMANENT_CAP}")
    spec = _model_from_args(args)
    prior = PriorSpec.uniform(spec)
    if args.n == 1:
        # only one user: the pseudonym is known with certainty
        payload = {"n": 1, "m": args.m, "l": args.l, "model": spec.kind,
                   "target": 0, "method": args.method, "marginal": [1.0],
                   "entropy_nats": 0.0, "true_pseudonym": 0}
        if args.json:
            json.dump(payload, sys.stdout, indent=2, sort_keys=True)
            print()
        else:
            print("marginal of target 0's pseudonym: [1.0]")
            print("entropy: 0.000000 nats")
        return 0
    rng = substream(args.seed, 0, 0)
    coll = gen_collection(spec, prior, args.n, args.m, args.l, rng)
    pi = sample_permutation(args.n, rng)
    view = adversary_view(apply(coll, pi), spec)
    L = likelihood_matrix(view, prior)
    if args.method == "enum":
        summary = marginal_by_enumeration(L, args.target)
    else:
        summary = marginal_by_permanent(L, args.target)
    payload = {
        "n": args.n, "m": args.m, "l": args.l, "model": spec.kind,
        "target": args.target, "method": summary.method,
        "marginal": [float(v) for v in summary.marginal],
        "entropy_nats": float(summary.entropy_nats),
        "true_pseudonym": int(pi.forward[args.target]),
    }
    if args.json:
        json.dump(payload, sys.stdout, indent=2, sort_keys=True)
        print()
    else:
        print(f"marginal of target {args.target}'s pseudonym "
              f"({summary.method}):")
        for v, p in enumerate(summary.marginal):
            print(f"  pseudonym {v}: {p:.6f}")
        print(f"entropy: {summary.entropy_nats:.6f} nats")
    return 0


def cmd_report(args) -> int:
    rows = read_sweep_csv(args.infile)
    out_dir = args.out or _default_out()
    os.makedirs(out_dir, exist_ok=True)
    long_path = os.path.join(out_dir, "report_long.csv")
    write_long_csv(rows, long_path)
    groups = {}
    for r in rows:
        groups.setdefault((r["n"], r["attack"]), []).append(r)
    for (n, attack), grp in sorted(groups.items()):
        print(f"n={n} attack={attack}")
        print(ascii_heatmap(grp))
        print()
    figures = render_heatmaps(rows, out_dir)
    print(f"wrote {long_path}")
    for path in figures:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anonlab",
        description="De-anonymization attack simulation laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one cell of Monte Carlo trials")
    _add_model_flags(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--attack", action="append",
                   choices=["threshold", "nearest", "assignment"],
                   help="repeatable; default: threshold + nearest")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run a (beta_m, beta_l) grid sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("posterior",
                       help="exact pseudonym posterior for a small instance")
    _add_model_flags(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target", type=int, default=0)
    p.add_argument("--method", choices=["enum", "permanent"], default="enum")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_posterior)

    p = sub.add_parser("report", help="render a sweep result")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "attack", None) is not None and not args.attack:
        args.attack = None
    if hasattr(args, "attack") and args.attack is None:
        args.attack = ["threshold", "nearest"]
    try:
        return args.func(args)
    except (ConfigurationError, ResourceLimitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
