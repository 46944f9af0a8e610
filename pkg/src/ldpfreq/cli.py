"""Command-line entry point: ``ldpfreq {simulate,variance-table,geo-sanitize,params}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ldpfreq.datasets import load_csv, parse_synth, synth_uniform
from ldpfreq.errors import InfeasibleBudgetError, InvalidParameterError, LDPError, LoadError
from ldpfreq.experiment import DEFAULT_EPS1_FRACS, ExperimentSpec, run_experiment, write_result
from ldpfreq.geo import geo_sanitize
from ldpfreq.longitudinal import L_KINDS, effective_single_report_epsilon, longitudinal_params
from ldpfreq.oracles import GRR, OUE, SUE, adp_choose, params_for
from ldpfreq.strategies import STRATEGY_NAMES
from ldpfreq.tables import LONGITUDINAL_COLUMNS, ONE_SHOT_COLUMNS, format_text, table_csv, variance_table

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_LOAD = 3
EXIT_INFEASIBLE = 4


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _names(text: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in text.split(",") if x.strip())


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ldpfreq", description="LDP frequency-estimation experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="Monte Carlo MSE sweep over an epsilon grid")
    src = sim.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", type=Path, help="headed CSV of categorical values")
    src.add_argument("--synth", help="uniform synthetic data: n,d,c1[,c2,...]")
    sim.add_argument("--strategy", type=_names, required=True,
                     help="comma-separated; one of " + ", ".join(STRATEGY_NAMES))
    sim.add_argument("--eps-grid", type=_floats, default=None,
                     help="epsilons (eps_inf for longitudinal strategies)")
    sim.add_argument("--eps1-frac", type=_floats, default=DEFAULT_EPS1_FRACS,
                     help="eps_1 / eps_inf fractions for longitudinal strategies")
    sim.add_argument("--runs", type=int, default=100)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--tau", type=int, default=1, help="collection rounds for longitudinal strategies")
    sim.add_argument("--clip", action="store_true", help="clip and renormalize estimates")
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--out", type=Path, required=True)

    vt = sub.add_parser("variance-table", help="closed-form Var* tables at n=10000")
    vt.add_argument("--out", type=Path, default=None,
                    help="CSV prefix; writes <out>.one_shot.csv and <out>.longitudinal.csv")

    geo = sub.add_parser("geo-sanitize", help="polar Laplace noise on planar coordinates")
    geo.add_argument("--l", dest="level", type=float, required=True, help="distinguishability level")
    geo.add_argument("--r", dest="radius", type=float, required=True, help="radius in meters")
    geo.add_argument("--seed", type=int, default=0)
    geo.add_argument("--in", dest="inp", type=Path, required=True)
    geo.add_argument("--out", type=Path, required=True)
    geo.add_argument("--x-col", default="x")
    geo.add_argument("--y-col", default="y")

    par = sub.add_parser("params", help="print solved protocol parameters")
    par.add_argument("--protocol", required=True,
                     help="GRR, SUE, OUE, ADP or a longitudinal kind: " + ", ".join(L_KINDS))
    par.add_argument("--eps", type=float, help="one-shot epsilon")
    par.add_argument("--eps-inf", type=float)
    par.add_argument("--eps-1", type=float)
    par.add_argument("--c", type=int, help="domain size")
    return ap


def _cmd_simulate(args) -> int:
    if args.data is not None:
        dataset = load_csv(args.data)
    else:
        n, d, sizes = parse_synth(args.synth)
        dataset = synth_uniform(n, d, sizes, args.seed)
    spec = ExperimentSpec(args.strategy, args.eps_grid, args.eps1_frac, args.runs,
                          args.seed, args.tau, args.clip)
    result = run_experiment(dataset, spec, workers=args.workers)
    paths = write_result(result, dataset, args.out)
    for row in result.summary:
        mean = "infeasible" if row["mse_mean"] is None else f"{row['mse_mean']:.6g}"
        eps1 = "" if row["eps_1"] is None else f" eps_1={row['eps_1']:.4g}"
        print(f"{row['strategy']} eps={row['epsilon']:.4g}{eps1} mse={mean}")
    print("wrote " + ", ".join(str(p) for p in paths))
    return EXIT_OK


def _cmd_variance_table(args) -> int:
    tables = variance_table()
    if args.out is None:
        sys.stdout.write(format_text(tables))
        return EXIT_OK
    one = args.out.with_name(args.out.name + ".one_shot.csv")
    lon = args.out.with_name(args.out.name + ".longitudinal.csv")
    one.write_text(table_csv(tables["one_shot"], ONE_SHOT_COLUMNS), encoding="utf-8")
    lon.write_text(table_csv(tables["longitudinal"], LONGITUDINAL_COLUMNS), encoding="utf-8")
    print(f"wrote {one}, {lon}")
    return EXIT_OK


def _cmd_geo(args) -> int:
    n = geo_sanitize(args.inp, args.out, args.level, args.radius, args.seed, args.x_col, args.y_col)
    print(f"sanitized {n} rows with epsilon={args.level / args.radius:.6g} per meter")
    return EXIT_OK


def _cmd_params(args) -> int:
    proto = args.protocol
    if proto in L_KINDS:
        if args.eps_inf is None or args.eps_1 is None:
            raise InvalidParameterError("longitudinal protocols need --eps-inf and --eps-1")
        p = longitudinal_params(proto, args.eps_inf, args.eps_1, args.c)
        out = {"protocol": proto, "eps_inf": args.eps_inf, "eps_1": args.eps_1, "c": args.c,
               "p1": p.p1, "q1": p.q1, "p2": p.p2, "q2": p.q2}
        if p.c is not None or p.unary:
            out["single_report_epsilon"] = effective_single_report_epsilon(p)
    elif proto in (GRR, SUE, OUE, "ADP"):
        if args.eps is None:
            raise InvalidParameterError("one-shot protocols need --eps")
        if args.c is None and proto in (GRR, "ADP"):
            raise InvalidParameterError(f"{proto} needs --c")
        kind = adp_choose(args.eps, args.c) if proto == "ADP" else proto
        p = params_for(kind, args.eps, args.c)
        out = {"protocol": kind, "eps": args.eps, "c": args.c, "p": p.p, "q": p.q}
    else:
        raise InvalidParameterError(f"unknown protocol {proto!r}")
    print(json.dumps(out, indent=2))
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "variance-table": _cmd_variance_table,
    "geo-sanitize": _cmd_geo,
    "params": _cmd_params,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except LoadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LOAD
    except InfeasibleBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE if args.command == "params" else EXIT_INVALID
    except (InvalidParameterError, LDPError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
