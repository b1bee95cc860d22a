"""Command-line interface.

Verbs: ``analytic`` (one exact value), ``sweep`` (config-driven grid),
``simulate`` (sweep with Monte Carlo columns), ``optimal-k`` (best cluster
size report), and ``selftest`` (the acceptance checks).  Flags mirror
config fields and override values loaded from the config file.

Exit codes: 0 success, 1 validation or config error, 2 I/O error,
3 selftest failure.
"""

from __future__ import annotations

import argparse
import sys

from .core import GossipPolicy, NetworkSpec, Rates, validate
from .analytic import closed_clustered, closed_flat, clustered_freshness, oracle_flat
from .experiments import (
    ConfigError,
    ExperimentConfig,
    config_with_output,
    config_with_sim,
    emit_plot_data,
    report_optimal_k,
    run_experiment,
    write_csv,
)
from . import acceptance

_POLICY_NAMES = [p.value for p in GossipPolicy]


def _add_rate_flags(parser, with_alpha=True):
    parser.add_argument("--lambda-e", type=float, help="source self-refresh rate")
    parser.add_argument("--lambda-s", type=float, default=0.0, help="total source delivery rate")
    parser.add_argument("--lambda-c", type=float, default=0.0, help="total per-clusterhead rate")
    parser.add_argument("--lambda-g", type=float, default=0.0, help="total per-fresh-node gossip rate")
    if with_alpha:
        parser.add_argument(
            "--alpha", type=float, help="lambda_e / lambda_s (instead of --lambda-e)"
        )


def _rates_from_args(args) -> Rates:
    if getattr(args, "alpha", None) is not None:
        if args.lambda_e is not None:
            raise ValueError("--alpha and --lambda-e are mutually exclusive")
        if args.lambda_s <= 0:
            raise ValueError("--alpha needs --lambda-s > 0")
        lambda_e = args.alpha * args.lambda_s
    elif args.lambda_e is None:
        raise ValueError("missing --lambda-e (or --alpha)")
    else:
        lambda_e = args.lambda_e
    return Rates(lambda_e, args.lambda_s, args.lambda_c, args.lambda_g)


def _cmd_analytic(args) -> int:
    rates = _rates_from_args(args)
    clustered = args.k is not None or args.source_policy or args.cluster_policy
    if clustered:
        missing = [
            flag
            for flag, value in (
                ("--k", args.k),
                ("--source-policy", args.source_policy),
                ("--cluster-policy", args.cluster_policy),
            )
            if value is None
        ]
        if missing:
            raise ValueError(f"clustered point needs {' '.join(missing)}")
        spec = NetworkSpec.clustered(
            args.n,
            args.k,
            GossipPolicy(args.source_policy),
            GossipPolicy(args.cluster_policy),
            rates,
        )
        problems = validate(spec)
        if problems:
            raise ValueError("; ".join(problems))
        p, breakdown = clustered_freshness(spec)
        closed = closed_clustered(
            GossipPolicy(args.source_policy),
            GossipPolicy(args.cluster_policy),
            spec.shape.m,
            args.k,
            rates,
        )
        print(f"p_oracle = {p:.17g}")
        if closed is not None:
            print(f"p_analytic = {closed:.17g}")
        print(f"p_ch = {breakdown.p_ch:.17g}")
        print(f"p_node_given_ch = {breakdown.p_node_given_ch:.17g}")
    else:
        if args.policy is None:
            raise ValueError("flat point needs --policy (or pass clustered flags)")
        policy = GossipPolicy(args.policy)
        spec = NetworkSpec.flat(args.n, policy, rates)
        problems = validate(spec)
        if problems:
            raise ValueError("; ".join(problems))
        p = oracle_flat(policy, rates.lambda_s, rates.lambda_g, rates.lambda_e, args.n)
        closed = closed_flat(policy, rates.lambda_s, rates.lambda_g, rates.lambda_e, args.n)
        print(f"p_oracle = {p:.17g}")
        if closed is not None:
            print(f"p_analytic = {closed:.17g}")
    return 0


def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.from_json(args.config)
    if getattr(args, "output", None):
        config = config_with_output(config, args.output)
    return config


def _run_sweep(args, force_sim: bool) -> int:
    config = _load_config(args)
    if force_sim or args.cycles is not None or args.seed is not None:
        base = config.sim
        cycles = args.cycles if args.cycles is not None else (base.cycles if base else 100_000)
        seed = args.seed if args.seed is not None else (base.seed if base else 0)
        config = config_with_sim(config, cycles, seed)
    rows = run_experiment(config)
    if config.output:
        print(f"wrote {len(rows)} rows to {config.output}")
    else:
        write_csv(rows, "/dev/stdout")
    if args.plot_dir:
        paths = emit_plot_data(rows, out_dir=args.plot_dir)
        print(f"wrote {len(paths)} series files to {args.plot_dir}")
    return 0


def _cmd_sweep(args) -> int:
    return _run_sweep(args, force_sim=False)


def _cmd_simulate(args) -> int:
    return _run_sweep(args, force_sim=True)


def _cmd_optimal_k(args) -> int:
    config = _load_config(args)
    report = report_optimal_k(config)
    header = f"{'case':<16} {'source':<9} {'cluster':<9} {'k*':>4} {'m*':>4}  p*"
    print(header)
    print("-" * len(header))
    for e in report.entries:
        print(
            f"{e.case:<16} {e.source_policy:<9} {e.cluster_policy:<9} "
            f"{e.k_star:>4} {e.m_star:>4}  {e.p_star:.12g}"
        )
    for note in report.notes:
        print(note)
    return 0


def _cmd_selftest(args) -> int:
    names = None
    if args.only:
        names = [s.strip() for s in args.only.split(",") if s.strip()]
    results = acceptance.run_criteria(names)
    for res in results:
        print(acceptance.format_line(res))
    if args.report:
        acceptance.write_report(results, args.report)
        print(f"report written to {args.report}")
    return 0 if all(r.passed for r in results) else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gossipfresh",
        description="Long-term binary freshness of flat and clustered gossip networks.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("analytic", help="exact freshness of a single network point")
    p.add_argument("--n", type=int, required=True, help="node count (end nodes)")
    p.add_argument("--policy", choices=_POLICY_NAMES, help="flat network policy")
    p.add_argument("--k", type=int, help="cluster size (clustered point)")
    p.add_argument("--source-policy", choices=_POLICY_NAMES[:2], help="source tier policy")
    p.add_argument("--cluster-policy", choices=_POLICY_NAMES, help="cluster tier policy")
    _add_rate_flags(p)
    p.set_defaults(func=_cmd_analytic)

    for verb, func, blurb in (
        ("sweep", _cmd_sweep, "run a config-driven sweep (exact values)"),
        ("simulate", _cmd_simulate, "run a sweep with Monte Carlo columns"),
    ):
        p = sub.add_parser(verb, help=blurb)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--output", help="override the config's CSV output path")
        p.add_argument("--cycles", type=int, help="Monte Carlo cycles per grid point")
        p.add_argument("--seed", type=int, help="Monte Carlo base seed")
        p.add_argument("--plot-dir", help="also write plot series files here")
        p.set_defaults(func=func)

    p = sub.add_parser("optimal-k", help="optimal cluster size per policy pair")
    p.add_argument("--config", required=True, help="JSON clustered_sweep_k config")
    p.set_defaults(func=_cmd_optimal_k)

    p = sub.add_parser("selftest", help="run the acceptance checks")
    p.add_argument("--only", help="comma-separated criteria subset, e.g. 1,2,6")
    p.add_argument("--report", help="write a deterministic CSV report here")
    p.set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        for problem in e.problems:
            print(f"error: {problem}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
