"""Command-line entry point: one subcommand per experiment kind."""

from __future__ import annotations

import argparse
import json
import sys

from .experiments import KINDS, ExperimentSpec, run
from .scenario import ScenarioConfig
from .single_cell import GroupingPolicy

_SCHEDULES = {"jacobi": "jacobi", "gs": "gauss_seidel"}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="base RNG seed")
    common.add_argument("--scenario", type=str, default=None,
                        help="path to a scenario config JSON")
    common.add_argument("--out", type=str, default="results",
                        help="output directory for CSV/manifest")
    common.add_argument("--policy", choices=("oma", "pairs", "fixed", "exhaustive"),
                        default="pairs")
    common.add_argument("--max-group-size", type=int, default=None)
    common.add_argument("--fixed-groups", type=str, default=None,
                        help="JSON file mapping cell id to a partition (fixed policy)")
    common.add_argument("--epsilon", type=float, default=1e-4,
                        help="fixed-point convergence tolerance")
    common.add_argument("--schedule", choices=tuple(_SCHEDULES), default="jacobi")
    common.add_argument("--seeds", type=int, default=5, dest="n_seeds",
                        help="number of seeds for multi-seed experiments")

    parser = argparse.ArgumentParser(
        prog="nomaload",
        description="Multi-cell NOMA load-coupling experiments (CSV + manifest output)")
    sub = parser.add_subparsers(dest="kind", required=True)

    sp = sub.add_parser("throughput_vs_loadlimit", parents=[common],
                        help="max cell throughput vs load limit, OMA vs NOMA")
    sp.add_argument("--load-limits", type=float, nargs="+",
                    default=[0.2, 0.4, 0.6, 0.8, 1.0])

    sp = sub.add_parser("cell_loads", parents=[common],
                        help="per-cell loads at the OMA maximum throughput")

    sp = sub.add_parser("users_cdf", parents=[common],
                        help="probability of supporting all users vs users per cell")
    sp.add_argument("--demands", type=float, nargs="+", default=[1.5e6, 0.75e6, 0.15e6],
                    help="per-UE demand levels in bits/s")
    sp.add_argument("--ue-counts", type=int, nargs="+", default=[10, 20, 30, 40, 50])
    sp.add_argument("--trials", type=int, default=10)

    sp = sub.add_parser("spectral_vs_edge", parents=[common],
                        help="spectral efficiency vs percentage of cell-edge users")
    sp.add_argument("--edge-percents", type=float, nargs="+",
                    default=[0.0, 3.33, 6.66, 10.0, 13.33, 16.66, 20.0])

    sp = sub.add_parser("convergence_trace", parents=[common],
                        help="sup-norm iteration deltas per demand level")
    sp.add_argument("--demands", type=float, nargs="+", default=[1.5e6, 0.75e6, 0.15e6])

    sub.add_parser("verify", parents=[common],
                   help="run the numerical property suites")
    return parser


def _spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    scenario = (ScenarioConfig.from_json(args.scenario) if args.scenario
                else ScenarioConfig())
    if args.seed is not None:
        scenario = ScenarioConfig(**{**scenario.to_dict(), "seed": args.seed})
    policy_kwargs = {"mode": args.policy}
    if args.max_group_size is not None:
        policy_kwargs["max_group_size"] = args.max_group_size
    elif args.policy == "oma":
        policy_kwargs["max_group_size"] = 1
    if args.policy == "fixed":
        if args.fixed_groups is None:
            raise SystemExit("--policy fixed needs --fixed-groups <json>")
        with open(args.fixed_groups) as fh:
            raw = json.load(fh)
        policy_kwargs["fixed_groups"] = {int(c): [tuple(g) for g in gs]
                                         for c, gs in raw.items()}
    spec_kwargs = dict(
        kind=args.kind,
        scenario=scenario,
        policy=GroupingPolicy(**policy_kwargs),
        out_dir=args.out,
        epsilon=args.epsilon,
        schedule=_SCHEDULES[args.schedule],
        n_seeds=args.n_seeds,
    )
    if hasattr(args, "load_limits"):
        spec_kwargs["load_limits"] = tuple(args.load_limits)
    if hasattr(args, "demands"):
        spec_kwargs["demands_bps"] = tuple(args.demands)
    if hasattr(args, "ue_counts"):
        spec_kwargs["ue_counts"] = tuple(args.ue_counts)
    if hasattr(args, "trials"):
        spec_kwargs["trials"] = args.trials
    if hasattr(args, "edge_percents"):
        spec_kwargs["edge_percents"] = tuple(args.edge_percents)
    return ExperimentSpec(**spec_kwargs)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = _spec_from_args(args)
    manifest = run(spec)
    for name in sorted(manifest["files"]):
        print(f"wrote {spec.out_dir}/{name}")
    if spec.kind == "verify" and not manifest.get("ok", False):
        print("verification FAILED", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
