"""Command-line surface: analyze, simulate, sweep, report."""

import argparse
import csv
import os
import sys

from .analytics import (
    SybilScenario,
    expected_reward_curve,
    nonmonotone_ranks,
    sybil_expected_reward,
    tier_placement_probability,
)
from .config import ExperimentConfig, config_to_dict, load_config
from .errors import SparcError
from .report import (
    build_run_record,
    build_sweep_records,
    build_sweep_summary,
    load_bundle,
    render_figures,
    write_chart_tables,
    write_run_record,
    write_sweep_summary,
)
from .rng import make_rng, population_seed, simulation_seed
from .simulation import generate_population, horizon_params, run_design_sweep, run_simulation

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_MISMATCH = 2


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if getattr(args, "horizon", None):
        cfg.horizon_mode = args.horizon
    if getattr(args, "delta", None) is not None:
        cfg.success_delta = args.delta
    if getattr(args, "master_seed", None) is not None:
        cfg.master_seed = args.master_seed
    if getattr(args, "runs_per_point", None) is not None:
        cfg.runs_per_point = args.runs_per_point
    if getattr(args, "out", None):
        cfg.output_dir = args.out
    return cfg


def _parse_ranks(text, pop_size):
    if text is None or text == "all":
        return list(range(1, pop_size + 1))
    ranks = sorted({int(tok) for tok in text.split(",") if tok.strip()})
    for r in ranks:
        if not 1 <= r <= pop_size:
            raise SparcError(f"rank {r} outside 1..{pop_size}")
    return ranks


def cmd_analyze(args) -> int:
    cfg = _load(args)
    dp = cfg.design_point(args.design_point)
    if dp.kind != "tiered":
        raise SparcError(
            f"analyze needs a tiered design point, {dp.label()} is {dp.kind}"
        )
    scheme = dp.scheme
    pop_size = cfg.base.population_size
    _, r_total = horizon_params(cfg.base, cfg.horizon_mode)
    ranks = _parse_ranks(args.ranks, pop_size)

    out_dir = os.path.join(cfg.output_dir, "analysis")
    os.makedirs(out_dir, exist_ok=True)

    placement_path = os.path.join(out_dir, f"placement_probabilities_dp{dp.id}.csv")
    with open(placement_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["rank", "p_selected"]
            + [f"p_tier_{j}" for j in range(1, scheme.tier_count + 1)]
        )
        for r in ranks:
            dist = tier_placement_probability(pop_size, r, scheme)
            writer.writerow([r, dist.p_selected] + list(dist.probs))

    curve = expected_reward_curve(pop_size, scheme, r_total)
    cond = expected_reward_curve(pop_size, scheme, r_total, conditional=True)
    flags = nonmonotone_ranks(curve)
    rewards_path = os.path.join(out_dir, f"expected_rewards_dp{dp.id}.csv")
    with open(rewards_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "rank", "expected_per_slot", "expected_given_selected",
            "marginal_gain_vs_next_rank", "nonmonotone_flag",
        ])
        for i in range(pop_size):
            marginal = curve[i] - curve[i + 1] if i + 1 < pop_size else 0.0
            writer.writerow([
                i + 1, curve[i], cond[i], marginal, int((i + 1) in flags),
            ])

    print(f"design point {dp.id}: committee {scheme.committee_size}, "
          f"tiers {scheme.tier_sizes}, per-member pcts {scheme.member_pcts}")
    print(f"placement table: {placement_path}")
    print(f"expected rewards: {rewards_path}")
    if flags:
        print(f"GAMING-RISK FLAG: expected reward increases with lower stake "
              f"after rank(s) {flags} — stake-shedding can pay")
    else:
        print("expected reward curve is monotone non-increasing in rank")

    if args.sybil_split:
        pop = generate_population(
            cfg.population, cfg.base, make_rng(population_seed(cfg.master_seed, 0))
        )
        entity = args.entity_stake
        if entity is None:
            entity = float(pop.stakes_array().mean())
        sybil_path = os.path.join(out_dir, f"sybil_dp{dp.id}.csv")
        with open(sybil_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["split_count", "entity_stake", "single", "split", "ratio",
                             "splitting_rational"])
            for m in range(1, args.sybil_split + 1):
                scenario = SybilScenario(pop, entity, m)
                single, split = sybil_expected_reward(scenario, scheme, r_total)
                writer.writerow([m, entity, single, split, split / single,
                                 int(split > single)])
                if split > single:
                    print(f"SYBIL FLAG: splitting into {m} instances raises expected "
                          f"reward x{split / single:.3f}")
        print(f"sybil comparison: {sybil_path}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load(args)
    dp = cfg.design_point(args.design_point)
    slot_count, r_total = horizon_params(cfg.base, cfg.horizon_mode)
    pseed = population_seed(cfg.master_seed, args.run_index)
    pop = generate_population(cfg.population, cfg.base, make_rng(pseed))
    seed = args.seed
    if seed is None:
        seed = simulation_seed(cfg.master_seed, dp.id, args.run_index)
    result = run_simulation(pop, dp, cfg.base, seed, slot_count, r_total,
                            args.run_index)
    result.population_seed = pseed
    record = build_run_record(result, cfg.success_delta)
    path = write_run_record(record, cfg.output_dir)
    v = record["verdict"]
    print(f"{dp.label()} run {args.run_index}: seed {seed}, "
          f"{slot_count} slots, r_total {r_total:.6f}")
    print(f"verdict: {'Success' if v['success'] else 'Fail'} ({v['rationale']})")
    print(f"record: {path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args)
    slot_count, r_total = horizon_params(cfg.base, cfg.horizon_mode)
    total = len(cfg.design_points) * cfg.runs_per_point
    done = [0]

    def progress(res):
        done[0] += 1
        if not args.quiet:
            print(f"\r[{done[0]}/{total}] dp{res.design_point_id} "
                  f"run {res.run_index}", end="", flush=True)

    results = run_design_sweep(
        cfg.design_points, cfg.population, cfg.base, cfg.runs_per_point,
        cfg.master_seed, slot_count, r_total, workers=args.workers,
        progress=progress,
    )
    if not args.quiet:
        print()
    records = build_sweep_records(results, cfg.success_delta)
    for rec in records:
        write_run_record(rec, cfg.output_dir)
    expectations = {dp.id: dp.expected_success for dp in cfg.design_points}
    summary = build_sweep_summary(records, config_to_dict(cfg), expectations)
    summary_path = write_sweep_summary(summary, cfg.output_dir)

    for agg in summary["design_points"]:
        expect = agg["expected"] or "-"
        match = {None: "-", True: "yes", False: "NO"}[agg["matched_expectation"]]
        print(f"dp{agg['design_point']:>2}: {agg['success_count']}/{agg['runs']} "
              f"success, gini drop {agg['gini_drop_mean']:+.6f} "
              f"(sd {agg['gini_drop_std']:.6f}), expected {expect:>7}, "
              f"matched {match}")
    print(f"summary: {summary_path}")

    declared = [a for a in summary["design_points"] if a["expected"] is not None]
    if declared and not summary["pattern_matched"]:
        print("declared verdict pattern NOT matched")
        return EXIT_MISMATCH
    return EXIT_OK


def cmd_report(args) -> int:
    records, _summary = load_bundle(args.bundle)
    out_dir = args.out or args.bundle
    charts = write_chart_tables(records, os.path.join(out_dir, "charts"))
    print(f"wrote {len(charts)} chart tables to {os.path.join(out_dir, 'charts')}")
    if args.figures:
        figures = render_figures(
            records, os.path.join(out_dir, "figures"), per_run=args.per_run_figures
        )
        print(f"rendered {len(figures)} figures to {os.path.join(out_dir, 'figures')}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparcsim",
        description="Tiered staking-reward mechanism: analytics, simulation, "
                    "sweeps, and reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, output=True):
        p.add_argument("--config", "-c", help="YAML experiment config")
        p.add_argument("--horizon", choices=["paper", "compressed"],
                       help="override horizon mode")
        p.add_argument("--master-seed", type=int, help="override master seed")
        if output:
            p.add_argument("--out", "-o", help="override output directory")

    p = sub.add_parser("analyze", help="closed-form placement and reward tables")
    common(p)
    p.add_argument("--design-point", "-d", type=int, default=9)
    p.add_argument("--ranks", help="comma-separated ranks for the placement "
                                   "table (default: all)")
    p.add_argument("--sybil-split", type=int,
                   help="also compare splitting an entity into up to M validators")
    p.add_argument("--entity-stake", type=float,
                   help="entity stake for the sybil comparison "
                        "(default: population mean)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="run one seeded simulation")
    common(p)
    p.add_argument("--design-point", "-d", type=int, required=True)
    p.add_argument("--run-index", type=int, default=0)
    p.add_argument("--seed", type=int, help="override the derived run seed")
    p.add_argument("--delta", type=float, help="override success delta")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="repeated runs over every design point")
    common(p)
    p.add_argument("--runs-per-point", type=int, help="override runs per point")
    p.add_argument("--delta", type=float, help="override success delta")
    p.add_argument("--workers", "-w", type=int, default=1,
                   help="parallel worker processes")
    p.add_argument("--quiet", "-q", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="chart tables and figures from a bundle")
    p.add_argument("--bundle", "-b", required=True,
                   help="directory holding run records")
    p.add_argument("--out", "-o", help="output directory (default: bundle)")
    p.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True,
                   help="render SVG figures alongside the CSV tables")
    p.add_argument("--per-run-figures", action="store_true",
                   help="render the chart triptych for every run, not just run 0")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SparcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
