"""Structured result records, chart datasets, and rendered figures.

The contract-bearing outputs are the data files: one JSON record per run,
a sweep summary JSON, and delimited chart tables (CSV) from which every
experiment figure can be rebuilt. Each chart row carries the design point,
run index, and seed it came from. Figure rendering (SVG via matplotlib) is
a convenience layer over the same datasets.

All JSON is written canonically (sorted keys, no whitespace), so reruns
with the same seed produce byte-identical files.
"""

import csv
import json
import os
from statistics import fmean, pstdev

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .errors import MissingBundle  # noqa: E402
from .metrics import DistributionStats, Verdict, distribution_stats, judge  # noqa: E402

RECORD_SCHEMA_VERSION = 1
SUMMARY_FILE = "sweep_summary.json"

# A design point's verdicts match its declared expectation when at least
# this fraction of runs agree.
MATCH_FRACTION = 0.8


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def build_run_record(result, delta: float,
                     benchmark_final: DistributionStats = None) -> dict:
    """Stats + verdict + snapshots for one run.

    When no benchmark final is supplied, the initial snapshot stands in:
    pro-rata growth is exactly proportional, so its final distribution has
    the same scale-free statistics as the initial one.
    """
    initial = distribution_stats(result.initial_stakes)
    final = distribution_stats(result.final_stakes)
    bench = benchmark_final if benchmark_final is not None else initial
    verdict = judge(initial, final, bench, delta)
    return {
        "schema_version": RECORD_SCHEMA_VERSION,
        "design_point": result.design_point_id,
        "run_index": result.run_index,
        "seed": result.seed,
        "population_seed": result.population_seed,
        "slot_count": result.slot_count,
        "r_total": result.r_total,
        "success_delta": delta,
        "initial": initial.to_dict(),
        "final": final.to_dict(),
        "verdict": {
            "success": verdict.success,
            "gini_drop": verdict.gini_drop,
            "iq_delta_shrunk": verdict.iq_delta_shrunk,
            "rationale": verdict.rationale,
        },
        "staker_ids": [int(i) for i in result.staker_ids],
        "initial_stakes": [float(s) for s in result.initial_stakes],
        "final_stakes": [float(s) for s in result.final_stakes],
    }


def build_sweep_records(results, delta: float) -> list:
    """Records for a full sweep, judging each run against the pro-rata
    benchmark run (design point 0) with the same run index when present."""
    bench_final = {}
    for r in results:
        if r.design_point_id == 0:
            bench_final[r.run_index] = distribution_stats(r.final_stakes)
    return [
        build_run_record(r, delta, bench_final.get(r.run_index))
        for r in results
    ]


def run_record_filename(dp_id: int, run_index: int) -> str:
    return f"run_{dp_id}_{run_index}.json"


def write_run_record(record: dict, out_dir) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(
        out_dir, run_record_filename(record["design_point"], record["run_index"])
    )
    with open(path, "w") as fh:
        fh.write(canonical_json(record))
    return path


def build_sweep_summary(records, config_doc: dict, expectations: dict) -> dict:
    """Per-design-point aggregates plus the expectation-match verdict.

    `expectations` maps design point id to the declared expected success
    (True/False) or None when no expectation is declared.
    """
    by_dp = {}
    for rec in records:
        by_dp.setdefault(rec["design_point"], []).append(rec)

    aggregates = []
    pattern_matched = True
    for dp_id in sorted(by_dp):
        recs = sorted(by_dp[dp_id], key=lambda r: r["run_index"])
        drops = [r["verdict"]["gini_drop"] for r in recs]
        successes = sum(r["verdict"]["success"] for r in recs)
        expected = expectations.get(dp_id)
        matched = None
        if expected is not None:
            agree = successes if expected else len(recs) - successes
            matched = agree >= MATCH_FRACTION * len(recs)
            pattern_matched = pattern_matched and matched
        aggregates.append({
            "design_point": dp_id,
            "runs": len(recs),
            "success_count": successes,
            "gini_drop_mean": fmean(drops),
            "gini_drop_std": pstdev(drops) if len(drops) > 1 else 0.0,
            "initial_gini_mean": fmean(r["initial"]["gini"] for r in recs),
            "final_gini_mean": fmean(r["final"]["gini"] for r in recs),
            "expected": (
                None if expected is None
                else ("success" if expected else "fail")
            ),
            "matched_expectation": matched,
            "run_seeds": [r["seed"] for r in recs],
        })
    return {
        "schema_version": RECORD_SCHEMA_VERSION,
        "config": config_doc,
        "design_points": aggregates,
        "pattern_matched": pattern_matched,
    }


def write_sweep_summary(summary: dict, out_dir) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, SUMMARY_FILE)
    with open(path, "w") as fh:
        fh.write(canonical_json(summary))
    return path


def load_bundle(bundle_dir):
    """(records, summary) from a results directory; summary may be None."""
    if not os.path.isdir(bundle_dir):
        raise MissingBundle(f"no such bundle directory: {bundle_dir}")
    records = []
    for name in sorted(os.listdir(bundle_dir)):
        if name.startswith("run_") and name.endswith(".json"):
            with open(os.path.join(bundle_dir, name)) as fh:
                records.append(json.load(fh))
    if not records:
        raise MissingBundle(f"no run records found in {bundle_dir}")
    records.sort(key=lambda r: (r["design_point"], r["run_index"]))
    summary = None
    summary_path = os.path.join(bundle_dir, SUMMARY_FILE)
    if os.path.exists(summary_path):
        with open(summary_path) as fh:
            summary = json.load(fh)
    return records, summary


# ---------------------------------------------------------------------------
# Delimited chart tables
# ---------------------------------------------------------------------------

def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_chart_tables(records, charts_dir) -> list:
    """Emit every chart dataset as CSV; returns the written paths."""
    os.makedirs(charts_dir, exist_ok=True)
    key = lambda rec: (rec["design_point"], rec["run_index"], rec["seed"])

    hist_rows, box_rows, iqd_rows = [], [], []
    gts_rows, mm_rows, scatter_rows = [], [], []
    for rec in records:
        for snap_name in ("initial", "final"):
            snap = rec[snap_name]
            for lo, hi, count in snap["histogram"]:
                hist_rows.append(key(rec) + (snap_name, lo, hi, count, snap["max_stake"]))
            box_rows.append(key(rec) + (
                snap_name, snap["q1"], snap["median"], snap["q3"],
                snap["whisker_low"], snap["whisker_high"], snap["outlier_count"],
            ))
            gts_rows.append(key(rec) + (snap_name, snap["gini"], snap["top_share_fraction"]))
            mm_rows.append(key(rec) + (snap_name, snap["mean"], snap["median"]))
            scatter_rows.append(key(rec) + (snap_name, snap["gini"]))
        iqd_rows.append(key(rec) + (rec["initial"]["iq_delta"], rec["final"]["iq_delta"]))

    base = ["design_point", "run_index", "seed"]
    written = []
    for name, header, rows in [
        ("histograms.csv", base + ["snapshot", "bin_lo", "bin_hi", "count", "max_stake"], hist_rows),
        ("box_stats.csv", base + ["snapshot", "q1", "median", "q3",
                                  "whisker_low", "whisker_high", "outlier_count"], box_rows),
        ("iq_delta.csv", base + ["initial_iq_delta", "final_iq_delta"], iqd_rows),
        ("gini_topshare.csv", base + ["snapshot", "gini", "top_share_fraction"], gts_rows),
        ("mean_median.csv", base + ["snapshot", "mean", "median"], mm_rows),
        ("gini_scatter.csv", base + ["snapshot", "gini"], scatter_rows),
    ]:
        path = os.path.join(charts_dir, name)
        _write_csv(path, header, rows)
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------

def _hist_steps(histogram):
    xs, ys = [], []
    for lo, hi, count in histogram:
        xs.extend([lo, hi])
        ys.extend([count, count])
    return xs, ys


def _line_chart(ax, rec):
    for snap_name, color in (("initial", "tab:blue"), ("final", "tab:green")):
        snap = rec[snap_name]
        xs, ys = _hist_steps(snap["histogram"])
        ax.plot(xs, ys, color=color, label=snap_name)
        ax.axvline(snap["max_stake"], color=color, linestyle="--", linewidth=0.8)
    ax.set_xscale("log")
    ax.set_xlabel("tokens held (log scale)")
    ax.set_ylabel("stakers")
    ax.legend()


def _box_chart(ax, rec):
    boxes = []
    for snap_name in ("initial", "final"):
        snap = rec[snap_name]
        boxes.append({
            "label": snap_name,
            "med": snap["median"],
            "q1": snap["q1"],
            "q3": snap["q3"],
            "whislo": snap["whisker_low"],
            "whishi": snap["whisker_high"],
            "fliers": [],
        })
    ax.bxp(boxes, showfliers=False)
    ax.set_ylabel("tokens held")


def _iq_delta_chart(ax, rec):
    init_d = rec["initial"]["iq_delta"]
    fin_d = rec["final"]["iq_delta"]
    # larger bar behind so both stay visible
    for value, color, label in sorted(
        [(init_d, "tab:blue", "initial"), (fin_d, "tab:green", "final")],
        key=lambda t: -t[0],
    ):
        ax.bar([0], [value], color=color, label=label, width=0.5)
    ax.set_xticks([])
    ax.set_ylabel("upper minus lower quartile mean")
    ax.legend()


def _run_figure(rec, path):
    fig, axes = plt.subplots(1, 3, figsize=(13, 4))
    _line_chart(axes[0], rec)
    _box_chart(axes[1], rec)
    _iq_delta_chart(axes[2], rec)
    fig.suptitle(
        f"design point {rec['design_point']}, run {rec['run_index']} "
        f"(seed {rec['seed']})"
    )
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _series_figure(recs, dp_id, path):
    runs = [r["run_index"] for r in recs]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))
    ax1b = ax1.twinx()
    for snap_name, marker in (("initial", "o"), ("final", "x")):
        ax1.plot(runs, [r[snap_name]["gini"] for r in recs],
                 marker=marker, label=f"gini {snap_name}")
        ax1b.plot(runs, [r[snap_name]["top_share_fraction"] for r in recs],
                  marker=marker, linestyle=":", label=f"top-share {snap_name}")
        ax2.plot(runs, [r[snap_name]["mean"] for r in recs],
                 marker=marker, label=f"mean {snap_name}")
        ax2.plot(runs, [r[snap_name]["median"] for r in recs],
                 marker=marker, linestyle=":", label=f"median {snap_name}")
    ax1.set_xlabel("run")
    ax1.set_ylabel("gini")
    ax1b.set_ylabel("top-share fraction")
    ax1.legend(loc="upper left", fontsize=7)
    ax2.set_xlabel("run")
    ax2.set_ylabel("tokens")
    ax2.legend(fontsize=7)
    fig.suptitle(f"design point {dp_id}: per-run statistics")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _scatter_figure(records, path):
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for snap_name, marker, color in (("initial", "o", "tab:blue"),
                                     ("final", "x", "tab:orange")):
        ax.scatter(
            [r["design_point"] for r in records],
            [r[snap_name]["gini"] for r in records],
            marker=marker, color=color, label=snap_name, alpha=0.7,
        )
    ax.set_xlabel("design point")
    ax.set_ylabel("gini")
    ax.legend()
    fig.suptitle("gini across all design points and runs")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_figures(records, fig_dir, per_run: bool = False) -> list:
    """Render SVG figures from run records; returns the written paths.

    Per design point: the line/box/bar triptych (run 0 only unless
    `per_run`) and the per-run gini/top-share and mean/median series.
    Sweep-wide: the all-points gini scatter.
    """
    os.makedirs(fig_dir, exist_ok=True)
    by_dp = {}
    for rec in records:
        by_dp.setdefault(rec["design_point"], []).append(rec)
    written = []
    for dp_id, recs in sorted(by_dp.items()):
        recs.sort(key=lambda r: r["run_index"])
        chosen = recs if per_run else recs[:1]
        for rec in chosen:
            path = os.path.join(fig_dir, f"charts_dp{dp_id}_run{rec['run_index']}.svg")
            _run_figure(rec, path)
            written.append(path)
        if len(recs) > 1:
            path = os.path.join(fig_dir, f"series_dp{dp_id}.svg")
            _series_figure(recs, dp_id, path)
            written.append(path)
    path = os.path.join(fig_dir, "gini_scatter.svg")
    _scatter_figure(records, path)
    written.append(path)
    return written
