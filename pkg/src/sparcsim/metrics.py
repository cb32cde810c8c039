"""Distribution statistics and the per-run success verdict.

Covers the statistics the experiment reports are built from: Gini
coefficient, box-plot quartiles with the 1.5*IQR whisker rule, the
interquartile delta (mean of the top quartile minus mean of the bottom
quartile), the minimal fraction of richest stakers covering 10% of tokens,
and geometric-bin histograms for log-x line charts.

Conventions pinned here because they vary between tools:
  * quartiles use linear interpolation between closest ranks
    (numpy's default "linear" percentile method);
  * quartile membership for the IQ delta uses ceil(n/4) stakers per side;
  * the top-share metric is the smallest count of richest stakers whose
    cumulative holdings reach the share, divided by n.
"""

from dataclasses import dataclass
from math import ceil

import numpy as np

from .errors import DegenerateInput, NonPositiveStake, TooFewStakers


def gini(stakes) -> float:
    """Gini coefficient via the sorted formula; scale-invariant, in [0, 1]."""
    x = np.sort(np.asarray(stakes, dtype=float))
    n = x.size
    total = x.sum()
    if n == 0 or total <= 0:
        raise DegenerateInput("gini needs a non-empty population with positive total")
    ranks = np.arange(1, n + 1)
    return float(2.0 * (ranks * x).sum() / (n * total) - (n + 1) / n)


def iq_delta(stakes) -> float:
    """Mean of the top ceil(n/4) stakes minus mean of the bottom ceil(n/4)."""
    x = np.sort(np.asarray(stakes, dtype=float))
    n = x.size
    if n < 4:
        raise TooFewStakers(f"iq_delta needs at least 4 stakers, got {n}")
    q = ceil(n / 4)
    return float(x[-q:].mean() - x[:q].mean())


def top_share_fraction(stakes, share: float = 0.10) -> float:
    """Smallest fraction of the population (richest first) covering `share`
    of all tokens."""
    x = np.sort(np.asarray(stakes, dtype=float))[::-1]
    total = x.sum()
    if x.size == 0 or total <= 0 or not 0 < share <= 1:
        raise DegenerateInput("top_share_fraction needs positive total and 0 < share <= 1")
    covered = np.cumsum(x)
    count = int(np.searchsorted(covered, share * total - 1e-12 * total) + 1)
    return count / x.size


def log_histogram(stakes, bins: int = 40):
    """Counts over geometric bin edges spanning [min, max].

    Returns (edges, counts) with len(edges) == len(counts) + 1 and counts
    summing to the population size. Suits log-x line charts.
    """
    x = np.asarray(stakes, dtype=float)
    if x.size == 0 or (x <= 0).any():
        raise NonPositiveStake("log histogram needs strictly positive stakes")
    if bins < 1:
        raise DegenerateInput("bins must be >= 1")
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        # all mass in one spot: a single degenerate bin
        return np.array([lo, hi]), np.array([x.size])
    edges = np.geomspace(lo, hi, bins + 1)
    edges[0], edges[-1] = lo, hi  # guard round-off at the extremes
    counts, _ = np.histogram(x, bins=edges)
    return edges, counts


@dataclass
class DistributionStats:
    """Snapshot statistics for one stake distribution."""

    n: int
    total: float
    gini: float
    mean: float
    median: float
    q1: float
    q3: float
    iqr: float
    whisker_low: float
    whisker_high: float
    outlier_count: int
    lower_quartile_avg: float
    upper_quartile_avg: float
    iq_delta: float
    top_share_fraction: float
    max_stake: float
    histogram: list  # [(bin_lo, bin_hi, count), ...]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "total": self.total,
            "gini": self.gini,
            "mean": self.mean,
            "median": self.median,
            "q1": self.q1,
            "q3": self.q3,
            "iqr": self.iqr,
            "whisker_low": self.whisker_low,
            "whisker_high": self.whisker_high,
            "outlier_count": self.outlier_count,
            "lower_quartile_avg": self.lower_quartile_avg,
            "upper_quartile_avg": self.upper_quartile_avg,
            "iq_delta": self.iq_delta,
            "top_share_fraction": self.top_share_fraction,
            "max_stake": self.max_stake,
            "histogram": self.histogram,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DistributionStats":
        return cls(**{**d, "histogram": [tuple(row) for row in d["histogram"]]})


def box_stats(stakes):
    """(q1, median, q3, whisker_low, whisker_high, outlier_count).

    Whiskers extend to the smallest and largest data points within 1.5*IQR
    of the box; points beyond count as outliers.
    """
    x = np.sort(np.asarray(stakes, dtype=float))
    if x.size == 0:
        raise DegenerateInput("box stats need a non-empty population")
    q1, med, q3 = (float(v) for v in np.percentile(x, [25, 50, 75], method="linear"))
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = x[(x >= lo_fence) & (x <= hi_fence)]
    w_lo = float(inside[0]) if inside.size else q1
    w_hi = float(inside[-1]) if inside.size else q3
    outliers = int(((x < lo_fence) | (x > hi_fence)).sum())
    return q1, med, q3, w_lo, w_hi, outliers


def distribution_stats(stakes, bins: int = 40, share: float = 0.10) -> DistributionStats:
    """All snapshot statistics in one bundle."""
    x = np.sort(np.asarray(stakes, dtype=float))
    n = x.size
    q1, med, q3, w_lo, w_hi, outliers = box_stats(x)
    q = ceil(n / 4)
    lower_avg = float(x[:q].mean())
    upper_avg = float(x[-q:].mean())
    edges, counts = log_histogram(x, bins)
    hist = [
        (float(edges[i]), float(edges[i + 1]), int(counts[i]))
        for i in range(len(counts))
    ]
    return DistributionStats(
        n=n,
        total=float(x.sum()),
        gini=gini(x),
        mean=float(x.mean()),
        median=med,
        q1=q1,
        q3=q3,
        iqr=q3 - q1,
        whisker_low=w_lo,
        whisker_high=w_hi,
        outlier_count=outliers,
        lower_quartile_avg=lower_avg,
        upper_quartile_avg=upper_avg,
        iq_delta=upper_avg - lower_avg,
        top_share_fraction=top_share_fraction(x, share),
        max_stake=float(x[-1]),
        histogram=hist,
    )


@dataclass
class Verdict:
    """Whether one run achieved a significantly more even distribution."""

    success: bool
    gini_drop: float
    iq_delta_shrunk: bool
    rationale: str


def judge(initial: DistributionStats, final: DistributionStats,
          benchmark_final: DistributionStats, delta: float = 0.05) -> Verdict:
    """Success verdict for one run against the pro-rata benchmark.

    Success requires all of:
      * Gini dropped by at least `delta`,
      * the interquartile delta shrank,
      * final Gini beats the benchmark's final Gini.
    """
    drop = initial.gini - final.gini
    shrunk = final.iq_delta < initial.iq_delta
    beats = final.gini < benchmark_final.gini
    success = drop >= delta and shrunk and beats
    parts = [
        f"gini drop {drop:.6f} {'>=' if drop >= delta else '<'} delta {delta}",
        f"iq_delta {'shrank' if shrunk else 'did not shrink'} "
        f"({initial.iq_delta:.4f} -> {final.iq_delta:.4f})",
        f"final gini {final.gini:.6f} "
        f"{'beats' if beats else 'does not beat'} benchmark {benchmark_final.gini:.6f}",
    ]
    return Verdict(success, drop, shrunk, "; ".join(parts))
