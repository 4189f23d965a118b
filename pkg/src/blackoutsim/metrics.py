"""Run statistics: blackout frequency and size, rank functions with a
power-law tail fit, intraday and overloaded-line histograms, and the grid
stress average.

Conventions: blackout "size" is the shed fraction L_S/P_D; the rank
function sorts sizes descending against rank 1..K; tail_exponent is the
negative log-log slope fitted over the top tenth of ranks by weighted
least squares (weight = rank, the inverse variance of log order
statistics, which also removes most of the small-rank bias).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .demand import MINUTES_PER_STEP

MIN_BLACKOUTS_FOR_FIT = 20
RANK_FIT_FRACTION = 0.1
MIN_FIT_POINTS = 10


@dataclass
class RunStatistics:
    blackout_frequency: float          # events per day, post-warmup
    mean_blackout_size: float          # mean L_S/P_D over blackouts (nan if none)
    rank_points: np.ndarray            # (K, 2) array of (rank, size)
    tail_exponent: float | None
    intraday_histogram: np.ndarray     # blackout counts per time-of-day bin
    overload_histogram: dict[int, int] # blackout counts by overloaded-line count
    mean_stress: float                 # time average of per-step mean |F|/Fmax
    n_blackouts: int = 0
    days: int = 0


def step_stress(fractional_overloads, n_lines: int) -> float:
    """One step's stress: sum of per-line |F|/Fmax over the line count.
    Down lines carry no flow and contribute zero."""
    return float(np.sum(fractional_overloads)) / n_lines


def stress(step_values) -> float:
    """Time average of per-step stress samples."""
    vals = np.asarray(list(step_values), dtype=float)
    if len(vals) == 0:
        raise ValueError("stress needs at least one sample")
    return float(vals.mean())


def rank_function(sizes, fit_fraction: float = RANK_FIT_FRACTION,
                  min_fit_points: int = MIN_FIT_POINTS):
    """Sizes sorted descending, paired with ranks 1..K, plus the fitted
    tail exponent (None below MIN_BLACKOUTS_FOR_FIT samples)."""
    s = np.sort(np.asarray(list(sizes), dtype=float))[::-1]
    k = len(s)
    points = np.column_stack([np.arange(1, k + 1, dtype=float), s])
    if k < MIN_BLACKOUTS_FOR_FIT:
        return points, None
    return points, fit_tail_exponent(s, fit_fraction, min_fit_points)


def fit_tail_exponent(sorted_sizes, fit_fraction: float = RANK_FIT_FRACTION,
                      min_fit_points: int = MIN_FIT_POINTS) -> float:
    """Negative slope of log(size) vs log(rank) over the top ranks,
    weighted least squares with weight = rank."""
    s = np.asarray(sorted_sizes, dtype=float)
    k = len(s)
    n_fit = min(k, max(min_fit_points, int(math.ceil(k * fit_fraction))))
    top = s[:n_fit]
    if np.any(top <= 0):
        top = top[top > 0]
        n_fit = len(top)
        if n_fit < 3:
            return float("nan")
    rank = np.arange(1, n_fit + 1, dtype=float)
    x = np.log(rank)
    y = np.log(top)
    w = rank / rank.sum()
    xm = float(w @ x)
    ym = float(w @ y)
    slope = float(w @ ((x - xm) * (y - ym))) / float(w @ (x - xm) ** 2)
    return -slope


def blackout_records(records):
    return [r for r in records if r.is_blackout]


def blackout_frequency(records, days: int) -> float:
    """Blackouts per day over the given observation span."""
    if days < 1:
        raise ValueError("days must be >= 1")
    return sum(1 for r in records if r.is_blackout) / days


def intraday_histogram(records, bin_minutes: int = 60) -> np.ndarray:
    """Blackout counts binned by time of day of the triggering step."""
    if bin_minutes <= 0 or 1440 % bin_minutes != 0:
        raise ValueError(f"bin width {bin_minutes} must divide 1440 minutes")
    n_bins = 1440 // bin_minutes
    hist = np.zeros(n_bins, dtype=np.int64)
    for r in records:
        if r.is_blackout:
            minute = (r.step * MINUTES_PER_STEP) % 1440
            hist[minute // bin_minutes] += 1
    return hist


def overload_histogram(records) -> dict[int, int]:
    """Blackout counts keyed by the number of overloaded lines."""
    return dict(Counter(r.n_overloaded_lines for r in records if r.is_blackout))


def compute_statistics(records, days: int, stress_samples=None,
                       mean_stress: float = float("nan"),
                       bin_minutes: int = 60) -> RunStatistics:
    """Assemble RunStatistics from event records (already filtered to the
    observation window) and either a precomputed mean stress or raw
    per-step samples."""
    blk = blackout_records(records)
    sizes = [r.size for r in blk]
    points, exponent = rank_function(sizes)
    if stress_samples is not None:
        mean_stress = stress(stress_samples)
    return RunStatistics(
        blackout_frequency=blackout_frequency(records, days),
        mean_blackout_size=float(np.mean(sizes)) if sizes else float("nan"),
        rank_points=points,
        tail_exponent=exponent,
        intraday_histogram=intraday_histogram(records, bin_minutes),
        overload_histogram=overload_histogram(records),
        mean_stress=mean_stress,
        n_blackouts=len(blk),
        days=days,
    )


# ----------------------------------------------------------------------
# plot-ready tables (tab separated, one file per figure analog)
# ----------------------------------------------------------------------

def write_rank_table(stats: RunStatistics, path) -> None:
    with open(path, "w") as fh:
        fh.write("rank\tsize\n")
        for rank, size in stats.rank_points:
            fh.write(f"{int(rank)}\t{size!r}\n")


def write_intraday_table(stats: RunStatistics, path,
                         bin_minutes: int = 60) -> None:
    with open(path, "w") as fh:
        fh.write("bin_start_minute\tblackouts\n")
        for i, count in enumerate(stats.intraday_histogram):
            fh.write(f"{i * bin_minutes}\t{int(count)}\n")


def write_overload_table(stats: RunStatistics, path) -> None:
    with open(path, "w") as fh:
        fh.write("n_overloaded_lines\tblackouts\n")
        for k in sorted(stats.overload_histogram):
            fh.write(f"{k}\t{stats.overload_histogram[k]}\n")


def write_summary(stats: RunStatistics, path, extra: dict | None = None) -> None:
    """Structured key-value summary of all scalar statistics."""
    with open(path, "w") as fh:
        fh.write(f"days {stats.days}\n")
        fh.write(f"n_blackouts {stats.n_blackouts}\n")
        fh.write(f"blackout_frequency {stats.blackout_frequency!r}\n")
        fh.write(f"mean_blackout_size {stats.mean_blackout_size!r}\n")
        exp = "none" if stats.tail_exponent is None else repr(stats.tail_exponent)
        fh.write(f"tail_exponent {exp}\n")
        fh.write(f"mean_stress {stats.mean_stress!r}\n")
        for key, value in (extra or {}).items():
            fh.write(f"{key} {value}\n")
