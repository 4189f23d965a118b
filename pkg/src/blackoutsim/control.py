"""Demand control: postpone bursts while total demand is above the control
threshold PL1, recover pending ones (each with probability p4 per step)
while it is below the recovery threshold PL2.

Thresholds are recalibrated daily as fixed fractions of the day's scheduled
peak, so they track secular growth but stay constant within a day.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .demand import BURST_APPLIED, BURST_POSTPONED, BURST_RECOVERED, \
    BurstEvent, IntradayProfile


@dataclass
class ControlPolicy:
    enabled: bool = False
    pl1: float = np.inf        # control threshold (MW)
    pl2: float = np.inf        # recovery threshold (MW), <= pl1
    p4: float = 0.00125        # per pending task per step

    def validate(self):
        if self.pl2 > self.pl1:
            raise ValueError(f"pl2 ({self.pl2}) must be <= pl1 ({self.pl1})")
        if not 0.0 <= self.p4 <= 1.0:
            raise ValueError("p4 must be a probability")


class PendingQueue:
    """Postponed bursts in arrival order; entries leave only by recovery."""

    def __init__(self):
        self.entries: list[BurstEvent] = []

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def filter_bursts(bursts, total_demand_pre_burst: float,
                  policy: ControlPolicy, queue: PendingQueue):
    """Gate one step's fresh bursts. Above pl1 all of them are postponed
    onto the queue; otherwise all are applied."""
    policy.validate()
    if not policy.enabled or total_demand_pre_burst <= policy.pl1:
        return list(bursts)
    for ev in bursts:
        ev.status = BURST_POSTPONED
        queue.entries.append(ev)
    return []


def recover_pending(queue: PendingQueue, total_demand_pre_burst: float,
                    policy: ControlPolicy, rng):
    """Below pl2 every pending burst recovers independently with
    probability p4; recovered entries leave the queue."""
    policy.validate()
    if not queue.entries or total_demand_pre_burst >= policy.pl2:
        return []
    draws = rng.random(len(queue.entries))
    recovered = []
    kept = []
    for ev, hit in zip(queue.entries, draws < policy.p4):
        if hit:
            ev.status = BURST_RECOVERED
            recovered.append(ev)
        else:
            kept.append(ev)
    queue.entries = kept
    return recovered


def calibrate_thresholds(profile: IntradayProfile, total_base_load: float,
                         day_factor: float,
                         fractions: tuple[float, float]) -> tuple[float, float]:
    """PL1/PL2 for one day as fractions (f1, f2) of the day's scheduled
    peak total demand."""
    f1, f2 = fractions
    if not 0.0 < f2 <= f1 <= 1.0:
        raise ValueError(f"need 0 < f2 <= f1 <= 1, got ({f1}, {f2})")
    peak = total_base_load * day_factor * profile.peak_value
    return f1 * peak, f2 * peak
