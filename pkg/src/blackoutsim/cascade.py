"""Fast dynamics: random initiating outages and the outage/redispatch loop.

A cascade runs at one (frozen) demand snapshot: dispatch, find lines at
their limit, fail each with probability p1, redispatch, repeat until no new
failures. The event is a blackout when shed/demand exceeds 1e-5.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dispatch import FLOW_TOL_REL, DispatchSolver
from .grid import Grid

BLACKOUT_SHED_FRACTION = 1e-5


@dataclass
class CascadeOutcome:
    load_shed: float
    total_demand: float
    is_blackout: bool
    failed_lines: set[int] = field(default_factory=set)
    overloaded_lines: set[int] = field(default_factory=set)
    redispatch_count: int = 0
    fractional_overloads: np.ndarray | None = None   # |F|/F_max, 0 on down lines


def classify_blackout(load_shed: float, total_demand: float) -> bool:
    """Exact threshold test: shed strictly above 1e-5 of demand."""
    if total_demand <= 0.0:
        return False
    return load_shed / total_demand > BLACKOUT_SHED_FRACTION


def apply_initiating_outages(grid: Grid, p0_step: float, rng) -> set[int]:
    """Trial every up line with failure probability p0_step; mark failures
    down and return their ids."""
    if not 0.0 <= p0_step <= 1.0:
        raise ValueError("p0_step must be a probability")
    draws = rng.random(grid.n_lines)
    failed = np.flatnonzero(grid.up & (draws < p0_step))
    if len(failed):
        grid.set_lines_down(failed)
    return set(int(l) for l in failed)


def overloaded_lines(grid: Grid, flows: np.ndarray) -> np.ndarray:
    """Up lines whose dispatched flow sits at the limit (within solver
    epsilon: LP optima land exactly on binding constraints)."""
    at_limit = np.abs(flows) >= grid.flow_limit * (1.0 - FLOW_TOL_REL)
    return np.flatnonzero(grid.up & at_limit)


def run_cascade(grid: Grid, demand, p1: float, rng,
                solver: DispatchSolver | None = None,
                gen_limit=None) -> CascadeOutcome:
    """Run the redispatch loop to quiescence; initiating outages must
    already be applied. Mutates line statuses and leaves grid.flow at the
    final dispatch."""
    if not 0.0 <= p1 <= 1.0:
        raise ValueError("p1 must be a probability")
    if solver is None:
        solver = DispatchSolver(grid)
    demand = np.asarray(demand, dtype=float)
    total_demand = float(demand.sum())

    failed: set[int] = set()
    overloaded: set[int] = set()
    redispatches = 0
    while True:
        result = solver.solve(demand, gen_limit=gen_limit)
        redispatches += 1
        over = overloaded_lines(grid, result.flows)
        overloaded.update(int(l) for l in over)
        if len(over) == 0 or p1 == 0.0:
            break
        trials = rng.random(len(over))          # over is sorted by line id
        new_failed = over[trials < p1]
        if len(new_failed) == 0:
            break
        grid.set_lines_down(new_failed)
        failed.update(int(l) for l in new_failed)

    grid.flow[:] = result.flows
    load_shed = float(result.shed.sum())
    frac = np.zeros(grid.n_lines)
    up = grid.up
    frac[up] = np.abs(result.flows[up]) / grid.flow_limit[up]
    return CascadeOutcome(
        load_shed=load_shed,
        total_demand=total_demand,
        is_blackout=classify_blackout(load_shed, total_demand),
        failed_lines=failed,
        overloaded_lines=overloaded,
        redispatch_count=redispatches,
        fractional_overloads=frac,
    )
