"""Slow dynamics: secular demand growth, day-to-day variability, and the
engineering response (line repairs-with-upgrade after blackouts, generation
upgrades when the margin erodes)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, GridError


@dataclass
class EvolutionParams:
    lambda_bar: float = 1.00058      # daily demand growth factor
    mu: float = 1.07                 # line limit upgrade factor
    margin_threshold: float = 0.2    # C_M at which generation is upgraded
    margin_target: float = 0.4       # C_M restored by an upgrade
    daily_variability: float = 0.05  # half-width of the day factor

    def validate(self):
        if self.lambda_bar < 1.0:
            raise ValueError("lambda_bar must be >= 1")
        if self.mu <= 1.0:
            raise ValueError("mu must be > 1")
        if not 0.0 < self.margin_threshold < self.margin_target:
            raise ValueError("need 0 < margin_threshold < margin_target")
        if not 0.0 <= self.daily_variability < 1.0:
            raise ValueError("daily_variability must be in [0, 1)")


def advance_day(demand_base, params: EvolutionParams, rng):
    """Grow all base loads by lambda_bar and draw the day's common demand
    factor, uniform in [1 - gamma, 1 + gamma]."""
    if np.any(np.asarray(demand_base) < 0):
        raise ValueError("demand_base entries must be >= 0")
    new_base = np.asarray(demand_base, dtype=float) * params.lambda_bar
    gamma = params.daily_variability
    day_factor = 1.0 if gamma == 0.0 else float(rng.uniform(1.0 - gamma,
                                                            1.0 + gamma))
    return new_base, day_factor


def upgrade_lines(grid: Grid, line_ids, mu: float) -> int:
    """Fix (set up) and upgrade (limit x mu) the given lines; membership in
    the set decides, not current status. Returns the count upgraded."""
    if mu <= 1.0:
        raise ValueError("mu must be > 1")
    ids = sorted(set(int(l) for l in line_ids))
    if not ids:
        return 0
    for l in ids:
        if not 0 <= l < grid.n_lines:
            raise GridError(f"unknown line id {l}")
    grid.flow_limit[ids] = grid.flow_limit[ids] * mu
    grid.set_lines_up(ids)
    return len(ids)


def generation_margin(total_capacity: float, total_demand: float) -> float:
    """C_M = (P_G - P_D) / P_D."""
    if total_demand <= 0:
        raise ValueError("total demand must be > 0")
    return (total_capacity - total_demand) / total_demand


def maybe_upgrade_generation(grid: Grid, peak_demand_today: float,
                             params: EvolutionParams) -> bool:
    """When the margin against today's peak has eroded to the threshold,
    rescale every generator so the margin returns to margin_target."""
    if peak_demand_today <= 0:
        raise ValueError("peak_demand_today must be > 0")
    p_g = grid.total_gen_capacity()
    c_m = generation_margin(p_g, peak_demand_today)
    if c_m > params.margin_threshold:
        return False
    scale = peak_demand_today * (1.0 + params.margin_target) / p_g
    grid.gen_capacity *= scale
    return True
