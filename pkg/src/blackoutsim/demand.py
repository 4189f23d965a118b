"""Demand trajectory pieces: the 5-minute intraday profile, the matching
generation-limit curve, and random power bursts.

A burst multiplies one node's scheduled demand by (1 + b|r|) with r a
standard Gaussian truncated at 5, so bursts are positive and bounded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

STEPS_PER_DAY = 288
MINUTES_PER_STEP = 1440 // STEPS_PER_DAY
BURST_TRUNCATION = 5.0

BURST_APPLIED = "applied"
BURST_POSTPONED = "postponed"
BURST_RECOVERED = "recovered"


class ProfileError(ValueError):
    """Invalid intraday profile data."""


@dataclass
class IntradayProfile:
    """Per-step demand multipliers, normalized to daily mean 1."""
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1 or len(self.samples) != STEPS_PER_DAY:
            raise ProfileError(f"profile needs {STEPS_PER_DAY} samples, "
                               f"got {self.samples.shape}")
        if np.any(self.samples <= 0):
            raise ProfileError("profile samples must be > 0")
        if abs(self.samples.mean() - 1.0) > 1e-9:
            raise ProfileError("profile mean must be 1 "
                               f"(got {self.samples.mean()!r})")

    @property
    def peak_value(self) -> float:
        return float(self.samples.max())

    @property
    def peak_step(self) -> int:
        return int(np.argmax(self.samples))

    def local_maxima(self) -> list[int]:
        s = self.samples
        left = np.roll(s, 1)
        right = np.roll(s, -1)
        return [int(i) for i in np.flatnonzero((s > left) & (s > right))]


def default_profile(morning_hour: float = 10.0, evening_hour: float = 20.0,
                    morning_amplitude: float = 0.22,
                    evening_amplitude: float = 0.35,
                    morning_width_hours: float = 2.2,
                    evening_width_hours: float = 2.0) -> IntradayProfile:
    """Two-peak daily curve: Gaussian bumps on a flat base, the evening
    peak higher than the morning one, renormalized to mean 1."""
    hours = np.arange(STEPS_PER_DAY) * 24.0 / STEPS_PER_DAY

    def bump(center, width):
        dist = np.abs(hours - center)
        dist = np.minimum(dist, 24.0 - dist)        # wrap around midnight
        return np.exp(-0.5 * (dist / width) ** 2)

    raw = (1.0 + morning_amplitude * bump(morning_hour, morning_width_hours)
           + evening_amplitude * bump(evening_hour, evening_width_hours))
    return IntradayProfile(raw / raw.mean())


def flat_profile() -> IntradayProfile:
    return IntradayProfile(np.ones(STEPS_PER_DAY))


def load_profile(source) -> IntradayProfile:
    """Profile override file: 288 lines, one multiplier each, '#' comments.
    Values are renormalized to mean 1."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source) as fh:
            text = fh.read()
    values = []
    for k, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise ProfileError(f"line {k}: not a number: {line!r}") from None
    arr = np.asarray(values, dtype=float)
    if len(arr) != STEPS_PER_DAY:
        raise ProfileError(f"profile file needs {STEPS_PER_DAY} values, "
                           f"got {len(arr)}")
    if np.any(arr <= 0):
        raise ProfileError("profile values must be > 0")
    return IntradayProfile(arr / arr.mean())


def profile_value(profile: IntradayProfile, step: int) -> float:
    if not 0 <= step < STEPS_PER_DAY:
        raise IndexError(f"step {step} outside 0..{STEPS_PER_DAY - 1}")
    return float(profile.samples[step])


def nodal_demand(base_load, step: int, profile: IntradayProfile,
                 day_factor: float = 1.0):
    """Scheduled demand P_i0(t) = base * profile(step) * day factor.
    Works element-wise on arrays of base loads."""
    return base_load * (profile_value(profile, step) * day_factor)


def generation_limit(step: int, profile: IntradayProfile,
                     headroom: float) -> float:
    """Capacity multiplier at one step: committed generation tracks the
    demand profile with fractional headroom above it."""
    if headroom < 0:
        raise ValueError("headroom must be >= 0")
    return profile_value(profile, step) * (1.0 + headroom)


@dataclass
class BurstEvent:
    node: int
    step: int                      # intraday step where the burst arose
    rel_amplitude: float           # b * |r|, may be 0 when b = 0
    status: str = BURST_APPLIED
    power_mw: float = 0.0          # burst power at emission time


def sample_bursts(grid, step: int, p3: float, b: float, rng) -> list[BurstEvent]:
    """Each node trials a burst with probability p3; successes draw
    rel_amplitude = b*min(|r|, 5) with r standard normal."""
    if not 0.0 <= p3 <= 1.0:
        raise ValueError("p3 must be a probability")
    if b < 0:
        raise ValueError("b must be >= 0")
    hits = np.flatnonzero(rng.random(grid.n_nodes) < p3)
    if len(hits) == 0:
        return []
    r = np.abs(rng.standard_normal(len(hits)))
    rel = b * np.minimum(r, BURST_TRUNCATION)
    return [BurstEvent(int(node), step, float(a)) for node, a in zip(hits, rel)]
