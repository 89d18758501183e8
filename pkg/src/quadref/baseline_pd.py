"""Cartesian PD feed-forward-force baseline used for comparison runs."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PdGains:
    kp: float   # N/m
    kd: float   # N*s/m

    def __post_init__(self):
        if self.kp < 0 or self.kd < 0:
            raise ValueError("gains must be nonnegative")


def gains_from_settling(mass: float, settling_time: float) -> PdGains:
    """Critically damped second-order gains for a desired settling time.

    With unit damping ratio the settling time is 4 / omega_n, so
    kp = 16 m / T^2 and kd = 2 sqrt(m kp).
    """
    if mass <= 0 or settling_time <= 0:
        raise ValueError("mass and settling_time must be positive")
    kp = 16.0 * mass / (settling_time * settling_time)
    kd = 2.0 * math.sqrt(mass * kp)
    return PdGains(kp=kp, kd=kd)


def ff_force(goal_y: float, state: tuple[float, float], v_usr_y: float, gains: PdGains) -> float:
    """Lateral feed-forward force kp (goal - p) + kd (v_usr - v)."""
    p_y, v_y = state
    return gains.kp * (goal_y - p_y) + gains.kd * (v_usr_y - v_y)
