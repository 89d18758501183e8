"""Contact scheduling for trot, pace and stand gaits.

Legs are indexed (LF, RF, LH, RH) = (0, 1, 2, 3) everywhere in the
package. A leg is in stance at time t when the fractional part of
t / cycle_time + phase_offset falls below the duty factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

LEG_NAMES = ("lf", "rf", "lh", "rh")

TROT_OFFSETS = (0.0, 0.5, 0.5, 0.0)
PACE_OFFSETS = (0.0, 0.5, 0.0, 0.5)
STAND_OFFSETS = (0.0, 0.0, 0.0, 0.0)


class GaitKind(Enum):
    TROT = "trot"
    PACE = "pace"
    STAND = "stand"


@dataclass(frozen=True)
class GaitSpec:
    gait_kind: GaitKind
    cycle_time: float
    duty_factor: float
    phase_offsets: tuple[float, float, float, float]

    def __post_init__(self):
        if self.cycle_time <= 0:
            raise ValueError("cycle_time must be positive")
        if not 0 < self.duty_factor <= 1:
            raise ValueError("duty_factor must lie in (0, 1]")
        off = tuple(float(o) for o in self.phase_offsets)
        if len(off) != 4 or any(not 0 <= o < 1 for o in off):
            raise ValueError("phase_offsets must be four fractions in [0, 1)")
        object.__setattr__(self, "phase_offsets", off)
        lf, rf, lh, rh = off
        if self.gait_kind is GaitKind.TROT:
            if lf != rh or rf != lh or abs((rf - lf) % 1.0 - 0.5) > 1e-12:
                raise ValueError("trot requires diagonal pairs offset by 0.5")
        elif self.gait_kind is GaitKind.PACE:
            if lf != lh or rf != rh or abs((rf - lf) % 1.0 - 0.5) > 1e-12:
                raise ValueError("pace requires lateral pairs offset by 0.5")

    @property
    def stance_duration(self) -> float:
        return self.duty_factor * self.cycle_time

    @classmethod
    def trot(cls, cycle_time: float = 1.0, duty_factor: float = 0.65) -> GaitSpec:
        return cls(GaitKind.TROT, cycle_time, duty_factor, TROT_OFFSETS)

    @classmethod
    def pace(cls, cycle_time: float = 1.0, duty_factor: float = 0.65) -> GaitSpec:
        return cls(GaitKind.PACE, cycle_time, duty_factor, PACE_OFFSETS)

    @classmethod
    def stand(cls, cycle_time: float = 1.0) -> GaitSpec:
        return cls(GaitKind.STAND, cycle_time, 1.0, STAND_OFFSETS)


@dataclass
class GaitStatusSeq:
    """Per-leg, per-node binary contact states over a planning horizon."""

    delta: np.ndarray      # 4 x n_nodes, entries in {0, 1}
    t0: float
    sample_time: float

    def column(self, k: int) -> np.ndarray:
        return self.delta[:, k]

    @property
    def n_nodes(self) -> int:
        return self.delta.shape[1]


def schedule(spec: GaitSpec, t0: float, n_nodes: int, sample_time: float) -> GaitStatusSeq:
    """Contact schedule over n_nodes samples starting at time t0."""
    if n_nodes < 1:
        raise ValueError("n_nodes must be at least 1")
    if sample_time <= 0:
        raise ValueError("sample_time must be positive")
    times = t0 + sample_time * np.arange(n_nodes)
    phase = times[None, :] / spec.cycle_time + np.asarray(spec.phase_offsets)[:, None]
    phase = phase - np.floor(phase)
    delta = (phase < spec.duty_factor).astype(np.int8)
    return GaitStatusSeq(delta=delta, t0=float(t0), sample_time=float(sample_time))


def contact_set(delta_k: np.ndarray) -> tuple[int, ...]:
    """Indices of the legs in contact for one schedule column."""
    col = np.asarray(delta_k).reshape(-1)
    if col.shape[0] != 4 or not np.all((col == 0) | (col == 1)):
        raise ValueError("delta column must be four binary entries")
    return tuple(int(i) for i in np.where(col == 1)[0])
