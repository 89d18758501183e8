"""Robocentric stepping: foothold targets from hip positions and CoM velocity.

Every upcoming touchdown lands under the predicted hip ground
projection plus a half-stance feedforward offset proportional to the
CoM reference velocity at the touchdown node. The hip projection
advances from the current CoM by forward-Euler integration of the
velocity reference, matching the planner discretization.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .gait import GaitSpec, GaitStatusSeq

logger = logging.getLogger(__name__)

DEFAULT_REACH_RADIUS = 0.25


@dataclass(frozen=True)
class HipLayout:
    hip_offsets: np.ndarray      # 4 x 2: X-Y hip position relative to the CoM
    stance_height: float
    reach_radius: float = DEFAULT_REACH_RADIUS

    def __post_init__(self):
        hips = np.asarray(self.hip_offsets, dtype=float).reshape(4, 2)
        lf, rf, lh, rh = hips
        sym = (
            abs(lf[1] + rf[1]) < 1e-9
            and abs(lh[1] + rh[1]) < 1e-9
            and abs(lf[0] - rf[0]) < 1e-9
            and abs(lh[0] - rh[0]) < 1e-9
            and abs(lf[0] + lh[0]) < 1e-9
        )
        if not sym:
            raise ValueError("hip offsets must be left/right and front/hind symmetric")
        if self.stance_height <= 0:
            raise ValueError("stance_height must be positive")
        if self.reach_radius <= 0:
            raise ValueError("reach_radius must be positive")
        object.__setattr__(self, "hip_offsets", hips)

    @classmethod
    def standard(cls, half_length: float = 0.24, half_width: float = 0.13,
                 stance_height: float = 0.40, reach_radius: float = DEFAULT_REACH_RADIUS) -> HipLayout:
        hips = np.array(
            [
                [half_length, half_width],
                [half_length, -half_width],
                [-half_length, half_width],
                [-half_length, -half_width],
            ]
        )
        return cls(hip_offsets=hips, stance_height=stance_height, reach_radius=reach_radius)


class FootholdSource(Enum):
    HEURISTIC = "heuristic"
    REFINED = "refined"


@dataclass
class FootholdSeq:
    """Stacked per-leg 3D footholds over the horizon (flat ground: z = 0)."""

    p_f: np.ndarray            # 12 x n_nodes
    source: FootholdSource
    clamped: bool = False

    @property
    def n_nodes(self) -> int:
        return self.p_f.shape[1]

    def foot_xy(self, k: int) -> np.ndarray:
        return self.p_f[:, k].reshape(4, 3)[:, :2]

    def max_difference(self, other: "FootholdSeq") -> float:
        return float(np.abs(self.p_f - other.p_f).max())


def plan_footholds(
    v_ref: np.ndarray,
    delta: GaitStatusSeq,
    com_xy0: np.ndarray,
    layout: HipLayout,
    gait: GaitSpec,
    source: FootholdSource = FootholdSource.HEURISTIC,
) -> FootholdSeq:
    """Foothold sequence for every leg over the schedule horizon.

    Legs already in stance at node 0 keep the current foothold (hip
    projection at the current CoM); later touchdowns get the predicted
    hip projection plus 0.5 * stance duration * velocity. Offsets
    larger than the leg reach radius are clamped and flagged.
    """
    n = delta.n_nodes
    v = np.asarray(v_ref, dtype=float).reshape(2, -1)
    if v.shape[1] < n:
        raise ValueError(f"v_ref must span the horizon ({n} nodes), got {v.shape[1]}")
    com0 = np.asarray(com_xy0, dtype=float).reshape(2)

    # Hip ground projections advance with the integrated velocity reference.
    com_path = np.empty((2, n))
    com_path[:, 0] = com0
    if n > 1:
        com_path[:, 1:] = com0[:, None] + np.cumsum(v[:, : n - 1], axis=1) * delta.sample_time

    t_stance = gait.stance_duration
    p_f = np.zeros((12, n))
    clamped = False

    for leg in range(4):
        hip = layout.hip_offsets[leg]
        stance = delta.delta[leg].astype(bool)
        segment_value = np.full((2, n), np.nan)

        k = 0
        while k < n:
            if not stance[k]:
                k += 1
                continue
            start = k
            while k < n and stance[k]:
                k += 1
            if start == 0:
                foothold = com0 + hip
            else:
                offset = 0.5 * t_stance * v[:, start]
                norm = float(np.linalg.norm(offset))
                if norm > layout.reach_radius:
                    offset = offset * (layout.reach_radius / norm)
                    clamped = True
                    logger.warning(
                        "foothold offset %.3f m exceeds reach %.3f m on leg %d; clamped",
                        norm, layout.reach_radius, leg,
                    )
                foothold = com_path[:, start] + hip + offset
            segment_value[:, start:k] = foothold[:, None]

        # Swing nodes carry the next touchdown target; trailing swing
        # nodes hold the previous foothold. Legs with no stance in the
        # horizon keep the hip projection at the current CoM.
        filled = segment_value.copy()
        nxt = None
        for j in range(n - 1, -1, -1):
            if not np.isnan(segment_value[0, j]):
                nxt = segment_value[:, j]
            elif nxt is not None:
                filled[:, j] = nxt
        prev = None
        for j in range(n):
            if not np.isnan(filled[0, j]):
                prev = filled[:, j]
            elif prev is not None:
                filled[:, j] = prev
            else:
                filled[:, j] = com0 + hip
        p_f[3 * leg : 3 * leg + 2, :] = filled

    return FootholdSeq(p_f=p_f, source=source, clamped=clamped)
