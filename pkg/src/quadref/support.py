"""Admissible ZMP regions built from stance-foot positions.

A region is an intersection of half planes normal . w <= offset with
unit normals. Three or more stance feet give the convex hull of their
ground positions; exactly two give the foot-to-foot segment inflated to
a thin rectangle so the constraint set keeps a nonempty interior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_INFLATE_EPS = 0.005

_COLLINEAR_TOL = 1e-12


class DegenerateSupportError(RuntimeError):
    """Fewer than two distinct stance feet: no usable support region."""


@dataclass
class SupportRegion:
    normals: np.ndarray    # m x 2, unit rows
    offsets: np.ndarray    # m
    center: np.ndarray     # 2, mean of the stance feet
    stance_count: int
    #: Endpoints of the underlying foot-to-foot segment when the stance
    #: set is (near) collinear; None for a full-dimensional polygon.
    segment: tuple[np.ndarray, np.ndarray] | None = None

    def violation(self, w: np.ndarray) -> float:
        """Max half-plane violation at w; <= 0 means w is admissible."""
        return float((self.normals @ np.asarray(w, dtype=float) - self.offsets).max())

    def contains(self, w: np.ndarray, tol: float = 0.0) -> bool:
        return self.violation(w) <= tol


def _foot_xy(p_f_k, delta_k) -> np.ndarray:
    feet = np.asarray(p_f_k, dtype=float)
    if feet.size == 12:
        feet = feet.reshape(4, 3)[:, :2]
    elif feet.shape == (4, 2):
        pass
    elif feet.shape == (4, 3):
        feet = feet[:, :2]
    else:
        raise ValueError(f"unsupported foothold column shape {feet.shape}")
    mask = np.asarray(delta_k).reshape(-1).astype(bool)
    if mask.shape[0] != 4:
        raise ValueError("delta column must have four entries")
    return feet[mask]


def _monotone_chain(points: np.ndarray) -> np.ndarray:
    """Convex hull (CCW, no repeated endpoint) of 2D points."""
    pts = np.unique(np.round(points, 12), axis=0)
    if pts.shape[0] <= 2:
        return pts
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[np.ndarray] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= _COLLINEAR_TOL:
            lower.pop()
        lower.append(p)
    upper: list[np.ndarray] = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= _COLLINEAR_TOL:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def _segment_region(p_lo: np.ndarray, p_hi: np.ndarray, eps: float, center: np.ndarray, count: int) -> SupportRegion:
    axis = p_hi - p_lo
    length = float(np.linalg.norm(axis))
    if length < 1e-9:
        raise DegenerateSupportError("stance feet are coincident")
    u = axis / length
    n_perp = np.array([-u[1], u[0]])
    normals = np.array([n_perp, -n_perp, u, -u])
    offsets = np.array(
        [
            float(n_perp @ p_lo) + eps,
            float(-n_perp @ p_lo) + eps,
            float(u @ p_hi),
            float(-u @ p_lo),
        ]
    )
    return SupportRegion(
        normals=normals,
        offsets=offsets,
        center=center,
        stance_count=count,
        segment=(p_lo.copy(), p_hi.copy()),
    )


def build_region(p_f_k, delta_k, inflate_eps: float = DEFAULT_INFLATE_EPS) -> SupportRegion:
    """Half-plane description of the admissible ZMP set for one node."""
    feet = _foot_xy(p_f_k, delta_k)
    count = feet.shape[0]
    if count < 2:
        raise DegenerateSupportError(f"need at least 2 stance legs, got {count}")
    center = feet.mean(axis=0)

    hull = _monotone_chain(feet)
    if hull.shape[0] < 3:
        # Two stance feet, or a collinear configuration: inflate the
        # extreme-point segment.
        axis = feet - feet.mean(axis=0)
        u0 = axis[np.argmax(np.linalg.norm(axis, axis=1))]
        norm = float(np.linalg.norm(u0))
        if norm < 1e-9:
            raise DegenerateSupportError("stance feet are coincident")
        proj = feet @ (u0 / norm)
        p_lo = feet[np.argmin(proj)]
        p_hi = feet[np.argmax(proj)]
        return _segment_region(p_lo, p_hi, inflate_eps, center, count)

    m = hull.shape[0]
    normals = np.empty((m, 2))
    offsets = np.empty(m)
    for i in range(m):
        a, b = hull[i], hull[(i + 1) % m]
        edge = b - a
        n = np.array([edge[1], -edge[0]])
        n /= np.linalg.norm(n)
        normals[i] = n
        offsets[i] = float(n @ a)
    return SupportRegion(normals=normals, offsets=offsets, center=center, stance_count=count)
