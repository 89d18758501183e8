"""Per-node QP mapping from a planned ZMP and CoM state to contact forces.

Each horizon node is an independent problem: find stacked 3D forces at
the stance feet that realize the commanded ZMP (moment balance about
the ground point), compensate gravity, and reproduce the pendulum's
horizontal CoM acceleration, while minimizing tangential forces and the
angular momentum rate. The ZMP moment constraint is linearized by
substituting the gravity-compensation identity into its denominator,
which keeps the node problem an ordinary QP. With exactly two stance
feet the ZMP can only live on the foot-to-foot line, so only the X
moment row is imposed and the Y component follows automatically.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import qp_core
from .gait import GaitStatusSeq, contact_set

logger = logging.getLogger(__name__)

_QU_DEFAULT = ((100.0, 0.0), (0.0, 100.0))
_QK_DEFAULT = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))


class GrfMappingError(RuntimeError):
    """The node problem is unsolvable (e.g. ZMP outside the support hull)."""


class AssemblyError(ValueError):
    """Node solutions do not line up with the contact schedule."""


class UndefinedZmpError(RuntimeError):
    """ZMP reconstruction with zero total vertical force."""


def _skew(r: np.ndarray) -> np.ndarray:
    x, y, z = r
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


@dataclass(frozen=True)
class GrfNodeProblem:
    """Inputs of one ZMP-to-forces node problem."""

    stance_feet: tuple[tuple[int, np.ndarray], ...]   # (leg index, 3D position)
    com_xy: np.ndarray
    com_z: float
    zmp: np.ndarray
    mass: float
    gravity: float = 9.81
    Qu: np.ndarray = _QU_DEFAULT
    Qk: np.ndarray = _QK_DEFAULT

    def __post_init__(self):
        feet = tuple(
            (int(leg), np.asarray(pos, dtype=float).reshape(3)) for leg, pos in self.stance_feet
        )
        if len(feet) < 2:
            raise ValueError("need at least two stance feet")
        if len({leg for leg, _ in feet}) != len(feet):
            raise ValueError("duplicate leg index in stance_feet")
        object.__setattr__(self, "stance_feet", feet)
        object.__setattr__(self, "com_xy", np.asarray(self.com_xy, dtype=float).reshape(2))
        object.__setattr__(self, "zmp", np.asarray(self.zmp, dtype=float).reshape(2))
        object.__setattr__(self, "Qu", np.asarray(self.Qu, dtype=float).reshape(2, 2))
        object.__setattr__(self, "Qk", np.asarray(self.Qk, dtype=float).reshape(3, 3))
        if self.mass <= 0 or self.gravity <= 0 or self.com_z <= 0:
            raise ValueError("mass, gravity and com_z must be positive")

    @property
    def legs(self) -> tuple[int, ...]:
        return tuple(leg for leg, _ in self.stance_feet)


@dataclass
class GrfSolution:
    """Stacked stance-foot forces, ordered like the problem's stance_feet."""

    forces: np.ndarray        # 3 * |C|
    objective: float
    legs: tuple[int, ...]

    def force_of(self, position: int) -> np.ndarray:
        return self.forces[3 * position : 3 * position + 3]


def _vertical_load_start(problem: GrfNodeProblem) -> np.ndarray | None:
    """Nonnegative vertical loads realizing the ZMP rows, or None if outside."""
    feet = [pos for _, pos in problem.stance_feet]
    nc = len(feet)
    total = problem.mass * problem.gravity
    zmp = problem.zmp
    if nc == 2:
        p1, p2 = feet
        denom = p1[0] - p2[0]
        if abs(denom) < 1e-12:
            return None
        w1 = (zmp[0] - p2[0]) / denom
        loads = np.array([w1, 1.0 - w1]) * total
        if loads.min() < -1e-9:
            return None
        return np.maximum(loads, 0.0)
    # Three or more feet: find a containing triangle and use its
    # barycentric weights, leaving the remaining feet unloaded.
    for combo in combinations(range(nc), 3):
        a, b, c = (feet[i][:2] for i in combo)
        mat = np.array(
            [[a[0], b[0], c[0]], [a[1], b[1], c[1]], [1.0, 1.0, 1.0]]
        )
        try:
            bary = np.linalg.solve(mat, np.array([zmp[0], zmp[1], 1.0]))
        except np.linalg.LinAlgError:
            continue
        if bary.min() >= -1e-9:
            loads = np.zeros(nc)
            for weight, idx in zip(bary, combo):
                loads[idx] = max(weight, 0.0) * total
            return loads
    return None


def map_node(problem: GrfNodeProblem, tol: float = 1e-8) -> GrfSolution:
    """Solve one node problem; raises GrfMappingError when unsolvable."""
    feet = [pos for _, pos in problem.stance_feet]
    nc = len(feet)
    n = 3 * nc
    m, grav = problem.mass, problem.gravity
    total = m * grav

    loads = _vertical_load_start(problem)
    if loads is None:
        raise GrfMappingError(
            f"zmp {problem.zmp.round(4).tolist()} is not realizable by feet "
            f"{[f[:2].round(3).tolist() for f in feet]}"
        )

    # Cost: tangential-force regularization plus angular momentum rate.
    com = np.array([problem.com_xy[0], problem.com_xy[1], problem.com_z])
    lever = np.hstack([_skew(pos - com) for pos in feet])   # 3 x n
    hess = 2.0 * (lever.T @ problem.Qk @ lever)
    for i in range(nc):
        hess[3 * i : 3 * i + 2, 3 * i : 3 * i + 2] += 2.0 * problem.Qu
    lin = np.zeros(n)

    # Equalities: ZMP moment rows (X only for two feet), gravity
    # compensation, and the pendulum's horizontal acceleration.
    zmp_rows = 1 if nc == 2 else 2
    n_eq = zmp_rows + 1 + 2
    eq = np.zeros((n_eq, n))
    rhs = np.zeros(n_eq)
    for axis in range(zmp_rows):
        for i, pos in enumerate(feet):
            eq[axis, 3 * i + 2] = pos[axis]
        rhs[axis] = problem.zmp[axis] * total
    row = zmp_rows
    eq[row, 2::3] = 1.0
    rhs[row] = total
    accel = (grav / problem.com_z) * (problem.com_xy - problem.zmp)
    for axis in range(2):
        eq[row + 1 + axis, axis::3] = 1.0
        rhs[row + 1 + axis] = m * accel[axis]

    # Vertical forces must push, never pull.
    ineq = np.zeros((nc, n))
    for i in range(nc):
        ineq[i, 3 * i + 2] = -1.0
    ineq_rhs = np.zeros(nc)

    qp = qp_core.QpProblem(hess, lin, eq, rhs, ineq, ineq_rhs)
    start = np.zeros(n)
    start[2::3] = loads
    start[0::3] = m * accel[0] / nc
    start[1::3] = m * accel[1] / nc
    sol = qp_core.ActiveSetSolver(tol=tol, max_iter=200).solve(qp, x0=start)
    if sol.status is not qp_core.QpStatus.OPTIMAL:
        raise GrfMappingError(f"node QP did not converge (status {sol.status.value})")
    if sol.ineq_duals.max(initial=0.0) > tol:
        logger.warning("vertical-force bound active on legs %s", problem.legs)
    return GrfSolution(forces=sol.x_opt, objective=sol.objective, legs=problem.legs)


def assemble_horizon(node_solutions: list, delta: GaitStatusSeq, n_nodes: int) -> np.ndarray:
    """Stack node solutions into a 12 x n_nodes force reference.

    Entries may be GrfSolution objects or precomputed 12-vectors
    (e.g. gravity-compensation placeholders). Swing legs get zeros.
    """
    if len(node_solutions) != n_nodes:
        raise AssemblyError(f"expected {n_nodes} node solutions, got {len(node_solutions)}")
    if delta.n_nodes < n_nodes:
        raise AssemblyError("contact schedule is shorter than the requested horizon")
    u_ref = np.zeros((12, n_nodes))
    for k, sol in enumerate(node_solutions):
        legs_k = contact_set(delta.column(k))
        if isinstance(sol, GrfSolution):
            if tuple(sol.legs) != legs_k:
                raise AssemblyError(
                    f"node {k}: solution legs {sol.legs} do not match schedule {legs_k}"
                )
            for pos, leg in enumerate(sol.legs):
                u_ref[3 * leg : 3 * leg + 3, k] = sol.force_of(pos)
        else:
            column = np.asarray(sol, dtype=float).reshape(12)
            for leg in range(4):
                if leg not in legs_k and np.abs(column[3 * leg : 3 * leg + 3]).max() > 0:
                    raise AssemblyError(f"node {k}: nonzero force on swing leg {leg}")
            u_ref[:, k] = column
    return u_ref


def reconstruct_zmp(forces: np.ndarray, footholds: np.ndarray, delta_k) -> np.ndarray:
    """ZMP implied by a 12-vector of forces: vertical-load-weighted foot mean."""
    f = np.asarray(forces, dtype=float).reshape(12)
    p = np.asarray(footholds, dtype=float).reshape(12)
    legs = contact_set(delta_k)
    total = sum(f[3 * leg + 2] for leg in legs)
    if total <= 1e-12:
        raise UndefinedZmpError("total stance vertical force is zero")
    zmp = np.zeros(2)
    for leg in legs:
        zmp += p[3 * leg : 3 * leg + 2] * f[3 * leg + 2]
    return zmp / total
