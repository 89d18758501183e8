"""CoM trajectory optimization on the linear inverted pendulum model.

Two formulations over an N-node horizon share the same discrete
dynamics and per-node ZMP admissibility constraints:

* ``solve_basic``  - quadratic costs on the distance to the goal, the
  CoM velocity and the ZMP distance from the support-region center.
* ``solve_timed``  - no explicit position cost; instead nonnegative
  slack variables bound the per-axis distance to the goal on every node
  from ``window_start`` to the end of the horizon, so shrinking the
  window start by one node per replanning cycle pins the arrival to a
  fixed wall-clock deadline. If the goal cannot be reached, the
  penalized slacks produce the closest feasible trajectory instead of
  an infeasible problem.

Decision variables are stacked [states, zmps, window slacks] with the
dynamics kept as equality constraints; the QP solver eliminates them
internally and caches that factorization across replanning cycles.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import qp_core
from .support import SupportRegion

logger = logging.getLogger(__name__)

GRAVITY = 9.81

_QV_DEFAULT = ((200.0, 0.0), (0.0, 300.0))
_QW_DEFAULT = ((100.0, 0.0), (0.0, 350.0))
_QSQ_DEFAULT = ((0.0, 0.0), (0.0, 1000.0))
_QSL_DEFAULT = (0.0, 1000.0)
_QP_DEFAULT = ((100.0, 0.0), (0.0, 100.0))

_SOLVER_MAX_ITER = 3000


def _weight_matrix(value, size: int, name: str) -> np.ndarray:
    m = np.asarray(value, dtype=float).reshape(size, size)
    if np.abs(m - m.T).max() > 1e-12:
        raise ValueError(f"{name} must be symmetric")
    if np.linalg.eigvalsh(m).min() < -1e-12:
        raise ValueError(f"{name} must be positive semidefinite")
    return m


@dataclass(frozen=True)
class LipParams:
    """Horizon, model constants and cost weights for the LIP problems."""

    sample_time: float = 0.04
    n_nodes: int = 50
    com_height: float = 0.40
    gravity: float = GRAVITY
    Qp: np.ndarray = _QP_DEFAULT
    Qv: np.ndarray = _QV_DEFAULT
    Qw: np.ndarray = _QW_DEFAULT
    Qs_quad: np.ndarray = _QSQ_DEFAULT
    Qs_lin: np.ndarray = _QSL_DEFAULT

    def __post_init__(self):
        if self.sample_time <= 0:
            raise ValueError("sample_time must be positive")
        if self.n_nodes < 1:
            raise ValueError("n_nodes must be at least 1")
        if self.com_height <= 0:
            raise ValueError("com_height must be positive")
        if self.gravity <= 0:
            raise ValueError("gravity must be positive")
        object.__setattr__(self, "Qp", _weight_matrix(self.Qp, 2, "Qp"))
        object.__setattr__(self, "Qv", _weight_matrix(self.Qv, 2, "Qv"))
        object.__setattr__(self, "Qw", _weight_matrix(self.Qw, 2, "Qw"))
        object.__setattr__(self, "Qs_quad", _weight_matrix(self.Qs_quad, 2, "Qs_quad"))
        qsl = np.asarray(self.Qs_lin, dtype=float).reshape(2)
        if (qsl < 0).any():
            raise ValueError("Qs_lin must be elementwise nonnegative")
        object.__setattr__(self, "Qs_lin", qsl)

    @property
    def omega_sq(self) -> float:
        """Pendulum constant g / z_c."""
        return self.gravity / self.com_height


@dataclass
class LipSolution:
    states: np.ndarray       # 4 x (N+1): stacked (px, py, vx, vy) per node
    zmp: np.ndarray          # 2 x N
    slacks: np.ndarray       # 2 x (N+1); zero rows on axes without slack variables
    objective: float
    feasible: bool
    solve_ms: float = 0.0
    iterations: int = 0

    @property
    def positions(self) -> np.ndarray:
        return self.states[:2]

    @property
    def velocities(self) -> np.ndarray:
        return self.states[2:]


def lip_dynamics_step(p_k, v_k, w_k, params: LipParams) -> tuple[np.ndarray, np.ndarray]:
    """One forward step of the discrete pendulum dynamics."""
    p = np.asarray(p_k, dtype=float).reshape(2)
    v = np.asarray(v_k, dtype=float).reshape(2)
    w = np.asarray(w_k, dtype=float).reshape(2)
    ts = params.sample_time
    lever = p - w
    p_next = p + v * ts + (ts * ts * params.gravity) / (2.0 * params.com_height) * lever
    v_next = v + params.omega_sq * lever * ts
    return p_next, v_next


def rollout(x0, zmp, params: LipParams) -> np.ndarray:
    """Replay the dynamics from x0 under a ZMP trajectory; returns 4 x (N+1)."""
    w = np.asarray(zmp, dtype=float).reshape(2, -1)
    n = w.shape[1]
    states = np.empty((4, n + 1))
    states[:, 0] = np.asarray(x0, dtype=float).reshape(4)
    for k in range(n):
        p_next, v_next = lip_dynamics_step(states[:2, k], states[2:, k], w[:, k], params)
        states[:2, k + 1] = p_next
        states[2:, k + 1] = v_next
    return states


def shrink_window(m: int) -> int:
    """Advance the constrained-window start by one replanning cycle."""
    if m < 0:
        raise ValueError("window start must be nonnegative")
    return max(int(m) - 1, 0)


#: Inactive stand-in bound for epigraph rows outside the constrained
#: window; keeps the constraint layout identical across solves so the
#: previous working set remains meaningful.
_RELAXED_BOUND = 1e6

#: Half-plane slots reserved per node (hull of at most four feet).
_ROWS_PER_NODE = 4


@dataclass
class _Template:
    """Constant QP pieces for one formulation of a fixed-horizon problem.

    The inequality block has a fixed row layout: _ROWS_PER_NODE
    admissibility rows per node (unused slots are never-active
    dummies), then two epigraph rows per node and axis (relaxed outside
    the window), then the slack nonnegativity rows. The CSR sparsity
    pattern is built once; per-solve assembly only rewrites values.
    """

    hessian: np.ndarray
    eq_matrix: np.ndarray
    n_vars: int
    n_states: int
    n_zmp: int
    n_nodes: int
    slack_axes: tuple[int, ...]
    c_indices: np.ndarray = None
    c_indptr: np.ndarray = None
    c_data: np.ndarray = None
    c_rhs: np.ndarray = None
    n_rows: int = 0

    def state_index(self, k: int) -> int:
        return 4 * k

    def zmp_index(self, k: int) -> int:
        return self.n_states + 2 * k

    def slack_index(self, k: int, axis_pos: int) -> int:
        return self.n_states + self.n_zmp + len(self.slack_axes) * k + axis_pos

    def _build_pattern(self) -> None:
        n, axes = self.n_nodes, self.slack_axes
        indices: list[int] = []
        indptr: list[int] = [0]
        data: list[float] = []
        rhs: list[float] = []
        for k in range(n):
            j = self.zmp_index(k)
            for _ in range(_ROWS_PER_NODE):
                indices.extend((j, j + 1))
                data.extend((0.0, 0.0))
                rhs.append(1.0)   # dummy until filled
                indptr.append(len(indices))
        for k in range(n + 1):
            i = self.state_index(k)
            for pos, axis in enumerate(axes):
                js = self.slack_index(k, pos)
                indices.extend((i + axis, js))
                data.extend((1.0, -1.0))
                rhs.append(_RELAXED_BOUND)
                indptr.append(len(indices))
                indices.extend((i + axis, js))
                data.extend((-1.0, -1.0))
                rhs.append(_RELAXED_BOUND)
                indptr.append(len(indices))
        for k in range(n + 1):
            for pos in range(len(axes)):
                indices.append(self.slack_index(k, pos))
                data.append(-1.0)
                rhs.append(0.0)
                indptr.append(len(indices))
        self.c_indices = np.asarray(indices, dtype=np.int32)
        self.c_indptr = np.asarray(indptr, dtype=np.int32)
        self.c_data = np.asarray(data)
        self.c_rhs = np.asarray(rhs)
        self.n_rows = len(rhs)

    def assemble_constraints(
        self, regions, goal, window_start: int | None, node_planes
    ) -> tuple[sp.csr_matrix, np.ndarray]:
        if self.c_indices is None:
            self._build_pattern()
        n, axes = self.n_nodes, self.slack_axes
        data = self.c_data.copy()
        rhs = self.c_rhs.copy()
        for k, region in enumerate(regions):
            normals, offsets = node_planes(region)
            e = len(offsets)
            base = 2 * _ROWS_PER_NODE * k
            data[base : base + 2 * e] = normals.ravel()
            rhs[_ROWS_PER_NODE * k : _ROWS_PER_NODE * k + e] = offsets
        if axes and window_start is not None:
            # A deadline beyond the horizon pins the terminal node: the
            # plan holds the goal at its tail until the receding window
            # enters the horizon.
            epi_base = _ROWS_PER_NODE * n
            for k in range(min(window_start, n), n + 1):
                for pos, axis in enumerate(axes):
                    row = epi_base + 2 * (len(axes) * k + pos)
                    rhs[row] = goal[axis]
                    rhs[row + 1] = -goal[axis]
        matrix = sp.csr_matrix(
            (data, self.c_indices, self.c_indptr), shape=(self.n_rows, self.n_vars)
        )
        return matrix, rhs


class LipOptimizer:
    """Builds and solves the horizon problems, reusing the constant structure."""

    def __init__(self, params: LipParams, slack_axes: tuple[int, ...] = (1,)):
        self.params = params
        axes = tuple(sorted(set(int(a) for a in slack_axes)))
        if any(a not in (0, 1) for a in axes):
            raise ValueError("slack_axes entries must be 0 (X) or 1 (Y)")
        self.slack_axes = axes
        self._templates: dict[str, _Template] = {}
        self._solver = qp_core.ActiveSetSolver(tol=1e-8, max_iter=_SOLVER_MAX_ITER)
        self._solver_basic = qp_core.ActiveSetSolver(tol=1e-8, max_iter=_SOLVER_MAX_ITER)
        self._last_zmp: dict[str, np.ndarray] = {}
        self._last_states: dict[str, np.ndarray] = {}
        self._last_active: dict[str, tuple[int, ...]] = {}
        self._deadbeat: tuple[float, float] | None = None

    # -- template assembly ----------------------------------------------------

    def _build_template(self, timed: bool) -> _Template:
        key = "timed" if timed else "basic"
        tmpl = self._templates.get(key)
        if tmpl is not None:
            return tmpl
        par = self.params
        n = par.n_nodes
        n_states = 4 * (n + 1)
        n_zmp = 2 * n
        axes = self.slack_axes if timed else ()
        n_slack = len(axes) * (n + 1)
        n_vars = n_states + n_zmp + n_slack

        hess = np.zeros((n_vars, n_vars))
        for k in range(n + 1):
            i = 4 * k
            if not timed:
                hess[i : i + 2, i : i + 2] += 2.0 * par.Qp
            hess[i + 2 : i + 4, i + 2 : i + 4] += 2.0 * par.Qv
        for k in range(n):
            j = n_states + 2 * k
            hess[j : j + 2, j : j + 2] += 2.0 * par.Qw
        for k in range(n + 1):
            for pos, axis in enumerate(axes):
                j = n_states + n_zmp + len(axes) * k + pos
                hess[j, j] += 2.0 * par.Qs_quad[axis, axis]

        ts = par.sample_time
        c_pos = ts * ts * par.gravity / (2.0 * par.com_height)
        c_vel = par.omega_sq * ts
        n_eq = 4 + 4 * n
        eq = np.zeros((n_eq, n_vars))
        eq[0:4, 0:4] = np.eye(4)
        for k in range(n):
            row = 4 + 4 * k
            xk = 4 * k
            xk1 = 4 * (k + 1)
            wk = n_states + 2 * k
            for a in range(2):
                # position propagation
                r = row + a
                eq[r, xk1 + a] = 1.0
                eq[r, xk + a] = -(1.0 + c_pos)
                eq[r, xk + 2 + a] = -ts
                eq[r, wk + a] = c_pos
                # velocity propagation
                r = row + 2 + a
                eq[r, xk1 + 2 + a] = 1.0
                eq[r, xk + 2 + a] = -1.0
                eq[r, xk + a] = -c_vel
                eq[r, wk + a] = c_vel

        tmpl = _Template(
            hessian=hess,
            eq_matrix=eq,
            n_vars=n_vars,
            n_states=n_states,
            n_zmp=n_zmp,
            n_nodes=n,
            slack_axes=axes,
        )
        self._templates[key] = tmpl
        return tmpl

    # -- shared pieces ----------------------------------------------------------

    def _check_inputs(self, x0, goal, regions) -> tuple[np.ndarray, np.ndarray]:
        x0 = np.asarray(x0, dtype=float).reshape(4)
        goal = np.asarray(goal, dtype=float).reshape(2)
        if not (np.all(np.isfinite(x0)) and np.all(np.isfinite(goal))):
            raise ValueError("initial state and goal must be finite")
        if len(regions) != self.params.n_nodes:
            raise ValueError(
                f"expected {self.params.n_nodes} support regions, got {len(regions)}"
            )
        return x0, goal

    @staticmethod
    def _node_planes(region: SupportRegion) -> tuple[np.ndarray, np.ndarray]:
        """Half planes used to lower one node's ZMP admissibility.

        Segment supports (two-leg or collinear stances) are lowered as
        the exact support line (an opposing half-plane pair) plus the
        endpoint caps: the ZMP can only ride that line physically, and
        the inflated rectangle's thin interior makes the active-set
        method zigzag. The returned points still satisfy the region's
        published half planes.
        """
        if region.segment is not None:
            p_lo, p_hi = region.segment
            axis = p_hi - p_lo
            u = axis / float(np.linalg.norm(axis))
            n_perp = np.array([-u[1], u[0]])
            line = float(n_perp @ p_lo)
            normals = np.array([n_perp, -n_perp, u, -u])
            offsets = np.array([line, -line, float(u @ p_hi), float(-(u @ p_lo))])
            return normals, offsets
        return region.normals, region.offsets

    def _deadbeat_gains(self) -> tuple[float, float]:
        """Per-axis ZMP feedback (w = gp*p + gv*v) that zeroes the unstable
        mode of the discrete pendulum step in one sample."""
        if self._deadbeat is None:
            ts = self.params.sample_time
            c_pos = ts * ts * self.params.gravity / (2.0 * self.params.com_height)
            c_vel = self.params.omega_sq * ts
            a_mat = np.array([[1.0 + c_pos, ts], [c_vel, 1.0]])
            b_vec = np.array([-c_pos, -c_vel])
            eigvals, eigvecs = np.linalg.eig(a_mat.T)
            left = np.real(eigvecs[:, int(np.argmax(np.real(eigvals)))])
            denom = float(left @ b_vec)
            gains = -(left @ a_mat) / denom
            self._deadbeat = (float(gains[0]), float(gains[1]))
        return self._deadbeat

    def shift_warm_start(self, nodes: int = 1) -> None:
        """Advance the warm-start memory by whole nodes.

        Receding-horizon callers replan from a start time that moved by
        one sample: the remembered plan and active set stay meaningful
        only when shifted accordingly. Tail entries are extrapolated by
        holding the last node.
        """
        if nodes <= 0:
            return
        for key, zmp in list(self._last_zmp.items()):
            n = zmp.shape[1]
            shift = min(nodes, n)
            self._last_zmp[key] = np.hstack(
                [zmp[:, shift:], np.repeat(zmp[:, -1:], shift, axis=1)]
            )
            states = self._last_states.get(key)
            if states is not None:
                self._last_states[key] = np.hstack(
                    [states[:, shift:], np.repeat(states[:, -1:], shift, axis=1)]
                )
            tmpl = self._templates.get(key)
            active = self._last_active.get(key)
            if tmpl is None or active is None:
                continue
            n_axes = len(tmpl.slack_axes)
            region_rows = _ROWS_PER_NODE * tmpl.n_nodes
            epi_rows = 2 * n_axes * (tmpl.n_nodes + 1)
            shifted: list[int] = []
            for row in active:
                if row < region_rows:
                    row2 = row - _ROWS_PER_NODE * nodes
                    if row2 >= 0:
                        shifted.append(row2)
                elif row < region_rows + epi_rows:
                    row2 = row - 2 * n_axes * nodes
                    if row2 >= region_rows:
                        shifted.append(row2)
                else:
                    row2 = row - n_axes * nodes
                    if row2 >= region_rows + epi_rows:
                        shifted.append(row2)
            self._last_active[key] = tuple(shifted)

    def _project_node(self, point: np.ndarray, region: SupportRegion) -> np.ndarray:
        """Closest admissible stand-in for a point under the node's lowering.

        Segments get the exact nearest point on the segment (preserving
        the along-line component); polygons pull toward the interior
        center just far enough to restore feasibility.
        """
        if region.segment is not None:
            p_lo, p_hi = region.segment
            axis = p_hi - p_lo
            length_sq = float(axis @ axis)
            t = float(np.clip(((point - p_lo) @ axis) / length_sq, 0.0, 1.0))
            return p_lo + t * axis
        normals, offsets = region.normals, region.offsets
        viol = normals @ point - offsets
        worst = float(viol.max())
        if worst <= 0.0:
            return point
        gaps = -(normals @ region.center - offsets)
        hot = viol > 0.0
        t = float(np.clip((viol[hot] / (viol[hot] + gaps[hot])).max(), 0.0, 1.0))
        return point + t * (region.center - point)

    def _start_point(
        self, tmpl: _Template, x0, regions, goal, window_start: int | None, key: str
    ) -> np.ndarray:
        """Feasible start for the active-set solver.

        The pendulum is unstable, so an open-loop replay of any fixed
        ZMP trajectory diverges; the start rollout therefore places
        each step's ZMP with divergence-arresting feedback, tracking
        the previous solve's plan when one is available and the
        instantaneous capture point otherwise, projected into each
        node's admissible set. Slacks start at the rolled-out goal
        distances.
        """
        n = self.params.n_nodes
        prev = self._last_zmp.get(key)
        prev_states = self._last_states.get(key)
        gain_p, gain_v = self._deadbeat_gains()

        def stabilized_rollout(track_previous: bool) -> tuple[np.ndarray, np.ndarray, float]:
            """Dynamics-exact rollout whose ZMP choice zeroes the unstable
            pendulum mode each step (projected into the admissible set),
            tracking the previous plan when one is supplied."""
            states = np.empty((4, n + 1))
            states[:, 0] = np.asarray(x0, dtype=float).reshape(4)
            zmp = np.empty((2, n))
            spread = 0.0
            for k in range(n):
                p, v = states[:2, k], states[2:, k]
                if track_previous:
                    dev_p = p - prev_states[:2, k]
                    dev_v = v - prev_states[2:, k]
                    w_raw = prev[:, k] + gain_p * dev_p + gain_v * dev_v
                else:
                    w_raw = gain_p * p + gain_v * v
                w = self._project_node(w_raw, regions[k])
                zmp[:, k] = w
                p_next, v_next = lip_dynamics_step(p, v, w, self.params)
                states[:2, k + 1] = p_next
                states[2:, k + 1] = v_next
                spread = max(spread, float(np.abs(p_next - w).max()))
            return states, zmp, spread

        states = zmp = None
        if prev is not None and prev_states is not None:
            states, zmp, spread = stabilized_rollout(track_previous=True)
            if spread > 1.0:
                states = zmp = None   # projection clipping destabilized the replay
        if states is None:
            states, zmp, _ = stabilized_rollout(track_previous=False)

        x = np.zeros(tmpl.n_vars)
        x[: tmpl.n_states] = states.T.reshape(-1)
        x[tmpl.n_states : tmpl.n_states + tmpl.n_zmp] = zmp.T.reshape(-1)
        if window_start is not None:
            for k in range(min(max(window_start, 0), n), n + 1):
                for pos, axis in enumerate(tmpl.slack_axes):
                    x[tmpl.slack_index(k, pos)] = abs(states[axis, k] - goal[axis])
        return x

    def _finish(self, tmpl: _Template, sol: qp_core.QpSolution, x0, constant: float,
                elapsed_ms: float, key: str) -> LipSolution:
        n = self.params.n_nodes
        states = sol.x_opt[: tmpl.n_states].reshape(n + 1, 4).T.copy()
        states[:, 0] = x0
        zmp = sol.x_opt[tmpl.n_states : tmpl.n_states + tmpl.n_zmp].reshape(n, 2).T.copy()
        if sol.status is qp_core.QpStatus.OPTIMAL:
            self._last_zmp[key] = zmp.copy()
            self._last_states[key] = states.copy()
        slacks = np.zeros((2, n + 1))
        for k in range(n + 1):
            for pos, axis in enumerate(tmpl.slack_axes):
                slacks[axis, k] = sol.x_opt[tmpl.slack_index(k, pos)]
        # An iteration-capped solve still carries a dynamics-consistent,
        # region-admissible trajectory (primal feasibility is maintained
        # throughout); only a certified infeasibility rejects the result.
        usable = sol.status is not qp_core.QpStatus.INFEASIBLE
        if sol.status is qp_core.QpStatus.MAX_ITER:
            logger.warning("pendulum solve hit the iteration cap; using the best feasible plan")
        return LipSolution(
            states=states,
            zmp=zmp,
            slacks=slacks,
            objective=sol.objective + constant,
            feasible=usable,
            solve_ms=elapsed_ms,
            iterations=sol.iterations,
        )

    # -- formulations -----------------------------------------------------------

    def solve_basic(self, x0, goal, regions: list[SupportRegion]) -> LipSolution:
        """Goal-attraction formulation with explicit position cost."""
        x0, goal = self._check_inputs(x0, goal, regions)
        par = self.params
        n = par.n_nodes
        tmpl = self._build_template(timed=False)

        lin = np.zeros(tmpl.n_vars)
        constant = 0.0
        for k in range(n + 1):
            i = tmpl.state_index(k)
            lin[i : i + 2] += -2.0 * (par.Qp @ goal)
            constant += float(goal @ par.Qp @ goal)
        for k, region in enumerate(regions):
            j = tmpl.zmp_index(k)
            lin[j : j + 2] += -2.0 * (par.Qw @ region.center)
            constant += float(region.center @ par.Qw @ region.center)

        ineq, rhs = tmpl.assemble_constraints(regions, goal, None, self._node_planes)
        eq_rhs = np.zeros(tmpl.eq_matrix.shape[0])
        eq_rhs[0:4] = x0
        problem = qp_core.QpProblem(
            hessian=tmpl.hessian,
            linear_cost=lin,
            eq_matrix=tmpl.eq_matrix,
            eq_rhs=eq_rhs,
            ineq_matrix=ineq,
            ineq_rhs=rhs,
        )
        start = self._start_point(tmpl, x0, regions, goal, window_start=None, key="basic")
        t0 = time.perf_counter()
        sol = self._solver_basic.solve(problem, x0=start, active_init=self._last_active.get("basic"))
        elapsed = (time.perf_counter() - t0) * 1e3
        if sol.status is qp_core.QpStatus.OPTIMAL:
            self._last_active["basic"] = sol.active_set
        return self._finish(tmpl, sol, x0, constant, elapsed, key="basic")

    def solve_timed(self, x0, goal, regions: list[SupportRegion], window_start: int) -> LipSolution:
        """Deadline formulation: slacked goal constraints from window_start on.

        window_start may exceed the horizon, in which case no node is
        constrained yet; the receding window enters the horizon from
        the tail as it shrinks.
        """
        x0, goal = self._check_inputs(x0, goal, regions)
        if window_start < 0:
            raise ValueError("window_start must be nonnegative")
        par = self.params
        n = par.n_nodes
        tmpl = self._build_template(timed=True)
        axes = tmpl.slack_axes

        lin = np.zeros(tmpl.n_vars)
        constant = 0.0
        for k, region in enumerate(regions):
            j = tmpl.zmp_index(k)
            lin[j : j + 2] += -2.0 * (par.Qw @ region.center)
            constant += float(region.center @ par.Qw @ region.center)
        for k in range(n + 1):
            for pos, axis in enumerate(axes):
                lin[tmpl.slack_index(k, pos)] += par.Qs_lin[axis]

        ineq, rhs = tmpl.assemble_constraints(regions, goal, window_start, self._node_planes)
        eq_rhs = np.zeros(tmpl.eq_matrix.shape[0])
        eq_rhs[0:4] = x0
        problem = qp_core.QpProblem(
            hessian=tmpl.hessian,
            linear_cost=lin,
            eq_matrix=tmpl.eq_matrix,
            eq_rhs=eq_rhs,
            ineq_matrix=ineq,
            ineq_rhs=rhs,
        )
        start = self._start_point(tmpl, x0, regions, goal, window_start=window_start, key="timed")
        t0 = time.perf_counter()
        sol = self._solver.solve(problem, x0=start, active_init=self._last_active.get("timed"))
        elapsed = (time.perf_counter() - t0) * 1e3
        if sol.status is qp_core.QpStatus.OPTIMAL:
            self._last_active["timed"] = sol.active_set
        return self._finish(tmpl, sol, x0, constant, elapsed, key="timed")


def solve_basic(params: LipParams, x0, goal, regions: list[SupportRegion]) -> LipSolution:
    return LipOptimizer(params).solve_basic(x0, goal, regions)


def solve_timed(
    params: LipParams,
    x0,
    goal,
    regions: list[SupportRegion],
    window_start: int,
    slack_axes: tuple[int, ...] = (1,),
) -> LipSolution:
    return LipOptimizer(params, slack_axes=slack_axes).solve_timed(x0, goal, regions, window_start)
