"""Reference-generation state machine run once per planning cycle.

Each tick updates the goal and the gait-cycle CoM average, tests the
tracking error against a threshold, and either passes the user
velocity through with gravity-compensation forces (heuristic) or runs
the pendulum optimization and ZMP-to-force mapping (optimize). The
optimize branch alternates pendulum solves with foothold replanning so
footholds stay coherent with the optimized velocity, and every failure
path degrades to the heuristic references instead of aborting.
"""

from __future__ import annotations

import logging
import time
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .gait import GaitSpec, GaitStatusSeq, contact_set, schedule
from .grf_map import (
    GrfMappingError,
    GrfNodeProblem,
    GrfSolution,
    assemble_horizon,
    map_node,
    reconstruct_zmp,
)
from .lip_opt import LipOptimizer, LipParams, LipSolution, shrink_window
from .stepping import FootholdSeq, FootholdSource, HipLayout, plan_footholds
from .support import DEFAULT_INFLATE_EPS, DegenerateSupportError, build_region

logger = logging.getLogger(__name__)


class GovernorStatus(Enum):
    HEURISTIC = 0
    OPTIMIZE = 1
    FALLBACK = 2


class GoalMode(Enum):
    VELOCITY_INTEGRATED = "velocity_integrated"
    FIXED_Y = "fixed_y"
    FIXED_XY = "fixed_xy"


@dataclass(frozen=True)
class GovernorConfig:
    tol: float = 0.01
    response_time: float = 4.8
    v_usr: np.ndarray = (0.0, 0.0)
    goal_mode: GoalMode = GoalMode.VELOCITY_INTEGRATED
    fixed_goal: np.ndarray = (0.0, 0.0)
    max_refine_iters: int = 3
    refine_tol: float = 1e-3
    use_timed_formulation: bool = True
    force_optimize: bool = False
    force_heuristic: bool = False
    n_nodes: int = 50
    sample_time: float = 0.04

    def __post_init__(self):
        object.__setattr__(self, "v_usr", np.asarray(self.v_usr, dtype=float).reshape(2))
        object.__setattr__(self, "fixed_goal", np.asarray(self.fixed_goal, dtype=float).reshape(2))
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.response_time < self.sample_time:
            raise ValueError("response_time must be at least one sample_time")
        if self.max_refine_iters < 1:
            raise ValueError("max_refine_iters must be at least 1")
        if self.force_optimize and self.force_heuristic:
            raise ValueError("cannot force both statuses at once")

    @property
    def window_init(self) -> int:
        return int(round(self.response_time / self.sample_time))


@dataclass
class GovernorState:
    status: GovernorStatus = GovernorStatus.HEURISTIC
    p_goal: np.ndarray | None = None
    window_m: int = 0
    com_history: deque = field(default_factory=deque)   # (time, xy) pairs
    p_bar: np.ndarray | None = None

    @property
    def initialized(self) -> bool:
        return self.p_goal is not None


@dataclass
class TickDiagnostics:
    error_norm: float = 0.0
    window_used: int = -1
    slack_y_max: float = 0.0
    lip_solve_ms: list = field(default_factory=list)
    grf_solve_ms: list = field(default_factory=list)
    zmp_ref: np.ndarray = field(default_factory=lambda: np.zeros(2))
    zmp_recon: np.ndarray = field(default_factory=lambda: np.zeros(2))
    refine_iterations: int = 0
    refine_converged: bool = True
    grf_fallback_nodes: int = 0
    foothold_clamped: bool = False


@dataclass
class ReferenceBundle:
    v_ref: np.ndarray            # 2 x (n_nodes + 1)
    u_ref: np.ndarray            # 12 x n_nodes_forces
    footholds: FootholdSeq
    delta: GaitStatusSeq
    status_used: GovernorStatus
    diagnostics: TickDiagnostics = field(default_factory=TickDiagnostics)


def gravity_compensation(delta_k, mass: float, gravity: float) -> np.ndarray:
    """Equal vertical split of the weight among the stance legs."""
    legs = contact_set(delta_k)
    if not legs:
        raise DegenerateSupportError("gravity compensation needs at least one stance leg")
    column = np.zeros(12)
    share = mass * gravity / len(legs)
    for leg in legs:
        column[3 * leg + 2] = share
    return column


def update_goal(state: GovernorState, config: GovernorConfig, x_act, first_tick: bool) -> GovernorState:
    """Advance the goal by the commanded displacement (or hold fixed axes)."""
    x_act = np.asarray(x_act, dtype=float).reshape(4)
    step = config.v_usr * config.sample_time
    if first_tick or state.p_goal is None:
        state.p_goal = x_act[:2] + config.n_nodes * step
    else:
        state.p_goal = state.p_goal + step
    if config.goal_mode is GoalMode.FIXED_Y:
        state.p_goal[1] = config.fixed_goal[1]
    elif config.goal_mode is GoalMode.FIXED_XY:
        state.p_goal = config.fixed_goal.copy()
    return state


def compute_error(state: GovernorState, config: GovernorConfig) -> np.ndarray:
    """Goal error against the cycle-averaged CoM plus the commanded offset."""
    if state.p_bar is None:
        raise ValueError("CoM history is empty")
    offset = config.n_nodes * config.v_usr * config.sample_time
    return state.p_goal - (state.p_bar + offset)


class Governor:
    """Wires the gait, stepping, pendulum and force-mapping stages together."""

    def __init__(
        self,
        config: GovernorConfig,
        lip_params: LipParams,
        gait_spec: GaitSpec,
        layout: HipLayout,
        mass: float,
        Qu=None,
        Qk=None,
        inflate_eps: float = DEFAULT_INFLATE_EPS,
        n_nodes_forces: int | None = None,
        slack_axes: tuple[int, ...] = (1,),
    ):
        if config.n_nodes != lip_params.n_nodes or config.sample_time != lip_params.sample_time:
            raise ValueError("governor and pendulum horizons disagree")
        self.config = config
        self.lip_params = lip_params
        self.gait_spec = gait_spec
        self.layout = layout
        self.mass = float(mass)
        self.Qu = np.asarray(Qu, dtype=float).reshape(2, 2) if Qu is not None else np.diag([100.0, 100.0])
        self.Qk = np.asarray(Qk, dtype=float).reshape(3, 3) if Qk is not None else np.eye(3)
        self.inflate_eps = float(inflate_eps)
        self.n_nodes_forces = int(n_nodes_forces or lip_params.n_nodes)
        if not 1 <= self.n_nodes_forces <= lip_params.n_nodes:
            raise ValueError("force horizon must lie within the reference horizon")
        self.optimizer = LipOptimizer(lip_params, slack_axes=slack_axes)

    def initial_state(self) -> GovernorState:
        return GovernorState()

    # -- per-tick pieces -------------------------------------------------------

    def _update_average(self, state: GovernorState, x_act: np.ndarray, t_now: float) -> None:
        state.com_history.append((t_now, x_act[:2].copy()))
        horizon = self.gait_spec.cycle_time
        while state.com_history and state.com_history[0][0] < t_now - horizon:
            state.com_history.popleft()
        state.p_bar = np.mean([xy for _, xy in state.com_history], axis=0)

    def _heuristic_v_ref(self) -> np.ndarray:
        return np.tile(self.config.v_usr[:, None], (1, self.config.n_nodes + 1))

    def _gravity_u_ref(self, delta: GaitStatusSeq) -> np.ndarray:
        cols = [
            gravity_compensation(delta.column(k), self.mass, self.lip_params.gravity)
            for k in range(self.n_nodes_forces)
        ]
        return np.stack(cols, axis=1)

    def _refine(
        self, x_act: np.ndarray, goal: np.ndarray, delta: GaitStatusSeq,
        footholds: FootholdSeq, window_m: int, diag: TickDiagnostics,
    ) -> tuple[LipSolution | None, FootholdSeq]:
        """Alternate pendulum solves and foothold replanning until stable.

        Returns the last feasible solution together with the footholds
        it was optimized against (not the freshly replanned set), so
        the downstream force mapping stays consistent with the ZMP
        admissibility constraints that shaped the trajectory.
        """
        cfg = self.config
        solution: LipSolution | None = None
        solution_footholds = footholds
        for iteration in range(cfg.max_refine_iters):
            regions = [
                build_region(footholds.foot_xy(k), delta.column(k), self.inflate_eps)
                for k in range(cfg.n_nodes)
            ]
            if cfg.use_timed_formulation:
                sol = self.optimizer.solve_timed(x_act, goal, regions, window_m)
            else:
                sol = self.optimizer.solve_basic(x_act, goal, regions)
            diag.lip_solve_ms.append(sol.solve_ms)
            diag.refine_iterations = iteration + 1
            if not sol.feasible:
                logger.warning("pendulum solve infeasible on refinement iteration %d", iteration)
                return solution, solution_footholds
            solution = sol
            solution_footholds = footholds
            refined = plan_footholds(
                sol.velocities, delta, x_act[:2], self.layout, self.gait_spec,
                source=FootholdSource.REFINED,
            )
            diag.foothold_clamped |= refined.clamped
            change = refined.max_difference(footholds)
            footholds = refined
            if change < cfg.refine_tol:
                diag.refine_converged = True
                return solution, solution_footholds
        diag.refine_converged = False
        return solution, solution_footholds

    def _map_forces(
        self, solution: LipSolution, footholds: FootholdSeq, delta: GaitStatusSeq,
        diag: TickDiagnostics,
    ) -> np.ndarray:
        node_solutions: list[GrfSolution | np.ndarray] = []
        for k in range(self.n_nodes_forces):
            legs = contact_set(delta.column(k))
            feet = tuple(
                (leg, np.array([*footholds.p_f[3 * leg : 3 * leg + 2, k], 0.0])) for leg in legs
            )
            t0 = time.perf_counter()
            try:
                node = GrfNodeProblem(
                    stance_feet=feet,
                    com_xy=solution.positions[:, k],
                    com_z=self.lip_params.com_height,
                    zmp=solution.zmp[:, k],
                    mass=self.mass,
                    gravity=self.lip_params.gravity,
                    Qu=self.Qu,
                    Qk=self.Qk,
                )
                node_solutions.append(map_node(node))
            except (GrfMappingError, ValueError) as exc:
                diag.grf_fallback_nodes += 1
                logger.warning("force mapping fell back to gravity compensation at node %d: %s", k, exc)
                node_solutions.append(
                    gravity_compensation(delta.column(k), self.mass, self.lip_params.gravity)
                )
            diag.grf_solve_ms.append((time.perf_counter() - t0) * 1e3)
        return assemble_horizon(node_solutions, delta, self.n_nodes_forces)

    # -- the tick ---------------------------------------------------------------

    def tick(self, state: GovernorState, x_act, t_now: float) -> tuple[GovernorState, ReferenceBundle]:
        cfg = self.config
        x_act = np.asarray(x_act, dtype=float).reshape(4)
        if not np.all(np.isfinite(x_act)):
            raise ValueError("actual state must be finite")
        diag = TickDiagnostics()

        first = not state.initialized
        self._update_average(state, x_act, t_now)
        update_goal(state, cfg, x_act, first_tick=first)
        error = compute_error(state, cfg)
        diag.error_norm = float(np.linalg.norm(error))

        optimize = diag.error_norm > cfg.tol
        if cfg.force_optimize:
            optimize = True
        if cfg.force_heuristic:
            optimize = False
        if optimize and state.status is GovernorStatus.HEURISTIC:
            state.window_m = cfg.window_init
        state.status = GovernorStatus.OPTIMIZE if optimize else GovernorStatus.HEURISTIC

        delta = schedule(self.gait_spec, t_now, cfg.n_nodes, cfg.sample_time)
        self.optimizer.shift_warm_start(1)   # the horizon advanced one node
        v_heur = self._heuristic_v_ref()
        footholds = plan_footholds(v_heur, delta, x_act[:2], self.layout, self.gait_spec)
        diag.foothold_clamped |= footholds.clamped

        v_ref = v_heur
        u_ref: np.ndarray | None = None
        status_used = GovernorStatus.HEURISTIC

        if optimize:
            diag.window_used = state.window_m
            solution: LipSolution | None = None
            try:
                solution, footholds = self._refine(
                    x_act, state.p_goal, delta, footholds, state.window_m, diag
                )
            except (DegenerateSupportError, ValueError) as exc:
                logger.warning("optimize branch degraded to fallback: %s", exc)
                solution = None
            if solution is not None and solution.feasible:
                try:
                    u_ref = self._map_forces(solution, footholds, delta, diag)
                    v_ref = solution.velocities
                    status_used = GovernorStatus.OPTIMIZE
                    diag.slack_y_max = float(solution.slacks[1].max(initial=0.0))
                    diag.zmp_ref = solution.zmp[:, 0].copy()
                except Exception as exc:  # noqa: BLE001  (any module error degrades, never aborts)
                    logger.error("force assembly failed, falling back: %s", exc)
                    u_ref = None
            if u_ref is None:
                status_used = GovernorStatus.FALLBACK
                v_ref = v_heur
            state.window_m = shrink_window(state.window_m)
        if u_ref is None:
            u_ref = self._gravity_u_ref(delta)
            diag.zmp_ref = reconstruct_zmp(u_ref[:, 0], footholds.p_f[:, 0], delta.column(0))

        diag.zmp_recon = reconstruct_zmp(u_ref[:, 0], footholds.p_f[:, 0], delta.column(0))
        bundle = ReferenceBundle(
            v_ref=v_ref,
            u_ref=u_ref,
            footholds=footholds,
            delta=delta,
            status_used=status_used,
            diagnostics=diag,
        )
        return state, bundle
