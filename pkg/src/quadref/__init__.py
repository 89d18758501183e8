"""Reference generation for quadruped locomotion.

Computes CoM velocity and ground-reaction-force references over a
receding horizon by cascading a linear-inverted-pendulum trajectory
optimization with a per-node ZMP-to-force mapping, orchestrated by a
governor state machine with a guaranteed response time, and validates
the closed loop in a point-mass simulator with external pushes.
"""

from .baseline_pd import PdGains, ff_force, gains_from_settling
from .gait import GaitKind, GaitSpec, GaitStatusSeq, contact_set, schedule
from .governor import (
    GoalMode,
    Governor,
    GovernorConfig,
    GovernorState,
    GovernorStatus,
    ReferenceBundle,
    compute_error,
    gravity_compensation,
    update_goal,
)
from .grf_map import (
    GrfNodeProblem,
    GrfSolution,
    assemble_horizon,
    map_node,
    reconstruct_zmp,
)
from .lip_opt import (
    LipOptimizer,
    LipParams,
    LipSolution,
    lip_dynamics_step,
    shrink_window,
    solve_basic,
    solve_timed,
)
from .qp_core import ActiveSetSolver, QpProblem, QpSolution, QpStatus, kkt_residuals, solve
from .sim import (
    ControllerKind,
    PushProfile,
    SimConfig,
    SimState,
    TimeSeries,
    compute_metrics,
    integrate_tick,
    run_scenario,
)
from .stepping import FootholdSeq, FootholdSource, HipLayout, plan_footholds
from .support import SupportRegion, build_region

__version__ = "0.1.0"
