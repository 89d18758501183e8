"""Closed-loop point-mass simulator with pushes and replanning.

The CoM is a planar point mass at constant height. Every planning tick
the active controller produces a 12-vector of stance forces whose
first column is applied open loop for one sample, together with any
external push, then the loop replans from the integrated state. The
horizontal acceleration is the stance-force sum over the mass, which is
exactly the force-to-acceleration relation the reference generator
assumes, so feedforward plus replanning closes the loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .baseline_pd import PdGains, ff_force
from .gait import GaitSpec
from .governor import Governor, GovernorConfig, GovernorStatus
from .lip_opt import LipParams
from .stepping import HipLayout

CSV_COLUMNS = (
    "t", "p_x", "p_y", "v_x", "v_y",
    "ref_v_x", "ref_v_y",
    "zmp_x", "zmp_y", "zmp_recon_x", "zmp_recon_y",
    "goal_x", "goal_y",
    "status", "window_M", "slack_y_max",
    "u_lf_x", "u_lf_y", "u_lf_z",
    "u_rf_x", "u_rf_y", "u_rf_z",
    "u_lh_x", "u_lh_y", "u_lh_z",
    "u_rh_x", "u_rh_y", "u_rh_z",
    "push_x", "push_y",
)


class SimulationFault(RuntimeError):
    """Aborted run; carries the rows produced so far for partial output."""

    def __init__(self, message: str, partial: "TimeSeries | None" = None):
        super().__init__(message)
        self.partial = partial


class ControllerKind(Enum):
    GOVERNOR = "governor"
    HEURISTIC = "heuristic"
    PD = "pd"


@dataclass(frozen=True)
class PushProfile:
    start: float
    duration: float
    force: np.ndarray   # 2-vector, N

    def __post_init__(self):
        object.__setattr__(self, "force", np.asarray(self.force, dtype=float).reshape(2))
        if self.duration < 0:
            raise ValueError("push duration must be nonnegative")

    def active(self, t: float) -> bool:
        return self.start <= t < self.start + self.duration

    @property
    def end(self) -> float:
        return self.start + self.duration


@dataclass(frozen=True)
class SimConfig:
    duration: float = 15.0
    substeps: int = 8
    push_profiles: tuple[PushProfile, ...] = ()
    lateral_drift_force: np.ndarray = (0.0, 0.0)
    mass: float = 22.0
    com_height: float = 0.40

    def __post_init__(self):
        object.__setattr__(
            self, "lateral_drift_force",
            np.asarray(self.lateral_drift_force, dtype=float).reshape(2),
        )
        object.__setattr__(self, "push_profiles", tuple(self.push_profiles))
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.substeps < 1:
            raise ValueError("substeps must be at least 1")
        if self.mass <= 0 or self.com_height <= 0:
            raise ValueError("mass and com_height must be positive")

    def push_end(self) -> float:
        return max((p.end for p in self.push_profiles), default=0.0)

    def push_force(self, t: float) -> np.ndarray:
        force = np.zeros(2)
        for push in self.push_profiles:
            if push.active(t):
                force = force + push.force
        return force

    def external_force(self, t: float) -> np.ndarray:
        return self.lateral_drift_force + self.push_force(t)


@dataclass
class SimState:
    t: float = 0.0
    p_xy: np.ndarray = field(default_factory=lambda: np.zeros(2))
    v_xy: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def x_act(self) -> np.ndarray:
        return np.concatenate([self.p_xy, self.v_xy])


@dataclass
class TimeSeries:
    columns: dict[str, np.ndarray]
    lip_solve_ms: list[float] = field(default_factory=list)
    grf_solve_ms: list[float] = field(default_factory=list)

    @property
    def n_rows(self) -> int:
        return len(self.columns["t"]) if self.columns else 0

    def row(self, k: int) -> dict[str, float]:
        return {name: self.columns[name][k] for name in CSV_COLUMNS}


def integrate_tick(
    state: SimState,
    u_ref_col0: np.ndarray,
    delta_k,
    external: np.ndarray,
    config: SimConfig,
    sample_time: float,
) -> SimState:
    """Semi-implicit Euler over config.substeps steps of one sample."""
    u = np.asarray(u_ref_col0, dtype=float).reshape(12)
    mask = np.asarray(delta_k).reshape(4).astype(bool)
    vertical = sum(u[3 * leg + 2] for leg in range(4) if mask[leg])
    weight = config.mass * 9.81
    if abs(vertical - weight) > 0.05 * weight:
        raise SimulationFault(
            f"stance vertical force {vertical:.2f} N violates equilibrium ({weight:.2f} N)"
        )
    horizontal = np.zeros(2)
    for leg in range(4):
        if mask[leg]:
            horizontal += u[3 * leg : 3 * leg + 2]
    accel = (horizontal + np.asarray(external, dtype=float).reshape(2)) / config.mass

    dt = sample_time / config.substeps
    p = state.p_xy.copy()
    v = state.v_xy.copy()
    for _ in range(config.substeps):
        v = v + accel * dt
        p = p + v * dt
    return SimState(t=state.t + sample_time, p_xy=p, v_xy=v)


def run_scenario(
    config: SimConfig,
    gov_config: GovernorConfig,
    lip: LipParams,
    gait: GaitSpec,
    layout: HipLayout,
    controller: ControllerKind = ControllerKind.GOVERNOR,
    pd_gains: PdGains | None = None,
    Qu=None,
    Qk=None,
    n_nodes_forces: int | None = None,
) -> TimeSeries:
    """Run the closed loop for config.duration; one record per planning tick."""
    if controller is ControllerKind.PD and pd_gains is None:
        raise ValueError("controller 'pd' requires pd_gains")
    if controller in (ControllerKind.HEURISTIC, ControllerKind.PD):
        gov_config = GovernorConfig(
            **{**gov_config.__dict__, "force_heuristic": True, "force_optimize": False}
        )
    governor = Governor(
        gov_config, lip, gait, layout, mass=config.mass,
        Qu=Qu, Qk=Qk, n_nodes_forces=n_nodes_forces,
    )
    gov_state = governor.initial_state()
    state = SimState()
    n_ticks = int(math.floor(config.duration / gov_config.sample_time + 1e-9))

    data: dict[str, list[float]] = {name: [] for name in CSV_COLUMNS}
    lip_ms: list[float] = []
    grf_ms: list[float] = []

    def series() -> TimeSeries:
        return TimeSeries(
            columns={name: np.asarray(values) for name, values in data.items()},
            lip_solve_ms=lip_ms,
            grf_solve_ms=grf_ms,
        )

    for k in range(n_ticks):
        t = k * gov_config.sample_time
        gov_state, bundle = governor.tick(gov_state, state.x_act(), t)
        push = config.push_force(t)
        external = config.lateral_drift_force + push
        if controller is ControllerKind.PD:
            external = external.copy()
            external[1] += ff_force(
                gov_state.p_goal[1], (state.p_xy[1], state.v_xy[1]),
                gov_config.v_usr[1], pd_gains,
            )

        diag = bundle.diagnostics
        u0 = bundle.u_ref[:, 0]
        lip_ms.extend(diag.lip_solve_ms)
        grf_ms.extend(diag.grf_solve_ms)

        ref_col = 1 if bundle.v_ref.shape[1] > 1 else 0
        data["t"].append(t)
        data["p_x"].append(state.p_xy[0])
        data["p_y"].append(state.p_xy[1])
        data["v_x"].append(state.v_xy[0])
        data["v_y"].append(state.v_xy[1])
        data["ref_v_x"].append(bundle.v_ref[0, ref_col])
        data["ref_v_y"].append(bundle.v_ref[1, ref_col])
        data["zmp_x"].append(diag.zmp_ref[0])
        data["zmp_y"].append(diag.zmp_ref[1])
        data["zmp_recon_x"].append(diag.zmp_recon[0])
        data["zmp_recon_y"].append(diag.zmp_recon[1])
        data["goal_x"].append(gov_state.p_goal[0])
        data["goal_y"].append(gov_state.p_goal[1])
        data["status"].append(float(bundle.status_used.value))
        data["window_M"].append(float(diag.window_used))
        data["slack_y_max"].append(diag.slack_y_max)
        for leg, name in enumerate(("lf", "rf", "lh", "rh")):
            for axis, ax_name in enumerate(("x", "y", "z")):
                data[f"u_{name}_{ax_name}"].append(u0[3 * leg + axis])
        data["push_x"].append(push[0])
        data["push_y"].append(push[1])

        try:
            state = integrate_tick(
                state, u0, bundle.delta.column(0), external, config, gov_config.sample_time
            )
        except SimulationFault as fault:
            raise SimulationFault(str(fault), partial=series()) from None

    return series()


def compute_metrics(series: TimeSeries, gov_config: GovernorConfig, config: SimConfig) -> dict:
    """Summary metrics; trajectory-derived values recompute from the CSV columns."""
    t = series.columns["t"]
    p_y = series.columns["p_y"]
    goal_y = series.columns["goal_y"]
    err = np.abs(p_y - goal_y)
    push_end = config.push_end()

    settling: float | None = None
    eligible = np.where(t >= push_end)[0]
    for idx in eligible:
        if np.all(err[idx:] < gov_config.tol):
            settling = float(t[idx])
            break

    final_mask = t >= t[-1] - 1.0 if len(t) else np.zeros(0, dtype=bool)
    steady = float(np.mean(err[final_mask])) if final_mask.any() else float("nan")
    return {
        "settling_time_s": settling,
        "steady_state_error_m": steady,
        "max_slack_m": float(series.columns["slack_y_max"].max(initial=0.0)),
        "fallback_ticks": int(np.sum(series.columns["status"] == 2.0)),
        "mean_lip_solve_ms": float(np.mean(series.lip_solve_ms)) if series.lip_solve_ms else 0.0,
        "mean_grf_solve_ms": float(np.mean(series.grf_solve_ms)) if series.grf_solve_ms else 0.0,
    }
