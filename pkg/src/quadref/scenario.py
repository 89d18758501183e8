"""Scenario-file loading and validation.

A scenario is a single JSON document with the sections gait, horizon,
robot, weights, governor, controller and sim. Every field has a
default; unknown keys are rejected so typos cannot silently fall back
to defaults. The parsed result bundles ready-to-use module
configurations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .baseline_pd import PdGains
from .gait import GaitKind, GaitSpec
from .governor import GoalMode, GovernorConfig
from .lip_opt import LipParams
from .sim import ControllerKind, PushProfile, SimConfig
from .stepping import HipLayout


class ScenarioError(ValueError):
    """Malformed scenario document."""


_DEFAULTS = {
    "gait": {"kind": "trot", "cycle_time": 1.0, "duty_factor": 0.65},
    "horizon": {"sample_time": 0.04, "n_nodes_ref": 50, "n_nodes_nmpc": 50},
    "robot": {
        "mass": 22.0,
        "com_height": 0.40,
        "hip_offsets": [[0.24, 0.13], [0.24, -0.13], [-0.24, 0.13], [-0.24, -0.13]],
    },
    "weights": {
        "Qp": [[100.0, 0.0], [0.0, 100.0]],
        "Qv": [[200.0, 0.0], [0.0, 300.0]],
        "Qw": [[100.0, 0.0], [0.0, 350.0]],
        "Qs_quad": [[0.0, 0.0], [0.0, 1000.0]],
        "Qs_lin": [0.0, 1000.0],
        "Qu": [[100.0, 0.0], [0.0, 100.0]],
        "Qk": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    },
    "governor": {
        "tol": 0.01,
        "response_time": 4.8,
        "v_usr": [0.0, 0.0],
        "goal_mode": "velocity_integrated",
        "fixed_goal": [0.0, 0.0],
        "max_refine_iters": 3,
        "refine_tol": 1e-3,
        "use_timed_formulation": True,
        "force_optimize": False,
    },
    "controller": {"kind": "governor", "pd_gains": None},
    "sim": {
        "duration": 15.0,
        "substeps": 8,
        "pushes": [],
        "lateral_drift_force": [0.0, 0.0],
    },
}


@dataclass
class Scenario:
    name: str
    gait_spec: GaitSpec
    lip_params: LipParams
    layout: HipLayout
    gov_config: GovernorConfig
    sim_config: SimConfig
    controller: ControllerKind
    pd_gains: PdGains | None
    Qu: np.ndarray
    Qk: np.ndarray
    n_nodes_forces: int


def _merge_section(raw: dict, section: str) -> dict:
    defaults = dict(_DEFAULTS[section])
    given = raw.get(section, {})
    if not isinstance(given, dict):
        raise ScenarioError(f"section '{section}' must be an object")
    unknown = set(given) - set(defaults)
    if unknown:
        raise ScenarioError(f"unknown keys in '{section}': {sorted(unknown)}")
    defaults.update(given)
    return defaults


def _number(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"'{name}' must be a number, got {value!r}")
    return float(value)


def _integer(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"'{name}' must be an integer, got {value!r}")
    return int(value)


def _matrix(value, rows: int, cols: int, name: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"'{name}' is not numeric: {exc}") from None
    if arr.shape != (rows, cols):
        raise ScenarioError(f"'{name}' must be a {rows}x{cols} matrix, got shape {arr.shape}")
    return arr


def _vector(value, length: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float).reshape(-1)
    if arr.shape[0] != length:
        raise ScenarioError(f"'{name}' must have {length} entries")
    return arr


def parse_scenario(document: dict, name: str = "scenario") -> Scenario:
    if not isinstance(document, dict):
        raise ScenarioError("scenario document must be a JSON object")
    unknown = set(document) - set(_DEFAULTS)
    if unknown:
        raise ScenarioError(f"unknown top-level sections: {sorted(unknown)}")

    try:
        gait_raw = _merge_section(document, "gait")
        horizon = _merge_section(document, "horizon")
        robot = _merge_section(document, "robot")
        weights = _merge_section(document, "weights")
        gov_raw = _merge_section(document, "governor")
        ctrl_raw = _merge_section(document, "controller")
        sim_raw = _merge_section(document, "sim")

        kind_name = str(gait_raw["kind"]).lower()
        try:
            kind = GaitKind(kind_name)
        except ValueError:
            raise ScenarioError(f"unknown gait kind '{gait_raw['kind']}'") from None
        cycle = _number(gait_raw["cycle_time"], "gait.cycle_time")
        duty = _number(gait_raw["duty_factor"], "gait.duty_factor")
        if kind is GaitKind.TROT:
            gait_spec = GaitSpec.trot(cycle, duty)
        elif kind is GaitKind.PACE:
            gait_spec = GaitSpec.pace(cycle, duty)
        else:
            gait_spec = GaitSpec.stand(cycle)

        sample_time = _number(horizon["sample_time"], "horizon.sample_time")
        n_ref = _integer(horizon["n_nodes_ref"], "horizon.n_nodes_ref")
        n_nmpc = _integer(horizon["n_nodes_nmpc"], "horizon.n_nodes_nmpc")
        if not 1 <= n_nmpc <= n_ref:
            raise ScenarioError("horizon.n_nodes_nmpc must lie in [1, n_nodes_ref]")

        mass = _number(robot["mass"], "robot.mass")
        com_height = _number(robot["com_height"], "robot.com_height")
        hips = _matrix(robot["hip_offsets"], 4, 2, "robot.hip_offsets")

        lip_params = LipParams(
            sample_time=sample_time,
            n_nodes=n_ref,
            com_height=com_height,
            Qp=_matrix(weights["Qp"], 2, 2, "weights.Qp"),
            Qv=_matrix(weights["Qv"], 2, 2, "weights.Qv"),
            Qw=_matrix(weights["Qw"], 2, 2, "weights.Qw"),
            Qs_quad=_matrix(weights["Qs_quad"], 2, 2, "weights.Qs_quad"),
            Qs_lin=_vector(weights["Qs_lin"], 2, "weights.Qs_lin"),
        )
        layout = HipLayout(hip_offsets=hips, stance_height=com_height)

        mode_name = str(gov_raw["goal_mode"]).lower()
        try:
            goal_mode = GoalMode(mode_name)
        except ValueError:
            raise ScenarioError(f"unknown goal_mode '{gov_raw['goal_mode']}'") from None
        gov_config = GovernorConfig(
            tol=_number(gov_raw["tol"], "governor.tol"),
            response_time=_number(gov_raw["response_time"], "governor.response_time"),
            v_usr=_vector(gov_raw["v_usr"], 2, "governor.v_usr"),
            goal_mode=goal_mode,
            fixed_goal=_vector(gov_raw["fixed_goal"], 2, "governor.fixed_goal"),
            max_refine_iters=_integer(gov_raw["max_refine_iters"], "governor.max_refine_iters"),
            refine_tol=_number(gov_raw["refine_tol"], "governor.refine_tol"),
            use_timed_formulation=bool(gov_raw["use_timed_formulation"]),
            force_optimize=bool(gov_raw["force_optimize"]),
            n_nodes=n_ref,
            sample_time=sample_time,
        )

        ctrl_name = str(ctrl_raw["kind"]).lower()
        try:
            controller = ControllerKind(ctrl_name)
        except ValueError:
            raise ScenarioError(f"unknown controller kind '{ctrl_raw['kind']}'") from None
        pd_gains = None
        if ctrl_raw["pd_gains"] is not None:
            gains_raw = ctrl_raw["pd_gains"]
            if not isinstance(gains_raw, dict) or set(gains_raw) - {"kp", "kd"}:
                raise ScenarioError("controller.pd_gains must be an object with keys kp, kd")
            pd_gains = PdGains(
                kp=_number(gains_raw.get("kp", 0.0), "pd_gains.kp"),
                kd=_number(gains_raw.get("kd", 0.0), "pd_gains.kd"),
            )
        if controller is ControllerKind.PD and pd_gains is None:
            raise ScenarioError("controller 'pd' requires controller.pd_gains")

        pushes = []
        if not isinstance(sim_raw["pushes"], list):
            raise ScenarioError("sim.pushes must be a list")
        for i, push_raw in enumerate(sim_raw["pushes"]):
            if not isinstance(push_raw, dict) or set(push_raw) - {"start", "duration", "force"}:
                raise ScenarioError(f"sim.pushes[{i}] must have keys start, duration, force")
            pushes.append(
                PushProfile(
                    start=_number(push_raw.get("start", 0.0), f"sim.pushes[{i}].start"),
                    duration=_number(push_raw.get("duration", 0.0), f"sim.pushes[{i}].duration"),
                    force=_vector(push_raw.get("force", [0.0, 0.0]), 2, f"sim.pushes[{i}].force"),
                )
            )
        sim_config = SimConfig(
            duration=_number(sim_raw["duration"], "sim.duration"),
            substeps=_integer(sim_raw["substeps"], "sim.substeps"),
            push_profiles=tuple(pushes),
            lateral_drift_force=_vector(sim_raw["lateral_drift_force"], 2, "sim.lateral_drift_force"),
            mass=mass,
            com_height=com_height,
        )
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None

    return Scenario(
        name=name,
        gait_spec=gait_spec,
        lip_params=lip_params,
        layout=layout,
        gov_config=gov_config,
        sim_config=sim_config,
        controller=controller,
        pd_gains=pd_gains,
        Qu=_matrix(weights["Qu"], 2, 2, "weights.Qu"),
        Qk=_matrix(weights["Qk"], 3, 3, "weights.Qk"),
        n_nodes_forces=n_nmpc,
    )


def list_bundled() -> list[str]:
    root = resources.files("quadref") / "scenarios"
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def bundled_text(name: str) -> str:
    path = resources.files("quadref") / "scenarios" / f"{name}.json"
    if not path.is_file():
        raise ScenarioError(f"no bundled scenario named '{name}' (have: {list_bundled()})")
    return path.read_text()


def load_scenario(path_or_name: str | Path) -> Scenario:
    """Load a scenario from a file path or a bundled scenario name."""
    path = Path(path_or_name)
    if path.is_file():
        text = path.read_text()
        name = path.stem
    else:
        name = str(path_or_name)
        text = bundled_text(name)
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON in scenario '{name}': {exc}") from None
    return parse_scenario(document, name=name)
