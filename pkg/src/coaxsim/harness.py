"""Experiment orchestration: closed-loop runs, comparisons, sweeps, bench.

Runs are deterministic: for a given configuration and seed, the telemetry is
bit-identical between invocations.  Optional zero-mean Gaussian noise on the
state fed back to the controller (off by default) is drawn from a seeded
generator.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import config as config_io
from . import dynamics, quat
from .controller import CascadedController, ControllerGains, SwashConfig
from .metrics import (
    DIVERGENCE_THRESHOLD,
    MetricsReport,
    TelemetryLog,
    TELEMETRY_COLUMNS,
    compute_metrics,
    power_draw,
)
from .model import DW, UP, FlapState, RigidBodyState, VehicleParams, validate_params
from .trajectory import ParametricTrajectory, PolySegmentTrajectory, Shape, min_snap

Trajectory = Union[ParametricTrajectory, PolySegmentTrajectory]


@dataclass(frozen=True)
class ExperimentConfig:
    params: VehicleParams
    gains: ControllerGains
    swash: SwashConfig
    trajectory: Trajectory
    duration: float
    physics_dt: float = 0.001
    seed: int = 0
    noise_pos_std: float = 0.0
    noise_vel_std: float = 0.0
    noise_rate_std: float = 0.0
    metrics_start: Optional[float] = None  # default: ramp end + 2 s
    label: str = "run"

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.physics_dt <= 0:
            raise ValueError("physics_dt must be positive")

    @property
    def window(self) -> tuple[float, float]:
        if self.metrics_start is not None:
            return (self.metrics_start, self.duration)
        ramp = getattr(self.trajectory, "ramp_time", 0.0)
        return (min(ramp + 2.0, 0.5 * self.duration), self.duration)


def run_experiment(config: ExperimentConfig) -> tuple[MetricsReport, TelemetryLog]:
    """Execute one closed-loop run and aggregate its metrics.

    The vehicle starts airborne at the trajectory start point, at the hover
    fixed point.  A position error beyond the divergence threshold (or a
    non-finite state) stops the run early with completion = False.
    """
    params = config.params
    report = validate_params(params)
    if not report:
        raise ValueError(f"invalid vehicle parameters: {report.violations}")

    dt = config.physics_dt
    n_steps = int(round(config.duration / dt))
    controller = CascadedController(config.gains, params, config.swash, dt)

    start = config.trajectory.sample(0.0)
    state = RigidBodyState.at_rest(position=start.position)
    actuators = dynamics.trim_actuators(params)

    noisy = (
        config.noise_pos_std > 0
        or config.noise_vel_std > 0
        or config.noise_rate_std > 0
    )
    rng = np.random.default_rng(config.seed)

    rows = np.zeros((n_steps, len(TELEMETRY_COLUMNS)))
    aborted = False
    filled = 0
    for i in range(n_steps):
        t = i * dt
        ref = config.trajectory.sample(t)

        measured = state
        if noisy:
            measured = RigidBodyState(
                position=state.position + rng.normal(0.0, 1.0, 3) * config.noise_pos_std,
                velocity=state.velocity + rng.normal(0.0, 1.0, 3) * config.noise_vel_std,
                attitude=state.attitude,
                angular_rate=state.angular_rate
                + rng.normal(0.0, 1.0, 3) * config.noise_rate_std,
            )
        command = controller.update(i, measured, ref)
        total_thrust = dynamics.rotor_thrust(
            actuators.speed_up, params.thrust_coeff_up
        ) + dynamics.rotor_thrust(actuators.speed_dw, params.thrust_coeff_dw)
        power = power_draw(total_thrust, params)
        saturated = 1.0 if controller.last_report.any else 0.0

        moment_des = controller.last_moment_des
        rows[i] = (
            t,
            *state.position,
            *state.velocity,
            *state.attitude,
            *state.angular_rate,
            *ref.position,
            actuators.ele_up,
            actuators.ail_up,
            actuators.ele_dw,
            actuators.ail_dw,
            actuators.speed_up,
            actuators.speed_dw,
            controller.last_thrust_des,
            moment_des[0],
            moment_des[1],
            moment_des[2],
            power,
            saturated,
        )
        filled = i + 1

        error = np.linalg.norm(state.position - ref.position)
        if error > DIVERGENCE_THRESHOLD:
            aborted = True
            break

        actuators, servo_sat = dynamics.actuator_step(actuators, command, dt, params)
        if servo_sat:
            rows[i, TELEMETRY_COLUMNS.index("saturated")] = 1.0
        try:
            state = dynamics.integrate_step(state, actuators, dt, params)
        except dynamics.SimulationDiverged:
            aborted = True
            break

    log = TelemetryLog(data=rows[:filled], aborted=aborted, window=config.window)
    metrics = compute_metrics(log, mass_grams=params.mass * 1000.0)
    return metrics, log


def compare_configs(
    base: ExperimentConfig, swash_configs: Sequence[SwashConfig]
) -> list[tuple[SwashConfig, MetricsReport]]:
    """Run the identical scenario once per swashplate configuration.

    Controller gains and every other setting are kept identical; only the
    allocation changes.
    """
    if len(swash_configs) < 2:
        raise ValueError("need at least two configurations to compare")
    results = []
    for swash in swash_configs:
        cfg = replace(base, swash=swash, label=f"{base.label}-{swash.value}")
        metrics, _ = run_experiment(cfg)
        results.append((swash, metrics))
    return results


def comparison_table(results: Sequence[tuple[SwashConfig, MetricsReport]]) -> str:
    """Delimited comparison table with deltas relative to the first column."""
    keys = [
        "rmse_m",
        "mae_m",
        "roll_control_min",
        "roll_control_max",
        "pitch_control_min",
        "pitch_control_max",
        "avg_power_w",
        "max_power_w",
        "efficiency_g_per_w",
        "completion",
        "saturation_count",
    ]
    header = ["metric"] + [swash.value for swash, _ in results]
    base_metrics = results[0][1].as_dict()
    lines = [",".join(header)]
    for key in keys:
        row = [key]
        for _, metrics in results:
            row.append(repr(metrics.as_dict()[key]))
        lines.append(",".join(row))
    for key in ("rmse_m", "mae_m", "avg_power_w"):
        base_val = float(base_metrics[key])
        row = [f"{key}_rel_delta"]
        for _, metrics in results:
            val = float(metrics.as_dict()[key])
            row.append(
                repr((val - base_val) / base_val) if base_val != 0 else "nan"
            )
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def resolve_config_path(config: ExperimentConfig, path: str):
    """Resolve a dotted parameter path ('params.flap_stiffness',
    'trajectory.v_max', 'duration') against an experiment config."""
    obj = config
    parts = path.split(".")
    for part in parts[:-1]:
        if not hasattr(obj, part):
            raise AttributeError(f"cannot resolve {path!r}: no field {part!r}")
        obj = getattr(obj, part)
    if not hasattr(obj, parts[-1]):
        raise AttributeError(f"cannot resolve {path!r}: no field {parts[-1]!r}")
    return getattr(obj, parts[-1])


def _replace_path(config: ExperimentConfig, path: str, value) -> ExperimentConfig:
    parts = path.split(".")

    def rebuild(obj, remaining: list[str]):
        if len(remaining) == 1:
            return replace(obj, **{remaining[0]: value})
        child = getattr(obj, remaining[0])
        return replace(obj, **{remaining[0]: rebuild(child, remaining[1:])})

    return rebuild(config, parts)


def sweep(
    config: ExperimentConfig, param_path: str, values: Sequence[float]
) -> list[tuple[float, MetricsReport]]:
    """One run per grid value of the dotted parameter path."""
    if len(values) == 0:
        raise ValueError("value grid must be non-empty")
    resolve_config_path(config, param_path)  # fail before any run
    results = []
    for value in values:
        cfg = _replace_path(config, param_path, value)
        cfg = replace(cfg, label=f"{config.label}-{param_path}={value}")
        metrics, _ = run_experiment(cfg)
        results.append((value, metrics))
    return results


def sweep_table(param_path: str, results: Sequence[tuple[float, MetricsReport]]) -> str:
    keys = list(results[0][1].as_dict().keys())
    lines = [",".join([param_path] + keys)]
    for value, metrics in results:
        d = metrics.as_dict()
        lines.append(",".join([repr(value)] + [repr(d[k]) for k in keys]))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Torque bench
# ---------------------------------------------------------------------------


def max_cyclic_torque(
    params: VehicleParams, total_thrust: float, swash: SwashConfig
) -> float:
    """Maximum roll moment available from full cyclic deflection at a fixed
    collective thrust (rotor speeds at yaw trim).

    Both swashplates of the dual configuration receive identical signals; the
    maximum is taken over the command corners, evaluated through the full
    moment map.
    """
    w_up, w_dw = dynamics.hover_rotor_speeds(params, total_thrust)
    thrusts = (
        dynamics.rotor_thrust(w_up, params.thrust_coeff_up),
        dynamics.rotor_thrust(w_dw, params.thrust_coeff_dw),
    )
    active = swash.active_rotors()
    best = 0.0
    for d_ele, d_ail in itertools.product((-1.0, 1.0), repeat=2):
        a_up, b_up, _ = dynamics.servo_to_flap(
            d_ele if UP in active else 0.0,
            d_ail if UP in active else 0.0,
            *params.flap_gains(UP),
        )
        a_dw, b_dw, _ = dynamics.servo_to_flap(
            d_ele if DW in active else 0.0,
            d_ail if DW in active else 0.0,
            *params.flap_gains(DW),
        )
        moment = dynamics.combined_moment(
            params, thrusts, FlapState(a_up, b_up, a_dw, b_dw), (w_up, w_dw)
        )
        best = max(best, abs(moment[0]))
    return best


@dataclass(frozen=True)
class BenchResult:
    thrust_levels: np.ndarray
    torque: dict[SwashConfig, np.ndarray]  # max torque per config per level

    def linear_fit(self, swash: SwashConfig) -> tuple[float, float, float]:
        """(slope, intercept, R^2) of max torque vs thrust."""
        x, y = self.thrust_levels, self.torque[swash]
        slope, intercept = np.polyfit(x, y, 1)
        fitted = slope * x + intercept
        ss_res = float(np.sum((y - fitted) ** 2))
        ss_tot = float(np.sum((y - np.mean(y)) ** 2))
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
        return float(slope), float(intercept), r2

    def mean_ratio(self, num: SwashConfig, den: SwashConfig) -> float:
        return float(np.mean(self.torque[num] / self.torque[den]))

    def table(self) -> str:
        configs = list(self.torque.keys())
        lines = [",".join(["thrust_n"] + [c.value for c in configs])]
        for i, t in enumerate(self.thrust_levels):
            lines.append(
                ",".join([repr(float(t))] + [repr(float(self.torque[c][i])) for c in configs])
            )
        return "\n".join(lines) + "\n"


def bench_torque(
    params: VehicleParams, thrust_levels: Optional[Sequence[float]] = None
) -> BenchResult:
    """Reproduce the fixed-thrust, full-deflection torque bench for all three
    swashplate configurations."""
    if thrust_levels is None:
        hover = params.hover_thrust
        thrust_levels = np.linspace(0.4 * hover, 1.6 * hover, 5)
    levels = np.asarray(thrust_levels, dtype=float)
    torque = {
        swash: np.array([max_cyclic_torque(params, t, swash) for t in levels])
        for swash in SwashConfig
    }
    return BenchResult(thrust_levels=levels, torque=torque)


# ---------------------------------------------------------------------------
# Experiment config files
# ---------------------------------------------------------------------------


def load_experiment_file(path: str | Path) -> ExperimentConfig:
    """Build an ExperimentConfig from an INI file.

    The [experiment] section defines the scenario; [vehicle] and [gains]
    sections override the packaged defaults when present.  Keys are
    documented in the repository README.
    """
    params, gains = config_io.load_params_file(path)
    cp = config_io._parser()
    with open(path) as fh:
        cp.read_file(fh)
    if not cp.has_section("experiment"):
        raise ValueError(f"{path}: missing [experiment] section")
    exp = cp["experiment"]

    if exp.get("takeoff_mass") is not None:
        params = params.with_mass(exp.getfloat("takeoff_mass"))

    kind = exp.get("trajectory", "hover").strip().lower()
    center = np.array(
        [float(x) for x in exp.get("center", "0 0 -1.5").split()]
    )
    trajectory: Trajectory
    if kind in ("hover", "circle", "figure8"):
        trajectory = ParametricTrajectory(
            shape=Shape(kind),
            v_max=exp.getfloat("v_max", fallback=0.0),
            ramp_time=exp.getfloat("ramp_time", fallback=2.0),
            center=center,
            diameter=exp.getfloat("diameter", fallback=5.0),
            width=exp.getfloat("width", fallback=10.0),
            height=exp.getfloat("height", fallback=5.0),
            accel_max=exp.getfloat("accel_max", fallback=7.0),
            yaw=exp.getfloat("yaw", fallback=0.0),
        )
    elif kind == "waypoints":
        wp_file = exp.get("waypoint_file")
        if wp_file is None:
            raise ValueError(f"{path}: waypoint trajectory needs waypoint_file")
        wp_path = Path(wp_file)
        if not wp_path.is_absolute():
            wp_path = Path(path).parent / wp_path
        positions, yaws = config_io.load_waypoints(wp_path)
        if exp.get("segment_durations") is not None:
            durations = [float(x) for x in exp.get("segment_durations").split()]
        else:
            seg_time = exp.getfloat("segment_time", fallback=2.0)
            durations = [seg_time] * (len(positions) - 1)
        trajectory = min_snap(positions, durations, yaws)
    else:
        raise ValueError(f"{path}: unknown trajectory kind {kind!r}")

    duration = exp.getfloat("duration", fallback=None)
    if duration is None:
        if isinstance(trajectory, PolySegmentTrajectory):
            duration = trajectory.total_duration
        else:
            raise ValueError(f"{path}: duration is required")

    metrics_start = exp.getfloat("metrics_start", fallback=None)
    return ExperimentConfig(
        params=params,
        gains=gains,
        swash=SwashConfig.parse(exp.get("swash", "dual")),
        trajectory=trajectory,
        duration=duration,
        physics_dt=exp.getfloat("physics_dt", fallback=0.001),
        seed=exp.getint("seed", fallback=0),
        noise_pos_std=exp.getfloat("noise_pos_std", fallback=0.0),
        noise_vel_std=exp.getfloat("noise_vel_std", fallback=0.0),
        noise_rate_std=exp.getfloat("noise_rate_std", fallback=0.0),
        metrics_start=metrics_start,
        label=Path(path).stem,
    )
