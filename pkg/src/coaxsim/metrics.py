"""Run telemetry, tracking/power metrics, and the hover power model."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .model import VehicleParams

#: Position error beyond which a run is classified as lost control.
DIVERGENCE_THRESHOLD = 3.0  # m

TELEMETRY_COLUMNS = (
    "t",
    "px",
    "py",
    "pz",
    "vx",
    "vy",
    "vz",
    "qw",
    "qx",
    "qy",
    "qz",
    "wx",
    "wy",
    "wz",
    "ref_x",
    "ref_y",
    "ref_z",
    "ele_up",
    "ail_up",
    "ele_dw",
    "ail_dw",
    "speed_up",
    "speed_dw",
    "thrust_cmd",
    "moment_x",
    "moment_y",
    "moment_z",
    "power",
    "saturated",
)


def power_draw(total_thrust: float, params: VehicleParams) -> float:
    """Electrical power model P = a + b * T^(3/2)."""
    if total_thrust < 0:
        raise ValueError("thrust must be nonnegative")
    return params.power_idle + params.power_thrust_coeff * total_thrust**1.5


def fit_power_model(samples: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Least-squares fit of (a, b) in P = a + b * T^(3/2) to (thrust, power)
    samples; exact interpolation for two points."""
    pts = np.asarray(samples, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 2:
        raise ValueError("need at least two (thrust, power) samples")
    basis = np.column_stack((np.ones(len(pts)), pts[:, 0] ** 1.5))
    coeff, *_ = np.linalg.lstsq(basis, pts[:, 1], rcond=None)
    return float(coeff[0]), float(coeff[1])


@dataclass
class TelemetryLog:
    """Column-oriented run log, one row per physics step."""

    data: np.ndarray  # (rows, len(TELEMETRY_COLUMNS))
    aborted: bool = False  # integrator blew up / run stopped early
    window: tuple[float, float] = (0.0, 0.0)  # metrics aggregation window

    def __len__(self) -> int:
        return self.data.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.data[:, TELEMETRY_COLUMNS.index(name)]

    @property
    def time(self) -> np.ndarray:
        return self.data[:, 0]

    @property
    def position(self) -> np.ndarray:
        return self.data[:, 1:4]

    @property
    def reference(self) -> np.ndarray:
        return self.data[:, 14:17]

    @property
    def position_error(self) -> np.ndarray:
        return np.linalg.norm(self.position - self.reference, axis=1)

    def write_csv(self, path) -> None:
        """Write the documented telemetry CSV (deterministic formatting)."""
        with open(path, "w") as fh:
            fh.write(",".join(TELEMETRY_COLUMNS) + "\n")
            for row in self.data:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


@dataclass(frozen=True)
class MetricsReport:
    """Tracking and power metrics over the aggregation window."""

    rmse: float  # m
    mae: float  # m, max absolute position error
    roll_control_min: float  # normalized cyclic, roll-producing channels
    roll_control_max: float
    pitch_control_min: float
    pitch_control_max: float
    avg_power: float  # W
    max_power: float  # W
    efficiency: float  # g / W
    completion: bool
    saturation_count: int
    window: tuple[float, float]

    def as_dict(self) -> dict[str, object]:
        return {
            "rmse_m": self.rmse,
            "mae_m": self.mae,
            "roll_control_min": self.roll_control_min,
            "roll_control_max": self.roll_control_max,
            "pitch_control_min": self.pitch_control_min,
            "pitch_control_max": self.pitch_control_max,
            "avg_power_w": self.avg_power,
            "max_power_w": self.max_power,
            "efficiency_g_per_w": self.efficiency,
            "completion": self.completion,
            "saturation_count": self.saturation_count,
            "window_start_s": self.window[0],
            "window_end_s": self.window[1],
        }

    def write_report(self, path) -> None:
        with open(path, "w") as fh:
            for key, value in self.as_dict().items():
                fh.write(f"{key} = {value!r}\n")


def compute_metrics(
    log: TelemetryLog,
    mass_grams: float,
    divergence_threshold: float = DIVERGENCE_THRESHOLD,
) -> MetricsReport:
    """Aggregate a telemetry log into a metrics report.

    RMSE/MAE are computed on the full 3D position error over the window (the
    trajectories are planar, so vertical error contributes honestly); control
    extrema come from the actual normalized cyclic deflections.  Under the
    flap-spring-dominant torque map the elevator channels produce the roll
    moment and the aileron channels the pitch moment, so the roll columns
    aggregate the elevator deflections and vice versa.
    """
    if len(log) == 0:
        raise ValueError("empty telemetry log")
    t = log.time
    lo, hi = log.window
    mask = (t >= lo) & (t <= hi)
    if not np.any(mask):
        mask = np.ones(len(log), dtype=bool)

    err = log.position_error
    win_err = err[mask]
    rmse = float(np.sqrt(np.mean(win_err**2)))
    mae = float(np.max(win_err))

    roll = np.concatenate([log.column("ele_up")[mask], log.column("ele_dw")[mask]])
    pitch = np.concatenate([log.column("ail_up")[mask], log.column("ail_dw")[mask]])
    power = log.column("power")[mask]
    avg_power = float(np.mean(power))

    diverged = log.aborted or bool(np.any(err > divergence_threshold))
    return MetricsReport(
        rmse=rmse,
        mae=mae,
        roll_control_min=float(np.min(roll)),
        roll_control_max=float(np.max(roll)),
        pitch_control_min=float(np.min(pitch)),
        pitch_control_max=float(np.max(pitch)),
        avg_power=avg_power,
        max_power=float(np.max(power)),
        efficiency=mass_grams / avg_power if avg_power > 0 else float("inf"),
        completion=not diverged,
        saturation_count=int(np.sum(log.column("saturated")[mask] > 0)),
        window=(lo, hi),
    )
