"""Closed-loop 6-DoF simulator for a coaxial bi-copter with swashplate cyclic
pitch control: plant dynamics, cascaded controller with control allocation,
reference trajectories, and an experiment harness."""

from .config import load_defaults, load_params_file, save_params_file
from .controller import CascadedController, ControllerGains, SwashConfig, mixer
from .dynamics import PlantInput, SimulationDiverged, integrate_step
from .harness import (
    ExperimentConfig,
    bench_torque,
    compare_configs,
    load_experiment_file,
    run_experiment,
    sweep,
)
from .metrics import MetricsReport, TelemetryLog, compute_metrics, power_draw
from .model import (
    ActuatorState,
    ControlCommand,
    FlapState,
    RigidBodyState,
    TrajectorySample,
    VehicleParams,
    validate_params,
)
from .trajectory import ParametricTrajectory, PolySegmentTrajectory, Shape, min_snap

__version__ = "0.1.0"
