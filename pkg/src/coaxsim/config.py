"""Parameter-file handling.

One human-readable text format (INI-style ``key = value`` lines inside named
sections) carries vehicle parameters, controller gains, and experiment setup.
Floats are serialized with ``repr`` so a save/load round trip reproduces every
field bit-exactly.

Sections and keys are documented in the repository README.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .controller import ControllerGains, SwashConfig
from .model import VehicleParams

DEFAULT_RESOURCE = "default.ini"

_VEHICLE_SCALARS = [
    "mass",
    "gravity",
    "flap_stiffness",
    "flap_gain_ele_up",
    "flap_gain_ail_up",
    "flap_gain_ele_dw",
    "flap_gain_ail_dw",
    "thrust_coeff_up",
    "thrust_coeff_dw",
    "reaction_torque_coeff_up",
    "reaction_torque_coeff_dw",
    "rotor_drag_linear",
    "servo_time_constant",
    "motor_time_constant",
    "servo_rate_limit",
    "motor_speed_max",
    "power_idle",
    "power_thrust_coeff",
    "rotor_diameter",
    "rotor_separation",
]


def _parser() -> configparser.ConfigParser:
    return configparser.ConfigParser(inline_comment_prefixes=("#",))


def _fmt(value: float) -> str:
    return repr(float(value))


def _vec(cfg: configparser.SectionProxy, key: str) -> np.ndarray:
    return np.array([float(x) for x in cfg[key].split()])


def vehicle_from_section(
    cfg: configparser.SectionProxy, defaults: Optional[VehicleParams] = None
) -> VehicleParams:
    """Build vehicle parameters from a section.

    With ``defaults`` given, any missing key falls back to the corresponding
    default field; without it every key is required.
    """

    def scalar(name: str) -> float:
        value = cfg.getfloat(name)
        if value is None:
            if defaults is None:
                raise KeyError(name)
            return getattr(defaults, name)
        return value

    def vec(name: str) -> np.ndarray:
        if cfg.get(name) is None:
            if defaults is None:
                raise KeyError(name)
            return getattr(defaults, name)
        return _vec(cfg, name)

    kwargs = {name: scalar(name) for name in _VEHICLE_SCALARS}
    if any(cfg.get(k) is not None for k in ("inertia_xx", "inertia_yy", "inertia_zz")):
        ixx, iyy, izz = (
            cfg.getfloat(k) for k in ("inertia_xx", "inertia_yy", "inertia_zz")
        )
        ixy = cfg.getfloat("inertia_xy", fallback=0.0)
        ixz = cfg.getfloat("inertia_xz", fallback=0.0)
        iyz = cfg.getfloat("inertia_yz", fallback=0.0)
        inertia = np.array([[ixx, ixy, ixz], [ixy, iyy, iyz], [ixz, iyz, izz]])
    elif defaults is not None:
        inertia = defaults.inertia
    else:
        raise KeyError("inertia_xx")

    def spin(name: str) -> int:
        value = cfg.getint(name)
        if value is None:
            if defaults is None:
                raise KeyError(name)
            return getattr(defaults, name)
        return value

    return VehicleParams(
        inertia=inertia,
        hub_offset_up=vec("hub_offset_up"),
        hub_offset_dw=vec("hub_offset_dw"),
        spin_dir_up=spin("spin_dir_up"),
        spin_dir_dw=spin("spin_dir_dw"),
        body_drag_linear=vec("body_drag_linear"),
        **kwargs,
    )


def vehicle_to_section(params: VehicleParams) -> dict[str, str]:
    out = {name: _fmt(getattr(params, name)) for name in _VEHICLE_SCALARS}
    j = params.inertia
    out["inertia_xx"] = _fmt(j[0, 0])
    out["inertia_yy"] = _fmt(j[1, 1])
    out["inertia_zz"] = _fmt(j[2, 2])
    out["inertia_xy"] = _fmt(j[0, 1])
    out["inertia_xz"] = _fmt(j[0, 2])
    out["inertia_yz"] = _fmt(j[1, 2])
    out["hub_offset_up"] = " ".join(_fmt(x) for x in params.hub_offset_up)
    out["hub_offset_dw"] = " ".join(_fmt(x) for x in params.hub_offset_dw)
    out["body_drag_linear"] = " ".join(_fmt(x) for x in params.body_drag_linear)
    out["spin_dir_up"] = str(params.spin_dir_up)
    out["spin_dir_dw"] = str(params.spin_dir_dw)
    return out


def gains_from_section(
    cfg: configparser.SectionProxy, defaults: Optional[ControllerGains] = None
) -> ControllerGains:
    """Build controller gains from a section.

    With ``defaults`` given, any missing key falls back to the corresponding
    default field; without it every key is required.
    """

    def scalar(name: str) -> float:
        value = cfg.getfloat(name)
        if value is None:
            if defaults is None:
                raise KeyError(name)
            return getattr(defaults, name)
        return value

    def vec(name: str) -> np.ndarray:
        if cfg.get(name) is None:
            if defaults is None:
                raise KeyError(name)
            return getattr(defaults, name)
        return _vec(cfg, name)

    return ControllerGains(
        pos_p=vec("pos_p"),
        vel_p=vec("vel_p"),
        vel_i=vec("vel_i"),
        vel_d=vec("vel_d"),
        vel_i_limit=scalar("vel_i_limit"),
        vel_d_filter_tau=scalar("vel_d_filter_tau"),
        att_p=scalar("att_p"),
        rate_p=vec("rate_p"),
        rate_i=vec("rate_i"),
        rate_d=vec("rate_d"),
        rate_i_limit=scalar("rate_i_limit"),
        rate_d_filter_tau=scalar("rate_d_filter_tau"),
        pos_loop_rate=scalar("pos_loop_rate"),
        att_loop_rate=scalar("att_loop_rate"),
    )


def gains_to_section(gains: ControllerGains) -> dict[str, str]:
    out: dict[str, str] = {}
    for key in ("pos_p", "vel_p", "vel_i", "vel_d", "rate_p", "rate_i", "rate_d"):
        out[key] = " ".join(_fmt(x) for x in getattr(gains, key))
    for key in (
        "vel_i_limit",
        "vel_d_filter_tau",
        "att_p",
        "rate_i_limit",
        "rate_d_filter_tau",
        "pos_loop_rate",
        "att_loop_rate",
    ):
        out[key] = _fmt(getattr(gains, key))
    return out


def load_defaults() -> tuple[VehicleParams, ControllerGains]:
    """Vehicle parameters and gains from the packaged default file."""
    text = (
        resources.files("coaxsim.data").joinpath(DEFAULT_RESOURCE).read_text()
    )
    cp = _parser()
    cp.read_string(text)
    return vehicle_from_section(cp["vehicle"]), gains_from_section(cp["gains"])


def load_params_file(path: str | Path) -> tuple[VehicleParams, ControllerGains]:
    """Read a parameter file; missing sections fall back to the defaults."""
    cp = _parser()
    with open(path) as fh:
        cp.read_file(fh)
    default_vehicle, default_gains = load_defaults()
    vehicle = (
        vehicle_from_section(cp["vehicle"], default_vehicle)
        if cp.has_section("vehicle")
        else default_vehicle
    )
    gains = (
        gains_from_section(cp["gains"], default_gains)
        if cp.has_section("gains")
        else default_gains
    )
    return vehicle, gains


def save_params_file(
    path: str | Path, params: VehicleParams, gains: ControllerGains
) -> None:
    cp = _parser()
    cp["vehicle"] = vehicle_to_section(params)
    cp["gains"] = gains_to_section(gains)
    with open(path, "w") as fh:
        cp.write(fh)


def load_waypoints(path: str | Path) -> tuple[np.ndarray, Optional[np.ndarray]]:
    """Waypoint list: one ``x y z [yaw]`` line per waypoint, '#' comments.

    Returns (positions (N, 3), yaws (N,) or None if no line carries a yaw).
    """
    rows: list[list[float]] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = [float(x) for x in line.split()]
            if len(parts) not in (3, 4):
                raise ValueError(
                    f"{path}:{lineno}: expected 'x y z [yaw]', got {len(parts)} fields"
                )
            rows.append(parts)
    if len(rows) < 2:
        raise ValueError(f"{path}: at least two waypoints required")
    has_yaw = [len(r) == 4 for r in rows]
    if any(has_yaw) and not all(has_yaw):
        raise ValueError(f"{path}: yaw must be given on all waypoints or none")
    positions = np.array([r[:3] for r in rows])
    yaws = np.array([r[3] for r in rows]) if all(has_yaw) else None
    return positions, yaws
