"""Vehicle domain types, parameter set, and parameter validation.

Frame and sign conventions (the single authoritative statement for the whole
package):

* Inertial frame: x north, y east, z **down** (NED).  The gravity vector is
  ``(0, 0, +g)``.
* Body frame: x forward, y right, z **down** through the rotor axis (FRD).
  At the hover attitude the body axes coincide with the inertial axes and the
  attitude quaternion is the identity.
* Rotor thrust at zero flap is therefore ``(0, 0, -T)`` in the body frame
  (pointing up), exactly as the tilted-thrust-vector map is written:
  ``F = |T| * (-sin(alpha), sin(beta), -cos(alpha)cos(beta))``.
* A rotor hub located *above* the centre of gravity has a hub offset vector
  with a negative z component.

All types are immutable value objects; simulation code replaces rather than
mutates them.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import quat

UP = "up"
DW = "dw"
ROTORS = (UP, DW)


def _vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.shape != (3,):
        raise ValueError(f"expected 3-vector, got shape {a.shape}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class VehicleParams:
    """Physical constants and calibration coefficients of the vehicle.

    All units SI.  Values the source platform does not publish (inertia,
    thrust/torque/drag/power coefficients, actuator time constants) are
    calibration knobs that live in the default parameter file, never in code.
    """

    mass: float  # kg
    inertia: np.ndarray  # 3x3, kg m^2
    gravity: float  # m/s^2, magnitude; acts along +z (down)
    hub_offset_up: np.ndarray  # m, CoG -> upper hub, body frame
    hub_offset_dw: np.ndarray  # m, CoG -> lower hub, body frame
    flap_stiffness: float  # N m per (sin(flap) * N of thrust)
    flap_gain_ele_up: float  # rad per unit normalized elevator command
    flap_gain_ail_up: float
    flap_gain_ele_dw: float
    flap_gain_ail_dw: float
    thrust_coeff_up: float  # N per (rad/s)^2
    thrust_coeff_dw: float
    reaction_torque_coeff_up: float  # N m per (rad/s)^2
    reaction_torque_coeff_dw: float
    spin_dir_up: int  # +1 / -1, sign of rotor angular velocity about body z
    spin_dir_dw: int
    body_drag_linear: np.ndarray  # N per (m/s), diagonal coefficients
    rotor_drag_linear: float  # N per (m/s), lateral rotor drag
    servo_time_constant: float  # s
    motor_time_constant: float  # s
    servo_rate_limit: float  # normalized units / s
    motor_speed_max: float  # rad/s
    power_idle: float  # W           (a of P = a + b T^1.5)
    power_thrust_coeff: float  # W / N^1.5  (b of P = a + b T^1.5)
    rotor_diameter: float = 0.465  # m, descriptive geometry metadata
    rotor_separation: float = 0.079  # m, descriptive geometry metadata

    def __post_init__(self):
        object.__setattr__(self, "inertia", self._freeze_matrix(self.inertia))
        object.__setattr__(self, "hub_offset_up", _vec3(self.hub_offset_up))
        object.__setattr__(self, "hub_offset_dw", _vec3(self.hub_offset_dw))
        object.__setattr__(self, "body_drag_linear", _vec3(self.body_drag_linear))

    @staticmethod
    def _freeze_matrix(m) -> np.ndarray:
        a = np.asarray(m, dtype=float)
        if a.shape != (3, 3):
            raise ValueError(f"expected 3x3 matrix, got shape {a.shape}")
        a.setflags(write=False)
        return a

    @property
    def gravity_vector(self) -> np.ndarray:
        return np.array([0.0, 0.0, self.gravity])

    @property
    def hover_thrust(self) -> float:
        """Total thrust needed to balance weight, N."""
        return self.mass * self.gravity

    def hub_offset(self, rotor: str) -> np.ndarray:
        return self.hub_offset_up if rotor == UP else self.hub_offset_dw

    def thrust_coeff(self, rotor: str) -> float:
        return self.thrust_coeff_up if rotor == UP else self.thrust_coeff_dw

    def reaction_torque_coeff(self, rotor: str) -> float:
        return (
            self.reaction_torque_coeff_up
            if rotor == UP
            else self.reaction_torque_coeff_dw
        )

    def spin_dir(self, rotor: str) -> int:
        return self.spin_dir_up if rotor == UP else self.spin_dir_dw

    def flap_gains(self, rotor: str) -> tuple[float, float]:
        """(elevator, aileron) flap gains for one rotor, rad per unit."""
        if rotor == UP:
            return self.flap_gain_ele_up, self.flap_gain_ail_up
        return self.flap_gain_ele_dw, self.flap_gain_ail_dw

    def with_mass(self, mass: float) -> "VehicleParams":
        return replace(self, mass=mass)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...]

    def __bool__(self) -> bool:
        return self.ok


def validate_params(params: VehicleParams) -> ValidationReport:
    """Check every parameter invariant; returns a report, never raises."""
    bad: list[str] = []

    if not params.mass > 0:
        bad.append("mass > 0")
    if not np.allclose(params.inertia, params.inertia.T, atol=1e-12):
        bad.append("inertia symmetric")
    else:
        eig = np.linalg.eigvalsh(params.inertia)
        if not np.all(eig > 0):
            bad.append("inertia positive definite")
    if not params.gravity > 0:
        bad.append("gravity > 0")
    for name in ("servo_time_constant", "motor_time_constant"):
        if not getattr(params, name) > 0:
            bad.append(f"{name} > 0")
    if not params.flap_stiffness >= 0:
        bad.append("flap_stiffness >= 0")
    for name in (
        "flap_gain_ele_up",
        "flap_gain_ail_up",
        "flap_gain_ele_dw",
        "flap_gain_ail_dw",
    ):
        if not getattr(params, name) >= 0:
            bad.append(f"{name} >= 0")
    for name in (
        "thrust_coeff_up",
        "thrust_coeff_dw",
        "reaction_torque_coeff_up",
        "reaction_torque_coeff_dw",
    ):
        if not getattr(params, name) > 0:
            bad.append(f"{name} > 0")
    if params.spin_dir_up not in (-1, 1) or params.spin_dir_dw not in (-1, 1):
        bad.append("spin directions in {-1, +1}")
    elif params.spin_dir_up == params.spin_dir_dw:
        bad.append("rotor spin directions opposite")
    if not np.all(params.body_drag_linear >= 0):
        bad.append("body_drag_linear >= 0")
    if not params.rotor_drag_linear >= 0:
        bad.append("rotor_drag_linear >= 0")
    if not params.servo_rate_limit > 0:
        bad.append("servo_rate_limit > 0")
    if not params.motor_speed_max > 0:
        bad.append("motor_speed_max > 0")
    if not params.power_idle >= 0:
        bad.append("power_idle >= 0")
    if not params.power_thrust_coeff > 0:
        bad.append("power_thrust_coeff > 0")

    return ValidationReport(ok=not bad, violations=tuple(bad))


@dataclass(frozen=True)
class RigidBodyState:
    """Position/velocity in the inertial frame, attitude body->inertial,
    angular rate in the body frame."""

    position: np.ndarray
    velocity: np.ndarray
    attitude: np.ndarray  # unit quaternion [w, x, y, z]
    angular_rate: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", _vec3(self.position))
        object.__setattr__(self, "velocity", _vec3(self.velocity))
        object.__setattr__(self, "angular_rate", _vec3(self.angular_rate))
        q = np.asarray(self.attitude, dtype=float)
        if q.shape != (4,):
            raise ValueError("attitude must be a length-4 quaternion")
        q.setflags(write=False)
        object.__setattr__(self, "attitude", q)

    @classmethod
    def at_rest(cls, position=(0.0, 0.0, 0.0)) -> "RigidBodyState":
        return cls(
            position=np.asarray(position, dtype=float),
            velocity=np.zeros(3),
            attitude=quat.IDENTITY.copy(),
            angular_rate=np.zeros(3),
        )

    @property
    def rotation_matrix(self) -> np.ndarray:
        return quat.to_matrix(self.attitude)


@dataclass(frozen=True)
class ActuatorState:
    """Commanded and actual rotor speeds / cyclic deflections.

    Actual values track commands through first-order lags; cyclic actuals are
    always inside [-1, 1] and rotor speeds are nonnegative.
    """

    speed_cmd_up: float
    speed_cmd_dw: float
    speed_up: float
    speed_dw: float
    ele_cmd_up: float
    ail_cmd_up: float
    ele_cmd_dw: float
    ail_cmd_dw: float
    ele_up: float
    ail_up: float
    ele_dw: float
    ail_dw: float

    @classmethod
    def at_rest(cls) -> "ActuatorState":
        return cls(*([0.0] * 12))

    def speed(self, rotor: str) -> float:
        return self.speed_up if rotor == UP else self.speed_dw

    def cyclic(self, rotor: str) -> tuple[float, float]:
        """Actual (elevator, aileron) deflection of one rotor."""
        if rotor == UP:
            return self.ele_up, self.ail_up
        return self.ele_dw, self.ail_dw


@dataclass(frozen=True)
class ControlCommand:
    """Collective thrust magnitude (N, >= 0) and desired body moment (N m)."""

    thrust: float
    moment: np.ndarray

    def __post_init__(self):
        if self.thrust < 0:
            raise ValueError("thrust command must be nonnegative")
        object.__setattr__(self, "moment", _vec3(self.moment))


@dataclass(frozen=True)
class FlapState:
    """Tip-path-plane tilt angles of both rotors, radians."""

    alpha_up: float
    beta_up: float
    alpha_dw: float
    beta_dw: float

    def of(self, rotor: str) -> tuple[float, float]:
        if rotor == UP:
            return self.alpha_up, self.beta_up
        return self.alpha_dw, self.beta_dw


@dataclass(frozen=True)
class TrajectorySample:
    """Reference position and first/third derivatives plus desired yaw."""

    time: float
    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    yaw: float = 0.0
    jerk: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "position", _vec3(self.position))
        object.__setattr__(self, "velocity", _vec3(self.velocity))
        object.__setattr__(self, "acceleration", _vec3(self.acceleration))
        jerk = np.zeros(3) if self.jerk is None else self.jerk
        object.__setattr__(self, "jerk", _vec3(jerk))
