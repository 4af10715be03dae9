"""Cascaded flight control stack and control-allocation mixer.

Loop structure: position P (with velocity feedforward) -> velocity PID (with
acceleration feedforward) -> thrust/attitude extraction from the flat output
-> quaternion attitude P -> body-rate PID -> mixer.

The position/velocity pair runs at ``pos_loop_rate``; attitude, rate, and
mixer run at ``att_loop_rate``.  Both must divide the physics rate; outputs
are held between updates (zero-order hold).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import quat
from .dynamics import PlantInput, rotor_thrust
from .model import DW, UP, RigidBodyState, TrajectorySample, VehicleParams


class ThrustDegenerateError(ValueError):
    """Demanded acceleration equals free fall: thrust direction undefined."""


class SwashConfig(enum.Enum):
    """Which swashplates are active; disabled rotors fly with zero cyclic."""

    DUAL = "dual"
    SINGLE_UPPER = "single-upper"
    SINGLE_LOWER = "single-lower"

    @classmethod
    def parse(cls, text: str) -> "SwashConfig":
        try:
            return cls(text.strip().lower())
        except ValueError:
            names = ", ".join(c.value for c in cls)
            raise ValueError(f"unknown swash config {text!r}; expected one of {names}")

    def active_rotors(self) -> tuple[str, ...]:
        if self is SwashConfig.DUAL:
            return (UP, DW)
        if self is SwashConfig.SINGLE_UPPER:
            return (UP,)
        return (DW,)


@dataclass(frozen=True)
class ControllerGains:
    pos_p: np.ndarray
    vel_p: np.ndarray
    vel_i: np.ndarray
    vel_d: np.ndarray
    vel_i_limit: float
    vel_d_filter_tau: float
    att_p: float
    rate_p: np.ndarray
    rate_i: np.ndarray
    rate_d: np.ndarray
    rate_i_limit: float
    rate_d_filter_tau: float
    pos_loop_rate: float = 100.0
    att_loop_rate: float = 500.0

    def __post_init__(self):
        for name in ("pos_p", "vel_p", "vel_i", "vel_d", "rate_p", "rate_i", "rate_d"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,):
                raise ValueError(f"{name} must be a 3-vector")
            if np.any(v < 0):
                raise ValueError(f"{name} must be nonnegative")
            v.setflags(write=False)
            object.__setattr__(self, name, v)


class Pid:
    """Vector PID with clamped integrator and filtered derivative on the
    measurement (kick-free on setpoint steps)."""

    def __init__(self, kp, ki, kd, i_limit: float, d_filter_tau: float):
        self.kp = np.asarray(kp, dtype=float)
        self.ki = np.asarray(ki, dtype=float)
        self.kd = np.asarray(kd, dtype=float)
        self.i_limit = float(i_limit)
        self.d_filter_tau = float(d_filter_tau)
        self.reset()

    def reset(self) -> None:
        self.integral = np.zeros(3)
        self.d_filtered = np.zeros(3)
        self._prev_meas: np.ndarray | None = None

    def update(self, error: np.ndarray, measurement: np.ndarray, dt: float) -> np.ndarray:
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.integral = np.clip(
            self.integral + self.ki * error * dt, -self.i_limit, self.i_limit
        )
        if self._prev_meas is None:
            raw = np.zeros(3)
        else:
            raw = (measurement - self._prev_meas) / dt
        self._prev_meas = np.array(measurement, dtype=float)
        blend = dt / (dt + self.d_filter_tau)
        self.d_filtered = self.d_filtered + blend * (raw - self.d_filtered)
        # derivative of error = -derivative of measurement for held setpoints
        return self.kp * error + self.integral - self.kd * self.d_filtered


def position_loop(
    pos_ref: np.ndarray, vel_ref: np.ndarray, pos: np.ndarray, kp: np.ndarray
) -> np.ndarray:
    """Desired velocity: feedforward plus proportional position error."""
    return vel_ref + kp * (pos_ref - pos)


def velocity_loop(
    pid: Pid,
    vel_des: np.ndarray,
    vel: np.ndarray,
    accel_ref: np.ndarray,
    dt: float,
) -> np.ndarray:
    """Desired acceleration: feedforward plus velocity PID."""
    return accel_ref + pid.update(vel_des - vel, vel, dt)


def accel_to_attitude(
    accel_des: np.ndarray,
    yaw_des: float,
    mass: float,
    gravity: float,
    eps: float = 1e-6,
) -> tuple[np.ndarray, float]:
    """Desired attitude and collective thrust from the flat outputs.

    Solves m*a_d = m*g + R_d*T_d with the thrust along the body -z axis and
    the yaw angle fixing the heading, Mellinger-style.  Returns (R_d, T_d).
    """
    g_vec = np.array([0.0, 0.0, gravity])
    thrust_dir = accel_des - g_vec  # inertial direction the thrust must take
    norm = np.linalg.norm(thrust_dir)
    if norm * mass <= eps:
        raise ThrustDegenerateError("thrust direction undefined (free-fall demand)")
    z_b = -thrust_dir / norm  # thrust acts along -z of the body
    x_c = np.array([math.cos(yaw_des), math.sin(yaw_des), 0.0])
    y_raw = np.cross(z_b, x_c)
    y_norm = np.linalg.norm(y_raw)
    if y_norm <= eps:
        raise ThrustDegenerateError("yaw reference parallel to thrust axis")
    y_b = y_raw / y_norm
    x_b = np.cross(y_b, z_b)
    r_des = np.column_stack((x_b, y_b, z_b))
    return r_des, mass * norm


def rate_feedforward(
    accel_des: np.ndarray,
    jerk_ref: np.ndarray,
    r_des: np.ndarray,
    gravity: float,
    eps: float = 1e-6,
) -> np.ndarray:
    """Body-rate feedforward from the reference jerk (differential flatness).

    The thrust direction t = (a_d - g) / ||a_d - g|| rotates with angular
    velocity t x dt/dt; expressing that in the desired body frame gives the
    roll/pitch rates needed to follow the acceleration profile (yaw rate of
    the reference heading is not included; the yaw references here are
    constant or slowly varying).
    """
    thrust_dir = accel_des - np.array([0.0, 0.0, gravity])
    norm = np.linalg.norm(thrust_dir)
    if norm <= eps:
        return np.zeros(3)
    t_hat = thrust_dir / norm
    t_hat_dot = (jerk_ref - t_hat * float(t_hat @ jerk_ref)) / norm
    omega_inertial = np.cross(t_hat, t_hat_dot)
    return r_des.T @ omega_inertial


def attitude_loop(q_des: np.ndarray, q: np.ndarray, att_p: float) -> np.ndarray:
    """Desired body rate from the shortest-path quaternion error.

    omega_d = att_p * 2 * vec(q^-1 (x) q_d), sign-canonicalized so the error
    scalar is nonnegative (invariant under sign flips of either quaternion).
    """
    q_err = quat.multiply(quat.conjugate(q), q_des)
    if q_err[0] < 0.0:
        q_err = -q_err
    return att_p * 2.0 * q_err[1:]


def rate_loop(pid: Pid, omega_des: np.ndarray, omega: np.ndarray, dt: float) -> np.ndarray:
    """Desired body moment from the angular-rate PID (unsaturated)."""
    return pid.update(omega_des - omega, omega, dt)


@dataclass
class MixerReport:
    """Saturation bookkeeping for one allocation call."""

    thrust_clamped: bool = False
    motor_limited: bool = False
    saturated_channels: list[tuple[str, float]] = field(default_factory=list)

    @property
    def cyclic_saturated(self) -> bool:
        return bool(self.saturated_channels)

    @property
    def any(self) -> bool:
        return self.thrust_clamped or self.motor_limited or self.cyclic_saturated


def _moment_matrix(
    params: VehicleParams, thrusts: dict[str, float], rotors: tuple[str, ...]
) -> np.ndarray:
    """Map from shared (sin(alpha), sin(beta)) to (M_x, M_y) for the given
    active rotors, linearized at the current per-rotor thrusts."""
    k_beta = params.flap_stiffness
    spring = sum(thrusts[r] for r in rotors) * k_beta
    lever = sum(-params.hub_offset(r)[2] * thrusts[r] for r in rotors)
    return np.array([[spring, lever], [lever, spring]])


def mixer(
    thrust_des: float,
    moment_des: np.ndarray,
    swash: SwashConfig,
    params: VehicleParams,
) -> tuple[PlantInput, MixerReport]:
    """Translate (T_d, M_d) into rotor speed and cyclic servo commands.

    Thrust and yaw are allocated through the rotor speeds (counter-rotating
    reaction torque), roll and pitch through the cyclic channels by inverting
    the moment map at the commanded thrusts.  In DUAL mode both swashplates
    receive the same signal (equal flap angles for equal gains); in SINGLE
    modes the sole active rotor absorbs the entire demand.
    """
    if thrust_des < 0:
        raise ValueError("thrust command must be nonnegative")
    report = MixerReport()

    # (a) collective thrust and yaw via Omega^2.
    k_fu, k_fd = params.thrust_coeff_up, params.thrust_coeff_dw
    k_mu = params.spin_dir_up * params.reaction_torque_coeff_up
    k_md = params.spin_dir_dw * params.reaction_torque_coeff_dw
    a = np.array([[k_fu, k_fd], [-k_mu, -k_md]])
    sq = np.linalg.solve(a, np.array([thrust_des, moment_des[2]]))
    if sq[0] < 0 or sq[1] < 0:
        sq = np.maximum(sq, 0.0)
        report.thrust_clamped = True
    speeds = np.sqrt(sq)
    if np.any(speeds > params.motor_speed_max):
        speeds = np.minimum(speeds, params.motor_speed_max)
        report.motor_limited = True
    speed = {UP: speeds[0], DW: speeds[1]}
    thrust = {
        UP: rotor_thrust(speed[UP], k_fu),
        DW: rotor_thrust(speed[DW], k_fd),
    }

    # (b) roll/pitch via cyclic, shared across the active rotors.
    rotors = swash.active_rotors()
    g = _moment_matrix(params, thrust, rotors)
    det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
    if abs(det) < 1e-12:
        sin_ab = np.zeros(2)
        if abs(moment_des[0]) > 0 or abs(moment_des[1]) > 0:
            report.saturated_channels.append(("cyclic", math.inf))
    else:
        sin_ab = np.linalg.solve(g, moment_des[:2])

    def angle(s: float) -> float:
        return math.asin(max(-1.0, min(1.0, s)))

    alpha, beta = angle(sin_ab[0]), angle(sin_ab[1])

    cyclic = {UP: (0.0, 0.0), DW: (0.0, 0.0)}
    for rotor in rotors:
        gain_ele, gain_ail = params.flap_gains(rotor)
        d_ele = alpha / gain_ele if gain_ele > 0 else 0.0
        d_ail = beta / gain_ail if gain_ail > 0 else 0.0
        for name, value in ((f"ele_{rotor}", d_ele), (f"ail_{rotor}", d_ail)):
            if abs(value) > 1.0:
                report.saturated_channels.append((name, abs(value)))
        cyclic[rotor] = (
            max(-1.0, min(1.0, d_ele)),
            max(-1.0, min(1.0, d_ail)),
        )

    command = PlantInput(
        speed_up=speed[UP],
        speed_dw=speed[DW],
        ele_up=cyclic[UP][0],
        ail_up=cyclic[UP][1],
        ele_dw=cyclic[DW][0],
        ail_dw=cyclic[DW][1],
    )
    return command, report


class CascadedController:
    """Stateful cascade running the loops at their configured rates against a
    fixed physics step, holding outputs between updates."""

    def __init__(
        self,
        gains: ControllerGains,
        params: VehicleParams,
        swash: SwashConfig,
        physics_dt: float,
    ):
        self.gains = gains
        self.params = params
        self.swash = swash
        self.physics_dt = physics_dt
        self.pos_div = self._divider(gains.pos_loop_rate, physics_dt)
        self.att_div = self._divider(gains.att_loop_rate, physics_dt)
        self.vel_pid = Pid(
            gains.vel_p,
            gains.vel_i,
            gains.vel_d,
            gains.vel_i_limit,
            gains.vel_d_filter_tau,
        )
        self.rate_pid = Pid(
            gains.rate_p,
            gains.rate_i,
            gains.rate_d,
            gains.rate_i_limit,
            gains.rate_d_filter_tau,
        )
        self.reset()

    @staticmethod
    def _divider(rate: float, physics_dt: float) -> int:
        div = 1.0 / (rate * physics_dt)
        if abs(div - round(div)) > 1e-9 or round(div) < 1:
            raise ValueError(
                f"loop rate {rate} Hz must divide the physics rate "
                f"{1.0 / physics_dt:.0f} Hz"
            )
        return int(round(div))

    def reset(self) -> None:
        self.vel_pid.reset()
        self.rate_pid.reset()
        self._q_des = quat.IDENTITY.copy()
        self._thrust_des = self.params.hover_thrust
        self._omega_ff = np.zeros(3)
        self._moment_des = np.zeros(3)
        self._command = PlantInput(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        self._report = MixerReport()

    @property
    def last_thrust_des(self) -> float:
        return self._thrust_des

    @property
    def last_moment_des(self) -> np.ndarray:
        return self._moment_des

    @property
    def last_report(self) -> MixerReport:
        return self._report

    def update(
        self, step_index: int, state: RigidBodyState, reference: TrajectorySample
    ) -> PlantInput:
        """Advance whichever loops are due at this physics step and return the
        (possibly held) plant command."""
        if step_index % self.pos_div == 0:
            dt = self.pos_div * self.physics_dt
            vel_des = position_loop(
                reference.position, reference.velocity, state.position, self.gains.pos_p
            )
            accel_des = velocity_loop(
                self.vel_pid, vel_des, state.velocity, reference.acceleration, dt
            )
            try:
                r_des, thrust_des = accel_to_attitude(
                    accel_des, reference.yaw, self.params.mass, self.params.gravity
                )
            except ThrustDegenerateError:
                thrust_des = self._thrust_des  # hold previous attitude and thrust
            else:
                self._q_des = quat.from_matrix(r_des)
                self._omega_ff = rate_feedforward(
                    accel_des, reference.jerk, r_des, self.params.gravity
                )
            self._thrust_des = thrust_des

        if step_index % self.att_div == 0:
            dt = self.att_div * self.physics_dt
            omega_des = self._omega_ff + attitude_loop(
                self._q_des, state.attitude, self.gains.att_p
            )
            self._moment_des = rate_loop(
                self.rate_pid, omega_des, state.angular_rate, dt
            )
            self._command, self._report = mixer(
                self._thrust_des, self._moment_des, self.swash, self.params
            )
        return self._command
