"""Continuous-time plant: rotor force/moment maps, drag, actuator lag, RK4.

The moment model sums three contributions per rotor:

* lever arm:   l_i x T_i  (hub offset cross tilted thrust),
* flap spring: K_beta * (sin(alpha_i), sin(beta_i), 0) * |T_i|,
* reaction:    -spin_i * k_m_i * Omega_i^2 about body z.

The reaction term is an addition to the published torque map: motor speed can
only influence yaw through counter-rotating reaction torque, and without it
yaw would be uncontrollable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import quat
from .model import (
    DW,
    UP,
    ActuatorState,
    FlapState,
    RigidBodyState,
    VehicleParams,
)


class SimulationDiverged(RuntimeError):
    """Raised when the integrator produces a non-finite state."""


@dataclass(frozen=True)
class PlantInput:
    """Commanded rotor speeds (rad/s) and normalized cyclic deflections."""

    speed_up: float
    speed_dw: float
    ele_up: float
    ail_up: float
    ele_dw: float
    ail_dw: float


def servo_to_flap(
    delta_ele: float, delta_ail: float, gain_ele: float, gain_ail: float
) -> tuple[float, float, bool]:
    """Linear servo-to-tip-path-plane map alpha = A*d_ele, beta = B*d_ail.

    Inputs outside [-1, 1] are clamped; the returned flag reports whether
    clamping occurred (actuator saturation accounting).
    """
    clamped = False
    if delta_ele > 1.0 or delta_ele < -1.0:
        delta_ele = max(-1.0, min(1.0, delta_ele))
        clamped = True
    if delta_ail > 1.0 or delta_ail < -1.0:
        delta_ail = max(-1.0, min(1.0, delta_ail))
        clamped = True
    return gain_ele * delta_ele, gain_ail * delta_ail, clamped


def rotor_thrust(speed: float, thrust_coeff: float) -> float:
    """Quadratic speed-to-thrust map T = k_f * Omega^2."""
    if speed < 0:
        raise ValueError("rotor speed must be nonnegative")
    return thrust_coeff * speed * speed


def thrust_vector(thrust: float, alpha: float, beta: float) -> np.ndarray:
    """Tilted rotor thrust in the body frame.

    F = |T| * (-sin(alpha), sin(beta), -cos(alpha)cos(beta)); nominal thrust
    points along -z (up).
    """
    if thrust < 0:
        raise ValueError("thrust magnitude must be nonnegative")
    return thrust * np.array(
        [-math.sin(alpha), math.sin(beta), -math.cos(alpha) * math.cos(beta)]
    )


def flap_state(actuators: ActuatorState, params: VehicleParams) -> FlapState:
    """Quasi-static flap angles implied by the actual cyclic deflections."""
    a_up, b_up, _ = servo_to_flap(
        actuators.ele_up, actuators.ail_up, *params.flap_gains(UP)
    )
    a_dw, b_dw, _ = servo_to_flap(
        actuators.ele_dw, actuators.ail_dw, *params.flap_gains(DW)
    )
    return FlapState(a_up, b_up, a_dw, b_dw)


def combined_moment(
    params: VehicleParams,
    thrusts: tuple[float, float],
    flaps: FlapState,
    speeds: tuple[float, float],
) -> np.ndarray:
    """Total body moment: lever arms, flap springs, and reaction torque."""
    m = np.zeros(3)
    k_beta = params.flap_stiffness
    for rotor, thrust, speed in zip((UP, DW), thrusts, speeds):
        if thrust < 0:
            raise ValueError("rotor thrust must be nonnegative")
        alpha, beta = flaps.of(rotor)
        force = thrust_vector(thrust, alpha, beta)
        lever = params.hub_offset(rotor)
        m += np.cross(lever, force)
        m[0] += k_beta * math.sin(alpha) * thrust
        m[1] += k_beta * math.sin(beta) * thrust
        m[2] -= (
            params.spin_dir(rotor)
            * params.reaction_torque_coeff(rotor)
            * speed
            * speed
        )
    return m


def combined_force(
    thrusts: tuple[float, float], flaps: FlapState
) -> np.ndarray:
    """Sum of the two tilted rotor thrust vectors, body frame."""
    f = thrust_vector(thrusts[0], flaps.alpha_up, flaps.beta_up)
    f += thrust_vector(thrusts[1], flaps.alpha_dw, flaps.beta_dw)
    return f


def external_wrench(
    v_body: np.ndarray, params: VehicleParams
) -> tuple[np.ndarray, np.ndarray]:
    """Linear-in-velocity fuselage and rotor drag force and torque."""
    lateral = np.array([v_body[0], v_body[1], 0.0])
    force = -params.body_drag_linear * v_body - params.rotor_drag_linear * lateral
    # Rotor drag split evenly between the hubs for the torque contribution.
    per_hub = -0.5 * params.rotor_drag_linear * lateral
    torque = np.cross(params.hub_offset_up, per_hub) + np.cross(
        params.hub_offset_dw, per_hub
    )
    return force, torque


def actuator_step(
    state: ActuatorState,
    command: PlantInput,
    dt: float,
    params: VehicleParams,
) -> tuple[ActuatorState, bool]:
    """Advance actuator lags one step.

    Cyclic channels: first-order lag toward the clamped command, then a slew
    rate limit, then a hard [-1, 1] clamp.  Motors: first-order lag clamped to
    [0, motor_speed_max].  Returns (new state, saturation flag).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    saturated = False
    servo_gain = 1.0 - math.exp(-dt / params.servo_time_constant)
    motor_gain = 1.0 - math.exp(-dt / params.motor_time_constant)
    max_step = params.servo_rate_limit * dt

    def cyclic(actual: float, cmd: float) -> float:
        nonlocal saturated
        if cmd > 1.0 or cmd < -1.0:
            cmd = max(-1.0, min(1.0, cmd))
            saturated = True
        step = servo_gain * (cmd - actual)
        step = max(-max_step, min(max_step, step))
        out = actual + step
        if out >= 1.0 or out <= -1.0:
            out = max(-1.0, min(1.0, out))
            saturated = True
        return out

    def motor(actual: float, cmd: float) -> float:
        cmd = max(0.0, min(params.motor_speed_max, cmd))
        return max(0.0, actual + motor_gain * (cmd - actual))

    return (
        ActuatorState(
            speed_cmd_up=command.speed_up,
            speed_cmd_dw=command.speed_dw,
            speed_up=motor(state.speed_up, command.speed_up),
            speed_dw=motor(state.speed_dw, command.speed_dw),
            ele_cmd_up=command.ele_up,
            ail_cmd_up=command.ail_up,
            ele_cmd_dw=command.ele_dw,
            ail_cmd_dw=command.ail_dw,
            ele_up=cyclic(state.ele_up, command.ele_up),
            ail_up=cyclic(state.ail_up, command.ail_up),
            ele_dw=cyclic(state.ele_dw, command.ele_dw),
            ail_dw=cyclic(state.ail_dw, command.ail_dw),
        ),
        saturated,
    )


class PlantCore:
    """Scalar-unpacked plant derivative and RK4 step.

    Same physics as `derivative`/`integrate_step` composed from the public
    maps, but written in plain floats: the integrator runs at 1 kHz and the
    small-array numpy overhead dominates otherwise.  Equivalence with the
    composed path is covered by tests.
    """

    def __init__(self, params: VehicleParams):
        self.params = params
        self.mass = params.mass
        self.g = params.gravity
        self.k_beta = params.flap_stiffness
        self.kf_up = params.thrust_coeff_up
        self.kf_dw = params.thrust_coeff_dw
        self.km_up = params.spin_dir_up * params.reaction_torque_coeff_up
        self.km_dw = params.spin_dir_dw * params.reaction_torque_coeff_dw
        self.gain_eu, self.gain_au = params.flap_gains(UP)
        self.gain_ed, self.gain_ad = params.flap_gains(DW)
        self.l_up = tuple(params.hub_offset_up)
        self.l_dw = tuple(params.hub_offset_dw)
        self.drag = tuple(params.body_drag_linear)
        self.k_rot = params.rotor_drag_linear
        self.j = tuple(tuple(row) for row in params.inertia)
        self.j_inv = tuple(tuple(row) for row in np.linalg.inv(params.inertia))

    def derivative(self, p, v, q, w, act: ActuatorState):
        """All inputs/outputs are flat float tuples."""
        a_up = self.gain_eu * min(1.0, max(-1.0, act.ele_up))
        b_up = self.gain_au * min(1.0, max(-1.0, act.ail_up))
        a_dw = self.gain_ed * min(1.0, max(-1.0, act.ele_dw))
        b_dw = self.gain_ad * min(1.0, max(-1.0, act.ail_dw))
        t_up = self.kf_up * act.speed_up * act.speed_up
        t_dw = self.kf_dw * act.speed_dw * act.speed_dw

        sau, sbu = math.sin(a_up), math.sin(b_up)
        sad, sbd = math.sin(a_dw), math.sin(b_dw)
        f_up = (-t_up * sau, t_up * sbu, -t_up * math.cos(a_up) * math.cos(b_up))
        f_dw = (-t_dw * sad, t_dw * sbd, -t_dw * math.cos(a_dw) * math.cos(b_dw))

        # body velocity (R^T v) and drag wrench
        qw, qx, qy, qz = q
        vx, vy, vz = v
        tx = 2.0 * (qy * vz - qz * vy)
        ty = 2.0 * (qz * vx - qx * vz)
        tz = 2.0 * (qx * vy - qy * vx)
        vbx = vx - qw * tx + qy * tz - qz * ty
        vby = vy - qw * ty + qz * tx - qx * tz
        vbz = vz - qw * tz + qx * ty - qy * tx
        fdx = -(self.drag[0] + self.k_rot) * vbx
        fdy = -(self.drag[1] + self.k_rot) * vby
        fdz = -self.drag[2] * vbz
        hx, hy = -0.5 * self.k_rot * vbx, -0.5 * self.k_rot * vby

        fx = f_up[0] + f_dw[0] + fdx
        fy = f_up[1] + f_dw[1] + fdy
        fz = f_up[2] + f_dw[2] + fdz

        # inertial acceleration: g + R f / m
        tx = 2.0 * (qy * fz - qz * fy)
        ty = 2.0 * (qz * fx - qx * fz)
        tz = 2.0 * (qx * fy - qy * fx)
        inv_m = 1.0 / self.mass
        av = (
            (fx + qw * tx + qy * tz - qz * ty) * inv_m,
            (fy + qw * ty + qz * tx - qx * tz) * inv_m,
            self.g + (fz + qw * tz + qx * ty - qy * tx) * inv_m,
        )

        # moments: lever arms, flap springs, reaction, drag torque
        mx = my = mz = 0.0
        for (lx, ly, lz), (gx, gy, gz) in ((self.l_up, f_up), (self.l_dw, f_dw)):
            mx += ly * gz - lz * gy + ly * 0.0 - lz * hy
            my += lz * gx - lx * gz + lz * hx
            mz += lx * gy - ly * gx + lx * hy - ly * hx
        mx += self.k_beta * (sau * t_up + sad * t_dw)
        my += self.k_beta * (sbu * t_up + sbd * t_dw)
        mz -= self.km_up * act.speed_up * act.speed_up
        mz -= self.km_dw * act.speed_dw * act.speed_dw

        wx, wy, wz = w
        j = self.j
        jwx = j[0][0] * wx + j[0][1] * wy + j[0][2] * wz
        jwy = j[1][0] * wx + j[1][1] * wy + j[1][2] * wz
        jwz = j[2][0] * wx + j[2][1] * wy + j[2][2] * wz
        mx -= wy * jwz - wz * jwy
        my -= wz * jwx - wx * jwz
        mz -= wx * jwy - wy * jwx
        ji = self.j_inv
        aw = (
            ji[0][0] * mx + ji[0][1] * my + ji[0][2] * mz,
            ji[1][0] * mx + ji[1][1] * my + ji[1][2] * mz,
            ji[2][0] * mx + ji[2][1] * my + ji[2][2] * mz,
        )

        dq = (
            0.5 * (-qx * wx - qy * wy - qz * wz),
            0.5 * (qw * wx + qy * wz - qz * wy),
            0.5 * (qw * wy + qz * wx - qx * wz),
            0.5 * (qw * wz + qx * wy - qy * wx),
        )
        return v, av, dq, aw

    def rk4_step(self, p, v, q, w, act: ActuatorState, dt: float):
        def add(a, b, s):
            return tuple(x + s * y for x, y in zip(a, b))

        k1 = self.derivative(p, v, q, w, act)
        h = 0.5 * dt
        k2 = self.derivative(
            add(p, k1[0], h), add(v, k1[1], h), add(q, k1[2], h), add(w, k1[3], h), act
        )
        k3 = self.derivative(
            add(p, k2[0], h), add(v, k2[1], h), add(q, k2[2], h), add(w, k2[3], h), act
        )
        k4 = self.derivative(
            add(p, k3[0], dt), add(v, k3[1], dt), add(q, k3[2], dt), add(w, k3[3], dt), act
        )
        s = dt / 6.0
        out = []
        for idx, cur in enumerate((p, v, q, w)):
            out.append(
                tuple(
                    c + s * (k1[idx][i] + 2.0 * k2[idx][i] + 2.0 * k3[idx][i] + k4[idx][i])
                    for i, c in enumerate(cur)
                )
            )
        return out


_core_cache: dict[int, tuple[VehicleParams, PlantCore]] = {}


def plant_core(params: VehicleParams) -> PlantCore:
    """Cached fast core for a parameter set (keyed by object identity)."""
    entry = _core_cache.get(id(params))
    if entry is not None and entry[0] is params:
        return entry[1]
    core = PlantCore(params)
    if len(_core_cache) > 64:
        _core_cache.clear()
    _core_cache[id(params)] = (params, core)
    return core


def derivative(
    state: RigidBodyState, actuators: ActuatorState, params: VehicleParams
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Time derivative (p_dot, v_dot, q_dot, omega_dot) of the rigid body."""
    flaps = flap_state(actuators, params)
    thrusts = (
        rotor_thrust(actuators.speed_up, params.thrust_coeff_up),
        rotor_thrust(actuators.speed_dw, params.thrust_coeff_dw),
    )
    speeds = (actuators.speed_up, actuators.speed_dw)

    v_body = quat.rotate_inverse(state.attitude, state.velocity)
    f_ext, tau_ext = external_wrench(v_body, params)

    force_body = combined_force(thrusts, flaps) + f_ext
    v_dot = params.gravity_vector + quat.rotate(state.attitude, force_body) / params.mass

    moment = combined_moment(params, thrusts, flaps, speeds)
    omega = state.angular_rate
    j_omega = params.inertia @ omega
    omega_dot = np.linalg.solve(
        params.inertia, moment - np.cross(omega, j_omega) + tau_ext
    )
    q_dot = quat.derivative(state.attitude, omega)
    return state.velocity, v_dot, q_dot, omega_dot


def integrate_step(
    state: RigidBodyState,
    actuators: ActuatorState,
    dt: float,
    params: VehicleParams,
) -> RigidBodyState:
    """Classical RK4 step with actuator values held constant over the step.

    The attitude quaternion is renormalized after the step; a non-finite
    result aborts the simulation.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")

    core = plant_core(params)
    p, v, q, w = core.rk4_step(
        tuple(state.position),
        tuple(state.velocity),
        tuple(state.attitude),
        tuple(state.angular_rate),
        actuators,
        dt,
    )

    if not all(math.isfinite(x) for part in (p, v, q, w) for x in part):
        raise SimulationDiverged(
            f"non-finite state after step: p={p}, v={v}, q={q}, omega={w}"
        )
    return RigidBodyState(
        position=np.array(p),
        velocity=np.array(v),
        attitude=quat.normalize(np.array(q)),
        angular_rate=np.array(w),
    )


def hover_rotor_speeds(params: VehicleParams, total_thrust: float | None = None):
    """Rotor speeds balancing collective thrust and reaction torque.

    Solves  k_f_up*w_up^2 + k_f_dw*w_dw^2 = T  with zero net yaw torque.
    Returns (speed_up, speed_dw).
    """
    t = params.hover_thrust if total_thrust is None else total_thrust
    if t < 0:
        raise ValueError("total thrust must be nonnegative")
    # Yaw balance: k_m_up * w_up^2 = k_m_dw * w_dw^2 (opposite spins).
    k_fu, k_fd = params.thrust_coeff_up, params.thrust_coeff_dw
    k_mu, k_md = params.reaction_torque_coeff_up, params.reaction_torque_coeff_dw
    sq_dw = t / (k_fu * k_md / k_mu + k_fd)
    sq_up = k_md / k_mu * sq_dw
    return math.sqrt(sq_up), math.sqrt(sq_dw)


def hover_thrust_split(params: VehicleParams) -> tuple[float, float]:
    """Fraction of total thrust carried by each rotor at yaw trim."""
    w_up, w_dw = hover_rotor_speeds(params, 1.0)
    t_up = rotor_thrust(w_up, params.thrust_coeff_up)
    t_dw = rotor_thrust(w_dw, params.thrust_coeff_dw)
    total = t_up + t_dw
    return t_up / total, t_dw / total


def trim_actuators(params: VehicleParams) -> ActuatorState:
    """Actuator state at the hover fixed point (zero cyclic, trim speeds)."""
    w_up, w_dw = hover_rotor_speeds(params)
    return ActuatorState(
        speed_cmd_up=w_up,
        speed_cmd_dw=w_dw,
        speed_up=w_up,
        speed_dw=w_dw,
        ele_cmd_up=0.0,
        ail_cmd_up=0.0,
        ele_cmd_dw=0.0,
        ail_cmd_dw=0.0,
        ele_up=0.0,
        ail_up=0.0,
        ele_dw=0.0,
        ail_dw=0.0,
    )
