"""Reference trajectory generation.

Two families:

* Parametric primitives (hover point, circle, figure-eight) with a smooth
  speed ramp.  The circle is flown at constant arc speed.  The figure-eight is
  a smooth two-lobed curve scaled to the bounding box with a curvature-aware
  speed profile: speed peaks at ``v_max`` through the low-curvature center
  crossing and is reduced inside the lobes so the lateral acceleration stays
  near ``accel_max``.  The centripetal direction reverses through the
  crossing, which makes the crossing the torque-demand peak of the pattern.
* Piecewise degree-7 polynomials through waypoints minimizing integrated
  squared snap, with jerk-level continuity and rest-to-rest boundaries.

Frames are NED: fly at negative z for positive altitude.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.ndimage import gaussian_filter1d

from .model import TrajectorySample


class Shape(enum.Enum):
    HOVER = "hover"
    CIRCLE = "circle"
    FIGURE_EIGHT = "figure8"


def _smoothstep_speed(
    t: float, v_max: float, ramp: float
) -> tuple[float, float, float, float]:
    """C2 ramp of a rate from 0 to `v_max` over `ramp` seconds.

    Returns (integral, rate, rate derivative, rate second derivative) at time
    t; used both for arc speed (circle) and parametric rate (figure-eight).
    """
    if ramp <= 0.0 or t >= ramp:
        head = v_max * ramp / 2.0 if ramp > 0 else 0.0
        return head + v_max * (t - ramp), v_max, 0.0, 0.0
    x = t / ramp
    s = v_max * ramp * (x**3 - 0.5 * x**4)
    v = v_max * (3.0 * x**2 - 2.0 * x**3)
    a = v_max * (6.0 * x - 6.0 * x**2) / ramp
    da = v_max * (6.0 - 12.0 * x) / ramp**2
    return s, v, a, da


@dataclass(frozen=True)
class ParametricTrajectory:
    """Closed-curve reference with a smooth speed ramp.

    ``center`` is the curve centre (circle) or crossing point (figure-eight);
    the curve lies in the horizontal plane through it.  ``v_max`` is the peak
    speed: held constant along the circle, attained at the crossing of the
    figure-eight.  Desired yaw is held constant at ``yaw``.
    """

    shape: Shape
    v_max: float = 0.0
    ramp_time: float = 2.0
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    diameter: float = 5.0  # circle
    width: float = 10.0  # figure-eight bounding box, x extent
    height: float = 5.0  # figure-eight bounding box, y extent
    accel_max: float = 7.0  # figure-eight acceleration budget
    yaw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "shape", Shape(self.shape))
        c = np.asarray(self.center, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        if self.shape is not Shape.HOVER:
            if self.v_max <= 0:
                raise ValueError("v_max must be positive for a moving trajectory")
        if self.shape is Shape.FIGURE_EIGHT:
            if self.accel_max <= 0:
                raise ValueError("accel_max must be positive")
            object.__setattr__(
                self,
                "_eight",
                _TwinLoopEight(self.width, self.height, self.v_max, self.accel_max),
            )

    def sample(self, t: float) -> TrajectorySample:
        if t < 0:
            raise ValueError("time must be nonnegative")
        if self.shape is Shape.HOVER:
            return TrajectorySample(
                time=t,
                position=self.center.copy(),
                velocity=np.zeros(3),
                acceleration=np.zeros(3),
                yaw=self.yaw,
            )
        if self.shape is Shape.CIRCLE:
            s, v, a, a_dot = _smoothstep_speed(t, self.v_max, self.ramp_time)
            r = 0.5 * self.diameter
            theta = s / r
            td, tdd, tddd = v / r, a / r, a_dot / r
            ct, st = math.cos(theta), math.sin(theta)
            radial = np.array([ct, st, 0.0])
            tangent = np.array([-st, ct, 0.0])
            pos = self.center + r * radial
            vel = r * td * tangent
            acc = r * (tdd * tangent - td**2 * radial)
            jerk = r * ((tddd - td**3) * tangent - 3.0 * td * tdd * radial)
            return TrajectorySample(t, pos, vel, acc, self.yaw, jerk)
        eight: _TwinLoopEight = getattr(self, "_eight")
        # Warped time: the ramp scales the phase rate from 0 to its nominal
        # profile, so tau is the phase-profile time already flown.
        tau, r, r_dot, r_ddot = _smoothstep_speed(t, 1.0, self.ramp_time)
        u, om, om1, om2 = eight.phase_at(tau)
        u_dot = om * r
        u_ddot = om1 * om * r * r + om * r_dot
        u_dddot = (
            om2 * om * om * r**3
            + om1 * om1 * om * r**3
            + 3.0 * om1 * om * r * r_dot
            + om * r_ddot
        )
        rel_pos, vel, acc, jerk = eight.at_phase(u, u_dot, u_ddot, u_dddot)
        return TrajectorySample(t, self.center + rel_pos, vel, acc, self.yaw, jerk)


class _TwinLoopEight:
    """Smooth figure-eight with two near-circular lobes meeting at the origin:

        x = (W/2) sin^3(u/2),   y = (H/2) sin(u),   u in [0, 4 pi) per lap.

    The curve is C-infinity; the crossing is traversed vertically and the
    centripetal acceleration reverses smoothly through it.  The speed profile
    is curvature-aware: a smooth minimum of v_max and the lateral-budget speed
    sqrt(a_lat / kappa), refined by periodic forward/backward passes limiting
    the tangential acceleration v dv/ds, then low-pass filtered for bounded
    jerk.  In a tight bounding box the achieved peak speed can fall short of
    v_max: the acceleration budget binds first, as for a real planner.  The
    profile is stored as a periodic phase-rate spline omega(u) plus a
    phase-vs-time inverse over one lap.
    """

    _GRID = 8192
    _LAT_FRACTION = 0.75
    _TAN_FRACTION = 0.85
    _SMOOTH_PHASE = 0.3  # std-dev of the phase-domain jerk filter [rad]

    def __init__(self, width: float, height: float, v_max: float, accel_max: float):
        self.sx = 0.5 * width
        self.sy = 0.5 * height
        u = np.linspace(0.0, 4.0 * math.pi, self._GRID + 1)
        s, c = np.sin(0.5 * u), np.cos(0.5 * u)
        dx = 1.5 * self.sx * s * s * c
        dy = self.sy * np.cos(u)
        ddx = 0.75 * self.sx * (2.0 * s * c * c - s**3)
        ddy = -self.sy * np.sin(u)
        sigma = np.hypot(dx, dy)
        kappa = np.abs(dx * ddy - dy * ddx) / sigma**3
        a_lat = self._LAT_FRACTION * accel_max
        a_tan = self._TAN_FRACTION * accel_max
        speed = v_max * (1.0 + (v_max**2 * kappa / a_lat) ** 4) ** -0.25

        # Periodic forward/backward passes: |v dv/ds| <= a_tan.
        ds = sigma[:-1] * np.diff(u)
        n = self._GRID
        v_sq = speed[:-1] ** 2
        for _ in range(2):
            for i in range(n):  # forward (acceleration limit)
                j = (i + 1) % n
                v_sq[j] = min(v_sq[j], v_sq[i] + 2.0 * a_tan * ds[i])
            for i in range(n - 1, -1, -1):  # backward (braking limit)
                j = (i + 1) % n
                v_sq[i] = min(v_sq[i], v_sq[j] + 2.0 * a_tan * ds[i])
        du = 4.0 * math.pi / n
        v_sq = gaussian_filter1d(v_sq, self._SMOOTH_PHASE / du, mode="wrap")
        speed = np.sqrt(np.append(v_sq, v_sq[0]))
        omega = speed / sigma
        # enforce exact periodicity for the spline
        omega[-1] = omega[0]
        self._omega = CubicSpline(u, omega, bc_type="periodic")
        # time over one lap: t(u) = integral du / omega, inverted to u(t)
        inv = 1.0 / omega
        dt_seg = 0.5 * (inv[1:] + inv[:-1]) * np.diff(u)
        t_grid = np.concatenate(([0.0], np.cumsum(dt_seg)))
        self.lap_time = float(t_grid[-1])
        self._u_of_t = CubicSpline(t_grid, u)

    def phase_at(self, tau: float) -> tuple[float, float, float, float]:
        """Phase, phase rate, and its first/second phase derivatives at
        profile time tau."""
        laps, tau_mod = divmod(tau, self.lap_time)
        u_mod = float(self._u_of_t(tau_mod))
        u = u_mod + 4.0 * math.pi * laps
        return (
            u,
            float(self._omega(u_mod)),
            float(self._omega(u_mod, 1)),
            float(self._omega(u_mod, 2)),
        )

    def at_phase(self, u: float, u_dot: float, u_ddot: float, u_dddot: float):
        s, c = math.sin(0.5 * u), math.cos(0.5 * u)
        su, cu = math.sin(u), math.cos(u)
        p = np.array([self.sx * s**3, self.sy * su, 0.0])
        dp = np.array([1.5 * self.sx * s * s * c, self.sy * cu, 0.0])  # d/du
        ddp = np.array(
            [0.75 * self.sx * (2.0 * s * c * c - s**3), -self.sy * su, 0.0]
        )
        dddp = np.array(
            [0.75 * self.sx * (c**3 - 3.5 * s * s * c), -self.sy * cu, 0.0]
        )
        vel = dp * u_dot
        acc = ddp * u_dot**2 + dp * u_ddot
        jerk = dddp * u_dot**3 + 3.0 * ddp * u_dot * u_ddot + dp * u_dddot
        return p, vel, acc, jerk


# ---------------------------------------------------------------------------
# Minimum-snap piecewise polynomials
# ---------------------------------------------------------------------------

_DEGREE = 7
_NCOEF = _DEGREE + 1


def _deriv_row(tau: float, order: int, duration: float) -> np.ndarray:
    """Row evaluating the order-th derivative of the degree-7 polynomial in
    normalized time tau = t/T at tau, including the 1/T^order chain factor."""
    row = np.zeros(_NCOEF)
    for k in range(order, _NCOEF):
        c = 1.0
        for j in range(order):
            c *= k - j
        row[k] = c * tau ** (k - order)
    return row / duration**order


def _snap_gram(duration: float) -> np.ndarray:
    """Gram matrix of the snap inner product over one segment: the cost is
    coeffs^T Q coeffs = integral of (d^4 p/dt^4)^2 dt."""
    q = np.zeros((_NCOEF, _NCOEF))
    for i in range(4, _NCOEF):
        ci = i * (i - 1) * (i - 2) * (i - 3)
        for j in range(4, _NCOEF):
            cj = j * (j - 1) * (j - 2) * (j - 3)
            q[i, j] = ci * cj / (i + j - 7) / duration ** 7
    return q


@dataclass(frozen=True)
class PolySegmentTrajectory:
    """Piecewise degree-7 polynomial per axis, jerk-continuous at joints."""

    coeffs: np.ndarray  # (segments, 3, 8), normalized-time basis
    durations: np.ndarray  # (segments,)
    waypoints: np.ndarray  # (segments + 1, 3)
    yaws: Optional[np.ndarray] = None  # per-waypoint desired yaw

    def __post_init__(self):
        for name in ("coeffs", "durations", "waypoints"):
            a = np.asarray(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if self.yaws is not None:
            y = np.asarray(self.yaws, dtype=float)
            y.setflags(write=False)
            object.__setattr__(self, "yaws", y)

    @property
    def total_duration(self) -> float:
        return float(np.sum(self.durations))

    def sample(self, t: float) -> TrajectorySample:
        """Evaluate position/velocity/acceleration at t; t outside the time
        range is clamped to the nearest endpoint."""
        t_clamped = min(max(t, 0.0), self.total_duration)
        seg = 0
        t_local = t_clamped
        while seg < len(self.durations) - 1 and t_local > self.durations[seg]:
            t_local -= self.durations[seg]
            seg += 1
        duration = self.durations[seg]
        tau = t_local / duration
        pos = np.empty(3)
        vel = np.empty(3)
        acc = np.empty(3)
        jerk = np.empty(3)
        for axis in range(3):
            c = self.coeffs[seg, axis]
            pos[axis] = self._horner(c, tau, 0, duration)
            vel[axis] = self._horner(c, tau, 1, duration)
            acc[axis] = self._horner(c, tau, 2, duration)
            jerk[axis] = self._horner(c, tau, 3, duration)
        yaw = self._yaw_at(seg, tau)
        return TrajectorySample(t_clamped, pos, vel, acc, yaw, jerk)

    def _yaw_at(self, seg: int, tau: float) -> float:
        if self.yaws is None:
            return 0.0
        return float(self.yaws[seg] + tau * (self.yaws[seg + 1] - self.yaws[seg]))

    @staticmethod
    def _horner(c: np.ndarray, tau: float, order: int, duration: float) -> float:
        acc = 0.0
        for k in range(_NCOEF - 1, order - 1, -1):
            fac = 1.0
            for j in range(order):
                fac *= k - j
            acc = acc * tau + fac * c[k]
        return acc / duration**order

    def snap_cost(self) -> float:
        """Integrated squared snap over the whole trajectory, all axes."""
        total = 0.0
        for seg, duration in enumerate(self.durations):
            q = _snap_gram(duration)
            for axis in range(3):
                c = self.coeffs[seg, axis]
                total += float(c @ q @ c)
        return total


def min_snap(
    waypoints: Sequence[Sequence[float]] | np.ndarray,
    durations: Sequence[float] | np.ndarray,
    yaws: Optional[Sequence[float]] = None,
) -> PolySegmentTrajectory:
    """Minimum-snap trajectory through waypoints with rest-to-rest ends.

    Solved per axis as an equality-constrained QP (waypoint interpolation,
    velocity/acceleration/jerk continuity at joints, zero derivatives at both
    ends) via the dense KKT system.
    """
    wp = np.asarray(waypoints, dtype=float)
    dur = np.asarray(durations, dtype=float)
    if wp.ndim != 2 or wp.shape[1] != 3:
        raise ValueError("waypoints must be (N, 3)")
    if wp.shape[0] < 2:
        raise ValueError("at least two waypoints required")
    if len(dur) != wp.shape[0] - 1:
        raise ValueError("need one duration per segment")
    if np.any(dur <= 0):
        raise ValueError("durations must be positive")
    n_seg = len(dur)
    n_var = n_seg * _NCOEF

    # Constraint rows shared by all axes.
    rows: list[np.ndarray] = []
    targets_template: list[tuple[int, float]] = []  # (waypoint index, factor)

    def blank() -> np.ndarray:
        return np.zeros(n_var)

    # Waypoint interpolation: segment ends hit their waypoints.
    for seg in range(n_seg):
        for tau, wp_index in ((0.0, seg), (1.0, seg + 1)):
            row = blank()
            row[seg * _NCOEF : (seg + 1) * _NCOEF] = _deriv_row(tau, 0, dur[seg])
            rows.append(row)
            targets_template.append((wp_index, 1.0))
    # Continuity of derivatives 1..3 at interior joints.
    for seg in range(n_seg - 1):
        for order in range(1, 4):
            row = blank()
            row[seg * _NCOEF : (seg + 1) * _NCOEF] = _deriv_row(1.0, order, dur[seg])
            row[(seg + 1) * _NCOEF : (seg + 2) * _NCOEF] = -_deriv_row(
                0.0, order, dur[seg + 1]
            )
            rows.append(row)
            targets_template.append((-1, 0.0))
    # Rest-to-rest boundaries: derivatives 1..3 vanish at both ends.
    for order in range(1, 4):
        row = blank()
        row[:_NCOEF] = _deriv_row(0.0, order, dur[0])
        rows.append(row)
        targets_template.append((-1, 0.0))
        row = blank()
        row[(n_seg - 1) * _NCOEF :] = _deriv_row(1.0, order, dur[-1])
        rows.append(row)
        targets_template.append((-1, 0.0))

    a_mat = np.vstack(rows)
    n_con = a_mat.shape[0]

    q_full = np.zeros((n_var, n_var))
    for seg in range(n_seg):
        sl = slice(seg * _NCOEF, (seg + 1) * _NCOEF)
        q_full[sl, sl] = _snap_gram(dur[seg])

    kkt = np.zeros((n_var + n_con, n_var + n_con))
    kkt[:n_var, :n_var] = 2.0 * q_full
    kkt[:n_var, n_var:] = a_mat.T
    kkt[n_var:, :n_var] = a_mat

    coeffs = np.zeros((n_seg, 3, _NCOEF))
    for axis in range(3):
        rhs = np.zeros(n_var + n_con)
        for i, (wp_index, factor) in enumerate(targets_template):
            if wp_index >= 0:
                rhs[n_var + i] = factor * wp[wp_index, axis]
        try:
            solution = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError as exc:
            raise ValueError(f"singular constraint system: {exc}") from exc
        coeffs[:, axis, :] = solution[:n_var].reshape(n_seg, _NCOEF)

    yaw_arr = None if yaws is None else np.asarray(yaws, dtype=float)
    if yaw_arr is not None and len(yaw_arr) != wp.shape[0]:
        raise ValueError("need one yaw per waypoint")
    return PolySegmentTrajectory(
        coeffs=coeffs, durations=dur, waypoints=wp, yaws=yaw_arr
    )
