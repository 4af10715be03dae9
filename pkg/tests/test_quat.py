import numpy as np
from hypothesis import given, strategies as st

from coaxsim import quat

finite = st.floats(-1.0, 1.0, allow_nan=False)


def unit_quats():
    return (
        st.tuples(finite, finite, finite, finite)
        .map(np.array)
        .filter(lambda q: np.linalg.norm(q) > 1e-3)
        .map(quat.normalize)
    )


def vectors():
    return st.tuples(
        st.floats(-10, 10), st.floats(-10, 10), st.floats(-10, 10)
    ).map(np.array)


@given(unit_quats())
def test_normalize_is_unit(q):
    assert abs(np.linalg.norm(q) - 1.0) < 1e-12


@given(unit_quats(), vectors())
def test_rotate_matches_matrix(q, v):
    assert np.allclose(quat.rotate(q, v), quat.to_matrix(q) @ v, atol=1e-9)


@given(unit_quats(), vectors())
def test_rotate_inverse_roundtrip(q, v):
    assert np.allclose(quat.rotate_inverse(q, quat.rotate(q, v)), v, atol=1e-9)


@given(unit_quats(), vectors())
def test_rotation_preserves_norm(q, v):
    assert abs(np.linalg.norm(quat.rotate(q, v)) - np.linalg.norm(v)) < 1e-9


@given(unit_quats(), unit_quats(), vectors())
def test_multiply_composes_rotations(a, b, v):
    lhs = quat.rotate(quat.multiply(a, b), v)
    rhs = quat.rotate(a, quat.rotate(b, v))
    assert np.allclose(lhs, rhs, atol=1e-9)


@given(unit_quats())
def test_matrix_roundtrip(q):
    q2 = quat.from_matrix(quat.to_matrix(q))
    # q and -q are the same rotation
    assert np.allclose(q2, q, atol=1e-8) or np.allclose(q2, -q, atol=1e-8)


@given(unit_quats())
def test_to_matrix_orthonormal(q):
    r = quat.to_matrix(q)
    assert np.allclose(r.T @ r, np.eye(3), atol=1e-12)
    assert abs(np.linalg.det(r) - 1.0) < 1e-12


def test_from_axis_angle_small_rotation():
    q = quat.from_axis_angle(np.array([0.0, 0.0, 1.0]), np.pi / 2)
    v = quat.rotate(q, np.array([1.0, 0.0, 0.0]))
    assert np.allclose(v, [0.0, 1.0, 0.0], atol=1e-12)


@given(unit_quats(), vectors())
def test_derivative_matches_finite_difference(q, omega):
    # advance by the exact exponential for a tiny time and compare slopes
    dt = 1e-7
    angle = np.linalg.norm(omega) * dt
    if angle < 1e-12:
        return
    dq = quat.from_axis_angle(omega, angle)
    q_next = quat.multiply(q, dq)
    fd = (q_next - q) / dt
    assert np.allclose(quat.derivative(q, omega), fd, atol=1e-5)
