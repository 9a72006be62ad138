from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from hybrid_vehicle_sim.errors import SingularAttitude
from hybrid_vehicle_sim.services.spatial import (
    EulerZXY, RigidBodyState, angular_rate_transform, cross3, earth_up_in_body,
    elementary_rotation, kinematics_derivative, rotation_body_to_earth,
    rotation_earth_to_body, wrap_angle,
)
from hybrid_vehicle_sim.services.validation_service import euler_rate_oracle


def test_identity_at_zero_attitude():
    assert rotation_body_to_earth(EulerZXY()) == pytest.approx(np.eye(3))
    assert angular_rate_transform(EulerZXY()) == pytest.approx(np.eye(3))


def test_rotation_is_proper_orthogonal(rng):
    for _ in range(1000):
        R = rotation_body_to_earth(rng.uniform(-math.pi, math.pi, 3))
        assert np.max(np.abs(R @ R.T - np.eye(3))) < 1e-12
        assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)


def test_rotation_matches_zxy_composition(rng):
    for _ in range(100):
        phi, theta, psi = rng.uniform(-math.pi, math.pi, 3)
        R = rotation_body_to_earth((phi, theta, psi))
        composed = (elementary_rotation("z", psi) @ elementary_rotation("x", phi)
                    @ elementary_rotation("y", theta))
        oracle = Rotation.from_euler("ZXY", [psi, phi, theta]).as_matrix()
        assert np.max(np.abs(R - composed)) < 1e-12
        assert np.max(np.abs(R - oracle)) < 1e-12


def test_earth_to_body_is_transpose(rng):
    att = rng.uniform(-1.0, 1.0, 3)
    assert rotation_earth_to_body(att) == pytest.approx(rotation_body_to_earth(att).T)


def test_pure_yaw_rate_at_level_attitude():
    W = angular_rate_transform(EulerZXY())
    assert W @ np.array([0.0, 0.0, 1.0]) == pytest.approx([0.0, 0.0, 1.0])


def test_rate_transform_matches_rotation_oracle(rng):
    for _ in range(1000):
        att   = EulerZXY(rng.uniform(-1.2, 1.2), rng.uniform(-1.4, 1.4), rng.uniform(-2.5, 2.5))
        omega = rng.uniform(-2.0, 2.0, 3)
        got = angular_rate_transform(att) @ omega
        assert np.max(np.abs(got - euler_rate_oracle(att, omega))) < 1e-9


def test_rate_oracle_agrees_with_scipy_euler_differences(rng):
    h = 1e-5
    for _ in range(20):
        att   = EulerZXY(rng.uniform(-1.0, 1.0), rng.uniform(-1.2, 1.2), rng.uniform(-2.5, 2.5))
        omega = rng.uniform(-2.0, 2.0, 3)
        R0 = Rotation.from_matrix(rotation_body_to_earth(att))

        def angles(step):
            psi, phi, theta = (R0 * Rotation.from_rotvec(step * omega)).as_euler("ZXY")
            return np.array([phi, theta, psi])

        numeric = (angles(h) - angles(-h)) / (2.0 * h)
        assert np.max(np.abs(numeric - euler_rate_oracle(att, omega))) < 1e-6


def test_vertical_pitch_is_not_singular():
    W = angular_rate_transform(EulerZXY(0.0, 0.5 * math.pi, 0.0))
    assert np.all(np.isfinite(W))


def test_singular_roll_raises():
    with pytest.raises(SingularAttitude):
        angular_rate_transform(EulerZXY(0.5 * math.pi, 0.0, 0.0))
    with pytest.raises(SingularAttitude):
        angular_rate_transform(EulerZXY(-0.5 * math.pi + 1e-4, 0.0, 0.0))


def test_kinematics_derivative_level_flight():
    state = RigidBodyState(V=[2.0, 0.0, 0.0], Omega=[0.0, 0.0, 0.3])
    Pdot, Thetadot = kinematics_derivative(state)
    assert Pdot == pytest.approx([2.0, 0.0, 0.0])
    assert Thetadot == pytest.approx([0.0, 0.0, 0.3])


@pytest.mark.parametrize("angle, expected", [
    (0.0, 0.0),
    (math.pi, math.pi),
    (-math.pi, math.pi),
    (2.0 * math.pi + 0.1, 0.1),
    (-0.1, -0.1),
])
def test_wrap_angle(angle, expected):
    assert wrap_angle(angle) == pytest.approx(expected)


def test_state_vector_layout():
    state = RigidBodyState(P=[1, 2, 3], Theta=[0.1, 0.2, 0.3], V=[4, 5, 6], Omega=[7, 8, 9])
    y = state.to_vector()
    assert y.shape == (RigidBodyState.SIZE,)
    assert list(y[3:6]) == pytest.approx([0.1, 0.2, 0.3])
    back = RigidBodyState.from_vector(y)
    assert back.Theta == EulerZXY(0.1, 0.2, 0.3)
    assert back.is_finite()


def test_cross3_matches_numpy(rng):
    for _ in range(20):
        a, b = rng.normal(size=3), rng.normal(size=3)
        assert cross3(a, b) == pytest.approx(np.cross(a, b), abs=1e-14)


def test_earth_up_is_last_row_of_rotation(rng):
    att = rng.uniform(-1.2, 1.2, 3)
    assert earth_up_in_body(att) == pytest.approx(rotation_body_to_earth(att)[2], abs=1e-15)
