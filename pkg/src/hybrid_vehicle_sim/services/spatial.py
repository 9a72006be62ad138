"""
Frames, ZXY Euler rotation and rigid-body kinematics.

Frames
------
Inertial frame {E}: z up, the water surface is the plane z = surface.
Body frame {B}: x towards the nose, y to the left, z up through the
canopy. The attitude Θ = (φ, θ, ψ) is the ZXY sequence: start aligned
with {E}, rotate ψ about z, then φ about the new x, then θ about the
new y. The resulting body-to-earth matrix is

    R = Rz(ψ) · Rx(φ) · Ry(θ)

and is evaluated entry by entry below. With this sequence the
rate-transform singularity sits at φ = ±π/2, so the vehicle can pitch
through the vertical (belly-sitter take-off) without hitting it.

Angles are kept unwrapped inside the integrator; ``wrap_angle`` is
only applied when writing output.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from hybrid_vehicle_sim.errors import SingularAttitude

logger = logging.getLogger(__name__)

# Guard band (rad) around φ = ±π/2 for the rate transform.
EPS_SING: float = 1e-3


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class EulerZXY:
    phi:   float = 0.0
    theta: float = 0.0
    psi:   float = 0.0

    def __iter__(self) -> Iterator[float]:
        yield self.phi
        yield self.theta
        yield self.psi

    def as_array(self) -> np.ndarray:
        return np.array([self.phi, self.theta, self.psi], dtype=float)

    @classmethod
    def from_array(cls, values) -> "EulerZXY":
        phi, theta, psi = (float(v) for v in values)
        return cls(phi, theta, psi)

    def wrapped(self) -> "EulerZXY":
        return EulerZXY(wrap_angle(self.phi), wrap_angle(self.theta), wrap_angle(self.psi))


def _vec3(values=None) -> np.ndarray:
    if values is None:
        return np.zeros(3)
    arr = np.asarray(values, dtype=float).reshape(3)
    return arr.copy()


@dataclass(frozen=True)
class RigidBodyState:
    """
    Position ``P`` in {E}, attitude ``Theta``, body-frame velocity ``V``
    = (u, v, w) and body rate ``Omega`` = (p, q, r).
    """

    P:     np.ndarray = field(default_factory=lambda: np.zeros(3))
    Theta: EulerZXY   = field(default_factory=EulerZXY)
    V:     np.ndarray = field(default_factory=lambda: np.zeros(3))
    Omega: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "P",     _vec3(self.P))
        object.__setattr__(self, "V",     _vec3(self.V))
        object.__setattr__(self, "Omega", _vec3(self.Omega))
        if not isinstance(self.Theta, EulerZXY):
            object.__setattr__(self, "Theta", EulerZXY.from_array(self.Theta))

    SIZE = 12

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.P, self.Theta.as_array(), self.V, self.Omega])

    @classmethod
    def from_vector(cls, y: np.ndarray) -> "RigidBodyState":
        return cls(
            P     = y[0:3],
            Theta = EulerZXY.from_array(y[3:6]),
            V     = y[6:9],
            Omega = y[9:12],
        )

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.to_vector())))


# ---------------------------------------------------------------------------
# Rotations
# ---------------------------------------------------------------------------

def wrap_angle(angle: float) -> float:
    """Wrap to (-π, π]."""
    wrapped = math.remainder(angle, 2.0 * math.pi)
    if wrapped == -math.pi:
        return math.pi
    return wrapped


def elementary_rotation(axis: str, angle: float) -> np.ndarray:
    """Active right-handed rotation about a coordinate axis."""
    c, s = math.cos(angle), math.sin(angle)
    if axis == "x":
        return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    if axis == "y":
        return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    if axis == "z":
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    raise ValueError(f"unknown rotation axis {axis!r}")


def rotation_body_to_earth(att) -> np.ndarray:
    """Body-to-inertial rotation matrix for a ZXY attitude."""
    phi, theta, psi = att
    cf, sf = math.cos(phi),   math.sin(phi)
    ct, st = math.cos(theta), math.sin(theta)
    cp, sp = math.cos(psi),   math.sin(psi)
    return np.array([
        [ct * cp - sf * st * sp, -cf * sp, st * cp + sf * ct * sp],
        [ct * sp + sf * st * cp,  cf * cp, st * sp - sf * ct * cp],
        [-cf * st,                sf,      cf * ct],
    ])


def rotation_earth_to_body(att) -> np.ndarray:
    return rotation_body_to_earth(att).T


def earth_up_in_body(att) -> np.ndarray:
    """Inertial +z expressed in {B}: the last row of R."""
    phi, theta, _ = att
    cf = math.cos(phi)
    return np.array([-cf * math.sin(theta), math.sin(phi), cf * math.cos(theta)])


def cross3(a, b) -> np.ndarray:
    """a × b for a pair of 3-vectors."""
    a0, a1, a2 = float(a[0]), float(a[1]), float(a[2])
    b0, b1, b2 = float(b[0]), float(b[1]), float(b[2])
    return np.array([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0])


def angular_rate_transform(att, eps_sing: float = EPS_SING) -> np.ndarray:
    """
    Matrix W with Θ̇ = W·Ω.

    Raises ``SingularAttitude`` when |φ| ≥ π/2 − ``eps_sing``. Any pitch,
    including θ = ±π/2, is well conditioned.
    """
    phi, theta, _ = att
    if abs(phi) >= 0.5 * math.pi - eps_sing:
        raise SingularAttitude(phi, eps_sing)
    cf = math.cos(phi)
    tf = math.tan(phi)
    ct, st = math.cos(theta), math.sin(theta)
    return np.array([
        [ct,       0.0, st],
        [st * tf,  1.0, -ct * tf],
        [-st / cf, 0.0, ct / cf],
    ])


def kinematics_derivative(state: RigidBodyState,
                          eps_sing: float = EPS_SING) -> tuple[np.ndarray, np.ndarray]:
    """Return (Ṗ, Θ̇) = (R·V, W·Ω)."""
    R = rotation_body_to_earth(state.Theta)
    W = angular_rate_transform(state.Theta, eps_sing)
    return R @ state.V, W @ state.Omega
