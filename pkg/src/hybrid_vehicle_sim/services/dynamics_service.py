"""
Medium-dependent Newton-Euler dynamics.

Translational and rotational balance in the body frame:

    (M0 + k|Ma|)·V̇ = F_j − F_f + F_r − [(M0 + k|Ma|)·Ω] × V
    (J0 + k|Ja|)·Ω̇ = M_j − M_f − M_d + M_r + k·(|Ma|·V) × V
                     + s_g·[(J0 + k|Ja|)·Ω] × Ω

k is the medium flag (0 air, 1 water). Added mass and inertia are kept
as positive magnitudes; written with SNAME derivatives (X_u̇ < 0 ...)
the effective matrices read M0 − k·Ma. All matrices are diagonal, so
the solve is an element-wise division.

* F_f, M_f  fluid wrench from the coefficient tables; positive C_D
  gives a force along the flow velocity, hence the minus sign.
* M_d       rotational damping (linear + quadratic per medium); the
  coefficient tables depend on α, β only and carry no rate damping.
* F_r, M_r  physical gravity + buoyancy load expressed in {B}.
  Buoyancy is scaled by the submergence fraction s ∈ [0, 1] alone
  (linear over one body height around the surface), so it varies
  continuously whichever way the surface is crossed. k still selects
  added mass, the fluid table and the Munk term.
* s_g       ``VehicleParams.gyroscopic_sign`` (+1 by default).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from hybrid_vehicle_sim.errors import NonPositiveDefiniteMass
from hybrid_vehicle_sim.services.coefficient_tables import AeroCoefficients
from hybrid_vehicle_sim.services.spatial import RigidBodyState, cross3, earth_up_in_body
from hybrid_vehicle_sim.services.vehicle_profiles import (
    MediumContext, VehicleParams, WATER,
)

logger = logging.getLogger(__name__)

# Below this airspeed the flow angles are undefined and reported as 0.
EPS_V: float = 1e-6


@dataclass(frozen=True, eq=False)
class Wrench:
    """Force (N) and moment (N·m) pair in the body frame."""

    F: np.ndarray = field(default_factory=lambda: np.zeros(3))
    M: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "F", np.asarray(self.F, dtype=float).reshape(3))
        object.__setattr__(self, "M", np.asarray(self.M, dtype=float).reshape(3))

    @classmethod
    def zero(cls) -> "Wrench":
        return cls()

    def __add__(self, other: "Wrench") -> "Wrench":
        return Wrench(self.F + other.F, self.M + other.M)

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.F, self.M])

    def is_zero(self) -> bool:
        return not (np.any(self.F) or np.any(self.M))


# ---------------------------------------------------------------------------
# Flow and loads
# ---------------------------------------------------------------------------

def flow_angles(V, eps_v: float = EPS_V) -> tuple[float, float, float]:
    """(α, β, V_f) with α = atan2(w, u), β = asin(v/‖V‖)."""
    u, v, w = (float(c) for c in V)
    Vf = math.sqrt(u * u + v * v + w * w)
    if Vf < eps_v:
        return 0.0, 0.0, Vf
    alpha = math.atan2(w, u)
    beta  = math.asin(max(-1.0, min(1.0, v / Vf)))
    return alpha, beta, Vf


def wind_to_body(alpha: float, beta: float) -> np.ndarray:
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta),  math.sin(beta)
    return np.array([
        [ca * cb, -ca * sb, -sa],
        [sb,       cb,       0.0],
        [sa * cb, -sa * sb,  ca],
    ])


def fluid_wrench(alpha: float, beta: float, Vf: float, medium: MediumContext,
                 coeffs: AeroCoefficients, params: VehicleParams) -> Wrench:
    if Vf <= 0.0:
        return Wrench.zero()
    CD, CY, CL, Cl, Cm, Cn = coeffs.lookup(alpha, beta, medium.k)
    qS = 0.5 * medium.rho * Vf * Vf * params.S
    F  = wind_to_body(alpha, beta) @ np.array([qS * CD, qS * CY, qS * CL])
    M  = qS * params.cbar * np.array([Cl, Cm, Cn])
    return Wrench(F, M)


def damping_wrench(Omega, medium: MediumContext, params: VehicleParams) -> Wrench:
    """Rotational damping moment, same sign as Ω (subtracted like M_f)."""
    Omega = np.asarray(Omega, dtype=float)
    lin, quad = params.damping(medium.k)
    return Wrench(np.zeros(3), lin * Omega + quad * np.abs(Omega) * Omega)


def submergence_fraction(z: float, surface: float, body_height: float) -> float:
    """1 fully below the surface, 0 fully above, linear over one body height."""
    return min(1.0, max(0.0, 0.5 - (z - surface) / body_height))


def buoyancy_centre(params: VehicleParams, wing_offsets=None) -> np.ndarray:
    """
    C_B in {B}. A main wing held at a large offset drags C_B towards the
    opposite side: r_B,y − δ·(sin²x₁ − sin²x₂).
    """
    r_B = np.asarray(params.r_B, dtype=float).copy()
    if wing_offsets is not None:
        x1, x2 = float(wing_offsets[0]), float(wing_offsets[1])
        r_B[1] -= params.buoyancy_shift * (math.sin(x1) ** 2 - math.sin(x2) ** 2)
    return r_B


def restoring_wrench(att, medium: MediumContext, params: VehicleParams,
                     submergence: float | None = None, wing_offsets=None) -> Wrench:
    """
    Gravity and buoyancy in {B}. ``submergence`` defaults to the medium
    flag, i.e. fully wet in water and dry in air.
    """
    s  = float(medium.k) if submergence is None else float(submergence)
    up = earth_up_in_body(att)
    fb_body = params.buoyancy * s * up
    F = fb_body - params.weight * up
    M = cross3(buoyancy_centre(params, wing_offsets), fb_body)
    return Wrench(F, M)


# ---------------------------------------------------------------------------
# Equations of motion
# ---------------------------------------------------------------------------

def dynamics_derivative(state: RigidBodyState, control: Wrench, medium: MediumContext,
                        coeffs: AeroCoefficients, params: VehicleParams,
                        submergence: float | None = None,
                        wing_offsets=None) -> tuple[np.ndarray, np.ndarray]:
    """Return (V̇, Ω̇) for the given control wrench F_j, M_j."""
    k = medium.k
    terms = params.medium_terms(k)
    M_eff, J_eff = terms.mass, terms.inertia
    if np.any(M_eff <= 0.0) or np.any(J_eff <= 0.0):
        raise NonPositiveDefiniteMass(
            f"effective mass {M_eff} / inertia {J_eff} not positive definite (k={k})"
        )

    V, Omega = state.V, state.Omega
    alpha, beta, Vf = flow_angles(V)
    fluid     = fluid_wrench(alpha, beta, Vf, medium, coeffs, params)
    damping   = damping_wrench(Omega, medium, params)
    restoring = restoring_wrench(state.Theta, medium, params, submergence, wing_offsets)

    rhs_V = control.F - fluid.F + restoring.F - cross3(M_eff * Omega, V)
    rhs_W = (control.M - fluid.M - damping.M + restoring.M
             + params.gyroscopic_sign * cross3(J_eff * Omega, Omega))
    if k == WATER:
        rhs_W = rhs_W + cross3(terms.added_mass * V, V)

    return rhs_V / M_eff, rhs_W / J_eff
