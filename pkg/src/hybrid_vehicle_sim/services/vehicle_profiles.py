"""
Vehicle profiles - geometric, inertial, hydrodynamic and actuator
constants of the hybrid aerial-aquatic vehicle.

Every value is overridable from a scenario file (``vehicle.*`` keys);
the defaults below describe the 1.61 kg belly-sitter prototype.

Derivation notes
----------------
* ``J0`` - flat plate-and-rod estimate: 0.58 m fuselage, 0.69 m span,
  most of the mass concentrated within 0.15 m of C_G.
* ``Ma`` - fuselage as a prolate ellipsoid (semi-axes 0.29 m and
  0.025 m, Lamb's k-factors k1 ≈ 0.02, k2 ≈ 0.96) plus strip-theory
  added mass of the wings for the heave axis
  (π/4·ρ·c²·span summed over the three wings, c ≈ 0.08 m).
* ``Ja`` - strip theory over the wing span for roll/pitch, fuselage
  ellipsoid (k' ≈ 0.9) for yaw.
* ``V_vol`` - chosen so that buoyancy (ρ_w·g·V_vol = 16.68 N) slightly
  exceeds weight (15.79 N).
* ``r_B`` - centre of buoyancy 10 mm above C_G (canopy foam).
* ``buoyancy_shift`` - lateral C_B travel when a main wing is held at a
  large offset: the displaced volume of that wing moves outboard and
  above the waterline reference, so C_B drifts to the opposite side.
* ``C_T_air`` - two rotors at ``omega_max`` give the 31.6 N bench
  ceiling: C_T = 31.6 / (2·ω_max²).
* ``gamma_limits`` - nacelles tilt about 20 deg past vertical so the
  hover trim can lean the thrust back against a nose-down attitude.
* ``C_T_water`` - sized so that half throttle in vectored mode balances
  the body drag at 0.63 m/s (≈ 3.19 N with the default water table).
  A rotor crossing the surface blends linearly between the two
  coefficients over one body height (``RotorParams.blended``); two
  rotors at full water thrust cannot lift the dry weight on their own.
* ``FlappingParams.C_n_inst`` - normal-force coefficient of the
  quasi-steady wing law. It is kept well below the flat-plate value so
  that a wing held broadside (yaw preset) cannot out-push the body drag.
* ``FlappingParams.lever_arm`` - effective lever converting the pitch
  rate of a wing into an induced normal-flow speed; calibrated so the
  in-phase forward gait settles near 0.29 m/s.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from hybrid_vehicle_sim.errors import NonPositiveDefiniteMass

logger = logging.getLogger(__name__)

AIR, WATER = 0, 1

RHO_AIR_DEFAULT:   float = 1.225
RHO_WATER_DEFAULT: float = 1000.0


# ---------------------------------------------------------------------------
# Actuators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RotorParams:
    C_T_air:        float = 31.6 / (2.0 * 2800.0 ** 2)
    C_T_water:      float = 3.19 / (2.0 * 1400.0 ** 2)
    C_Q_air:        float = 0.012
    C_Q_water:      float = 0.004
    omega_max:      float = 2800.0
    spin_direction: tuple[int, int]     = (1, -1)
    gamma_limits:   tuple[float, float] = (-0.5 * math.pi, 0.5 * math.pi + 0.35)

    def C_T(self, k: int) -> float:
        return self.C_T_water if k == WATER else self.C_T_air

    def C_Q(self, k: int) -> float:
        return self.C_Q_water if k == WATER else self.C_Q_air

    def blended(self, submergence: float) -> tuple[float, float]:
        """(C_T, C_Q) of a rotor whose disc is the given fraction under water."""
        s = min(1.0, max(0.0, float(submergence)))
        return (self.C_T_air + s * (self.C_T_water - self.C_T_air),
                self.C_Q_air + s * (self.C_Q_water - self.C_Q_air))

    def validate(self) -> None:
        if self.C_T_air <= 0 or self.C_T_water <= 0:
            raise ValueError("rotor thrust coefficients must be positive in both media")
        if self.omega_max <= 0:
            raise ValueError("omega_max must be positive")
        if any(s not in (-1, 1) for s in self.spin_direction):
            raise ValueError("spin_direction entries must be +1 or -1")
        lo, hi = self.gamma_limits
        if not lo < hi:
            raise ValueError("gamma_limits must be an increasing pair")


@dataclass(frozen=True)
class FlappingParams:
    """Per-wing constants; index 0/1 are the main wings, 2 the tail wing."""

    S:           tuple[float, float, float] = (0.028, 0.028, 0.020)
    Cfx_bar:     tuple[float, float, float] = (0.0144, 0.0144, 0.0144)
    Cfz_bar:     tuple[float, float, float] = (0.0, 0.0, 0.0)
    C_n_inst:    float = 0.3
    lever_arm:   float = 0.2
    c_rot:       float = 0.25
    theta_limit: float = 0.5 * math.pi

    def validate(self) -> None:
        if any(s <= 0 for s in self.S):
            raise ValueError("wing areas must be positive")
        if self.C_n_inst < 0 or self.lever_arm < 0 or self.c_rot < 0:
            raise ValueError("flapping coefficients must be non-negative")


# ---------------------------------------------------------------------------
# Vehicle
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MediumTerms:
    """Per-medium diagonals (read-only): M0 + k|Ma|, J0 + k|Ja|, damping, k|Ma|."""

    mass:              np.ndarray
    inertia:           np.ndarray
    damping_linear:    np.ndarray
    damping_quadratic: np.ndarray
    added_mass:        np.ndarray

    def __post_init__(self):
        for arr in (self.mass, self.inertia, self.damping_linear,
                    self.damping_quadratic, self.added_mass):
            arr.setflags(write=False)


@dataclass(frozen=True)
class VehicleParams:
    m:       float = 1.61
    g:       float = 9.81
    J0:      tuple[float, float, float] = (0.025, 0.045, 0.065)
    Ma:      tuple[float, float, float] = (0.12, 1.1, 4.0)
    Ja:      tuple[float, float, float] = (0.05, 0.06, 0.02)
    S:       float = 0.076
    cbar:    float = 0.11
    V_vol:   float = 1.70e-3
    r_B:     tuple[float, float, float] = (0.0, 0.0, 0.01)
    a:       float = 0.20
    b:       float = 0.06
    c:       float = 0.25
    # Vertical rotor arm used by the tilt-rotor wrench; the thrust line
    # passes through C_G in the prototype.
    b_rotor: float = 0.0

    rho_air:   float = RHO_AIR_DEFAULT
    rho_water: float = RHO_WATER_DEFAULT

    gyroscopic_sign: float = 1.0
    buoyancy_shift:  float = 0.0015
    body_height:     float = 0.05

    damping_linear_air:      tuple[float, float, float] = (0.004, 0.006, 0.006)
    damping_quadratic_air:   tuple[float, float, float] = (0.0, 0.0, 0.0)
    damping_linear_water:    tuple[float, float, float] = (0.05, 0.08, 0.10)
    damping_quadratic_water: tuple[float, float, float] = (0.2, 0.3, 1.0)

    rotor: RotorParams    = field(default_factory=RotorParams)
    wings: FlappingParams = field(default_factory=FlappingParams)

    # ---- Derived quantities -----------------------------------------

    @property
    def weight(self) -> float:
        return self.m * self.g

    @property
    def buoyancy(self) -> float:
        return self.rho_water * self.g * self.V_vol

    def effective_mass(self, k: int) -> np.ndarray:
        """Diagonal of M0 + k·|Ma|."""
        return self.medium_terms(k).mass

    def effective_inertia(self, k: int) -> np.ndarray:
        """Diagonal of J0 + k·|Ja|."""
        return self.medium_terms(k).inertia

    def damping(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        terms = self.medium_terms(k)
        return terms.damping_linear, terms.damping_quadratic

    def medium_terms(self, k: int) -> "MediumTerms":
        return self._medium_terms[WATER if k == WATER else AIR]

    @cached_property
    def _medium_terms(self) -> dict[int, "MediumTerms"]:
        Ma = np.abs(np.asarray(self.Ma, dtype=float))
        Ja = np.abs(np.asarray(self.Ja, dtype=float))
        J0 = np.asarray(self.J0, dtype=float)
        damping = {
            AIR:   (self.damping_linear_air, self.damping_quadratic_air),
            WATER: (self.damping_linear_water, self.damping_quadratic_water),
        }
        return {
            k: MediumTerms(
                mass              = self.m + k * Ma,
                inertia           = J0 + k * Ja,
                damping_linear    = np.asarray(damping[k][0], dtype=float),
                damping_quadratic = np.asarray(damping[k][1], dtype=float),
                added_mass        = k * Ma,
            )
            for k in (AIR, WATER)
        }

    def check_mass_matrices(self) -> None:
        for k in (AIR, WATER):
            if np.any(self.effective_mass(k) <= 0) or np.any(self.effective_inertia(k) <= 0):
                raise NonPositiveDefiniteMass(
                    f"effective mass/inertia not positive definite for k={k}: "
                    f"M={self.effective_mass(k)}, J={self.effective_inertia(k)}"
                )

    def validate(self) -> None:
        """Raise on any violated parameter invariant."""
        if self.m <= 0:
            raise NonPositiveDefiniteMass(f"mass must be positive, got {self.m}")
        self.check_mass_matrices()
        if self.S <= 0 or self.cbar <= 0 or self.V_vol <= 0:
            raise ValueError("S, cbar and V_vol must be positive")
        if self.rho_air <= 0 or self.rho_water <= 0:
            raise ValueError("fluid densities must be positive")
        if self.body_height <= 0:
            raise ValueError("body_height must be positive")
        if self.gyroscopic_sign not in (-1.0, 1.0):
            raise ValueError("gyroscopic_sign must be +1 or -1")
        if self.buoyancy <= self.weight:
            logger.warning(
                "Vehicle is not positively buoyant (buoyancy %.3f N <= weight %.3f N).",
                self.buoyancy, self.weight,
            )
        self.rotor.validate()
        self.wings.validate()


DEFAULT_VEHICLE = VehicleParams()


# ---------------------------------------------------------------------------
# Medium
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MediumContext:
    k:   int
    rho: float

    def __post_init__(self):
        if self.k not in (AIR, WATER):
            raise ValueError(f"medium flag must be 0 or 1, got {self.k!r}")
        if not self.rho > 0:
            raise ValueError(f"fluid density must be positive, got {self.rho!r}")

    @classmethod
    def air(cls, params: VehicleParams = DEFAULT_VEHICLE) -> "MediumContext":
        return cls(AIR, params.rho_air)

    @classmethod
    def water(cls, params: VehicleParams = DEFAULT_VEHICLE) -> "MediumContext":
        return cls(WATER, params.rho_water)

    @classmethod
    def for_flag(cls, k: int, params: VehicleParams = DEFAULT_VEHICLE) -> "MediumContext":
        return cls.water(params) if k == WATER else cls.air(params)

    @property
    def name(self) -> str:
        return "water" if self.k == WATER else "air"
