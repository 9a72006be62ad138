"""
Force and moment generation: two tilting rotors and three pitching wings.

Rotors
------
Thrust T = C_T·ω², reaction torque C_Q·T·spin. Rotor i tilts by γ_i
about the body y axis; γ = 0 points the thrust along +x (horizontal
flight / underwater vectored), γ = π/2 along +z (vertical flight).
Rotor 1 sits at +a (left), rotor 2 at −a (right).

Wings
-----
Wings 1 and 2 are the main wings, wing 3 the tail wing. Each wing
pitches to the angle θ_i produced by the CPG. The quasi-steady normal
force is

    N_i = ½·ρ·S_i·C_n·[(V_f² + U_i²)·s|s| − c_rot·(l·θ̇_i)|l·θ̇_i|],
    s   = sin(θ_i − α)

decomposed as (f_x, f_z) = N_i·(sin θ_i, cos θ_i). ``U_i`` is the
induced flow speed of the flapping stroke (l·2πf_i·|r_i|/√2, from the
oscillator state) and the second bracket term is the paddle force of
the pitching plate. With θ̇ = U = 0 the law is the plain
normal-force model.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import trapezoid

from hybrid_vehicle_sim.errors import CommandOutOfRange, InsufficientTrace
from hybrid_vehicle_sim.services.dynamics_service import Wrench
from hybrid_vehicle_sim.services.vehicle_profiles import (
    FlappingParams, MediumContext, RotorParams,
)

logger = logging.getLogger(__name__)

# Relative slack on actuator limits for values produced by clipping.
_LIMIT_TOL: float = 1e-9


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RotorCommand:
    omega1: float = 0.0
    omega2: float = 0.0
    gamma1: float = 0.0
    gamma2: float = 0.0

    def validate(self, params: RotorParams) -> None:
        tol = _LIMIT_TOL * params.omega_max
        for name, w in (("omega1", self.omega1), ("omega2", self.omega2)):
            if not (-tol <= w <= params.omega_max + tol):
                raise CommandOutOfRange(
                    f"{name}={w:.6g} rad/s outside [0, {params.omega_max:g}]"
                )
        lo, hi = params.gamma_limits
        for name, g in (("gamma1", self.gamma1), ("gamma2", self.gamma2)):
            if not (lo - _LIMIT_TOL <= g <= hi + _LIMIT_TOL):
                raise CommandOutOfRange(f"{name}={g:.6g} rad outside [{lo:.6g}, {hi:.6g}]")

    def mirrored(self) -> "RotorCommand":
        """Left/right mirror image: rotors swapped."""
        return RotorCommand(self.omega2, self.omega1, self.gamma2, self.gamma1)


@dataclass(frozen=True)
class WingKinematicState:
    """Wing angles θ_i, their rates θ̇_i and the offsets X_i (rad, rad/s)."""

    theta:     tuple[float, float, float] = (0.0, 0.0, 0.0)
    theta_dot: tuple[float, float, float] = (0.0, 0.0, 0.0)
    X:         tuple[float, float, float] = (0.0, 0.0, 0.0)

    @classmethod
    def commanded(cls, theta, theta_dot, X, limit: float = 0.5 * math.pi) -> "WingKinematicState":
        """
        Servo response to an oscillator command: each angle is clipped to
        ±``limit`` and a wing held at the stop does not move.
        """
        angles, rates = [], []
        for th, dth in zip(theta, theta_dot):
            th, dth = float(th), float(dth)
            if abs(th) >= limit:
                th, dth = math.copysign(limit, th), 0.0
            angles.append(th)
            rates.append(dth)
        return cls(tuple(angles), tuple(rates), tuple(float(x) for x in X))

    def validate(self, limit: float = 0.5 * math.pi) -> None:
        for i, th in enumerate(self.theta, start=1):
            if abs(th) > limit + _LIMIT_TOL:
                raise CommandOutOfRange(f"wing {i} angle {th:.6g} rad exceeds servo travel {limit:.6g}")


@dataclass(frozen=True)
class WingCoefficients:
    """Constants of a single wing (see ``FlappingParams.wing``)."""

    S:         float
    Cfx_bar:   float = 0.0
    Cfz_bar:   float = 0.0
    C_n_inst:  float = 0.3
    lever_arm: float = 0.0
    c_rot:     float = 0.0


def wing_coefficients(params: FlappingParams, index: int) -> WingCoefficients:
    return wing_set(params)[index]


@lru_cache(maxsize=16)
def wing_set(params: FlappingParams) -> tuple[WingCoefficients, WingCoefficients, WingCoefficients]:
    """Constants of all three wings, built once per parameter set."""
    return tuple(
        WingCoefficients(
            S         = params.S[i],
            Cfx_bar   = params.Cfx_bar[i],
            Cfz_bar   = params.Cfz_bar[i],
            C_n_inst  = params.C_n_inst,
            lever_arm = params.lever_arm,
            c_rot     = params.c_rot,
        )
        for i in range(3)
    )


# ---------------------------------------------------------------------------
# Rotors
# ---------------------------------------------------------------------------

def rotor_thrust(omega: float, params: RotorParams, medium: MediumContext,
                 rotor: int = 0, submergence: float | None = None) -> tuple[float, float]:
    """
    (T, M_reaction) of rotor ``rotor`` (0 or 1) at speed ω. Without a
    ``submergence`` the coefficients follow the medium flag; with one
    they blend between the air and water values.
    """
    tol = _LIMIT_TOL * params.omega_max
    if not (-tol <= omega <= params.omega_max + tol):
        raise CommandOutOfRange(f"rotor speed {omega:.6g} rad/s outside [0, {params.omega_max:g}]")
    if submergence is None:
        C_T, C_Q = params.C_T(medium.k), params.C_Q(medium.k)
    else:
        C_T, C_Q = params.blended(submergence)
    T = C_T * omega * omega
    return T, C_Q * T * params.spin_direction[rotor]


def tilt_rotor_wrench(cmd: RotorCommand, rotor_params: RotorParams,
                      a: float, b: float, medium: MediumContext,
                      submergence: tuple[float, float] | None = None) -> Wrench:
    """``submergence`` is the per-rotor wet fraction, (rotor 1, rotor 2)."""
    cmd.validate(rotor_params)
    wet1, wet2 = (None, None) if submergence is None else submergence
    T1, _ = rotor_thrust(cmd.omega1, rotor_params, medium, 0, wet1)
    T2, _ = rotor_thrust(cmd.omega2, rotor_params, medium, 1, wet2)
    c1, s1 = math.cos(cmd.gamma1), math.sin(cmd.gamma1)
    c2, s2 = math.cos(cmd.gamma2), math.sin(cmd.gamma2)
    F = np.array([T1 * c1 + T2 * c2, 0.0, T1 * s1 + T2 * s2])
    M = np.array([
        T1 * a * s1 - T2 * a * s2,
        -T1 * b * s1 - T2 * b * s2,
        T2 * a * c2 - T1 * a * c1,
    ])
    return Wrench(F, M)


# ---------------------------------------------------------------------------
# Wings
# ---------------------------------------------------------------------------

def flapping_mean_thrust(X_i: float, alpha: float, Vf: float,
                         wing: WingCoefficients, rho_w: float) -> tuple[float, float]:
    """Cycle-mean wing forces for offset X_i."""
    q = 0.5 * rho_w * (math.sin(X_i - alpha) * Vf) ** 2 * wing.S
    return q * wing.Cfx_bar, q * wing.Cfz_bar


def flap_speed(lever_arm: float, frequency_hz: float, amplitude: float) -> float:
    """RMS normal-flow speed induced by a sinusoidal stroke."""
    return lever_arm * 2.0 * math.pi * frequency_hz * abs(amplitude) / math.sqrt(2.0)


def wing_normal_force(theta_i: float, alpha: float, Vf: float, wing: WingCoefficients,
                      rho_w: float, theta_dot: float = 0.0, flap_u: float = 0.0) -> float:
    s      = math.sin(theta_i - alpha)
    paddle = wing.lever_arm * theta_dot
    bracket = (Vf * Vf + flap_u * flap_u) * s * abs(s) - wing.c_rot * paddle * abs(paddle)
    return 0.5 * rho_w * wing.S * wing.C_n_inst * bracket


def flapping_instantaneous_force(theta_i: float, alpha: float, Vf: float,
                                 wing: WingCoefficients, rho_w: float,
                                 theta_dot: float = 0.0,
                                 flap_u: float = 0.0) -> tuple[float, float]:
    """Body-frame (f_x, f_z) of one wing at pitch θ_i."""
    N = wing_normal_force(theta_i, alpha, Vf, wing, rho_w, theta_dot, flap_u)
    return N * math.sin(theta_i), N * math.cos(theta_i)


def time_averaged_coefficients(force_trace, period: float, n: int, rho_w: float,
                               Vf: float, S: float) -> tuple[float, float]:
    """
    Cycle-mean coefficients from a sampled (t, T_fx, T_fz) trace:

        C̄ = −2/(ρ·V_f²·S·n·T) · ∫ T dt   over the first n periods.

    The leading minus means a trace recorded as the resistive reaction
    (−f_x) yields a positive thrust coefficient.
    """
    t, Tfx, Tfz = (np.asarray(col, dtype=float) for col in force_trace)
    if n <= 0 or period <= 0:
        raise InsufficientTrace(f"need n >= 1 and period > 0 (got n={n}, period={period})")
    if not Vf > 0:
        raise ValueError(f"Vf must be positive, got {Vf}")
    span = n * period
    if t.size < 2 or t[-1] - t[0] < span * (1.0 - 1e-9):
        covered = float(t[-1] - t[0]) if t.size else 0.0
        raise InsufficientTrace(f"trace covers {covered:.6g} s, need {span:.6g} s")

    # window ends exactly at t0 + nT; an off-grid end sample is interpolated
    t_end  = t[0] + span
    window = t < t_end
    tw = np.append(t[window], t_end)
    fx = np.append(Tfx[window], np.interp(t_end, t, Tfx))
    fz = np.append(Tfz[window], np.interp(t_end, t, Tfz))
    den = 0.5 * rho_w * Vf * Vf * S * span
    Cfx = -trapezoid(fx, tw) / den
    Cfz = -trapezoid(fz, tw) / den
    return Cfx + 0.0, Cfz + 0.0


def cycle_force_trace(wing: WingCoefficients, amplitude: float, frequency_hz: float,
                      offset: float, alpha: float, Vf: float, rho_w: float,
                      periods: int, samples_per_period: int = 400,
                      flap_u: float = 0.0, paddle: bool = False):
    """
    Sampled force trace of a converged sinusoidal stroke
    θ(t) = X + R·cos(2πft); returns (t, f_x, f_z) arrays. The time step
    divides the period exactly so integer-period windows are symmetric.
    """
    period = 1.0 / frequency_hz
    t = np.arange(periods * samples_per_period + 1) * (period / samples_per_period)
    phase = 2.0 * math.pi * frequency_hz * t
    theta = offset + amplitude * np.cos(phase)
    theta_dot = -amplitude * 2.0 * math.pi * frequency_hz * np.sin(phase) if paddle else np.zeros_like(t)
    fx = np.empty_like(t)
    fz = np.empty_like(t)
    for i in range(t.size):
        fx[i], fz[i] = flapping_instantaneous_force(
            theta[i], alpha, Vf, wing, rho_w, theta_dot[i], flap_u,
        )
    return t, fx, fz


def flapping_wrench(Tfx, angles, a: float, b: float, c: float) -> Wrench:
    """Three-wing wrench from per-wing force magnitudes and wing angles."""
    T1, T2, T3 = (float(v) for v in Tfx)
    X1, X2, X3 = (float(v) for v in angles)
    s1, c1 = math.sin(X1), math.cos(X1)
    s2, c2 = math.sin(X2), math.cos(X2)
    s3, c3 = math.sin(X3), math.cos(X3)
    F = np.array([T1 * s1 + T2 * s2 + T3 * s3, 0.0, T1 * c1 + T2 * c2 + T3 * c3])
    M = np.array([
        T1 * a * c1 - T2 * a * c2,
        T3 * c * c3 - T1 * b * c1 - T2 * b * c2,
        T2 * s2 - T1 * s1,
    ])
    return Wrench(F, M)
