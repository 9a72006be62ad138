"""
Mode-dependent controllers.

* Vertical / horizontal flight: cascaded PID. The position loop
  produces an inertial velocity setpoint, the velocity loop an
  acceleration command. Allocation adds the mode trim force to
  m·R_E^B·a_cmd; its (x, z) body components set the total thrust and
  the common tilt. Roll and yaw are held by small attitude-damping
  loops realised through differential thrust and differential tilt.
* Underwater vectored: open-loop linear mixing of pilot sticks.
* Underwater flapping: the wings follow the CPG schedule; no rotor
  command.

The ``ModeSupervisor`` turns the scenario mode schedule into the active
mode under the medium constraints.
"""

from __future__ import annotations

import bisect
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from hybrid_vehicle_sim.errors import IllegalTransition, InputOutOfRange
from hybrid_vehicle_sim.services.actuation_service import RotorCommand
from hybrid_vehicle_sim.services.cpg_service import CpgParams
from hybrid_vehicle_sim.services.spatial import RigidBodyState, rotation_body_to_earth
from hybrid_vehicle_sim.services.vehicle_profiles import (
    AIR, MediumContext, VehicleParams, WATER,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

class ControlMode(Enum):
    VERTICAL_FLIGHT     = "VerticalFlight"
    HORIZONTAL_FLIGHT   = "HorizontalFlight"
    UNDERWATER_VECTORED = "UnderwaterVectored"
    UNDERWATER_FLAPPING = "UnderwaterFlapping"

    @property
    def requires_water(self) -> bool:
        return self in (ControlMode.UNDERWATER_VECTORED, ControlMode.UNDERWATER_FLAPPING)

    @property
    def uses_rotors(self) -> bool:
        return self is not ControlMode.UNDERWATER_FLAPPING

    @classmethod
    def parse(cls, value: "str | ControlMode") -> "ControlMode":
        if isinstance(value, cls):
            return value
        for mode in cls:
            if value in (mode.value, mode.name):
                return mode
        raise ValueError(f"unknown control mode {value!r}")


def _vec3(value) -> np.ndarray:
    return np.broadcast_to(np.asarray(value, dtype=float), (3,)).copy()


@dataclass(frozen=True, eq=False)
class PidGains:
    """Per-axis gains (x, y, z in {E}) of the position and velocity loops."""

    pos_kp: np.ndarray = field(default_factory=lambda: np.array([1.0, 1.0, 1.5]))
    pos_ki: np.ndarray = field(default_factory=lambda: np.zeros(3))
    pos_kd: np.ndarray = field(default_factory=lambda: np.zeros(3))
    vel_kp: np.ndarray = field(default_factory=lambda: np.array([3.0, 3.0, 4.0]))
    vel_ki: np.ndarray = field(default_factory=lambda: np.array([0.3, 0.3, 0.5]))
    vel_kd: np.ndarray = field(default_factory=lambda: np.zeros(3))
    integrator_limit: float = 2.0
    velocity_limit:   float = 2.0
    accel_limit:      float = 6.0
    # Roll / yaw attitude damping (φ, ψ̇) in N·m per rad and per rad/s.
    roll_kp: float = 0.4
    roll_kd: float = 0.08
    yaw_kd:  float = 0.05

    def __post_init__(self):
        for name in ("pos_kp", "pos_ki", "pos_kd", "vel_kp", "vel_ki", "vel_kd"):
            arr = _vec3(getattr(self, name))
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"gain {name} must be finite")
            object.__setattr__(self, name, arr)
        for name in ("integrator_limit", "velocity_limit", "accel_limit"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def zero(cls) -> "PidGains":
        return cls(pos_kp=0.0, pos_ki=0.0, pos_kd=0.0, vel_kp=0.0, vel_ki=0.0, vel_kd=0.0,
                   roll_kp=0.0, roll_kd=0.0, yaw_kd=0.0)


@dataclass(frozen=True)
class ActuatorCommand:
    mode:         ControlMode
    rotor:        RotorCommand | None = None
    cpg:          CpgParams | None    = None
    thrust_total: float = 0.0

    @property
    def wing_offsets(self):
        return None if self.cpg is None else self.cpg.X


@dataclass(frozen=True)
class MixerSettings:
    omega_idle:  float = 0.0
    yaw_span:    float = 400.0
    pitch_span:  float = 0.5 * math.pi
    roll_span:   float = 0.25


@dataclass(frozen=True)
class PilotInput:
    t:        float = 0.0
    throttle: float = 0.0
    roll:     float = 0.0
    pitch:    float = 0.0
    yaw:      float = 0.0

    @property
    def sticks(self) -> tuple[float, float, float, float]:
        return self.throttle, self.roll, self.pitch, self.yaw


def pilot_at(series: list[PilotInput], t: float) -> PilotInput:
    """Zero-order hold over a time-sorted series (neutral before the first entry)."""
    if not series:
        return PilotInput(t)
    idx = bisect.bisect_right([p.t for p in series], t) - 1
    return series[idx] if idx >= 0 else PilotInput(t)


# ---------------------------------------------------------------------------
# Open-loop mixing
# ---------------------------------------------------------------------------

def vectored_mix(pilot, params: VehicleParams,
                 mixer: MixerSettings = MixerSettings()) -> ActuatorCommand:
    """
    Linear stick mixing:

        ω_1,2 = ω_idle + throttle·(ω_max − ω_idle) ∓ yaw·yaw_span
        γ_1,2 = pitch·pitch_span ± roll·roll_span

    followed by saturation to the actuator limits.
    """
    throttle, roll, pitch, yaw = (float(v) for v in pilot)
    for name, value in (("throttle", throttle), ("roll", roll), ("pitch", pitch), ("yaw", yaw)):
        if not -1.0 <= value <= 1.0:
            raise InputOutOfRange(f"pilot {name}={value:.6g} outside [-1, 1]")

    rotor = params.rotor
    common = mixer.omega_idle + throttle * (rotor.omega_max - mixer.omega_idle)
    omega1 = common - yaw * mixer.yaw_span
    omega2 = common + yaw * mixer.yaw_span
    gamma1 = pitch * mixer.pitch_span + roll * mixer.roll_span
    gamma2 = pitch * mixer.pitch_span - roll * mixer.roll_span

    lo, hi = rotor.gamma_limits
    cmd = RotorCommand(
        omega1 = min(max(omega1, 0.0), rotor.omega_max),
        omega2 = min(max(omega2, 0.0), rotor.omega_max),
        gamma1 = min(max(gamma1, lo), hi),
        gamma2 = min(max(gamma2, lo), hi),
    )
    return ActuatorCommand(ControlMode.UNDERWATER_VECTORED, rotor=cmd)


# ---------------------------------------------------------------------------
# Cascaded PID
# ---------------------------------------------------------------------------

class FlightController:
    """
    Cascaded position/velocity PID with one set of integrators per
    instance. ``reset`` clears the loop state (mode re-entry).
    """

    MAX_DIFFERENTIAL_TILT: float = 0.3

    def __init__(self, params: VehicleParams, gains: PidGains | None = None,
                 cruise_speed: float = 18.6, cruise_thrust: float = 1.3):
        self.params        = params
        self.gains         = gains if gains is not None else PidGains()
        self.cruise_speed  = cruise_speed
        self.cruise_thrust = cruise_thrust
        self.reset()

    def reset(self) -> None:
        self._pos_int = np.zeros(3)
        self._vel_int = np.zeros(3)
        self._prev_vel_err: np.ndarray | None = None

    # ------------------------------------------------------------------

    def trim_force(self, state: RigidBodyState, mode: ControlMode) -> np.ndarray:
        """Body-frame force the rotors supply at zero loop error."""
        if mode is ControlMode.HORIZONTAL_FLIGHT:
            return np.array([self.cruise_thrust, 0.0, 0.0])
        R = rotation_body_to_earth(state.Theta)
        return R.T @ np.array([0.0, 0.0, self.params.weight])

    def cascaded_pid_step(self, target_pos, state: RigidBodyState, dt: float,
                          mode: ControlMode = ControlMode.VERTICAL_FLIGHT,
                          medium: MediumContext | None = None) -> ActuatorCommand:
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        g      = self.gains
        medium = medium if medium is not None else MediumContext.air(self.params)
        R      = rotation_body_to_earth(state.Theta)
        vel    = R @ state.V

        # Stage 1: position -> velocity setpoint.
        pos_err = np.asarray(target_pos, dtype=float) - state.P
        self._pos_int = np.clip(self._pos_int + pos_err * dt, -g.integrator_limit, g.integrator_limit)
        v_sp = g.pos_kp * pos_err + g.pos_ki * self._pos_int - g.pos_kd * vel
        v_sp = np.clip(v_sp, -g.velocity_limit, g.velocity_limit)
        if mode is ControlMode.HORIZONTAL_FLIGHT:
            v_sp[0] = self.cruise_speed

        # Stage 2: velocity -> acceleration command.
        vel_err = v_sp - vel
        self._vel_int = np.clip(self._vel_int + vel_err * dt, -g.integrator_limit, g.integrator_limit)
        vel_err_rate = np.zeros(3) if self._prev_vel_err is None else (vel_err - self._prev_vel_err) / dt
        self._prev_vel_err = vel_err
        a_cmd = g.vel_kp * vel_err + g.vel_ki * self._vel_int + g.vel_kd * vel_err_rate
        a_cmd = np.clip(a_cmd, -g.accel_limit, g.accel_limit)

        F_des = self.trim_force(state, mode) + self.params.m * (R.T @ a_cmd)
        return self._allocate(F_des, state, mode, medium)

    # ------------------------------------------------------------------

    def _allocate(self, F_des: np.ndarray, state: RigidBodyState,
                  mode: ControlMode, medium: MediumContext) -> ActuatorCommand:
        p      = self.params
        rotor  = p.rotor
        C_T    = rotor.C_T(medium.k)
        T_max  = C_T * rotor.omega_max ** 2
        lo, hi = rotor.gamma_limits

        T     = min(math.hypot(F_des[0], F_des[2]), 2.0 * T_max)
        gamma = min(max(math.atan2(F_des[2], F_des[0]), lo), hi)

        # Attitude damping moments.
        g   = self.gains
        M_x = -g.roll_kp * state.Theta.phi - g.roll_kd * state.Omega[0]
        M_z = -g.yaw_kd * state.Omega[2]

        # Linearised split: T1,2 = T/2 ± τ, γ1,2 = γ ± δ.
        sg, cg = math.sin(gamma), math.cos(gamma)
        tau   = (M_x * sg - M_z * cg) / (2.0 * p.a)
        delta = (M_x * cg + M_z * sg) / (p.a * T) if T > 0.0 else 0.0
        tau   = min(max(tau, -0.5 * T), 0.5 * T)
        delta = min(max(delta, -self.MAX_DIFFERENTIAL_TILT), self.MAX_DIFFERENTIAL_TILT)

        T1 = min(max(0.5 * T + tau, 0.0), T_max)
        T2 = min(max(0.5 * T - tau, 0.0), T_max)
        cmd = RotorCommand(
            omega1 = min(math.sqrt(T1 / C_T), rotor.omega_max),
            omega2 = min(math.sqrt(T2 / C_T), rotor.omega_max),
            gamma1 = min(max(gamma + delta, lo), hi),
            gamma2 = min(max(gamma - delta, lo), hi),
        )
        return ActuatorCommand(mode, rotor=cmd, thrust_total=T1 + T2)


# ---------------------------------------------------------------------------
# Mode supervision
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModeEntry:
    t:    float
    mode: ControlMode


def scheduled_mode(schedule: list[ModeEntry], t: float) -> ControlMode:
    """Mode requested by the schedule at time t (first entry before it starts)."""
    if not schedule:
        raise ValueError("mode schedule is empty")
    idx = bisect.bisect_right([e.t for e in schedule], t) - 1
    return schedule[max(idx, 0)].mode


def mode_supervisor(state: RigidBodyState, medium: MediumContext,
                    schedule: list[ModeEntry], t: float = 0.0) -> ControlMode:
    """
    Constrain the scheduled mode by the medium: water modes need k = 1
    (``IllegalTransition`` otherwise); a flight mode requested under
    water is held in UnderwaterVectored until the vehicle is out.
    """
    requested = scheduled_mode(schedule, t)
    if requested.requires_water and medium.k == AIR:
        raise IllegalTransition(
            f"{requested.value} requested at t={t:.4g} s while in air (z={state.P[2]:.4g} m)"
        )
    if not requested.requires_water and medium.k == WATER:
        return ControlMode.UNDERWATER_VECTORED
    return requested


class ModeSupervisor:
    """Stateful wrapper that logs every transition."""

    def __init__(self, schedule: list[ModeEntry]):
        self.schedule = sorted(schedule, key=lambda e: e.t)
        self.current: ControlMode | None = None
        self.transitions: list[tuple[float, ControlMode]] = []

    def update(self, t: float, state: RigidBodyState, medium: MediumContext) -> ControlMode:
        mode = mode_supervisor(state, medium, self.schedule, t)
        if mode is not self.current:
            logger.info("Mode %s -> %s at t=%.3f s (k=%d, z=%.3f m)",
                        self.current.value if self.current else "-", mode.value,
                        t, medium.k, state.P[2])
            self.current = mode
            self.transitions.append((t, mode))
        return mode
