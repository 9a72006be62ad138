"""
Closed-loop scenario integration.

One fixed-step RK4 clock advances the rigid body (P, Θ, V, Ω) and the
CPG network (φ, r, ṙ, x, ẋ) together. Once per step, before the RK4
stages, the engine

  1. updates the medium flag (Schmitt trigger around the surface),
  2. asks the mode supervisor for the active mode,
  3. applies any due CPG target switch,
  4. computes the actuator command (held constant over the step),
  5. records a sample when the step index is a multiple of the stride.

Runs are strictly sequential and deterministic: identical configs give
bit-identical records.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable

import numpy as np

from hybrid_vehicle_sim.errors import ModeCommandMismatch, NumericalDivergence, SimulationError
from hybrid_vehicle_sim.services.actuation_service import (
    WingKinematicState, flap_speed, flapping_wrench, tilt_rotor_wrench, wing_normal_force, wing_set,
)
from hybrid_vehicle_sim.services.coefficient_tables import AeroCoefficients
from hybrid_vehicle_sim.services.control_service import (
    ActuatorCommand, ControlMode, FlightController, ModeSupervisor, pilot_at, vectored_mix,
)
from hybrid_vehicle_sim.services.cpg_service import (
    STATE_SIZE as CPG_STATE_SIZE, CpgNetworkState, CpgParams,
    cpg_derivative_vector, cpg_output, cpg_output_rate,
)
from hybrid_vehicle_sim.services.dynamics_service import (
    Wrench, dynamics_derivative, flow_angles, submergence_fraction,
)
from hybrid_vehicle_sim.services.spatial import (
    RigidBodyState, earth_up_in_body, kinematics_derivative,
)
from hybrid_vehicle_sim.services.vehicle_profiles import (
    AIR, DEFAULT_VEHICLE, MediumContext, VehicleParams, WATER,
)

if TYPE_CHECKING:
    from hybrid_vehicle_sim.config.config import ScenarioConfig

logger = logging.getLogger(__name__)

RB_SIZE = RigidBodyState.SIZE


# ---------------------------------------------------------------------------
# Wing drive and wrench assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WingDrive:
    """Instantaneous wing kinematics from the CPG state, after servo saturation."""

    theta:     np.ndarray
    theta_dot: np.ndarray
    flap_u:    np.ndarray
    offsets:   np.ndarray

    @classmethod
    def from_cpg(cls, cpg_state: CpgNetworkState, cpg_params: CpgParams,
                 params: VehicleParams, phidot: np.ndarray | None = None) -> "WingDrive":
        wings = params.wings
        kin = WingKinematicState.commanded(
            cpg_output(cpg_state),
            cpg_output_rate(cpg_state, cpg_params, phidot),
            cpg_state.x,
            wings.theta_limit,
        )
        return cls(
            theta     = np.array(kin.theta),
            theta_dot = np.array(kin.theta_dot),
            flap_u    = np.array([flap_speed(wings.lever_arm, f, r) for f, r in zip(cpg_params.f, cpg_state.r)]),
            offsets   = np.array(kin.X),
        )


def wing_forces(state: RigidBodyState, drive: WingDrive, medium: MediumContext,
                params: VehicleParams) -> np.ndarray:
    """Normal force of each wing (N)."""
    alpha, _, Vf = flow_angles(state.V)
    return np.array([
        wing_normal_force(
            float(drive.theta[i]), alpha, Vf, wing, medium.rho,
            float(drive.theta_dot[i]), float(drive.flap_u[i]),
        )
        for i, wing in enumerate(wing_set(params.wings))
    ])


def rotor_submergence(state: RigidBodyState, params: VehicleParams,
                      surface: float) -> tuple[float, float]:
    """Wet fraction of each rotor disc, from the rotor's own height."""
    up = earth_up_in_body(state.Theta)
    z  = float(state.P[2])
    wet = []
    for side in (1.0, -1.0):
        z_rotor = z + side * params.a * up[1] + params.b_rotor * up[2]
        wet.append(submergence_fraction(z_rotor, surface, params.body_height))
    return wet[0], wet[1]


def assemble_wrench(state: RigidBodyState, mode: ControlMode, command: ActuatorCommand,
                    medium: MediumContext, params: VehicleParams,
                    drive: WingDrive | None = None,
                    rotor_wet: tuple[float, float] | None = None) -> Wrench:
    """
    Control wrench F_j, M_j: rotors in flight/vectored modes, wings in
    flapping mode. ``rotor_wet`` blends each rotor between its air and
    water coefficients; without it the medium flag decides.
    """
    if command.mode is not mode:
        raise ModeCommandMismatch(f"command for {command.mode.value} issued in {mode.value}")
    if mode.uses_rotors:
        if command.rotor is None:
            raise ModeCommandMismatch(f"{mode.value} needs a rotor command")
        return tilt_rotor_wrench(command.rotor, params.rotor, params.a, params.b_rotor, medium, rotor_wet)
    if command.rotor is not None or drive is None:
        raise ModeCommandMismatch("flapping mode takes wing kinematics and no rotor command")
    N = wing_forces(state, drive, medium, params)
    return flapping_wrench(N, drive.theta, params.a, params.b, params.c)


# ---------------------------------------------------------------------------
# Integrator pieces
# ---------------------------------------------------------------------------

def rk4_step(y: np.ndarray, dt: float, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def detect_medium(z: float, previous_k: int, surface_height: float = 0.0,
                  hysteresis: float = 0.05,
                  params: VehicleParams = DEFAULT_VEHICLE) -> MediumContext:
    """Schmitt trigger: leave the water above +h/2, enter below −h/2."""
    k = previous_k
    if previous_k == WATER and z > surface_height + 0.5 * hysteresis:
        k = AIR
    elif previous_k == AIR and z < surface_height - 0.5 * hysteresis:
        k = WATER
    return MediumContext.for_flag(k, params)


def coupled_derivative(y: np.ndarray, command: ActuatorCommand, mode: ControlMode,
                       cpg_params: CpgParams, medium: MediumContext, coeffs: AeroCoefficients,
                       params: VehicleParams, surface: float, eps_sing: float) -> np.ndarray:
    """ẏ of the packed [rigid body, CPG] state with the command held fixed."""
    rb      = RigidBodyState.from_vector(y[:RB_SIZE])
    y_cpg   = y[RB_SIZE:]
    cpg_dot = cpg_derivative_vector(y_cpg, cpg_params)

    Pdot, Thetadot = kinematics_derivative(rb, eps_sing)

    if mode.uses_rotors:
        drive, wet = None, rotor_submergence(rb, params, surface)
    else:
        cpg = CpgNetworkState.from_vector(y_cpg)
        drive, wet = WingDrive.from_cpg(cpg, cpg_params, params, cpg_dot[0:3]), None
    control = assemble_wrench(rb, mode, command, medium, params, drive, wet)
    sub     = submergence_fraction(rb.P[2], surface, params.body_height)
    Vdot, Omegadot = dynamics_derivative(
        rb, control, medium, coeffs, params, submergence=sub, wing_offsets=y_cpg[9:12],
    )
    return np.concatenate([Pdot, Thetadot, Vdot, Omegadot, cpg_dot])


# ---------------------------------------------------------------------------
# Trajectory record
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class TrajectoryRecord:
    """Samples at a constant stride; arrays are (n,) or (n, 3|4|6)."""

    t:           np.ndarray
    P:           np.ndarray
    Theta:       np.ndarray
    V:           np.ndarray
    Omega:       np.ndarray
    mode:        list[str]
    k:           np.ndarray
    rotor:       np.ndarray
    theta_w:     np.ndarray
    wing_forces: np.ndarray
    wrench:      np.ndarray
    name:        str = "scenario"
    cpg:         np.ndarray | None = None   # (n, 15) network state per sample

    def __len__(self) -> int:
        return int(self.t.size)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if len(self) > 1 else 0.0


@dataclass
class _Recorder:
    rows: dict[str, list] = field(default_factory=lambda: {
        key: [] for key in ("t", "P", "Theta", "V", "Omega", "mode", "k",
                            "rotor", "theta_w", "wing_forces", "wrench", "cpg")
    })

    def add(self, t, rb: RigidBodyState, mode: ControlMode, k: int, command: ActuatorCommand,
            theta_w, forces, wrench: Wrench, cpg: CpgNetworkState) -> None:
        r = self.rows
        r["t"].append(t)
        r["P"].append(rb.P)
        r["Theta"].append(rb.Theta.as_array())
        r["V"].append(rb.V)
        r["Omega"].append(rb.Omega)
        r["mode"].append(mode.value)
        r["k"].append(k)
        rc = command.rotor
        r["rotor"].append((0.0, 0.0, 0.0, 0.0) if rc is None
                          else (rc.omega1, rc.omega2, rc.gamma1, rc.gamma2))
        r["theta_w"].append(theta_w)
        r["wing_forces"].append(forces)
        r["wrench"].append(wrench.as_array())
        r["cpg"].append(cpg.to_vector())

    def build(self, name: str) -> TrajectoryRecord:
        r = self.rows

        def stack(key, width):
            return np.asarray(r[key], dtype=float).reshape(-1, width)

        return TrajectoryRecord(
            t           = np.asarray(r["t"], dtype=float),
            P           = stack("P", 3),
            Theta       = stack("Theta", 3),
            V           = stack("V", 3),
            Omega       = stack("Omega", 3),
            mode        = list(r["mode"]),
            k           = np.asarray(r["k"], dtype=int),
            rotor       = stack("rotor", 4),
            theta_w     = stack("theta_w", 3),
            wing_forces = stack("wing_forces", 3),
            wrench      = stack("wrench", 6),
            name        = name,
            cpg         = stack("cpg", CPG_STATE_SIZE),
        )


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------

class SimulationService:
    """Runs one scenario; a fresh controller and network per run."""

    def __init__(self, coeffs: AeroCoefficients | None = None):
        self._coeffs = coeffs

    def run_scenario(self, config: "ScenarioConfig") -> TrajectoryRecord:
        params = config.vehicle
        params.validate()
        coeffs = self._coeffs if self._coeffs is not None else config.aero_coefficients()

        integ   = config.integrator
        dt      = integ.dt
        n_steps = int(round(config.integrator.duration / dt))
        stride  = config.output.stride
        surface = config.medium.surface

        controller = FlightController(
            params,
            gains         = config.controller.gains,
            cruise_speed  = config.controller.cruise_speed,
            cruise_thrust = config.controller.cruise_thrust,
        )
        supervisor   = ModeSupervisor(config.mode_schedule)
        cpg_schedule = config.cpg.build_schedule()
        cpg_index    = 0
        cpg_params   = cpg_schedule[0][1]

        rb0 = config.initial_state
        y = np.concatenate([rb0.to_vector(), CpgNetworkState.initial(cpg_params).to_vector()])
        k = WATER if rb0.P[2] < surface else AIR
        previous_mode: ControlMode | None = None
        recorder = _Recorder()

        logger.info("Scenario '%s': dt=%g s, %d steps, stride %d, start in %s",
                    config.name, dt, n_steps, stride, "water" if k == WATER else "air")

        for step in range(n_steps + 1):
            t  = step * dt
            rb = RigidBodyState.from_vector(y[:RB_SIZE])
            try:
                medium = detect_medium(rb.P[2], k, surface, config.medium.hysteresis, params)
                if medium.k != k:
                    logger.info("Medium switch %s at t=%.3f s (z=%.4f m)", medium.name, t, rb.P[2])
                k = medium.k
                mode = supervisor.update(t, rb, medium)
                if mode is not previous_mode and mode in (ControlMode.VERTICAL_FLIGHT,
                                                          ControlMode.HORIZONTAL_FLIGHT):
                    controller.reset()
                previous_mode = mode

                while cpg_index + 1 < len(cpg_schedule) and cpg_schedule[cpg_index + 1][0] <= t + 0.5 * dt:
                    cpg_index += 1
                    cpg_params = cpg_schedule[cpg_index][1]
                    logger.info("CPG targets -> %s at t=%.3f s", cpg_params.name, t)

                command = self._command(mode, t, rb, medium, controller, cpg_params, config, dt)

                if step % stride == 0:
                    cpg   = CpgNetworkState.from_vector(y[RB_SIZE:])
                    drive = WingDrive.from_cpg(cpg, cpg_params, params)
                    if mode.uses_rotors:
                        wrench = assemble_wrench(rb, mode, command, medium, params,
                                                 rotor_wet=rotor_submergence(rb, params, surface))
                    else:
                        wrench = assemble_wrench(rb, mode, command, medium, params, drive)
                    forces = (np.zeros(3) if mode.uses_rotors
                              else wing_forces(rb, drive, medium, params))
                    recorder.add(t, rb, mode, k, command, drive.theta, forces, wrench, cpg)

                if step == n_steps:
                    break

                y = rk4_step(y, dt, lambda s: coupled_derivative(
                    s, command, mode, cpg_params, medium, coeffs, params, surface, integ.eps_sing,
                ))
            except SimulationError as e:
                logger.error("Scenario '%s' failed at step %d (t=%.4f s): %s", config.name, step, t, e)
                e.add_note(f"failing step {step}, t={t:.6g} s")
                raise

            self._check_divergence(y, t + dt, step + 1, integ, recorder, config.name)

        record = recorder.build(config.name)
        logger.info("Scenario '%s' finished: %d samples", config.name, len(record))
        return record

    # ------------------------------------------------------------------

    @staticmethod
    def _command(mode: ControlMode, t: float, rb: RigidBodyState, medium: MediumContext,
                 controller: FlightController, cpg_params: CpgParams,
                 config: "ScenarioConfig", dt: float) -> ActuatorCommand:
        if mode in (ControlMode.VERTICAL_FLIGHT, ControlMode.HORIZONTAL_FLIGHT):
            return controller.cascaded_pid_step(
                config.controller.target_position, rb, dt, mode, medium,
            )
        if mode is ControlMode.UNDERWATER_VECTORED:
            pilot = pilot_at(config.controller.pilot, t)
            return vectored_mix(pilot.sticks, config.vehicle, config.controller.mixer)
        return ActuatorCommand(mode, cpg=cpg_params)

    @staticmethod
    def _check_divergence(y: np.ndarray, t: float, step: int, integ,
                          recorder: _Recorder, name: str) -> None:
        V     = y[6:9]
        Omega = y[9:12]
        detail = None
        if not np.all(np.isfinite(y)):
            detail = "non-finite state"
        elif np.linalg.norm(V) > integ.divergence_velocity:
            detail = f"|V| = {np.linalg.norm(V):.4g} m/s > {integ.divergence_velocity:g}"
        elif np.linalg.norm(Omega) > integ.divergence_rate:
            detail = f"|Omega| = {np.linalg.norm(Omega):.4g} rad/s > {integ.divergence_rate:g}"
        if detail is not None:
            logger.error("Scenario '%s' diverged at t=%.4f s: %s", name, t, detail)
            raise NumericalDivergence(t, step, detail, record=recorder.build(name))


def run_scenario(config: "ScenarioConfig") -> TrajectoryRecord:
    return SimulationService().run_scenario(config)
