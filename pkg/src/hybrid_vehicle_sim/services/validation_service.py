"""
Built-in invariant suite behind ``hybrid-sim validate``.

Each check returns a ``CheckResult``; none of them raises for a failed
property. Randomised checks draw from a fixed-seed generator, so the
report is reproducible.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable

import numpy as np
from scipy.spatial.transform import Rotation

from hybrid_vehicle_sim.services.actuation_service import (
    cycle_force_trace, wing_coefficients,
)
from hybrid_vehicle_sim.services.coefficient_tables import AeroCoefficients
from hybrid_vehicle_sim.services.cpg_service import (
    DEFAULT_AMPLITUDE, DEFAULT_FREQUENCY_HZ, DEFAULT_GAIN, PRESET_NAMES,
    behavior_preset, critically_damped_response, simulate_schedule,
)
from hybrid_vehicle_sim.services.dynamics_service import (
    Wrench, damping_wrench, dynamics_derivative, flow_angles, fluid_wrench, restoring_wrench,
)
from hybrid_vehicle_sim.services.spatial import (
    EulerZXY, RigidBodyState, angular_rate_transform, rotation_body_to_earth,
)
from hybrid_vehicle_sim.services.vehicle_profiles import (
    AIR, DEFAULT_VEHICLE, MediumContext, VehicleParams, WATER,
)

logger = logging.getLogger(__name__)

SEED: int = 20240521


# ---------------------------------------------------------------------------
# Result types
# ---------------------------------------------------------------------------

class CheckCode(Enum):
    OK     = "ok"
    FAILED = "failed"
    ERROR  = "error"


@dataclass(frozen=True)
class CheckResult:
    name:    str
    ok:      bool
    code:    CheckCode
    message: str = ""

    @classmethod
    def passed(cls, name: str, message: str = "") -> "CheckResult":
        return cls(name, True, CheckCode.OK, message)

    @classmethod
    def failed(cls, name: str, message: str) -> "CheckResult":
        return cls(name, False, CheckCode.FAILED, message)


def skew(v) -> np.ndarray:
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------

def euler_rate_oracle(att: EulerZXY, omega) -> np.ndarray:
    """
    Θ̇ from the body rate composed axis by axis: ψ̇ about the inertial z,
    φ̇ about the intermediate x, θ̇ about the body y,

        Ω = Ry(θ)ᵀ·e_x·φ̇ + e_y·θ̇ + Ry(θ)ᵀ·Rx(φ)ᵀ·e_z·ψ̇,

    with the elementary rotations taken from scipy and solved exactly.
    """
    Ry = Rotation.from_euler("y", att.theta).as_matrix()
    Rx = Rotation.from_euler("x", att.phi).as_matrix()
    E  = np.column_stack([Ry.T[:, 0], np.array([0.0, 1.0, 0.0]), (Ry.T @ Rx.T)[:, 2]])
    return np.linalg.solve(E, np.asarray(omega, dtype=float))


def dense_dynamics_oracle(state: RigidBodyState, control: Wrench, medium: MediumContext,
                          coeffs: AeroCoefficients, params: VehicleParams) -> np.ndarray:
    """(V̇, Ω̇) from a full 6×6 mass matrix, Coriolis/Munk terms as skew products."""
    k  = medium.k
    Ma = np.diag(np.abs(np.asarray(params.Ma, dtype=float)))
    M  = np.zeros((6, 6))
    M[:3, :3] = params.m * np.eye(3) + k * Ma
    M[3:, 3:] = np.diag(params.J0) + k * np.diag(np.abs(np.asarray(params.Ja, dtype=float)))

    V, Om = state.V, state.Omega
    alpha, beta, Vf = flow_angles(V)
    fluid = fluid_wrench(alpha, beta, Vf, medium, coeffs, params)
    damp  = damping_wrench(Om, medium, params)
    rest  = restoring_wrench(state.Theta, medium, params)

    rhs = np.zeros(6)
    rhs[:3] = control.F - fluid.F + rest.F + skew(V) @ (M[:3, :3] @ Om)
    rhs[3:] = (control.M - fluid.M - damp.M + rest.M
               - k * skew(V) @ (Ma @ V)
               - params.gyroscopic_sign * skew(Om) @ (M[3:, 3:] @ Om))
    return np.linalg.solve(M, rhs)


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

def check_orthogonality(n: int = 1000, tol: float = 1e-12) -> CheckResult:
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(n):
        R = rotation_body_to_earth(rng.uniform(-math.pi, math.pi, 3))
        worst = max(worst, float(np.max(np.abs(R @ R.T - np.eye(3)))),
                    abs(float(np.linalg.det(R)) - 1.0))
    name = "rotation_orthogonality"
    if worst > tol:
        return CheckResult.failed(name, f"max deviation {worst:.3g} > {tol:g}")
    return CheckResult.passed(name, f"max deviation {worst:.3g}")


def check_rate_transform(n: int = 1000, tol: float = 1e-9) -> CheckResult:
    rng = np.random.default_rng(SEED + 1)
    worst = 0.0
    for _ in range(n):
        att   = EulerZXY(rng.uniform(-1.2, 1.2), rng.uniform(-1.4, 1.4), rng.uniform(-2.5, 2.5))
        omega = rng.uniform(-2.0, 2.0, 3)
        diff  = angular_rate_transform(att) @ omega - euler_rate_oracle(att, omega)
        worst = max(worst, float(np.max(np.abs(diff))))
    name = "euler_rate_transform"
    if worst > tol:
        return CheckResult.failed(name, f"max deviation from rotation oracle {worst:.3g} > {tol:g}")
    return CheckResult.passed(name, f"max deviation {worst:.3g}")


def check_dynamics_oracle(params: VehicleParams = DEFAULT_VEHICLE,
                          coeffs: AeroCoefficients | None = None,
                          n: int = 1000, rtol: float = 1e-10) -> CheckResult:
    coeffs = coeffs if coeffs is not None else AeroCoefficients.default(params)
    rng = np.random.default_rng(SEED + 2)
    worst = 0.0
    for i in range(n):
        medium = MediumContext.for_flag(AIR if i % 2 == 0 else WATER, params)
        state = RigidBodyState(
            P     = rng.uniform(-5.0, 5.0, 3),
            Theta = EulerZXY(rng.uniform(-1.2, 1.2), rng.uniform(-math.pi, math.pi),
                             rng.uniform(-math.pi, math.pi)),
            V     = rng.uniform(-3.0, 3.0, 3),
            Omega = rng.uniform(-2.0, 2.0, 3),
        )
        control = Wrench(rng.uniform(-5.0, 5.0, 3), rng.uniform(-0.5, 0.5, 3))
        Vdot, Wdot = dynamics_derivative(state, control, medium, coeffs, params)
        got    = np.concatenate([Vdot, Wdot])
        oracle = dense_dynamics_oracle(state, control, medium, coeffs, params)
        worst  = max(worst, float(np.max(np.abs(got - oracle)) / max(1.0, np.max(np.abs(oracle)))))
    name = f"dynamics_oracle(gyroscopic_sign={params.gyroscopic_sign:+g})"
    if worst > rtol:
        return CheckResult.failed(name, f"relative deviation {worst:.3g} > {rtol:g}")
    return CheckResult.passed(name, f"relative deviation {worst:.3g}")


def check_cpg_convergence(dt: float = 1e-3, tol: float = 1e-6) -> CheckResult:
    name   = "cpg_convergence"
    params = behavior_preset("forward")
    t, states = simulate_schedule([(0.0, params)], dt, 0.5)
    r_err = float(np.max(np.abs(states[:, 3] - critically_damped_response(t, DEFAULT_AMPLITUDE, DEFAULT_GAIN))))
    if r_err > tol:
        return CheckResult.failed(name, f"amplitude deviates from closed form by {r_err:.3g}")

    t, states = simulate_schedule([(0.0, params)], dt, 3.0)
    later = t >= 1.0
    phase_rate = np.polyfit(t[later], states[later, 0], 1)[0]
    freq = phase_rate / (2.0 * math.pi)
    rel  = abs(freq - DEFAULT_FREQUENCY_HZ) / DEFAULT_FREQUENCY_HZ
    if rel > 1e-3:
        return CheckResult.failed(name, f"output frequency {freq:.5g} Hz off by {rel:.2%}")
    return CheckResult.passed(name, f"amplitude error {r_err:.2g}, frequency {freq:.5g} Hz")


def check_smooth_switching(dt: float = 1e-3) -> CheckResult:
    """Output jumps across a schedule through every preset stay rate-bounded."""
    name = "cpg_smooth_switching"
    order = (*PRESET_NAMES, "forward", "roll")
    schedule = [(1.0 * i, behavior_preset(p, phase13=math.pi if i == 5 else 0.0))
                for i, p in enumerate(order)]
    t, states = simulate_schedule(schedule, dt, len(order) * 1.0)
    theta = states[:, 9:12] + states[:, 3:6] * np.cos(states[:, 0:3])
    jumps = np.max(np.abs(np.diff(theta, axis=0)))
    X_all = np.array([p.X for _, p in schedule])
    dX    = float(np.max(np.abs(np.diff(X_all, axis=0))))
    r_max = float(np.max(states[:, 3:6]))
    bound = 2.0 * (2.0 * math.pi * DEFAULT_FREQUENCY_HZ * r_max + DEFAULT_GAIN * dX) * dt
    if jumps > bound:
        return CheckResult.failed(name, f"output jump {jumps:.3g} rad exceeds {bound:.3g} rad")
    return CheckResult.passed(name, f"largest step {jumps:.3g} rad (bound {bound:.3g})")


def check_zero_mean_fz(params: VehicleParams = DEFAULT_VEHICLE, periods: int = 10) -> CheckResult:
    name = "zero_mean_vertical_force"
    worst = 0.0
    for i in range(3):
        wing = wing_coefficients(params.wings, i)
        _, _, fz = cycle_force_trace(wing, DEFAULT_AMPLITUDE, DEFAULT_FREQUENCY_HZ, 0.0, 0.0,
                                     0.3, params.rho_water, periods)
        peak = float(np.max(np.abs(fz)))
        worst = max(worst, abs(float(np.mean(fz[:-1]))) / peak)
    if worst >= 1e-6:
        return CheckResult.failed(name, f"|mean fz| / peak = {worst:.3g}")
    return CheckResult.passed(name, f"|mean fz| / peak = {worst:.3g}")


def check_hysteresis(hysteresis: float = 0.05) -> CheckResult:
    # Local import: the simulation module depends on this package's services.
    from hybrid_vehicle_sim.services.simulation_service import detect_medium

    name = "medium_hysteresis"
    for k0 in (AIR, WATER):
        k = k0
        for z in 0.25 * hysteresis * np.sin(np.linspace(0.0, 20.0 * math.pi, 2001)):
            k = detect_medium(float(z), k, 0.0, hysteresis).k
            if k != k0:
                return CheckResult.failed(name, f"flag chattered from {k0} at z={z:.4g}")
    return CheckResult.passed(name, "no switch inside the band")


def check_coefficient_tables(coeffs: AeroCoefficients) -> CheckResult:
    problems = coeffs.violations()
    if problems:
        return CheckResult.failed("coefficient_tables", "violated: " + ", ".join(problems))
    return CheckResult.passed("coefficient_tables")


def check_determinism(config) -> CheckResult:
    from hybrid_vehicle_sim.services.export_service import record_hash
    from hybrid_vehicle_sim.services.simulation_service import SimulationService

    first  = record_hash(SimulationService().run_scenario(config))
    second = record_hash(SimulationService().run_scenario(config))
    name = "determinism"
    if first != second:
        return CheckResult.failed(name, f"hash {first[:12]} != {second[:12]}")
    return CheckResult.passed(name, f"hash {first[:12]}")


# ---------------------------------------------------------------------------
# Service
# ---------------------------------------------------------------------------

class ValidationService:
    """Runs the suite against one vehicle, coefficient set and (optional) scenario."""

    def __init__(self, params: VehicleParams = DEFAULT_VEHICLE,
                 coeffs: AeroCoefficients | None = None, scenario=None):
        self.params   = params
        self.coeffs   = coeffs if coeffs is not None else AeroCoefficients.default(params)
        self.scenario = scenario

    def checks(self) -> list[tuple[str, Callable[[], CheckResult]]]:
        out = [
            ("rotation_orthogonality", check_orthogonality),
            ("euler_rate_transform",   check_rate_transform),
            ("coefficient_tables",     lambda: check_coefficient_tables(self.coeffs)),
            ("dynamics_oracle",        lambda: check_dynamics_oracle(self.params, self.coeffs)),
            ("cpg_convergence",        check_cpg_convergence),
            ("cpg_smooth_switching",   check_smooth_switching),
            ("zero_mean_vertical_force", lambda: check_zero_mean_fz(self.params)),
            ("medium_hysteresis",      check_hysteresis),
        ]
        if self.scenario is not None:
            short = replace(self.scenario, integrator=replace(
                self.scenario.integrator, duration=min(self.scenario.integrator.duration, 0.5),
            ))
            out.append(("determinism", lambda: check_determinism(short)))
        return out

    def run_all(self) -> list[CheckResult]:
        results = []
        for name, check in self.checks():
            try:
                result = check()
            except Exception as e:
                logger.exception("Check %s raised", name)
                result = CheckResult(name, False, CheckCode.ERROR, f"{type(e).__name__}: {e}")
            log = logger.info if result.ok else logger.error
            log("%-28s %s %s", result.name, "PASS" if result.ok else "FAIL", result.message)
            results.append(result)
        return results
