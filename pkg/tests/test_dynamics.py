from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.interpolate import RegularGridInterpolator

from hybrid_vehicle_sim.errors import CoefficientOutOfRange, NonPositiveDefiniteMass
from hybrid_vehicle_sim.services.coefficient_tables import (
    COLUMNS, CRUISE_SPEED, calibrated_lift_slope, load_table_csv, save_table_csv,
)
from hybrid_vehicle_sim.services.dynamics_service import (
    Wrench, buoyancy_centre, dynamics_derivative, flow_angles, fluid_wrench,
    restoring_wrench, submergence_fraction, wind_to_body,
)
from hybrid_vehicle_sim.services.simulation_service import detect_medium
from hybrid_vehicle_sim.services.spatial import EulerZXY, RigidBodyState, rotation_body_to_earth
from hybrid_vehicle_sim.services.validation_service import check_dynamics_oracle
from hybrid_vehicle_sim.services.vehicle_profiles import AIR, WATER


# ---------------------------------------------------------------------------
# Flow angles and coefficient tables
# ---------------------------------------------------------------------------

def test_flow_angles_at_rest_are_zero():
    assert flow_angles([0.0, 0.0, 0.0]) == (0.0, 0.0, 0.0)


def test_flow_angles():
    alpha, beta, Vf = flow_angles([1.0, 0.0, 1.0])
    assert alpha == pytest.approx(math.pi / 4)
    assert beta == 0.0
    assert Vf == pytest.approx(math.sqrt(2.0))
    _, beta, _ = flow_angles([0.0, 2.0, 0.0])
    assert beta == pytest.approx(math.pi / 2)


def test_wind_frame_first_axis_is_flow_direction(rng):
    for _ in range(50):
        V = rng.uniform(-3.0, 3.0, 3)
        alpha, beta, Vf = flow_angles(V)
        C = wind_to_body(alpha, beta)
        assert C[:, 0] == pytest.approx(V / Vf)
        assert abs(C[:, 0] @ C[:, 1]) < 1e-12
        assert abs(C[:, 0] @ C[:, 2]) < 1e-12


def test_fluid_force_opposes_velocity(rng, coeffs, params, air, water):
    for medium in (air, water):
        for _ in range(100):
            V = rng.uniform(-2.0, 2.0, 3)
            alpha, beta, Vf = flow_angles(V)
            F = fluid_wrench(alpha, beta, Vf, medium, coeffs, params).F
            # F_f enters the equations with a minus sign.
            assert -F @ V < 0.0


def test_zero_speed_gives_zero_fluid_wrench(coeffs, params, water):
    assert fluid_wrench(0.0, 0.0, 0.0, water, coeffs, params).is_zero()


def test_default_tables_are_valid(coeffs):
    assert coeffs.violations() == []


def test_lookup_outside_domain_raises(coeffs):
    with pytest.raises(CoefficientOutOfRange):
        coeffs.air.lookup(0.0, math.radians(95.0))


def test_lookup_hits_grid_values(coeffs):
    table = coeffs.water
    i, j = 190, 20
    got = table.lookup(math.radians(table.alpha_deg[i]), math.radians(table.beta_deg[j]))
    assert got == pytest.approx(table.values[i, j], abs=1e-12)


def test_lookup_matches_scipy_bilinear_interpolation(coeffs, rng):
    for table in (coeffs.air, coeffs.water):
        oracle = RegularGridInterpolator((table.alpha_deg, table.beta_deg), table.values, method="linear")
        for _ in range(200):
            a, b = rng.uniform(-180.0, 180.0), rng.uniform(-90.0, 90.0)
            got = table.lookup(math.radians(a), math.radians(b))
            assert got == pytest.approx(oracle([[a, b]])[0], rel=1e-12, abs=1e-12)


def test_table_csv_round_trip_keeps_lookups(tmp_path, coeffs):
    path = save_table_csv(coeffs.water, tmp_path / "water.csv")
    with open(path, encoding="utf-8") as fh:
        assert fh.readline().strip() == ",".join(COLUMNS)
    loaded = load_table_csv(path)
    for alpha, beta in ((0.3, 0.1), (-2.0, -0.4), (1.0, 0.0)):
        assert loaded.lookup(alpha, beta) == pytest.approx(coeffs.water.lookup(alpha, beta), rel=1e-8, abs=1e-9)


def test_negative_drag_is_reported(tmp_path, coeffs):
    values = coeffs.water.values.copy()
    values[100, 5, 0] = -0.1
    bad = type(coeffs.water)(coeffs.water.alpha_deg, coeffs.water.beta_deg, values)
    assert "drag_non_negative" in bad.violations()


def test_lift_balances_weight_at_cruise(coeffs, params, air):
    """Level cruise at 18.6 m/s, |α| = 10°: net vertical force within 10 % of zero."""
    theta = math.radians(-10.0)
    V = CRUISE_SPEED * np.array([math.cos(theta), 0.0, math.sin(theta)])
    att = EulerZXY(0.0, theta, 0.0)
    R = rotation_body_to_earth(att)
    assert (R @ V)[2] == pytest.approx(0.0, abs=1e-12)

    alpha, beta, Vf = flow_angles(V)
    assert math.degrees(alpha) == pytest.approx(-10.0)
    fluid = fluid_wrench(alpha, beta, Vf, air, coeffs, params)
    rest  = restoring_wrench(att, air, params)
    net_up = (R @ (rest.F - fluid.F))[2]
    assert abs(net_up) < 0.1 * params.weight


def test_calibrated_lift_slope(params):
    assert calibrated_lift_slope(params) == pytest.approx(5.62, abs=0.02)


# ---------------------------------------------------------------------------
# Restoring wrench
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("z, expected", [(-1.0, 1.0), (0.0, 0.5), (1.0, 0.0), (0.0125, 0.25)])
def test_submergence_fraction(z, expected):
    assert submergence_fraction(z, 0.0, 0.05) == pytest.approx(expected)


def test_buoyancy_follows_submergence_not_medium_flag(params, air, water):
    for s in (0.0, 0.3, 1.0):
        dry = restoring_wrench(EulerZXY(), air, params, submergence=s)
        wet = restoring_wrench(EulerZXY(), water, params, submergence=s)
        assert dry.F == pytest.approx(wet.F)
        assert dry.F[2] == pytest.approx(params.buoyancy * s - params.weight)


@pytest.mark.parametrize("start, stop, final_k", [(0.04, -0.04, WATER), (-0.04, 0.04, AIR)])
def test_buoyancy_is_continuous_through_the_surface(params, start, stop, final_k):
    dz = 1e-4
    k = AIR if start > 0 else WATER
    previous = None
    worst = 0.0
    for z in np.arange(start, stop, dz if stop > start else -dz):
        medium = detect_medium(z, k, 0.0, 0.05, params)
        k = medium.k
        s = submergence_fraction(z, 0.0, params.body_height)
        Fz = restoring_wrench(EulerZXY(), medium, params, s).F[2]
        if previous is not None:
            worst = max(worst, abs(Fz - previous))
        previous = Fz
    assert k == final_k
    assert worst <= 1.01 * params.buoyancy * dz / params.body_height


def test_level_restoring_force(params, air, water):
    assert restoring_wrench(EulerZXY(), air, params).F == pytest.approx([0.0, 0.0, -params.weight])
    wet = restoring_wrench(EulerZXY(), water, params)
    assert wet.F == pytest.approx([0.0, 0.0, params.buoyancy - params.weight])
    assert wet.M == pytest.approx([0.0, 0.0, 0.0], abs=1e-15)


def test_buoyancy_restores_roll(params, water):
    for phi in (0.2, -0.2):
        M = restoring_wrench(EulerZXY(phi, 0.0, 0.0), water, params).M
        assert M[0] * phi < 0.0


def test_buoyancy_centre_shifts_away_from_raised_wing(params):
    assert buoyancy_centre(params)[1] == 0.0
    assert buoyancy_centre(params, (0.5 * math.pi, 0.0, 0.0))[1] == pytest.approx(-params.buoyancy_shift)
    assert buoyancy_centre(params, (0.0, 0.5 * math.pi, 0.0))[1] == pytest.approx(params.buoyancy_shift)


# ---------------------------------------------------------------------------
# Equations of motion
# ---------------------------------------------------------------------------

def test_free_body_in_air_accelerates_with_gravity(zero_coeffs, params, air):
    Vdot, Wdot = dynamics_derivative(RigidBodyState(), Wrench.zero(), air, zero_coeffs, params)
    assert Vdot == pytest.approx([0.0, 0.0, -params.g])
    assert Wdot == pytest.approx([0.0, 0.0, 0.0])


def test_added_mass_slows_water_response(zero_coeffs, params, air, water):
    push = Wrench([1.0, 0.0, 0.0], [0.0, 0.0, 0.0])
    level = RigidBodyState()
    ax_air   = dynamics_derivative(level, push, air, zero_coeffs, params)[0][0]
    ax_water = dynamics_derivative(level, push, water, zero_coeffs, params)[0][0]
    assert ax_air == pytest.approx(1.0 / params.m)
    assert ax_water == pytest.approx(1.0 / (params.m + params.Ma[0]))


@pytest.mark.parametrize("gyroscopic_sign", [1.0, -1.0])
def test_matches_dense_oracle(params, coeffs, gyroscopic_sign):
    vehicle = replace(params, gyroscopic_sign=gyroscopic_sign)
    result = check_dynamics_oracle(vehicle, coeffs, n=300)
    assert result.ok, result.message


def test_non_positive_mass_raises(coeffs, air):
    from hybrid_vehicle_sim.services.vehicle_profiles import VehicleParams
    with pytest.raises(NonPositiveDefiniteMass):
        dynamics_derivative(RigidBodyState(), Wrench.zero(), air, coeffs, VehicleParams(m=-1.0))


def _random_state(rng) -> RigidBodyState:
    return RigidBodyState(
        P     = rng.uniform(-5.0, 5.0, 3),
        Theta = EulerZXY(rng.uniform(-1.2, 1.2), rng.uniform(-math.pi, math.pi), rng.uniform(-math.pi, math.pi)),
        V     = rng.uniform(-3.0, 3.0, 3),
        Omega = rng.uniform(-2.0, 2.0, 3),
    )


def test_hover_thrust_balances_weight_in_air(coeffs, params, air):
    hover = Wrench([0.0, 0.0, params.weight], [0.0, 0.0, 0.0])
    Vdot, Wdot = dynamics_derivative(RigidBodyState(P=[0.0, 0.0, 10.0]), hover, air, coeffs, params)
    assert Vdot == pytest.approx([0.0, 0.0, 0.0], abs=1e-12)
    assert Wdot == pytest.approx([0.0, 0.0, 0.0], abs=1e-12)


def test_added_terms_vanish_exactly_in_air(coeffs, params, air, rng):
    bare  = replace(params, Ma=(0.0, 0.0, 0.0), Ja=(0.0, 0.0, 0.0))
    heavy = replace(params, Ma=(3.0, 7.0, 11.0), Ja=(0.4, 0.9, 1.3))
    for _ in range(50):
        state   = _random_state(rng)
        control = Wrench(rng.uniform(-5.0, 5.0, 3), rng.uniform(-0.5, 0.5, 3))
        a = dynamics_derivative(state, control, air, coeffs, bare)
        b = dynamics_derivative(state, control, air, coeffs, heavy)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


@pytest.mark.parametrize("medium_name", ["air", "water"])
def test_coriolis_force_is_perpendicular_to_velocity(zero_coeffs, params, medium_name, request, rng):
    medium = request.getfixturevalue(medium_name)
    M_eff = params.effective_mass(medium.k)
    for _ in range(50):
        state  = _random_state(rng)
        still  = replace(state, Omega=np.zeros(3))
        turned = dynamics_derivative(state, Wrench.zero(), medium, zero_coeffs, params)[0]
        base   = dynamics_derivative(still, Wrench.zero(), medium, zero_coeffs, params)[0]
        coriolis = M_eff * (turned - base)
        assert abs(coriolis @ state.V) <= 1e-12 * max(1.0, np.linalg.norm(coriolis) * np.linalg.norm(state.V))


@pytest.mark.parametrize("medium_name", ["air", "water"])
def test_response_is_homogeneous_in_control_wrench(coeffs, params, medium_name, request, rng):
    medium = request.getfixturevalue(medium_name)
    for _ in range(20):
        state = _random_state(rng)
        F, M  = rng.uniform(-5.0, 5.0, 3), rng.uniform(-0.5, 0.5, 3)
        lam   = rng.uniform(-3.0, 3.0)
        base  = np.concatenate(dynamics_derivative(state, Wrench.zero(), medium, coeffs, params))
        one   = np.concatenate(dynamics_derivative(state, Wrench(F, M), medium, coeffs, params)) - base
        many  = np.concatenate(dynamics_derivative(state, Wrench(lam * F, lam * M), medium, coeffs, params)) - base
        assert many == pytest.approx(lam * one, rel=1e-9, abs=1e-9)
