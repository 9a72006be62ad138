from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from hybrid_vehicle_sim.errors import CommandOutOfRange, InsufficientTrace
from hybrid_vehicle_sim.services.actuation_service import (
    RotorCommand, WingKinematicState, cycle_force_trace, flap_speed, flapping_instantaneous_force,
    flapping_mean_thrust, flapping_wrench, rotor_thrust, tilt_rotor_wrench,
    time_averaged_coefficients, wing_coefficients, wing_normal_force,
)

F_HZ = 15.0 / (2.0 * math.pi)


# ---------------------------------------------------------------------------
# Rotors
# ---------------------------------------------------------------------------

def test_max_air_thrust_is_bench_ceiling(params, air):
    w = params.rotor.omega_max
    total = rotor_thrust(w, params.rotor, air, 0)[0] + rotor_thrust(w, params.rotor, air, 1)[0]
    assert total == pytest.approx(31.6)


def test_reaction_torques_cancel_for_equal_speeds(params, air):
    _, q1 = rotor_thrust(1500.0, params.rotor, air, 0)
    _, q2 = rotor_thrust(1500.0, params.rotor, air, 1)
    assert q1 == pytest.approx(-q2)


def test_hover_command_lifts_weight(params, air):
    omega = math.sqrt(0.5 * params.weight / params.rotor.C_T_air)
    cmd = RotorCommand(omega, omega, 0.5 * math.pi, 0.5 * math.pi)
    wrench = tilt_rotor_wrench(cmd, params.rotor, params.a, params.b_rotor, air)
    assert wrench.F == pytest.approx([0.0, 0.0, params.weight], abs=1e-9)
    assert wrench.M == pytest.approx([0.0, 0.0, 0.0], abs=1e-9)


def test_differential_thrust_rolls_and_differential_tilt_yaws(params, air):
    roll = tilt_rotor_wrench(RotorCommand(1600.0, 1400.0, 0.5 * math.pi, 0.5 * math.pi),
                             params.rotor, params.a, params.b_rotor, air)
    assert roll.M[0] > 0.0
    assert roll.M[2] == pytest.approx(0.0, abs=1e-9)
    yaw = tilt_rotor_wrench(RotorCommand(1500.0, 1500.0, 1.2, 0.8),
                            params.rotor, params.a, params.b_rotor, air)
    assert yaw.M[2] > 0.0


def test_mirrored_command_mirrors_wrench(params, air):
    cmd = RotorCommand(1700.0, 1300.0, 1.1, 0.7)
    a = tilt_rotor_wrench(cmd, params.rotor, params.a, params.b_rotor, air)
    b = tilt_rotor_wrench(cmd.mirrored(), params.rotor, params.a, params.b_rotor, air)
    assert b.F == pytest.approx(a.F)
    assert b.M[0] == pytest.approx(-a.M[0])
    assert b.M[2] == pytest.approx(-a.M[2])


@pytest.mark.parametrize("cmd", [
    RotorCommand(omega1=-1.0),
    RotorCommand(omega2=3000.0),
    RotorCommand(gamma1=-2.0),
    RotorCommand(gamma2=2.5),
])
def test_command_out_of_range(cmd, params, air):
    with pytest.raises(CommandOutOfRange):
        tilt_rotor_wrench(cmd, params.rotor, params.a, params.b_rotor, air)


# ---------------------------------------------------------------------------
# Wings
# ---------------------------------------------------------------------------

def test_wing_aligned_with_flow_has_no_force(params, water):
    wing = wing_coefficients(params.wings, 0)
    assert wing_normal_force(0.2, 0.2, 0.5, wing, water.rho) == 0.0
    wrench = flapping_wrench([0.0, 0.0, 0.0], [0.1, 0.1, 0.1], params.a, params.b, params.c)
    assert wrench.is_zero()


def test_normal_force_is_odd_in_incidence(params, water):
    wing = wing_coefficients(params.wings, 2)
    up   = wing_normal_force(0.3, 0.0, 0.4, wing, water.rho)
    down = wing_normal_force(-0.3, 0.0, 0.4, wing, water.rho)
    assert up > 0.0
    assert down == pytest.approx(-up)


def test_instantaneous_force_decomposition(params, water):
    wing = wing_coefficients(params.wings, 0)
    theta = 0.4
    fx, fz = flapping_instantaneous_force(theta, 0.1, 0.3, wing, water.rho, theta_dot=2.0, flap_u=0.1)
    N = wing_normal_force(theta, 0.1, 0.3, wing, water.rho, theta_dot=2.0, flap_u=0.1)
    assert fx == pytest.approx(N * math.sin(theta))
    assert fz == pytest.approx(N * math.cos(theta))


def test_flapping_wrench_matches_hand_assembly(rng, params):
    a, b, c = params.a, params.b, params.c
    for _ in range(100):
        T = rng.uniform(-2.0, 2.0, 3)
        X = rng.uniform(-1.5, 1.5, 3)
        w = flapping_wrench(T, X, a, b, c)
        s, co = np.sin(X), np.cos(X)
        F = [T @ s, 0.0, T @ co]
        M = [T[0] * a * co[0] - T[1] * a * co[1],
             T[2] * c * co[2] - T[0] * b * co[0] - T[1] * b * co[1],
             T[1] * s[1] - T[0] * s[0]]
        assert np.max(np.abs(w.F - F)) < 1e-12
        assert np.max(np.abs(w.M - M)) < 1e-12


def test_vertical_force_has_zero_cycle_mean(params, water):
    for i in range(3):
        wing = wing_coefficients(params.wings, i)
        _, _, fz = cycle_force_trace(wing, 0.5, F_HZ, 0.0, 0.0, 0.3, water.rho, periods=10)
        assert abs(np.mean(fz[:-1])) < 1e-6 * np.max(np.abs(fz))


def test_cycle_mean_coefficient_closes_mean_thrust_law(params, water):
    """The averaged coefficient fed back into the mean law reproduces the trace mean."""
    wing = wing_coefficients(params.wings, 0)
    alpha, Vf = 0.05, 0.3
    X = alpha + 0.5 * math.pi
    t, fx, fz = cycle_force_trace(wing, 0.3, F_HZ, X, alpha, Vf, water.rho, periods=4)
    Cfx, _ = time_averaged_coefficients((t, -fx, -fz), 1.0 / F_HZ, 4, water.rho, Vf, wing.S)
    closed = type(wing)(S=wing.S, Cfx_bar=Cfx)
    mean_fx, _ = flapping_mean_thrust(X, alpha, Vf, closed, water.rho)
    assert mean_fx == pytest.approx(trapezoid(fx, t) / t[-1], rel=1e-12)


def test_positive_trace_gives_negative_coefficient():
    t = np.linspace(0.0, 1.0, 101)
    ones = np.ones_like(t)
    Cfx, Cfz = time_averaged_coefficients((t, ones, -ones), 1.0, 1, 1000.0, 1.0, 0.5)
    assert Cfx == pytest.approx(-2.0 / (1000.0 * 0.5))
    assert Cfz == pytest.approx(2.0 / (1000.0 * 0.5))


def test_short_trace_raises():
    t = np.linspace(0.0, 0.5, 51)
    with pytest.raises(InsufficientTrace):
        time_averaged_coefficients((t, t, t), 1.0, 1, 1000.0, 1.0, 0.5)
    with pytest.raises(ValueError):
        time_averaged_coefficients((t, t, t), 0.1, 1, 1000.0, 0.0, 0.5)


def test_flap_speed_is_rms_of_stroke():
    assert flap_speed(0.2, F_HZ, 0.5) == pytest.approx(0.2 * 15.0 * 0.5 / math.sqrt(2.0))
    assert flap_speed(0.2, F_HZ, -0.5) == flap_speed(0.2, F_HZ, 0.5)


def test_window_ends_exactly_at_whole_periods():
    period, n = 0.73725, 2
    t = np.linspace(0.0, 2.0, 2001)
    trace = 1.0 + np.cos(2.0 * math.pi * t / period)
    Cfx, Cfz = time_averaged_coefficients((t, trace, -trace), period, n, 2.0, 1.0, 1.0)
    assert Cfx == pytest.approx(-1.0, rel=1e-4)
    assert Cfz == pytest.approx(1.0, rel=1e-4)


# ---------------------------------------------------------------------------
# Surface crossing and servo travel
# ---------------------------------------------------------------------------

def test_blended_coefficients_match_media_at_the_ends(params):
    rotor = params.rotor
    assert rotor.blended(0.0) == pytest.approx((rotor.C_T_air, rotor.C_Q_air))
    assert rotor.blended(1.0) == pytest.approx((rotor.C_T_water, rotor.C_Q_water))
    mid_ct, _ = rotor.blended(0.5)
    assert mid_ct == pytest.approx(0.5 * (rotor.C_T_air + rotor.C_T_water))


@pytest.mark.parametrize("wet, medium_name", [((0.0, 0.0), "air"), ((1.0, 1.0), "water")])
def test_wet_fraction_reproduces_medium_thrust(wet, medium_name, params, request):
    medium = request.getfixturevalue(medium_name)
    other  = request.getfixturevalue("water" if medium_name == "air" else "air")
    cmd = RotorCommand(1800.0, 1500.0, 1.2, 0.9)
    reference = tilt_rotor_wrench(cmd, params.rotor, params.a, params.b_rotor, medium)
    blended   = tilt_rotor_wrench(cmd, params.rotor, params.a, params.b_rotor, other, submergence=wet)
    assert blended.F == pytest.approx(reference.F, abs=1e-12)
    assert blended.M == pytest.approx(reference.M, abs=1e-12)


def test_thrust_grows_continuously_while_surfacing(params, water):
    w = params.rotor.omega_max
    wet = np.linspace(1.0, 0.0, 21)
    thrust = [rotor_thrust(w, params.rotor, water, 0, submergence=s)[0] for s in wet]
    assert np.all(np.diff(thrust) > 0.0)
    assert 2.0 * thrust[-1] > params.weight


def test_commanded_wing_angles_stop_at_travel():
    kin = WingKinematicState.commanded((2.0, -0.3, -1.7), (4.0, 1.0, -2.0), (0.0, 0.0, 0.0), limit=1.5)
    assert kin.theta == (1.5, -0.3, -1.5)
    assert kin.theta_dot == (0.0, 1.0, 0.0)
    kin.validate(1.5)
    with pytest.raises(CommandOutOfRange):
        WingKinematicState((0.0, 1.6, 0.0)).validate(1.5)
