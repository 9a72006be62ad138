"""
Central pattern generator for the three pitching wings.

Each wing is driven by an amplitude-controlled phase oscillator:

    φ̇_i = 2π·f_i + Σ_j w_ij·sin(φ_j − φ_i − φ_ij)
    r̈_i = a_r·(a_r/4·(R_i − r_i) − ṙ_i)
    ẍ_i = a_x·(a_x/4·(X_i − x_i) − ẋ_i)
    θ_i = x_i + r_i·cos φ_i

Amplitude and offset follow critically damped second-order responses,
so swapping the targets (``set_params``) never produces a jump in θ or
θ̇. Phase biases are built from desired phases ψ as φ_ij = ψ_j − ψ_i;
the coupling then locks φ_j − φ_i to φ_ij.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from hybrid_vehicle_sim.errors import UnknownPreset

logger = logging.getLogger(__name__)

N_OSC = 3
STATE_SIZE = 5 * N_OSC

DEFAULT_FREQUENCY_HZ: float = 15.0 / (2.0 * math.pi)
DEFAULT_AMPLITUDE:    float = 0.5
DEFAULT_GAIN:         float = 20.0
DEFAULT_COUPLING:     float = 4.0
DEFAULT_MAGNITUDE:    float = 0.3


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

def _triple(value) -> np.ndarray:
    arr = np.broadcast_to(np.asarray(value, dtype=float), (N_OSC,))
    return arr.copy()


@dataclass(frozen=True, eq=False)
class CpgParams:
    f:        np.ndarray
    R:        np.ndarray
    X:        np.ndarray
    a_r:      float = DEFAULT_GAIN
    a_x:      float = DEFAULT_GAIN
    w:        np.ndarray = field(default_factory=lambda: np.zeros((N_OSC, N_OSC)))
    phi_bias: np.ndarray = field(default_factory=lambda: np.zeros((N_OSC, N_OSC)))
    name:     str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "f", _triple(self.f))
        object.__setattr__(self, "R", _triple(self.R))
        object.__setattr__(self, "X", _triple(self.X))
        object.__setattr__(self, "w",        np.asarray(self.w, dtype=float).reshape(N_OSC, N_OSC).copy())
        object.__setattr__(self, "phi_bias", np.asarray(self.phi_bias, dtype=float).reshape(N_OSC, N_OSC).copy())
        if not (self.a_r > 0 and self.a_x > 0):
            raise ValueError(f"convergence gains must be positive (a_r={self.a_r}, a_x={self.a_x})")
        if np.any(self.w < 0):
            raise ValueError("coupling weights must be non-negative")
        if np.any(self.f < 0):
            raise ValueError("frequencies must be non-negative")

    @property
    def desired_phases(self) -> np.ndarray:
        """Phases relative to oscillator 1 implied by the biases."""
        return self.phi_bias[0].copy()


@dataclass(frozen=True, eq=False)
class CpgNetworkState:
    phi:  np.ndarray
    r:    np.ndarray
    rdot: np.ndarray
    x:    np.ndarray
    xdot: np.ndarray

    def __post_init__(self):
        for name in ("phi", "r", "rdot", "x", "xdot"):
            object.__setattr__(self, name, _triple(getattr(self, name)))

    @classmethod
    def initial(cls, params: CpgParams) -> "CpgNetworkState":
        """At rest (r = x = 0) with the phases already at the bias pattern."""
        zeros = np.zeros(N_OSC)
        return cls(params.desired_phases, zeros, zeros, zeros, zeros)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.phi, self.r, self.rdot, self.x, self.xdot])

    @classmethod
    def from_vector(cls, y: np.ndarray) -> "CpgNetworkState":
        y = np.asarray(y, dtype=float)
        return cls(y[0:3], y[3:6], y[6:9], y[9:12], y[12:15])


# ---------------------------------------------------------------------------
# Dynamics
# ---------------------------------------------------------------------------

def cpg_derivative_vector(y: np.ndarray, params: CpgParams) -> np.ndarray:
    """Packed form of ``cpg_derivative`` used by the coupled integrator."""
    phi, r, rdot, x, xdot = y[0:3], y[3:6], y[6:9], y[9:12], y[12:15]
    diff = phi[np.newaxis, :] - phi[:, np.newaxis] - params.phi_bias
    phidot = 2.0 * math.pi * params.f + np.sum(params.w * np.sin(diff), axis=1)
    rddot  = params.a_r * (0.25 * params.a_r * (params.R - r) - rdot)
    xddot  = params.a_x * (0.25 * params.a_x * (params.X - x) - xdot)
    return np.concatenate([phidot, rdot, rddot, xdot, xddot])


def cpg_derivative(state: CpgNetworkState, params: CpgParams) -> CpgNetworkState:
    """Time derivative, returned in the state's own layout."""
    return CpgNetworkState.from_vector(cpg_derivative_vector(state.to_vector(), params))


def cpg_step(state: CpgNetworkState, params: CpgParams, dt: float) -> CpgNetworkState:
    """One classical RK4 step."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    y  = state.to_vector()
    k1 = cpg_derivative_vector(y, params)
    k2 = cpg_derivative_vector(y + 0.5 * dt * k1, params)
    k3 = cpg_derivative_vector(y + 0.5 * dt * k2, params)
    k4 = cpg_derivative_vector(y + dt * k3, params)
    return CpgNetworkState.from_vector(y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


def cpg_output(state: CpgNetworkState) -> np.ndarray:
    return state.x + state.r * np.cos(state.phi)


def cpg_output_rate(state: CpgNetworkState, params: CpgParams,
                    phidot: np.ndarray | None = None) -> np.ndarray:
    """θ̇_i, including the coupling contribution to φ̇ (reused when given)."""
    if phidot is None:
        phidot = cpg_derivative_vector(state.to_vector(), params)[0:3]
    return state.xdot + state.rdot * np.cos(state.phi) - state.r * np.sin(state.phi) * phidot


def critically_damped_response(t, target: float, gain: float,
                               start: float = 0.0, start_rate: float = 0.0):
    """Closed-form r(t) of r̈ = a(a/4·(R − r) − ṙ)."""
    t = np.asarray(t, dtype=float)
    lam = 0.5 * gain
    e0  = start - target
    return target + (e0 + (start_rate + lam * e0) * t) * np.exp(-lam * t)


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

PRESET_NAMES: tuple[str, ...] = ("forward", "roll", "pitch", "yaw_pos", "yaw_neg")


def preset_offsets(name: str, magnitude: float = DEFAULT_MAGNITUDE) -> np.ndarray:
    half_pi = 0.5 * math.pi
    table = {
        "forward": (0.0, 0.0, 0.0),
        "roll":    (magnitude, -magnitude, 0.0),
        "pitch":   (magnitude, magnitude, -magnitude),
        "yaw_pos": (half_pi, 0.0, 0.0),
        "yaw_neg": (0.0, half_pi, 0.0),
    }
    try:
        return np.array(table[name], dtype=float)
    except KeyError:
        raise UnknownPreset(f"unknown behaviour preset {name!r}; expected one of {PRESET_NAMES}") from None


def phase_bias_matrix(desired_phases) -> np.ndarray:
    psi = np.asarray(desired_phases, dtype=float)
    return psi[np.newaxis, :] - psi[:, np.newaxis]


def behavior_preset(name: str,
                    power: tuple[float, float] = (DEFAULT_FREQUENCY_HZ, DEFAULT_AMPLITUDE),
                    magnitude: float = DEFAULT_MAGNITUDE,
                    phase13: float = 0.0,
                    a_r: float = DEFAULT_GAIN,
                    a_x: float = DEFAULT_GAIN,
                    coupling: float = DEFAULT_COUPLING) -> CpgParams:
    """
    CpgParams for a named behaviour. ``power`` is (f in Hz, R in rad);
    ``magnitude`` is the roll/pitch offset; ``phase13`` the tail-wing
    phase relative to the main wings (0 in-phase, π anti-phase).
    """
    X = preset_offsets(name, magnitude)
    f, R = power
    w = coupling * (np.ones((N_OSC, N_OSC)) - np.eye(N_OSC))
    return CpgParams(
        f        = f,
        R        = R,
        X        = X,
        a_r      = a_r,
        a_x      = a_x,
        w        = w,
        phi_bias = phase_bias_matrix((0.0, 0.0, phase13)),
        name     = name,
    )


def describe_presets(magnitude: float = DEFAULT_MAGNITUDE) -> list[dict[str, str]]:
    """Rows of the behaviour table (name, offsets, phase relation)."""
    relation = {
        "forward": "phi1 = phi2 = +-phi3",
        "roll":    "X1 = -X2, X3 = 0",
        "pitch":   "X1 = X2 = -X3",
        "yaw_pos": "X1 = pi/2, X2 = X3 = 0",
        "yaw_neg": "X2 = pi/2, X1 = X3 = 0",
    }
    rows = []
    for name in PRESET_NAMES:
        X = preset_offsets(name, magnitude)
        rows.append({
            "preset":   name,
            "X":        ", ".join(f"{v:.4f}" for v in X),
            "relation": relation[name],
        })
    return rows


# ---------------------------------------------------------------------------
# Stateful wrapper
# ---------------------------------------------------------------------------

class CpgNetwork:
    """A network instance: current state plus the active targets."""

    def __init__(self, params: CpgParams, state: CpgNetworkState | None = None):
        self.params = params
        self.state  = state if state is not None else CpgNetworkState.initial(params)

    def set_params(self, new_params: CpgParams) -> None:
        """Swap targets only; the oscillator state is left untouched."""
        logger.debug("CPG targets %s -> %s", self.params.name, new_params.name)
        self.params = new_params

    def step(self, dt: float) -> np.ndarray:
        self.state = cpg_step(self.state, self.params, dt)
        return self.output()

    def output(self) -> np.ndarray:
        return cpg_output(self.state)


def simulate_schedule(schedule: list[tuple[float, CpgParams]], dt: float,
                      duration: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Run a standalone network through a time-sorted list of
    (switch time, targets). Returns (t, states) with states of shape
    (n, STATE_SIZE) in ``to_vector`` layout.
    """
    if not schedule:
        raise ValueError("CPG schedule is empty")
    if dt <= 0 or duration < 0:
        raise ValueError(f"need dt > 0 and duration >= 0 (dt={dt}, duration={duration})")
    schedule = sorted(schedule, key=lambda entry: entry[0])
    n_steps  = int(round(duration / dt))
    network  = CpgNetwork(schedule[0][1])
    index    = 0
    t        = np.arange(n_steps + 1) * dt
    states   = np.empty((n_steps + 1, STATE_SIZE))
    for step in range(n_steps + 1):
        while index + 1 < len(schedule) and schedule[index + 1][0] <= t[step] + 0.5 * dt:
            index += 1
            network.set_params(schedule[index][1])
        states[step] = network.state.to_vector()
        if step < n_steps:
            network.step(dt)
    return t, states
