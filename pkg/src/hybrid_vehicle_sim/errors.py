"""
Named error types raised by the simulation services.

Services raise; the CLI layer maps the families below to stable exit
codes (see ``main.EXIT_CODES``). Input-shaped failures also derive from
``ValueError`` so callers that only care about "bad input" can catch
that.
"""

from __future__ import annotations


class SimulationError(Exception):
    """Base class for every error raised by this package."""


# ---------------------------------------------------------------------------
# Input / model errors
# ---------------------------------------------------------------------------

class SingularAttitude(SimulationError, ValueError):
    """Roll angle inside the guard band around the ZXY singularity."""

    def __init__(self, phi: float, eps: float):
        super().__init__(
            f"roll angle {phi:.6g} rad is within {eps:g} rad of +-pi/2 "
            f"(ZXY rate transform is singular)"
        )
        self.phi = phi
        self.eps = eps


class CoefficientOutOfRange(SimulationError, ValueError):
    """Flow angles outside the coefficient table domain."""


class NonPositiveDefiniteMass(SimulationError, ValueError):
    """Effective mass or inertia matrix is not positive definite."""


class CommandOutOfRange(SimulationError, ValueError):
    """Rotor speed or tilt angle outside the actuator limits."""


class InsufficientTrace(SimulationError, ValueError):
    """Force trace too short for the requested number of periods."""


class UnknownPreset(SimulationError, ValueError):
    """Behaviour preset name not recognised."""


class InputOutOfRange(SimulationError, ValueError):
    """Normalised pilot input outside [-1, 1]."""


class IllegalTransition(SimulationError, RuntimeError):
    """Scheduled mode is inconsistent with the current medium."""


class ModeCommandMismatch(SimulationError, RuntimeError):
    """Actuator command does not match the active control mode."""


class ConfigError(SimulationError, ValueError):
    """Scenario file could not be parsed or failed schema validation."""


# ---------------------------------------------------------------------------
# Run-time failure
# ---------------------------------------------------------------------------

class NumericalDivergence(SimulationError, RuntimeError):
    """
    State norm exceeded the divergence bound.

    ``record`` holds the trajectory sampled up to the failing step (or
    ``None`` when raised outside a scenario run).
    """

    def __init__(self, t: float, step: int, detail: str, record=None):
        super().__init__(f"numerical divergence at t={t:.6g} s (step {step}): {detail}")
        self.t      = t
        self.step   = step
        self.detail = detail
        self.record = record
