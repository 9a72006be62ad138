"""
Aerodynamic / hydrodynamic coefficient tables.

A table maps the flow angles (α, β) to the six body coefficients
(C_D, C_Y, C_L, C_l, C_m, C_n). One table per medium. Tables are either
loaded from CSV (columns ``alpha_deg, beta_deg, CD, CY, CL, Cl, Cm, Cn``
on a full rectangular grid) or generated from a thin-airfoil /
flat-plate blend for the symmetric NACA 0015 section:

  |α| ≤ α_s   C_L = a_L·α,                C_D = C_D0 + K·C_L²
  |α| > α_s   C_L = C_D90·sin α·cos α,    C_D = C_D0 + C_D90·sin²α

with sideslip entering as C_L·cos β, C_Y = C_Yβ·sin β·cos β,
C_D += C_Dβ·sin²β and C_n = −C_nβ·sin β. The pitching moment is
C_m = C_mα·(sin α − sin α_trim): the air table carries the tail-wing
trim that zeroes C_m at the cruise angle of attack.

The air lift slope is not a free constant: it is solved from the
lift-balance point (lift = weight at |α| = 10°, V = 18.6 m/s) for the
vehicle the table is built for.

Sign note: α > 0 means the body velocity has a positive w component.
The fluid force is subtracted in the equations of motion, so C_L > 0
at α > 0 pushes the body towards −z; level cruise therefore sits at
α ≈ −10° (nose up).
"""

from __future__ import annotations

import csv
import logging
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from hybrid_vehicle_sim.errors import CoefficientOutOfRange, ConfigError
from hybrid_vehicle_sim.services.vehicle_profiles import (
    AIR, WATER, DEFAULT_VEHICLE, VehicleParams,
)

logger = logging.getLogger(__name__)

COLUMNS: tuple[str, ...] = ("alpha_deg", "beta_deg", "CD", "CY", "CL", "Cl", "Cm", "Cn")
COEFFICIENT_NAMES: tuple[str, ...] = COLUMNS[2:]

# Lift-balance operating point.
CRUISE_SPEED:     float = 18.6
CRUISE_ALPHA_DEG: float = 10.0

# Domain tolerance for floating-point noise on the table edges (rad).
_DOMAIN_TOL: float = 1e-9


# ---------------------------------------------------------------------------
# Table shape parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BlendShape:
    C_D0:            float
    lift_slope:      float
    K:               float = 0.05
    C_D90:           float = 1.9
    alpha_stall_deg: float = 15.0
    C_m_alpha:       float = 2.0
    alpha_trim_deg:  float = 0.0
    C_Y_beta:        float = 0.8
    C_D_beta:        float = 1.2
    C_n_beta:        float = 0.5


def calibrated_lift_slope(params: VehicleParams = DEFAULT_VEHICLE,
                          speed: float = CRUISE_SPEED,
                          alpha_deg: float = CRUISE_ALPHA_DEG) -> float:
    """Lift slope (1/rad) giving lift = weight at the cruise point."""
    q_bar = 0.5 * params.rho_air * speed ** 2
    return params.weight / (q_bar * params.S * math.radians(alpha_deg))


def default_shapes(params: VehicleParams = DEFAULT_VEHICLE) -> dict[int, BlendShape]:
    slope = calibrated_lift_slope(params)
    return {
        AIR: BlendShape(
            C_D0           = 0.03,
            lift_slope     = slope,
            alpha_trim_deg = -CRUISE_ALPHA_DEG,
        ),
        # Drag referenced to the wing area; includes fuselage, canopy and
        # the deployed wings.
        WATER: BlendShape(
            C_D0       = 0.21,
            lift_slope = slope,
            C_m_alpha  = 0.5,
        ),
    }


def blend_coefficients(alpha: np.ndarray, beta: np.ndarray, shape: BlendShape) -> np.ndarray:
    """Evaluate the blend on broadcastable α, β arrays (rad); returns (..., 6)."""
    alpha, beta = np.broadcast_arrays(np.asarray(alpha, float), np.asarray(beta, float))
    alpha_s = math.radians(shape.alpha_stall_deg)
    pre     = np.abs(alpha) <= alpha_s

    sa, ca = np.sin(alpha), np.cos(alpha)
    sb, cb = np.sin(beta),  np.cos(beta)

    cl_pre  = shape.lift_slope * alpha
    cl_post = shape.C_D90 * sa * ca
    CL = np.where(pre, cl_pre, cl_post)

    cd_pre  = shape.C_D0 + shape.K * cl_pre ** 2
    cd_post = shape.C_D0 + shape.C_D90 * sa ** 2
    CD = np.where(pre, cd_pre, cd_post) + shape.C_D_beta * sb ** 2

    CY = shape.C_Y_beta * sb * cb
    Cl = np.zeros_like(alpha)
    Cm = shape.C_m_alpha * (sa - math.sin(math.radians(shape.alpha_trim_deg))) * cb
    Cn = -shape.C_n_beta * sb

    return np.stack([CD, CY, CL * cb, Cl, Cm, Cn], axis=-1)


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------

def _cell(grid: tuple[float, ...], x: float) -> tuple[int, float]:
    """Lower index of the grid cell holding x and the fractional offset in it."""
    i = min(max(bisect_right(grid, x) - 1, 0), len(grid) - 2)
    return i, (x - grid[i]) / (grid[i + 1] - grid[i])


@dataclass(frozen=True, eq=False)
class CoefficientTable:
    """Full grid of coefficients, α-major, angles in degrees."""

    alpha_deg: np.ndarray
    beta_deg:  np.ndarray
    values:    np.ndarray          # (n_alpha, n_beta, 6)
    source:    str = "generated"
    _alpha:    tuple[float, ...] = field(init=False, repr=False, compare=False)
    _beta:     tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        alpha = np.asarray(self.alpha_deg, dtype=float)
        beta  = np.asarray(self.beta_deg, dtype=float)
        vals  = np.asarray(self.values, dtype=float)
        if vals.shape != (alpha.size, beta.size, 6):
            raise ConfigError(
                f"coefficient grid shape {vals.shape} does not match "
                f"{alpha.size} alpha x {beta.size} beta x 6"
            )
        for name, axis in (("alpha", alpha), ("beta", beta)):
            if axis.size < 2 or np.any(np.diff(axis) <= 0.0):
                raise ConfigError(f"{name} grid must hold at least two strictly increasing values")
        object.__setattr__(self, "alpha_deg", alpha)
        object.__setattr__(self, "beta_deg",  beta)
        object.__setattr__(self, "values",    vals)
        object.__setattr__(self, "_alpha", tuple(alpha.tolist()))
        object.__setattr__(self, "_beta",  tuple(beta.tolist()))

    @classmethod
    def generate(cls, shape: BlendShape,
                 alpha_step_deg: float = 1.0,
                 beta_step_deg: float = 5.0) -> "CoefficientTable":
        alpha = np.linspace(-180.0, 180.0, int(round(360.0 / alpha_step_deg)) + 1)
        beta  = np.linspace(-90.0, 90.0, int(round(180.0 / beta_step_deg)) + 1)
        A, B  = np.meshgrid(np.radians(alpha), np.radians(beta), indexing="ij")
        return cls(alpha, beta, blend_coefficients(A, B, shape))

    # ---- Queries -----------------------------------------------------

    def lookup(self, alpha: float, beta: float) -> np.ndarray:
        """Interpolated (C_D, C_Y, C_L, C_l, C_m, C_n) at α, β in rad."""
        a_deg = math.degrees(alpha)
        b_deg = math.degrees(beta)
        tol   = math.degrees(_DOMAIN_TOL)
        a_lo, a_hi = self._alpha[0], self._alpha[-1]
        b_lo, b_hi = self._beta[0],  self._beta[-1]
        if not (a_lo - tol <= a_deg <= a_hi + tol and b_lo - tol <= b_deg <= b_hi + tol):
            raise CoefficientOutOfRange(
                f"(alpha, beta) = ({a_deg:.4g}, {b_deg:.4g}) deg outside table "
                f"[{a_lo:g}, {a_hi:g}] x [{b_lo:g}, {b_hi:g}]"
            )
        a = min(max(a_deg, a_lo), a_hi)
        b = min(max(b_deg, b_lo), b_hi)
        i, ta = _cell(self._alpha, a)
        j, tb = _cell(self._beta, b)
        v = self.values
        lower = (1.0 - tb) * v[i, j]     + tb * v[i, j + 1]
        upper = (1.0 - tb) * v[i + 1, j] + tb * v[i + 1, j + 1]
        return (1.0 - ta) * lower + ta * upper

    def violations(self) -> list[str]:
        """Names of violated table invariants (empty when valid)."""
        problems: list[str] = []
        if not np.all(np.isfinite(self.values)):
            problems.append("coefficients_finite")
        if np.any(self.values[..., 0] < 0.0):
            problems.append("drag_non_negative")
        zero = np.flatnonzero(np.isclose(self.alpha_deg, 0.0))
        if zero.size == 0 or np.any(np.abs(self.values[zero[0], :, 2]) > 1e-12):
            problems.append("zero_lift_at_zero_alpha")
        if (self.alpha_deg[0] > -180.0 or self.alpha_deg[-1] < 180.0
                or self.beta_deg[0] > -90.0 or self.beta_deg[-1] < 90.0):
            problems.append("table_domain_coverage")
        return problems


@dataclass(frozen=True, eq=False)
class AeroCoefficients:
    air:   CoefficientTable
    water: CoefficientTable

    @classmethod
    def default(cls, params: VehicleParams = DEFAULT_VEHICLE) -> "AeroCoefficients":
        shapes = default_shapes(params)
        return cls(
            air   = CoefficientTable.generate(shapes[AIR]),
            water = CoefficientTable.generate(shapes[WATER]),
        )

    def table(self, k: int) -> CoefficientTable:
        return self.water if k == WATER else self.air

    def lookup(self, alpha: float, beta: float, k: int) -> np.ndarray:
        return self.table(k).lookup(alpha, beta)

    def violations(self) -> list[str]:
        out = []
        for name, table in (("air", self.air), ("water", self.water)):
            out.extend(f"{name}.{v}" for v in table.violations())
        return out


# ---------------------------------------------------------------------------
# CSV I/O
# ---------------------------------------------------------------------------

def save_table_csv(table: CoefficientTable, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(COLUMNS)
        for i, a in enumerate(table.alpha_deg):
            for j, b in enumerate(table.beta_deg):
                writer.writerow([f"{a:.9g}", f"{b:.9g}"]
                                + [f"{v:.9g}" for v in table.values[i, j]])
    logger.info("Coefficient table written to %s", path)
    return path


def load_table_csv(path: str | Path) -> CoefficientTable:
    """Read a full-grid table. Raises ``ConfigError`` on malformed input."""
    path = Path(path)
    with path.open("r", newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        missing = set(COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ConfigError(f"{path}: missing columns {sorted(missing)}")
        try:
            rows = [[float(row[c]) for c in COLUMNS] for row in reader]
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{path}: non-numeric cell ({e})") from e
    if not rows:
        raise ConfigError(f"{path}: no data rows")

    data  = np.asarray(rows)
    alpha = np.unique(data[:, 0])
    beta  = np.unique(data[:, 1])
    if len(data) != alpha.size * beta.size:
        raise ConfigError(
            f"{path}: {len(data)} rows do not form a full {alpha.size} x {beta.size} grid"
        )
    values = np.full((alpha.size, beta.size, 6), np.nan)
    ia = np.searchsorted(alpha, data[:, 0])
    ib = np.searchsorted(beta,  data[:, 1])
    values[ia, ib] = data[:, 2:]
    if np.isnan(values).any():
        raise ConfigError(f"{path}: duplicate (alpha, beta) rows")
    logger.info("Loaded coefficient table %s (%d x %d)", path, alpha.size, beta.size)
    return CoefficientTable(alpha, beta, values, source=str(path))
