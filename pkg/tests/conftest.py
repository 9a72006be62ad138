from __future__ import annotations

import numpy as np
import pytest

from hybrid_vehicle_sim.config.config import build_scenario, bundled_scenario, read_scenario_file
from hybrid_vehicle_sim.services.coefficient_tables import AeroCoefficients, CoefficientTable
from hybrid_vehicle_sim.services.vehicle_profiles import DEFAULT_VEHICLE, MediumContext


@pytest.fixture(scope="session")
def params():
    return DEFAULT_VEHICLE


@pytest.fixture(scope="session")
def coeffs(params):
    return AeroCoefficients.default(params)


@pytest.fixture(scope="session")
def zero_coeffs(coeffs):
    """Tables with every coefficient zero (no fluid loads)."""
    def blank(table: CoefficientTable) -> CoefficientTable:
        return CoefficientTable(table.alpha_deg, table.beta_deg, np.zeros_like(table.values), "zero")
    return AeroCoefficients(air=blank(coeffs.air), water=blank(coeffs.water))


@pytest.fixture
def air(params):
    return MediumContext.air(params)


@pytest.fixture
def water(params):
    return MediumContext.water(params)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def load_bundled():
    """Factory: a bundled scenario with dotted overrides applied."""
    def _load(name: str, *overrides: str):
        return build_scenario(read_scenario_file(bundled_scenario(name)), list(overrides))
    return _load
