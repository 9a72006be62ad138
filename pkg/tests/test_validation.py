from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from hybrid_vehicle_sim.services.coefficient_tables import AeroCoefficients, CoefficientTable
from hybrid_vehicle_sim.services.validation_service import (
    CheckCode, ValidationService, check_coefficient_tables, check_dynamics_oracle, skew,
)


def _negative_drag(table: CoefficientTable) -> CoefficientTable:
    values = table.values.copy()
    values[..., 0] = -0.1
    return CoefficientTable(table.alpha_deg, table.beta_deg, values, "negative drag")


def test_suite_passes_on_defaults(params, coeffs):
    results = ValidationService(params, coeffs).run_all()
    failed = [(r.name, r.message) for r in results if not r.ok]
    assert failed == []
    assert all(r.code is CheckCode.OK for r in results)
    assert len(results) == 8


def test_suite_with_scenario_adds_determinism(params, coeffs, load_bundled):
    results = ValidationService(params, coeffs, load_bundled("hover")).run_all()
    by_name = {r.name: r for r in results}
    assert by_name["determinism"].ok


def test_oracle_with_flipped_gyroscopic_sign(params, coeffs):
    flipped = dataclasses.replace(params, gyroscopic_sign=-1.0)
    result = check_dynamics_oracle(flipped, coeffs, n=200)
    assert result.ok, result.message
    assert "-1" in result.name


def test_negative_drag_table_fails(coeffs):
    bad = AeroCoefficients(air=coeffs.air, water=_negative_drag(coeffs.water))
    result = check_coefficient_tables(bad)
    assert not result.ok
    assert result.code is CheckCode.FAILED
    assert "water.drag_non_negative" in result.message
    assert not any(v.startswith("air.") for v in bad.violations())


def test_raising_check_is_reported_as_error(params, coeffs, monkeypatch):
    service = ValidationService(params, coeffs)

    def boom():
        raise RuntimeError("broken")

    monkeypatch.setattr(service, "checks", lambda: [("broken", boom)])
    [result] = service.run_all()
    assert result.code is CheckCode.ERROR
    assert "broken" in result.message


def test_skew_matches_cross_product(rng):
    a, b = rng.normal(size=3), rng.normal(size=3)
    assert skew(a) @ b == pytest.approx(np.cross(a, b))
