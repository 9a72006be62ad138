from __future__ import annotations

import itertools
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any

from hybrid_vehicle_sim.config.config import (
    ScenarioConfig, build_scenario, deep_merge, DEFAULT_SCENARIO, load_scenario,
    read_scenario_file,
)
from hybrid_vehicle_sim.errors import ConfigError, NumericalDivergence, SimulationError
from hybrid_vehicle_sim.services.analysis_service import summarize
from hybrid_vehicle_sim.services.coefficient_tables import AeroCoefficients, load_table_csv
from hybrid_vehicle_sim.services.cpg_service import describe_presets
from hybrid_vehicle_sim.services.export_service import (
    export_cpg_trace, write_summary_csv, write_trajectory_csv,
)
from hybrid_vehicle_sim.services.simulation_service import SimulationService, TrajectoryRecord
from hybrid_vehicle_sim.services.validation_service import CheckResult, ValidationService

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Sweep grid
# ---------------------------------------------------------------------------

def parse_grid(spec: str) -> list[tuple[str, list[Any]]]:
    """
    ``key=v1,v2;key2=w1,w2`` -> [(key, [v1, v2]), (key2, [w1, w2])].
    Values are parsed as JSON where possible. An empty spec is an empty grid.
    """
    axes: list[tuple[str, list[Any]]] = []
    for part in (p.strip() for p in spec.split(";")):
        if not part:
            continue
        key, sep, raw = part.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"grid axis {part!r} is not of the form key=v1,v2")
        values = []
        for token in (t.strip() for t in raw.split(",")):
            if not token:
                raise ConfigError(f"grid axis {key!r} has an empty value")
            try:
                values.append(json.loads(token))
            except json.JSONDecodeError:
                values.append(token)
        axes.append((key, values))
    return axes


def grid_points(axes: list[tuple[str, list[Any]]]) -> list[dict[str, Any]]:
    if not axes:
        return []
    keys = [k for k, _ in axes]
    return [dict(zip(keys, combo)) for combo in itertools.product(*(v for _, v in axes))]


def _point_overrides(point: dict[str, Any]) -> list[str]:
    return [f"{k}={json.dumps(v)}" for k, v in point.items()]


def run_sweep_point(index: int, data: dict, overrides: list[str], csv_path: str) -> dict:
    """One grid point; module-level so the process pool can pickle it."""
    row: dict[str, Any] = {"point": index, "csv": Path(csv_path).name}
    try:
        config = build_scenario(data, overrides)
        record = SimulationService().run_scenario(config)
        write_trajectory_csv(record, csv_path)
        summary = summarize(record)
        row.update(
            status             = "ok",
            mean_surge_speed   = summary.mean_surge_speed,
            pitch_peak_to_peak = summary.pitch_peak_to_peak,
            yaw_rate_frequency = summary.yaw_rate_frequency,
            roll_mean          = summary.roll_mean,
        )
    except NumericalDivergence as e:
        row.update(status=f"diverged at t={e.t:.4g} s", csv="")
    except (SimulationError, OSError) as e:
        row.update(status=f"failed: {type(e).__name__}: {e}", csv="")
    return row


# ---------------------------------------------------------------------------
# Controller
# ---------------------------------------------------------------------------

class ScenarioController:
    """Orchestrates config loading, simulation, export and validation."""

    def __init__(self):
        self.simulation_service = SimulationService()

    # ---- run ---------------------------------------------------------

    def run(self, config_path: str | Path, overrides: list[str] | None = None,
            output: str | Path | None = None,
            cpg_trace: str | Path | None = None) -> tuple[TrajectoryRecord, Path]:
        config = load_scenario(config_path, overrides)
        record = self.simulation_service.run_scenario(config)
        path   = Path(output or config.output.path or f"{config.name}.csv")
        write_trajectory_csv(record, path)
        if cpg_trace:
            export_cpg_trace(record.t, record.cpg, cpg_trace)
        return record, path

    # ---- sweep -------------------------------------------------------

    def sweep(self, config_path: str | Path, grid: str,
              output_dir: str | Path = "sweep", jobs: int = 1,
              overrides: list[str] | None = None) -> Path:
        data = deep_merge(DEFAULT_SCENARIO, read_scenario_file(config_path))
        base = [*(overrides or [])]
        build_scenario(data, base)

        axes   = parse_grid(grid)
        points = grid_points(axes)
        keys   = [k for k, _ in axes]
        out    = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        logger.info("Sweep over %d point(s) of %s with %d job(s)",
                    len(points), ", ".join(keys) or "-", jobs)

        tasks = [
            (i, data, base + _point_overrides(p), str(out / f"point_{i:03d}.csv"))
            for i, p in enumerate(points)
        ]
        if jobs <= 1 or len(tasks) <= 1:
            rows = [run_sweep_point(*task) for task in tasks]
        else:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(run_sweep_point, *task) for task in tasks]
                rows = [f.result() for f in futures]

        for point, row in zip(points, rows):
            row.update(point)
            if row["status"] != "ok":
                logger.warning("Sweep point %d (%s) %s", row["point"], point, row["status"])
        return write_summary_csv(rows, keys, out / "summary.csv")

    # ---- validate ----------------------------------------------------

    def validate(self, config_path: str | Path | None = None,
                 overrides: list[str] | None = None,
                 coefficients: list[str] | None = None) -> list[CheckResult]:
        config = (load_scenario(config_path, overrides) if config_path
                  else build_scenario({}, overrides))
        coeffs = self._coefficients(config, coefficients or [])
        return ValidationService(config.vehicle, coeffs, config).run_all()

    @staticmethod
    def _coefficients(config: ScenarioConfig, specs: list[str]) -> AeroCoefficients:
        """``[medium=]path`` entries replace the matching table; no medium means both."""
        coeffs = config.aero_coefficients()
        air, water = coeffs.air, coeffs.water
        for spec in specs:
            medium, sep, path = spec.partition("=")
            if not sep:
                medium, path = "both", spec
            if medium not in ("air", "water", "both"):
                raise ConfigError(f"coefficient spec {spec!r}: medium must be air or water")
            table = load_table_csv(path)
            if medium in ("air", "both"):
                air = table
            if medium in ("water", "both"):
                water = table
        return AeroCoefficients(air=air, water=water)

    # ---- presets -----------------------------------------------------

    @staticmethod
    def presets(magnitude: float | None = None) -> list[dict[str, str]]:
        return describe_presets() if magnitude is None else describe_presets(magnitude)

