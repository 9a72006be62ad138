"""
Scenario configuration.

A scenario file is JSON. It is merged key-by-key over
``DEFAULT_SCENARIO``, then dotted overrides (``cpg.R=0.2``,
``cpg.schedule.1.preset="roll"``) are applied to a copy and the result
is parsed into frozen settings objects. Nothing is kept from a failed
parse, so a bad override never half-applies.
"""

from __future__ import annotations

import copy
import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from hybrid_vehicle_sim.errors import ConfigError, SimulationError
from hybrid_vehicle_sim.services.coefficient_tables import AeroCoefficients, load_table_csv
from hybrid_vehicle_sim.services.control_service import (
    ControlMode, MixerSettings, ModeEntry, PidGains, PilotInput,
)
from hybrid_vehicle_sim.services.cpg_service import (
    CpgParams, DEFAULT_AMPLITUDE, DEFAULT_COUPLING, DEFAULT_FREQUENCY_HZ, DEFAULT_GAIN,
    DEFAULT_MAGNITUDE, behavior_preset,
)
from hybrid_vehicle_sim.services.spatial import EPS_SING, RigidBodyState
from hybrid_vehicle_sim.services.vehicle_profiles import (
    FlappingParams, RHO_AIR_DEFAULT, RHO_WATER_DEFAULT, RotorParams, VehicleParams,
)

logger = logging.getLogger(__name__)

SCENARIO_DIR: Path = Path(__file__).resolve().parent / "scenarios"

DEFAULT_SCENARIO: dict[str, Any] = {
    "name": "scenario",
    "vehicle": {},
    "initial_state": {
        "position": [0.0, 0.0, 0.0],
        "attitude": [0.0, 0.0, 0.0],   # phi, theta, psi (rad)
        "velocity": [0.0, 0.0, 0.0],   # body u, v, w
        "rates":    [0.0, 0.0, 0.0],   # body p, q, r
    },
    "mode_schedule": [{"t": 0.0, "mode": "VerticalFlight"}],
    "controller": {
        "target_position": [0.0, 0.0, 0.0],
        "gains":           {},
        "cruise_speed":    18.6,
        "cruise_thrust":   1.3,
        "mixer":           {},
        "pilot":           [],
    },
    "cpg": {
        "f":         DEFAULT_FREQUENCY_HZ,
        "R":         DEFAULT_AMPLITUDE,
        "magnitude": DEFAULT_MAGNITUDE,
        "phase13":   0.0,
        "a_r":       DEFAULT_GAIN,
        "a_x":       DEFAULT_GAIN,
        "coupling":  DEFAULT_COUPLING,
        "schedule":  [{"t": 0.0, "preset": "forward"}],
    },
    "integrator": {
        "dt":                  1e-3,
        "duration":            10.0,
        "divergence_velocity": 100.0,
        "divergence_rate":     100.0,
        "eps_sing":            EPS_SING,
    },
    "medium": {
        "surface":    0.0,
        "hysteresis": 0.05,
        "rho_air":    RHO_AIR_DEFAULT,
        "rho_water":  RHO_WATER_DEFAULT,
    },
    "output": {"stride": 10, "path": None},
    "coefficients": {"air": None, "water": None},
}


# ---------------------------------------------------------------------------
# Settings objects
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntegratorSettings:
    dt:                  float = 1e-3
    duration:            float = 10.0
    divergence_velocity: float = 100.0
    divergence_rate:     float = 100.0
    eps_sing:            float = EPS_SING

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"integrator.dt must be positive, got {self.dt}")
        if self.duration < 0:
            raise ValueError(f"integrator.duration must be >= 0, got {self.duration}")
        if self.divergence_velocity <= 0 or self.divergence_rate <= 0:
            raise ValueError("divergence bounds must be positive")


@dataclass(frozen=True)
class MediumSettings:
    surface:    float = 0.0
    hysteresis: float = 0.05

    def __post_init__(self):
        if self.hysteresis < 0:
            raise ValueError(f"medium.hysteresis must be >= 0, got {self.hysteresis}")


@dataclass(frozen=True)
class OutputSettings:
    stride: int = 10
    path:   str | None = None

    def __post_init__(self):
        if not (isinstance(self.stride, int) and self.stride >= 1):
            raise ValueError(f"output.stride must be a positive integer, got {self.stride!r}")


@dataclass(frozen=True)
class CpgScheduleEntry:
    t:         float
    preset:    str
    magnitude: float | None = None
    phase13:   float | None = None
    f:         float | None = None
    R:         float | None = None


@dataclass(frozen=True)
class CpgSettings:
    f:         float = DEFAULT_FREQUENCY_HZ
    R:         float = DEFAULT_AMPLITUDE
    magnitude: float = DEFAULT_MAGNITUDE
    phase13:   float = 0.0
    a_r:       float = DEFAULT_GAIN
    a_x:       float = DEFAULT_GAIN
    coupling:  float = DEFAULT_COUPLING
    schedule:  tuple[CpgScheduleEntry, ...] = (CpgScheduleEntry(0.0, "forward"),)

    def params_for(self, entry: CpgScheduleEntry) -> CpgParams:
        def pick(value, default):
            return default if value is None else value

        return behavior_preset(
            entry.preset,
            power     = (pick(entry.f, self.f), pick(entry.R, self.R)),
            magnitude = pick(entry.magnitude, self.magnitude),
            phase13   = pick(entry.phase13, self.phase13),
            a_r       = self.a_r,
            a_x       = self.a_x,
            coupling  = self.coupling,
        )

    def build_schedule(self) -> list[tuple[float, CpgParams]]:
        """Time-sorted (switch time, targets); the first entry applies from t = 0."""
        entries = sorted(self.schedule, key=lambda e: e.t)
        return [(e.t, self.params_for(e)) for e in entries]


@dataclass(frozen=True, eq=False)
class ControllerSettings:
    target_position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    gains:           PidGains = field(default_factory=PidGains)
    cruise_speed:    float = 18.6
    cruise_thrust:   float = 1.3
    mixer:           MixerSettings = field(default_factory=MixerSettings)
    pilot:           tuple[PilotInput, ...] = ()


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    name:          str
    vehicle:       VehicleParams
    initial_state: RigidBodyState
    mode_schedule: tuple[ModeEntry, ...]
    controller:    ControllerSettings
    cpg:           CpgSettings
    integrator:    IntegratorSettings
    medium:        MediumSettings
    output:        OutputSettings
    coefficient_paths: dict[str, str | None] = field(default_factory=dict)
    raw:           dict[str, Any] = field(default_factory=dict)

    def aero_coefficients(self) -> AeroCoefficients:
        """Default tables, with any configured CSV table replacing its medium."""
        coeffs = AeroCoefficients.default(self.vehicle)
        air_path   = self.coefficient_paths.get("air")
        water_path = self.coefficient_paths.get("water")
        if air_path is None and water_path is None:
            return coeffs
        return AeroCoefficients(
            air   = load_table_csv(air_path) if air_path else coeffs.air,
            water = load_table_csv(water_path) if water_path else coeffs.water,
        )


# ---------------------------------------------------------------------------
# Merge / override
# ---------------------------------------------------------------------------

def deep_merge(base: dict, update: dict) -> dict:
    """New dict: ``update`` over ``base``; nested dicts merge, everything else replaces."""
    merged = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def parse_override(text: str) -> tuple[str, Any]:
    """``key.path=value``; the value is parsed as JSON, else kept as a string."""
    key, sep, raw = text.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def set_dotted(data: dict, key: str, value: Any) -> None:
    parts = key.split(".")
    node: Any = data
    for depth, part in enumerate(parts):
        last = depth == len(parts) - 1
        if isinstance(node, list):
            try:
                index = int(part)
                node[index]
            except (ValueError, IndexError):
                raise ConfigError(f"override {key!r}: {part!r} is not a valid list index") from None
            if last:
                node[index] = value
            else:
                node = node[index]
        elif isinstance(node, dict):
            if last:
                node[part] = value
            else:
                node = node.setdefault(part, {})
        else:
            raise ConfigError(f"override {key!r}: {'.'.join(parts[:depth])!r} is not a mapping")


def apply_overrides(data: dict, overrides: list[str] | None) -> dict:
    """Return a copy of ``data`` with all overrides applied."""
    result = copy.deepcopy(data)
    for text in overrides or []:
        key, value = parse_override(text)
        set_dotted(result, key, value)
        logger.debug("Override %s = %r", key, value)
    return result


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _dataclass_from(cls, values: dict, section: str):
    if not isinstance(values, dict):
        raise ConfigError(f"{section} must be a mapping, got {type(values).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - names)
    if unknown:
        raise ConfigError(f"unknown key(s) in {section}: {', '.join(unknown)}")
    kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in values.items()}
    return cls(**kwargs)


def _vehicle_from(values: dict, medium: dict) -> VehicleParams:
    values = dict(values)
    rotor = _dataclass_from(RotorParams, values.pop("rotor", {}), "vehicle.rotor")
    wings = _dataclass_from(FlappingParams, values.pop("wings", {}), "vehicle.wings")
    values.setdefault("rho_air",   medium.get("rho_air", RHO_AIR_DEFAULT))
    values.setdefault("rho_water", medium.get("rho_water", RHO_WATER_DEFAULT))
    vehicle = _dataclass_from(VehicleParams, values, "vehicle")
    return dataclasses.replace(vehicle, rotor=rotor, wings=wings)


def _initial_state_from(values: dict) -> RigidBodyState:
    extra = sorted(set(values) - {"position", "attitude", "velocity", "rates"})
    if extra:
        raise ConfigError(f"unknown key(s) in initial_state: {', '.join(extra)}")
    return RigidBodyState(
        P     = values["position"],
        Theta = values["attitude"],
        V     = values["velocity"],
        Omega = values["rates"],
    )


def scenario_from_dict(data: dict) -> ScenarioConfig:
    """Parse a fully merged scenario mapping; every failure is a ConfigError."""
    try:
        medium_raw = dict(data["medium"])
        medium = MediumSettings(
            surface    = float(medium_raw.pop("surface", 0.0)),
            hysteresis = float(medium_raw.pop("hysteresis", 0.05)),
        )
        unknown = sorted(set(medium_raw) - {"rho_air", "rho_water"})
        if unknown:
            raise ConfigError(f"unknown key(s) in medium: {', '.join(unknown)}")
        vehicle = _vehicle_from(data["vehicle"], medium_raw)
        vehicle.validate()

        ctrl = dict(data["controller"])
        controller = ControllerSettings(
            target_position = tuple(float(v) for v in ctrl.pop("target_position")),
            gains           = _dataclass_from(PidGains, ctrl.pop("gains"), "controller.gains"),
            cruise_speed    = float(ctrl.pop("cruise_speed")),
            cruise_thrust   = float(ctrl.pop("cruise_thrust")),
            mixer           = _dataclass_from(MixerSettings, ctrl.pop("mixer"), "controller.mixer"),
            pilot           = tuple(sorted(
                (_dataclass_from(PilotInput, p, "controller.pilot") for p in ctrl.pop("pilot")),
                key=lambda p: p.t,
            )),
        )
        if ctrl:
            raise ConfigError(f"unknown key(s) in controller: {', '.join(sorted(ctrl))}")

        cpg_raw = dict(data["cpg"])
        schedule = tuple(
            _dataclass_from(CpgScheduleEntry, entry, "cpg.schedule")
            for entry in cpg_raw.pop("schedule")
        )
        if not schedule:
            raise ConfigError("cpg.schedule must have at least one entry")
        cpg = _dataclass_from(CpgSettings, cpg_raw, "cpg")
        cpg = dataclasses.replace(cpg, schedule=schedule)
        cpg.build_schedule()

        modes = tuple(sorted(
            (ModeEntry(float(e["t"]), ControlMode.parse(e["mode"])) for e in data["mode_schedule"]),
            key=lambda e: e.t,
        ))
        if not modes:
            raise ConfigError("mode_schedule must have at least one entry")

        integrator = _dataclass_from(IntegratorSettings, data["integrator"], "integrator")
        if 0 < integrator.duration < integrator.dt:
            raise ConfigError(f"integrator.duration ({integrator.duration}) is shorter than dt ({integrator.dt})")

        coefficient_paths = dict(data.get("coefficients") or {})
        unknown = sorted(set(coefficient_paths) - {"air", "water"})
        if unknown:
            raise ConfigError(f"unknown key(s) in coefficients: {', '.join(unknown)}")

        return ScenarioConfig(
            name              = str(data["name"]),
            vehicle           = vehicle,
            initial_state     = _initial_state_from(data["initial_state"]),
            mode_schedule     = modes,
            controller        = controller,
            cpg               = cpg,
            integrator        = integrator,
            medium            = medium,
            output            = _dataclass_from(OutputSettings, data["output"], "output"),
            coefficient_paths = coefficient_paths,
            raw               = copy.deepcopy(data),
        )
    except ConfigError:
        raise
    except (SimulationError, TypeError, ValueError, KeyError) as e:
        raise ConfigError(f"invalid scenario: {e}") from e


def read_scenario_file(path: str | Path) -> dict:
    """Raw JSON of a scenario file. OSError propagates (I/O), bad JSON is a ConfigError."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: not valid JSON ({e})") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return data


def build_scenario(data: dict | None = None, overrides: list[str] | None = None) -> ScenarioConfig:
    merged = deep_merge(DEFAULT_SCENARIO, data or {})
    return scenario_from_dict(apply_overrides(merged, overrides))


def load_scenario(path: str | Path, overrides: list[str] | None = None) -> ScenarioConfig:
    config = build_scenario(read_scenario_file(path), overrides)
    logger.info("Loaded scenario '%s' from %s (%d override(s))",
                config.name, path, len(overrides or []))
    return config


def bundled_scenario(name: str) -> Path:
    """Path of a scenario shipped in ``config/scenarios`` (name without .json)."""
    path = SCENARIO_DIR / f"{name}.json"
    if not path.exists():
        available = sorted(p.stem for p in SCENARIO_DIR.glob("*.json"))
        raise ConfigError(f"no bundled scenario {name!r}; available: {', '.join(available)}")
    return path
