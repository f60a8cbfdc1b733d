"""Scenario configuration: JSON loading, validation and case construction."""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from importlib import resources as pkg_resources
from pathlib import Path
from typing import Any

from .coordinator import DEFAULT_LAYERS, LayerId, Mode, ServiceLayer, layer_violations
from .engine import SimSettings
from .grid import GeneratorParams, GridModel
from .metrics import MetricSettings
from .resources import FfrResource, ResourceClass

log = logging.getLogger(__name__)

CASE_MODES = {1: Mode.NO_FFR, 2: Mode.UNSTRUCTURED, 3: Mode.STATIC_LAYERS, 4: Mode.DYNAMIC}
CASE_NAMES = {
    1: "baseline_no_ffr",
    2: "unstructured_aggregation",
    3: "partial_service_allocation",
    4: "service_oriented_coordination",
}


class ConfigError(ValueError):
    pass


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    """All problems found in a configuration, as ``(field path, rule)`` pairs."""

    def __init__(self, problems: list[tuple[str, str]]):
        self.problems = list(problems)
        super().__init__("; ".join(f"{p}: {r}" for p, r in self.problems))


class UnknownCase(ConfigError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    grid: GridModel
    resources: tuple[FfrResource, ...]
    layers: tuple[ServiceLayer, ...] = DEFAULT_LAYERS
    trigger_threshold: float = 0.03
    sim: SimSettings = SimSettings()
    metrics: MetricSettings = MetricSettings()
    case_id: int = 4
    trip_gen: str | None = None  # None: largest unit

    @property
    def mode(self) -> Mode:
        return CASE_MODES[self.case_id]

    def with_overrides(self, dt: float | None = None, horizon: float | None = None) -> "ScenarioConfig":
        sim = self.sim
        if dt is not None:
            sim = replace(sim, dt=dt)
        if horizon is not None:
            sim = replace(sim, horizon=horizon)
        cfg = replace(self, sim=sim)
        problems = cfg.violations()
        if problems:
            raise ValidationError(problems)
        return cfg

    def violations(self) -> list[tuple[str, str]]:
        out = self.grid.violations("grid.")
        ids = [r.id for r in self.resources]
        if len(set(ids)) != len(ids):
            out.append(("resources", "resource ids must be unique"))
        for i, r in enumerate(self.resources):
            out.extend(r.violations(f"resources[{i}]."))
        out.extend(layer_violations(self.layers))
        if not self.trigger_threshold > 0:
            out.append(("trigger_threshold", "must be > 0"))
        out.extend(self.sim.violations("sim."))
        out.extend(self.metrics.violations("metrics."))
        if self.case_id not in CASE_MODES:
            out.append(("case_id", "must be one of 1, 2, 3, 4"))
        if self.trip_gen is not None:
            known = {g.id for g in self.grid.generators if g.online}
            if self.trip_gen not in known:
                out.append(("disturbance.generator", f"unknown or offline generator {self.trip_gen!r}"))
        return out

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "grid": self.grid.to_dict(),
            "disturbance": {"generator": self.trip_gen},
            "resources": [r.to_dict() for r in self.resources],
            "layers": {l.id.value: l.to_dict() for l in self.layers},
            "trigger_threshold": self.trigger_threshold,
            "sim": self.sim.__dict__.copy(),
            "metrics": self.metrics.__dict__.copy(),
        }


@dataclass(frozen=True)
class SweepSpec:
    target_class: ResourceClass
    scale_factors: tuple[float, ...]
    base_case: int = 4

    def __post_init__(self):
        object.__setattr__(self, "target_class", ResourceClass.parse(self.target_class))
        object.__setattr__(self, "scale_factors", tuple(float(s) for s in self.scale_factors))
        problems = []
        if not self.scale_factors:
            problems.append(("scale_factors", "must not be empty"))
        for i, s in enumerate(self.scale_factors):
            if not 0.0 <= s <= 1.0:
                problems.append((f"scale_factors[{i}]", "must lie in [0, 1]"))
        if self.base_case not in CASE_MODES:
            problems.append(("base_case", "must be one of 1, 2, 3, 4"))
        if problems:
            raise ValidationError(problems)


def build_case(base: ScenarioConfig, case_id: int) -> ScenarioConfig:
    """Same scenario, different coordinator mode; the roster is shared untouched."""
    if case_id not in CASE_MODES:
        raise UnknownCase(f"case {case_id!r} is not one of 1-4")
    return replace(base, case_id=case_id)


def installed_capacity(cfg: ScenarioConfig) -> float:
    return sum(r.p_max * r.availability for r in cfg.resources)


# --- JSON parsing -----------------------------------------------------------

class _Collector:
    def __init__(self):
        self.problems: list[tuple[str, str]] = []

    def number(self, d: dict, key: str, path: str, default: Any = ..., allow_none=False):
        if key not in d:
            if default is ...:
                self.problems.append((f"{path}{key}", "is required"))
                return math.nan
            return default
        v = d[key]
        if v is None and allow_none:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.problems.append((f"{path}{key}", "must be a number"))
            return math.nan
        return float(v)

    def section(self, d: dict, key: str, path: str) -> dict | None:
        v = d.get(key)
        if v is None:
            return None
        if not isinstance(v, dict):
            self.problems.append((f"{path}{key}", "must be an object"))
            return None
        return v


def _unknown_keys(c: _Collector, d: dict, allowed: set[str], path: str):
    for k in d:
        if k not in allowed:
            c.problems.append((f"{path}{k}", "unknown field"))


_GEN_FIELDS = {"id", "rating", "inertia_h", "droop_r", "gov_time_const", "gov_deadband", "headroom",
               "pre_fault_output", "online"}


def _parse_grid(c: _Collector, d: dict, path: str) -> GridModel | None:
    _unknown_keys(c, d, {"system_base", "f0", "load_damping_d", "inertia_scale", "generators", "description"}, path)
    gens = d.get("generators")
    if not isinstance(gens, list):
        c.problems.append((f"{path}generators", "must be a list"))
        return None
    parsed = []
    for i, g in enumerate(gens):
        gp = f"{path}generators[{i}]."
        if not isinstance(g, dict):
            c.problems.append((gp.rstrip("."), "must be an object"))
            continue
        _unknown_keys(c, g, _GEN_FIELDS, gp)
        if not isinstance(g.get("id"), str):
            c.problems.append((f"{gp}id", "must be a string"))
        kw = {k: c.number(g, k, gp, default) for k, default in (
            ("rating", ...), ("inertia_h", ...), ("droop_r", 0.05), ("gov_time_const", 8.0),
            ("gov_deadband", 0.018), ("headroom", 0.0), ("pre_fault_output", 0.0))}
        parsed.append(GeneratorParams(id=str(g.get("id")), online=bool(g.get("online", True)), **kw))
    return GridModel(
        generators=tuple(parsed),
        system_base=c.number(d, "system_base", path, 100.0),
        f0=c.number(d, "f0", path, 60.0),
        load_damping_d=c.number(d, "load_damping_d", path, 1.0),
        inertia_scale=c.number(d, "inertia_scale", path, 0.4),
    )


_RES_FIELDS = {"id", "kind", "class", "latency_tau", "p_max", "energy_budget", "availability", "droop_gain",
               "lag_time_const", "ramp_limit", "response_deadband"}


def _parse_resource(c: _Collector, d: dict, path: str) -> FfrResource | None:
    _unknown_keys(c, d, _RES_FIELDS, path)
    try:
        kind = ResourceClass.parse(d.get("kind", d.get("class")))
    except ValueError:
        c.problems.append((f"{path}kind", "must be one of bess, datacenter, ev"))
        kind = None
    if not isinstance(d.get("id"), str):
        c.problems.append((f"{path}id", "must be a string"))
    kw = {k: c.number(d, k, path, default) for k, default in (
        ("latency_tau", ...), ("p_max", ...), ("energy_budget", ...), ("availability", 1.0),
        ("droop_gain", ...), ("lag_time_const", ...), ("response_deadband", 0.0))}
    ramp = c.number(d, "ramp_limit", path, None, allow_none=True)
    kw["ramp_limit"] = math.inf if ramp is None else ramp
    if kind is None:
        return None
    return FfrResource(id=str(d.get("id")), kind=kind, **kw)


def _parse_layers(c: _Collector, d: dict | None, path: str = "layers.") -> tuple[ServiceLayer, ...]:
    if d is None:
        warnings.warn("no 'layers' section; using default service-layer parameters", stacklevel=3)
        return DEFAULT_LAYERS
    defaults = {l.id: l for l in DEFAULT_LAYERS}
    _unknown_keys(c, d, {l.value for l in LayerId}, path)
    out = []
    for lid in LayerId:
        sec = d.get(lid.value)
        base = defaults[lid]
        if sec is None:
            warnings.warn(f"layer {lid.value!r} missing; using defaults", stacklevel=3)
            out.append(base)
            continue
        lp = f"{path}{lid.value}."
        _unknown_keys(c, sec, {"tau_max", "fade_in", "fade_out"}, lp)
        tau = c.number(sec, "tau_max", lp, base.tau_max)
        fade_in = _pair(c, sec.get("fade_in", list(base.fade_in)), f"{lp}fade_in")
        fo_raw = sec.get("fade_out", None if base.fade_out is None else list(base.fade_out))
        fade_out = None if fo_raw is None else _pair(c, fo_raw, f"{lp}fade_out")
        out.append(ServiceLayer(lid, tau, fade_in, fade_out))
    return tuple(out)


def _pair(c: _Collector, v, path: str) -> tuple[float, float]:
    if (not isinstance(v, (list, tuple)) or len(v) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
        c.problems.append((path, "must be a [start, end] pair of numbers"))
        return (0.0, 1.0)
    return (float(v[0]), float(v[1]))


def config_from_dict(data: dict, base_dir: Path | None = None) -> ScenarioConfig:
    """Build and validate a :class:`ScenarioConfig`, aggregating every violation."""
    c = _Collector()
    if not isinstance(data, dict):
        raise ValidationError([("", "top level must be a JSON object")])
    _unknown_keys(c, data, {"case_id", "grid", "disturbance", "resources", "layers", "trigger_threshold",
                            "sim", "metrics", "description"}, "")

    grid_sec = data.get("grid")
    if isinstance(grid_sec, str):
        gpath = Path(grid_sec)
        if not gpath.is_absolute() and base_dir is not None:
            gpath = base_dir / gpath
        try:
            grid_sec = json.loads(gpath.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read grid data {gpath}: {exc}") from exc
    grid = None
    if isinstance(grid_sec, dict):
        grid = _parse_grid(c, grid_sec, "grid.")
    else:
        c.problems.append(("grid", "must be an object or a path to a grid data file"))

    res_sec = data.get("resources", [])
    resources = []
    if not isinstance(res_sec, list):
        c.problems.append(("resources", "must be a list"))
    else:
        for i, r in enumerate(res_sec):
            if not isinstance(r, dict):
                c.problems.append((f"resources[{i}]", "must be an object"))
                continue
            parsed = _parse_resource(c, r, f"resources[{i}].")
            if parsed is not None:
                resources.append(parsed)

    layers = _parse_layers(c, c.section(data, "layers", ""))

    sim_sec = c.section(data, "sim", "") or {}
    _unknown_keys(c, sim_sec, {"dt", "horizon", "record_stride", "t_trip"}, "sim.")
    defaults = SimSettings()
    stride = sim_sec.get("record_stride", defaults.record_stride)
    if isinstance(stride, bool) or not isinstance(stride, int):
        c.problems.append(("sim.record_stride", "must be an integer >= 1"))
        stride = 1
    sim = SimSettings(
        dt=c.number(sim_sec, "dt", "sim.", defaults.dt),
        horizon=c.number(sim_sec, "horizon", "sim.", defaults.horizon),
        record_stride=stride,
        t_trip=c.number(sim_sec, "t_trip", "sim.", defaults.t_trip),
    )

    met_sec = c.section(data, "metrics", "") or {}
    mdef = MetricSettings()
    _unknown_keys(c, met_sec, set(mdef.__dict__), "metrics.")
    metrics = MetricSettings(**{k: c.number(met_sec, k, "metrics.", v) for k, v in mdef.__dict__.items()})

    dist = c.section(data, "disturbance", "") or {}
    trip_gen = dist.get("generator")
    if trip_gen is not None and not isinstance(trip_gen, str):
        c.problems.append(("disturbance.generator", "must be a generator id or null"))
        trip_gen = None

    case_id = data.get("case_id", 4)
    if isinstance(case_id, bool) or not isinstance(case_id, int):
        c.problems.append(("case_id", "must be an integer 1-4"))
        case_id = 4

    if grid is None:
        raise ValidationError(c.problems)
    cfg = ScenarioConfig(
        grid=grid,
        resources=tuple(resources),
        layers=layers,
        trigger_threshold=c.number(data, "trigger_threshold", "", 0.03),
        sim=sim,
        metrics=metrics,
        case_id=case_id,
        trip_gen=trip_gen,
    )
    problems = c.problems + [p for p in cfg.violations() if p not in c.problems]
    if problems:
        raise ValidationError(problems)
    return cfg


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return config_from_dict(data, base_dir=path.parent)


def default_config_path() -> Path:
    return Path(str(pkg_resources.files("ffrsim.data").joinpath("default_scenario.json")))


def load_default_config() -> ScenarioConfig:
    return load_config(default_config_path())
