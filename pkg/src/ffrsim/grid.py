"""Uniform-frequency (centre-of-inertia) swing model of a synchronous fleet.

All generators share one frequency deviation ``delta_f``.  Each online unit
carries a droop governor modelled as a first-order lag towards a clamped,
deadbanded droop target::

    d(df_pu)/dt = (sum(P_gov) + P_ffr - P_dist - D * df_pu) / (2 * H_sys)
    dP_g/dt     = (clamp(db(-df_pu) / R_g, 0, headroom_g) - P_g) / T_g

Powers are per unit on ``system_base``; ``droop_r`` is expressed on the same
base, so a unit's steady-state stiffness is ``1 / droop_r`` pu/pu.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Sequence


class GridError(ValueError):
    pass


class ZeroInertia(GridError):
    pass


class LengthMismatch(GridError):
    pass


class ZeroStiffness(GridError):
    pass


class UnknownGenerator(GridError, KeyError):
    pass


@dataclass(frozen=True)
class GeneratorParams:
    id: str
    rating: float  # MVA
    inertia_h: float  # s, on own rating
    droop_r: float = 0.05
    gov_time_const: float = 8.0
    gov_deadband: float = 0.018  # Hz
    headroom: float = 0.0  # pu on system base
    pre_fault_output: float = 0.0  # pu on system base
    online: bool = True

    def violations(self, path: str = "") -> list[tuple[str, str]]:
        out = []
        for name in ("rating", "inertia_h", "droop_r", "gov_time_const"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                out.append((f"{path}{name}", "must be > 0"))
        if not (0.0 <= self.gov_deadband < 0.5):
            out.append((f"{path}gov_deadband", "must satisfy 0 <= deadband < 0.5 Hz"))
        if not self.headroom >= 0:
            out.append((f"{path}headroom", "must be >= 0"))
        if not self.pre_fault_output >= 0:
            out.append((f"{path}pre_fault_output", "must be >= 0"))
        return out


@dataclass(frozen=True)
class GridModel:
    generators: tuple[GeneratorParams, ...]
    system_base: float = 100.0  # MVA
    f0: float = 60.0
    load_damping_d: float = 1.0
    inertia_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))

    @property
    def online(self) -> tuple[GeneratorParams, ...]:
        return tuple(g for g in self.generators if g.online)

    @property
    def h_sys(self) -> float:
        """Effective system inertia constant in seconds on ``system_base``."""
        total = sum(g.inertia_h * g.rating for g in self.online)
        return self.inertia_scale * total / self.system_base

    @property
    def stiffness(self) -> float:
        """Steady-state frequency stiffness ``D + sum(1/R)`` in pu/pu."""
        return self.load_damping_d + sum(1.0 / g.droop_r for g in self.online)

    def index_of(self, gen_id: str) -> int:
        for i, g in enumerate(self.generators):
            if g.id == gen_id:
                return i
        raise UnknownGenerator(gen_id)

    def violations(self, path: str = "") -> list[tuple[str, str]]:
        out = []
        if not self.generators:
            out.append((f"{path}generators", "must not be empty"))
        ids = [g.id for g in self.generators]
        if len(set(ids)) != len(ids):
            out.append((f"{path}generators", "generator ids must be unique"))
        for i, g in enumerate(self.generators):
            out.extend(g.violations(f"{path}generators[{i}]."))
        if not self.system_base > 0:
            out.append((f"{path}system_base", "must be > 0"))
        if not self.f0 > 0:
            out.append((f"{path}f0", "must be > 0"))
        if not self.load_damping_d >= 0:
            out.append((f"{path}load_damping_d", "must be >= 0"))
        if not (0 < self.inertia_scale <= 1):
            out.append((f"{path}inertia_scale", "must lie in (0, 1]"))
        if not out and self.h_sys <= 0:
            out.append((f"{path}generators", "effective inertia must be > 0"))
        return out

    def to_dict(self) -> dict:
        return {
            "system_base": self.system_base,
            "f0": self.f0,
            "load_damping_d": self.load_damping_d,
            "inertia_scale": self.inertia_scale,
            "generators": [g.__dict__.copy() for g in self.generators],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GridModel":
        gens = tuple(GeneratorParams(**g) for g in data["generators"])
        kwargs = {k: data[k] for k in ("system_base", "f0", "load_damping_d", "inertia_scale") if k in data}
        return cls(generators=gens, **kwargs)


@dataclass(frozen=True)
class GridState:
    delta_f: float = 0.0  # Hz
    gov_outputs: tuple[float, ...] = field(default_factory=tuple)
    time: float = 0.0

    @classmethod
    def equilibrium(cls, model: GridModel, time: float = 0.0) -> "GridState":
        return cls(0.0, (0.0,) * len(model.generators), time)


def coi_frequency(freqs: Sequence[float], inertias: Sequence[float]) -> float:
    """Inertia-weighted mean frequency."""
    if len(freqs) != len(inertias):
        raise LengthMismatch(f"{len(freqs)} frequencies vs {len(inertias)} inertias")
    if not freqs:
        raise LengthMismatch("at least one machine is required")
    total = math.fsum(inertias)
    if total <= 0:
        raise ZeroInertia("sum of inertias must be positive")
    return math.fsum(h * f for h, f in zip(inertias, freqs)) / total


def deadband(delta_f: float, width: float) -> float:
    """Hard zero zone: returns 0 when ``|delta_f| <= width``, else ``delta_f``."""
    return 0.0 if abs(delta_f) <= width else delta_f


def governor_target(delta_f: float, gen: GeneratorParams, f0: float) -> float:
    if not gen.online:
        return 0.0
    x = -deadband(delta_f, gen.gov_deadband) / f0
    return min(max(x / gen.droop_r, 0.0), gen.headroom)


def system_derivative(
    state: GridState, p_ffr_total: float, p_disturbance: float, model: GridModel
) -> tuple[float, tuple[float, ...]]:
    """Time derivatives ``(d delta_f/dt [Hz/s], dP_gov/dt [pu/s] per unit)``."""
    f0 = model.f0
    gens = model.generators
    gov = state.gov_outputs
    d_gov = []
    p_gov = 0.0
    for g, p in zip(gens, gov):
        if g.online:
            p_gov += p
            d_gov.append((governor_target(state.delta_f, g, f0) - p) / g.gov_time_const)
        else:
            d_gov.append(0.0)
    imbalance = p_gov + p_ffr_total - p_disturbance - model.load_damping_d * state.delta_f / f0
    return f0 * imbalance / (2.0 * model.h_sys), tuple(d_gov)


def steady_state_frequency(model: GridModel, p_disturbance: float) -> float:
    """Linear settling deviation ``-f0 * dP / (D + sum 1/R)``, ignoring limits."""
    stiffness = model.stiffness
    if stiffness <= 0:
        raise ZeroStiffness("load damping plus governor stiffness is zero")
    return -model.f0 * p_disturbance / stiffness


@dataclass(frozen=True)
class Disturbance:
    """A generator trip: ``before`` applies for ``t < t_trip``, ``after`` from then on."""

    gen_id: str
    t_trip: float
    before: GridModel
    after: GridModel
    p_disturbance: float

    def model_at(self, t: float) -> GridModel:
        return self.after if t >= self.t_trip else self.before

    def power_at(self, t: float) -> float:
        return self.p_disturbance if t >= self.t_trip else 0.0


def apply_disturbance(model: GridModel, gen_id: str, t_trip: float) -> tuple[Disturbance, float]:
    idx = model.index_of(gen_id)
    gen = model.generators[idx]
    if not gen.online:
        raise UnknownGenerator(f"{gen_id} is already offline")
    gens = list(model.generators)
    gens[idx] = replace(gen, online=False)
    after = replace(model, generators=tuple(gens))
    sched = Disturbance(gen_id, t_trip, model, after, gen.pre_fault_output)
    return sched, gen.pre_fault_output


def largest_unit(model: GridModel) -> str:
    """Id of the online generator with the largest pre-fault output (first on ties)."""
    online = model.online
    if not online:
        raise UnknownGenerator("no online generators")
    return max(online, key=lambda g: g.pre_fault_output).id


def load_generator_dataset(path: str | Path | None = None) -> GridModel:
    """Load a grid section; defaults to the bundled IEEE 39-bus derived fleet."""
    if path is None:
        text = resources.files("ffrsim.data").joinpath("ieee39_generators.json").read_text()
    else:
        text = Path(path).read_text()
    return GridModel.from_dict(json.loads(text))
