"""Fast-frequency-response resources: BESS, data centres and EV fleets.

Each resource is a one-sided droop responder to the local frequency
deviation, delivered through a pure transport delay, a first-order lag and a
ramp limit, capped by its power rating and by the energy left in its budget.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field, replace


class ResourceClass(str, enum.Enum):
    BESS = "bess"
    DATA_CENTER = "datacenter"
    EV_FLEET = "ev"

    @classmethod
    def parse(cls, value: "str | ResourceClass") -> "ResourceClass":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "")
        aliases = {"bess": cls.BESS, "datacenter": cls.DATA_CENTER, "dc": cls.DATA_CENTER,
                   "ev": cls.EV_FLEET, "evfleet": cls.EV_FLEET}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown resource class {value!r}") from None


@dataclass(frozen=True)
class FfrResource:
    id: str
    kind: ResourceClass
    latency_tau: float  # s
    p_max: float  # pu
    energy_budget: float  # pu*s
    availability: float = 1.0
    droop_gain: float = 1.0  # pu/Hz
    lag_time_const: float = 0.1  # s
    ramp_limit: float = math.inf  # pu/s
    response_deadband: float = 0.0  # Hz

    @property
    def capacity(self) -> float:
        return self.p_max * self.availability

    def violations(self, path: str = "") -> list[tuple[str, str]]:
        out = []
        checks = [
            ("latency_tau", self.latency_tau >= 0, "must be >= 0"),
            ("p_max", self.p_max > 0, "must be > 0"),
            ("energy_budget", self.energy_budget > 0, "must be > 0"),
            ("availability", 0 <= self.availability <= 1, "must lie in [0, 1]"),
            ("droop_gain", self.droop_gain > 0, "must be > 0"),
            ("lag_time_const", self.lag_time_const > 0, "must be > 0"),
            ("ramp_limit", self.ramp_limit > 0, "must be > 0"),
            ("response_deadband", self.response_deadband >= 0, "must be >= 0"),
        ]
        for name, ok, rule in checks:
            if not ok:
                out.append((f"{path}{name}", rule))
        return out

    def to_dict(self) -> dict:
        d = self.__dict__.copy()
        d["kind"] = self.kind.value
        if math.isinf(self.ramp_limit):
            d["ramp_limit"] = None
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "FfrResource":
        d = dict(data)
        d["kind"] = ResourceClass.parse(d.pop("kind", d.pop("class", None)))
        if d.get("ramp_limit") is None:
            d["ramp_limit"] = math.inf
        return cls(**d)


# Calibrated class defaults.  Orderings: latency BESS < DC < EV, and
# sustainable duration (E/P) BESS < DC < EV.
_PRESETS = {
    ResourceClass.BESS: dict(latency_tau=0.05, p_max=0.04, energy_budget=0.8,
                             droop_gain=0.4, lag_time_const=0.02, ramp_limit=2.0),
    ResourceClass.DATA_CENTER: dict(latency_tau=0.5, p_max=0.03, energy_budget=6.0,
                                    droop_gain=0.3, lag_time_const=0.3, ramp_limit=0.5),
    ResourceClass.EV_FLEET: dict(latency_tau=1.5, p_max=0.03, energy_budget=30.0,
                                 droop_gain=0.3, lag_time_const=1.0, ramp_limit=0.1),
}


def make_preset(kind: "str | ResourceClass", id: str | None = None, **overrides) -> FfrResource:
    kind = ResourceClass.parse(kind)
    params = {**_PRESETS[kind], **overrides}
    return FfrResource(id=id or kind.value, kind=kind, **params)


class DelayLine:
    """Fixed-length FIFO realising a transport delay of ``n`` steps."""

    __slots__ = ("_buf",)

    def __init__(self, n: int):
        self._buf = deque([0.0] * n, maxlen=n) if n > 0 else None

    def __len__(self):
        return 0 if self._buf is None else len(self._buf)

    def push(self, value: float) -> float:
        if self._buf is None:
            return value
        out = self._buf[0]
        self._buf.append(value)
        return out

    def copy(self) -> "DelayLine":
        new = DelayLine(0)
        new._buf = None if self._buf is None else deque(self._buf, maxlen=self._buf.maxlen)
        return new


def delay_steps(latency_tau: float, dt: float) -> int:
    """Latency rounded to the nearest whole number of steps."""
    return int(round(latency_tau / dt))


@dataclass
class ResourceState:
    """Mutable dynamic state of one resource.

    ``p_prev`` is the output at the start of the last step, kept so energy
    can be drawn with the trapezoidal rule.
    """

    p_out: float
    energy_remaining: float
    delay_buffer: DelayLine
    saturated: bool = False
    p_prev: float = 0.0

    @classmethod
    def initial(cls, res: FfrResource, dt: float) -> "ResourceState":
        return cls(0.0, res.energy_budget, DelayLine(delay_steps(res.latency_tau, dt)))

    def copy(self) -> "ResourceState":
        return replace(self, delay_buffer=self.delay_buffer.copy())


def commanded_power(delta_f: float, weight: float, res: FfrResource) -> float:
    """Weighted droop command for under-frequency support, clamped to capacity."""
    excursion = -delta_f - res.response_deadband
    if excursion <= 0.0 or weight <= 0.0:
        return 0.0
    cmd = weight * res.availability * res.droop_gain * excursion
    return min(cmd, res.p_max * res.availability)


def resource_step(state: ResourceState, cmd: float, dt: float, res: FfrResource) -> ResourceState:
    """Advance delay, lag and ramp by one step.  Mutates and returns ``state``.

    Besides the capacity clamp, output is capped so the energy left after
    this step can always cover ramping back to zero over the next one; this
    keeps the trapezoidal energy ledger exact through depletion.
    """
    delayed = state.delay_buffer.push(cmd)
    p = state.p_out
    state.p_prev = p
    if state.saturated:
        state.p_out = 0.0
        return state
    target = delayed + (p - delayed) * math.exp(-dt / res.lag_time_const)
    step = target - p
    max_step = res.ramp_limit * dt
    if step > max_step:
        step = max_step
    elif step < -max_step:
        step = -max_step
    p_new = min(max(p + step, 0.0), res.capacity)
    energy_cap = (state.energy_remaining - 0.5 * p * dt) / dt
    if p_new > energy_cap:
        p_new = max(energy_cap, 0.0)
    state.p_out = p_new
    return state


# Residual treated as an empty store; guards against rounding leftovers.
_EMPTY = 1e-15


def update_energy(state: ResourceState, dt: float) -> ResourceState:
    """Draw the trapezoidal energy of the last step.  Mutates and returns ``state``."""
    drawn = 0.5 * (state.p_prev + state.p_out) * dt
    remaining = state.energy_remaining - drawn
    if remaining <= _EMPTY:
        remaining = 0.0
    state.energy_remaining = remaining
    if remaining == 0.0:
        state.saturated = True
    return state


def effective_headroom(state: ResourceState, res: FfrResource) -> float:
    return 0.0 if state.saturated else res.capacity
