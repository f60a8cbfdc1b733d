"""Service-layer coordination of FFR resources.

Resources are mapped onto three time-critical service layers (frequency
arrest, fast sustained support, energy-following support) by their latency.
After an event is detected the coordinator issues a participation weight in
``[0, 1]`` per resource; the weight multiplies the resource's own droop
response, so devices keep their local controllers.

Four coordination modes are supported, one per study case:

``NO_FFR``        all weights zero.
``UNSTRUCTURED``  every resource at weight 1 from the event onward.
``STATIC_LAYERS`` each resource holds weight 1 inside the rectangular window
                  of its fastest eligible layer, 0 outside; no tapering.
``DYNAMIC``       weight = energy taper x max activity over eligible layers,
                  with raised-cosine fades for gradual handoff.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .resources import FfrResource, ResourceState

log = logging.getLogger(__name__)


class CoordinatorError(ValueError):
    pass


class TooSlow(CoordinatorError):
    pass


class NotTriggered(CoordinatorError):
    pass


class LayerId(str, enum.Enum):
    ARREST = "arrest"
    SUSTAINED = "sustained"
    ENERGY_FOLLOWING = "energy_following"


class Mode(str, enum.Enum):
    NO_FFR = "no_ffr"
    UNSTRUCTURED = "unstructured"
    STATIC_LAYERS = "static_layers"
    DYNAMIC = "dynamic"


@dataclass(frozen=True)
class ServiceLayer:
    id: LayerId
    tau_max: float
    fade_in: tuple[float, float]
    fade_out: tuple[float, float] | None = None  # None: never fades out

    def violations(self, path: str = "") -> list[tuple[str, str]]:
        out = []
        if not self.tau_max > 0:
            out.append((f"{path}tau_max", "must be > 0"))
        a, b = self.fade_in
        if not (0 <= a < b):
            out.append((f"{path}fade_in", "must satisfy 0 <= start < end"))
        if self.fade_out is not None:
            c, d = self.fade_out
            if not (c < d):
                out.append((f"{path}fade_out", "must satisfy start < end"))
            if not (b <= c):
                out.append((f"{path}fade_out", "must start after fade_in ends"))
        return out

    def to_dict(self) -> dict:
        return {"tau_max": self.tau_max, "fade_in": list(self.fade_in),
                "fade_out": None if self.fade_out is None else list(self.fade_out)}


DEFAULT_LAYERS: tuple[ServiceLayer, ...] = (
    ServiceLayer(LayerId.ARREST, 0.2, (0.0, 0.1), (1.0, 3.0)),
    ServiceLayer(LayerId.SUSTAINED, 2.0, (0.5, 2.0), (8.0, 15.0)),
    ServiceLayer(LayerId.ENERGY_FOLLOWING, 30.0, (8.0, 15.0), None),
)


def layer_violations(layers: Sequence[ServiceLayer], path: str = "layers.") -> list[tuple[str, str]]:
    out = []
    by_id = {l.id: l for l in layers}
    if set(by_id) != set(LayerId):
        out.append((path.rstrip("."), "exactly one arrest, sustained and energy_following layer required"))
        return out
    for l in layers:
        out.extend(l.violations(f"{path}{l.id.value}."))
    ordered = [by_id[i] for i in LayerId]
    taus = [l.tau_max for l in ordered]
    if not taus[0] < taus[1] < taus[2]:
        out.append((path.rstrip("."), "tau_max must increase arrest < sustained < energy_following"))
    starts = [l.fade_in[0] for l in ordered]
    if not starts[0] <= starts[1] <= starts[2]:
        out.append((path.rstrip("."), "fade_in windows must be ordered arrest, sustained, energy_following"))
    return out


def layer_eligibility(res: FfrResource, layers: Sequence[ServiceLayer] = DEFAULT_LAYERS) -> set[LayerId]:
    eligible = {l.id for l in layers if res.latency_tau <= l.tau_max}
    if not eligible:
        raise TooSlow(f"{res.id}: latency {res.latency_tau} s exceeds every layer ceiling")
    return eligible


def fastest_layer(res: FfrResource, layers: Sequence[ServiceLayer] = DEFAULT_LAYERS) -> ServiceLayer:
    eligible = layer_eligibility(res, layers)
    return min((l for l in layers if l.id in eligible), key=lambda l: l.tau_max)


def _rise(x: float) -> float:
    # raised cosine on [0, 1]
    return 0.5 * (1.0 - math.cos(math.pi * x))


def layer_activity(layer: ServiceLayer, t_rel: float) -> float:
    a, b = layer.fade_in
    if t_rel <= a:
        return 0.0
    if t_rel < b:
        return _rise((t_rel - a) / (b - a))
    if layer.fade_out is None:
        return 1.0
    c, d = layer.fade_out
    if t_rel <= c:
        return 1.0
    if t_rel < d:
        return 1.0 - _rise((t_rel - c) / (d - c))
    return 0.0


def layer_window_active(layer: ServiceLayer, t_rel: float) -> bool:
    """Rectangular version of :func:`layer_activity`: on wherever activity > 0."""
    if t_rel <= layer.fade_in[0]:
        return False
    return layer.fade_out is None or t_rel < layer.fade_out[1]


TAPER_KNEE = 0.2


def saturation_taper(state: ResourceState, res: FfrResource) -> float:
    e = state.energy_remaining / res.energy_budget
    if e >= TAPER_KNEE:
        return 1.0
    if e <= 0.0:
        return 0.0
    return e / TAPER_KNEE


def weight_rate_bound(resources: Sequence[FfrResource], layers: Sequence[ServiceLayer] = DEFAULT_LAYERS) -> float:
    """Upper bound on |dw/dt| in dynamic mode.

    Raised-cosine fades change at most ``pi / (2 * width)`` per second and the
    taper at most ``p_max * A / (knee * E)``; the product rule adds them.
    """
    widths = []
    for l in layers:
        widths.append(l.fade_in[1] - l.fade_in[0])
        if l.fade_out is not None:
            widths.append(l.fade_out[1] - l.fade_out[0])
    fade_rate = math.pi / (2.0 * min(widths))
    taper_rate = max((r.capacity / (TAPER_KNEE * r.energy_budget) for r in resources), default=0.0)
    return fade_rate + taper_rate


@dataclass
class AllocationState:
    mode: Mode
    weights: dict[str, float] = field(default_factory=dict)
    taper: dict[str, float] = field(default_factory=dict)
    event_time: float | None = None

    @classmethod
    def initial(cls, mode: Mode, resources: Sequence[FfrResource]) -> "AllocationState":
        ids = [r.id for r in resources]
        return cls(mode, dict.fromkeys(ids, 0.0), dict.fromkeys(ids, 1.0))


def detect_event(delta_f: float, t: float, alloc: AllocationState, threshold: float = 0.03) -> AllocationState:
    """Latch ``event_time`` the first time ``|delta_f|`` exceeds ``threshold``."""
    if alloc.event_time is None and abs(delta_f) > threshold:
        alloc.event_time = t
    return alloc


class Allocator:
    """Weight policy bound to a fixed roster and layer set.

    Eligibility is resolved once; resources too slow for every layer are
    excluded (weight held at 0) with a warning.
    """

    def __init__(self, resources: Sequence[FfrResource], layers: Sequence[ServiceLayer] = DEFAULT_LAYERS):
        self.resources = tuple(resources)
        self.layers = tuple(layers)
        self.eligible: dict[str, tuple[ServiceLayer, ...]] = {}
        self.fastest: dict[str, ServiceLayer | None] = {}
        for r in self.resources:
            try:
                ids = layer_eligibility(r, self.layers)
            except TooSlow as exc:
                log.warning("excluding resource: %s", exc)
                self.eligible[r.id] = ()
                self.fastest[r.id] = None
                continue
            self.eligible[r.id] = tuple(l for l in self.layers if l.id in ids)
            self.fastest[r.id] = min(self.eligible[r.id], key=lambda l: l.tau_max)

    def allocate(self, t_now: float, alloc: AllocationState, states: Mapping[str, ResourceState]) -> AllocationState:
        if alloc.event_time is None:
            raise NotTriggered("no frequency event detected yet")
        t_rel = t_now - alloc.event_time
        mode = alloc.mode
        for r in self.resources:
            rid = r.id
            if mode is Mode.NO_FFR:
                w = 0.0
            elif mode is Mode.UNSTRUCTURED:
                w = 1.0
            elif mode is Mode.STATIC_LAYERS:
                layer = self.fastest[rid]
                w = 1.0 if layer is not None and layer_window_active(layer, t_rel) else 0.0
            else:
                taper = saturation_taper(states[rid], r)
                alloc.taper[rid] = taper
                act = max((layer_activity(l, t_rel) for l in self.eligible[rid]), default=0.0)
                w = taper * act
            alloc.weights[rid] = w
        return alloc


def allocate_weights(
    t_now: float,
    alloc: AllocationState,
    resources: Sequence[FfrResource],
    states: Mapping[str, ResourceState],
    layers: Sequence[ServiceLayer] = DEFAULT_LAYERS,
) -> AllocationState:
    """One-shot form of :meth:`Allocator.allocate`."""
    return Allocator(resources, layers).allocate(t_now, alloc, states)
