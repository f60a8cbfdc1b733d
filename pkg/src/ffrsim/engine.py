"""Fixed-step simulation of grid, resources and coordinator.

Each step of length ``dt`` runs, in this order:

1. apply the generator trip if this step starts at ``t_trip``;
2. advance the grid with classical RK4, resource powers held constant;
3. latch the event and update coordinator weights from the end-of-step
   frequency;
4. compute resource commands from the same frequency sample;
5. step every resource (delay, lag, ramp) and draw its energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .coordinator import (
    DEFAULT_LAYERS,
    AllocationState,
    Allocator,
    Mode,
    ServiceLayer,
    detect_event,
)
from .grid import GridModel, GridState, apply_disturbance, largest_unit
from .resources import (
    FfrResource,
    ResourceState,
    commanded_power,
    resource_step,
    update_energy,
)

MAX_DT = 2e-3


class SimulationError(RuntimeError):
    pass


class NonFinite(SimulationError):
    pass


class ConfigInvalid(ValueError):
    pass


@dataclass(frozen=True)
class SimSettings:
    dt: float = 1e-3
    horizon: float = 90.0
    record_stride: int = 10
    t_trip: float = 10.0

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    def violations(self, path: str = "sim.") -> list[tuple[str, str]]:
        out = []
        if not (self.dt > 0):
            out.append((f"{path}dt", "must be > 0"))
        elif self.dt > MAX_DT + 1e-15:
            out.append((f"{path}dt", f"must be <= {MAX_DT} s"))
        if not self.t_trip >= 0:
            out.append((f"{path}t_trip", "must be >= 0"))
        if not self.horizon > self.t_trip:
            out.append((f"{path}horizon", "must exceed t_trip"))
        if not (isinstance(self.record_stride, int) and self.record_stride >= 1):
            out.append((f"{path}record_stride", "must be an integer >= 1"))
        return out


@dataclass
class Trajectory:
    times: np.ndarray
    f: np.ndarray
    rocof: np.ndarray
    gov_total: np.ndarray
    resource_ids: tuple[str, ...]
    p_out: dict[str, np.ndarray]
    energy: dict[str, np.ndarray]
    weight: dict[str, np.ndarray]
    event_time: float | None
    f0: float = 60.0
    energy_budget: dict[str, float] = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def sample_interval(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0


def _check_finite(value: float, what: str, t: float):
    if not math.isfinite(value):
        raise NonFinite(f"{what} became non-finite at t={t:.6f} s")


def simulate(
    grid: GridModel,
    resources: Sequence[FfrResource],
    mode: Mode,
    sim: SimSettings,
    layers: Sequence[ServiceLayer] = DEFAULT_LAYERS,
    trigger_threshold: float = 0.03,
    trip_gen: str | None = None,
) -> Trajectory:
    """Run one deterministic simulation and return the recorded trajectory.

    ``trip_gen`` defaults to the unit with the largest pre-fault output; pass
    ``""`` to run without any disturbance.
    """
    problems = sim.violations() + grid.violations("grid.")
    for i, r in enumerate(resources):
        problems += r.violations(f"resources[{i}].")
    if problems:
        raise ConfigInvalid("; ".join(f"{p}: {m}" for p, m in problems))

    dt = sim.dt
    n_steps = sim.n_steps
    stride = sim.record_stride
    k_trip = int(round(sim.t_trip / dt))
    if trip_gen is None:
        trip_gen = largest_unit(grid)
    disturbance = apply_disturbance(grid, trip_gen, sim.t_trip)[0] if trip_gen else None

    f0 = grid.f0
    damping = grid.load_damping_d

    def unit_table(model: GridModel):
        return [
            (i, g.gov_deadband, 1.0 / g.droop_r, g.headroom, 1.0 / g.gov_time_const)
            for i, g in enumerate(model.generators)
            if g.online
        ]

    units = unit_table(grid)
    two_h = 2.0 * grid.h_sys
    p_dist = 0.0
    n_gen = len(grid.generators)

    def deriv(df, gov, p_ext):
        x = -df / f0
        pg = 0.0
        dg = [0.0] * n_gen
        adf = abs(df)
        for i, db, gain, head, inv_t in units:
            p = gov[i]
            pg += p
            if adf <= db:
                tgt = 0.0
            else:
                tgt = x * gain
                if tgt < 0.0:
                    tgt = 0.0
                elif tgt > head:
                    tgt = head
            dg[i] = (tgt - p) * inv_t
        return f0 * (pg + p_ext - damping * df / f0) / two_h, dg

    state = GridState.equilibrium(grid)
    df = state.delta_f
    gov = list(state.gov_outputs)

    ids = tuple(r.id for r in resources)
    rstates = {r.id: ResourceState.initial(r, dt) for r in resources}
    allocator = Allocator(resources, layers)
    alloc = AllocationState.initial(mode, resources)

    n_rec = n_steps // stride + 1
    rec_t = np.empty(n_rec)
    rec_f = np.empty(n_rec)
    rec_rocof = np.empty(n_rec)
    rec_gov = np.empty(n_rec)
    rec_p = {i: np.empty(n_rec) for i in ids}
    rec_e = {i: np.empty(n_rec) for i in ids}
    rec_w = {i: np.empty(n_rec) for i in ids}

    def record(j, t, slope):
        rec_t[j] = t
        rec_f[j] = f0 + df
        rec_rocof[j] = slope
        rec_gov[j] = sum(gov)
        for r in resources:
            s = rstates[r.id]
            rec_p[r.id][j] = s.p_out
            rec_e[r.id][j] = s.energy_remaining
            rec_w[r.id][j] = alloc.weights[r.id]

    record(0, 0.0, 0.0)
    p_ffr = 0.0
    half = 0.5 * dt
    sixth = dt / 6.0
    for k in range(n_steps):
        if disturbance is not None and k == k_trip:
            after = disturbance.after
            units = unit_table(after)
            two_h = 2.0 * after.h_sys
            gov[after.index_of(disturbance.gen_id)] = 0.0
            p_dist = disturbance.p_disturbance

        p_ext = p_ffr - p_dist
        k1f, k1g = deriv(df, gov, p_ext)
        k2f, k2g = deriv(df + half * k1f, [g + half * d for g, d in zip(gov, k1g)], p_ext)
        k3f, k3g = deriv(df + half * k2f, [g + half * d for g, d in zip(gov, k2g)], p_ext)
        k4f, k4g = deriv(df + dt * k3f, [g + dt * d for g, d in zip(gov, k3g)], p_ext)
        df_old = df
        df = df + sixth * (k1f + 2.0 * k2f + 2.0 * k3f + k4f)
        gov = [g + sixth * (a + 2.0 * b + 2.0 * c + d) for g, a, b, c, d in zip(gov, k1g, k2g, k3g, k4g)]
        t = (k + 1) * dt
        _check_finite(df, "frequency deviation", t)
        _check_finite(sum(gov), "governor output", t)

        detect_event(df, t, alloc, trigger_threshold)
        if alloc.event_time is not None:
            allocator.allocate(t, alloc, rstates)

        p_ffr = 0.0
        for r in resources:
            s = rstates[r.id]
            cmd = commanded_power(df, alloc.weights[r.id], r)
            resource_step(s, cmd, dt, r)
            update_energy(s, dt)
            p_ffr += s.p_out
        _check_finite(p_ffr, "resource output", t)

        if (k + 1) % stride == 0:
            record((k + 1) // stride, t, (df - df_old) / dt)

    return Trajectory(
        times=rec_t, f=rec_f, rocof=rec_rocof, gov_total=rec_gov,
        resource_ids=ids, p_out=rec_p, energy=rec_e, weight=rec_w,
        event_time=alloc.event_time, f0=f0,
        energy_budget={r.id: r.energy_budget for r in resources},
    )


def integrate_grid_step(state: GridState, p_ffr_total: float, p_disturbance: float, model: GridModel, dt: float) -> GridState:
    """One classical RK4 step of the grid alone, for testing and analysis."""
    from .grid import system_derivative

    def f(df, gov):
        return system_derivative(GridState(df, tuple(gov), state.time), p_ffr_total, p_disturbance, model)

    df, gov = state.delta_f, list(state.gov_outputs)
    k1f, k1g = f(df, gov)
    k2f, k2g = f(df + dt / 2 * k1f, [g + dt / 2 * d for g, d in zip(gov, k1g)])
    k3f, k3g = f(df + dt / 2 * k2f, [g + dt / 2 * d for g, d in zip(gov, k2g)])
    k4f, k4g = f(df + dt * k3f, [g + dt * d for g, d in zip(gov, k3g)])
    df_new = df + dt / 6 * (k1f + 2 * k2f + 2 * k3f + k4f)
    gov_new = tuple(g + dt / 6 * (a + 2 * b + 2 * c + d) for g, a, b, c, d in zip(gov, k1g, k2g, k3g, k4g))
    if not (math.isfinite(df_new) and all(map(math.isfinite, gov_new))):
        raise NonFinite(f"grid state became non-finite at t={state.time + dt:.6f} s")
    return GridState(df_new, gov_new, state.time + dt)


def run_simulation(config) -> Trajectory:
    """Simulate a :class:`~ffrsim.config.ScenarioConfig`."""
    return simulate(
        config.grid,
        config.resources,
        config.mode,
        config.sim,
        layers=config.layers,
        trigger_threshold=config.trigger_threshold,
        trip_gen=config.trip_gen,
    )
