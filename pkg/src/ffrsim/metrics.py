"""Frequency-stability and utilisation metrics over recorded trajectories."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.signal import find_peaks

from .engine import Trajectory


class MetricsError(ValueError):
    pass


class EmptyTrajectory(MetricsError):
    pass


class WindowTooSmall(MetricsError):
    pass


@dataclass(frozen=True)
class MetricSettings:
    rocof_window: float = 0.5  # s
    recovery_deadband: float = 0.05  # Hz
    dwell: float = 5.0  # s
    dip_prominence: float = 0.02  # Hz
    dip_threshold: float = 0.05  # Hz below f0

    def violations(self, path: str = "metrics.") -> list[tuple[str, str]]:
        out = []
        if not self.rocof_window > 0:
            out.append((f"{path}rocof_window", "must be > 0"))
        if not self.recovery_deadband > 0:
            out.append((f"{path}recovery_deadband", "must be > 0"))
        if not self.dwell >= 0:
            out.append((f"{path}dwell", "must be >= 0"))
        if not self.dip_prominence > 0:
            out.append((f"{path}dip_prominence", "must be > 0"))
        if not self.dip_threshold >= 0:
            out.append((f"{path}dip_threshold", "must be >= 0"))
        return out


@dataclass(frozen=True)
class ResourceUsage:
    id: str
    peak_power: float
    energy_used: float
    time_saturated: float


@dataclass(frozen=True)
class SecondaryDip:
    time: float
    depth: float  # Hz below f0


@dataclass
class MetricsReport:
    nadir_hz: float
    nadir_time: float
    max_rocof: float  # signed, Hz/s
    recovery_time: float | None
    secondary_dip: SecondaryDip | None
    resources: list[ResourceUsage] = field(default_factory=list)
    case_id: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        dip = d.get("secondary_dip")
        return cls(
            nadir_hz=d["nadir_hz"],
            nadir_time=d["nadir_time"],
            max_rocof=d["max_rocof"],
            recovery_time=d.get("recovery_time"),
            secondary_dip=None if dip is None else SecondaryDip(**dip),
            resources=[ResourceUsage(**r) for r in d.get("resources", [])],
            case_id=d.get("case_id"),
        )


def _require(traj: Trajectory):
    if traj is None or len(traj.times) == 0:
        raise EmptyTrajectory("trajectory has no samples")


def frequency_nadir(traj: Trajectory) -> tuple[float, float]:
    _require(traj)
    i = int(np.argmin(traj.f))
    return float(traj.f[i]), float(traj.times[i])


def max_rocof(traj: Trajectory, window: float = 0.5) -> float:
    """Largest windowed slope ``(f(t) - f(t - window)) / window``, keeping its sign."""
    _require(traj)
    if len(traj.times) < 2:
        return 0.0
    step = traj.sample_interval
    lag = int(round(window / step))
    if lag < 1 or window < step * (1 - 1e-9):
        raise WindowTooSmall(f"window {window} s is shorter than the sample interval {step} s")
    if lag >= len(traj.f):
        return 0.0
    slopes = (traj.f[lag:] - traj.f[:-lag]) / (traj.times[lag:] - traj.times[:-lag])
    i = int(np.argmax(np.abs(slopes)))
    return float(slopes[i])


def recovery_time(traj: Trajectory, deadband: float = 0.05, dwell: float = 5.0) -> float | None:
    """Time from the event until frequency re-enters ``f0 +/- deadband`` for good.

    The returned instant is the first sample at or after the nadir from which
    frequency stays inside the band for ``dwell`` seconds; a dwell window
    that runs past the end of the record does not count.
    """
    _require(traj)
    _, t_nadir = frequency_nadir(traj)
    t = traj.times
    inside = np.abs(traj.f - traj.f0) <= deadband
    start = int(np.searchsorted(t, t_nadir))
    # index of the next outside sample at or after each position
    n = len(t)
    next_out = np.full(n + 1, n)
    for j in range(n - 1, -1, -1):
        next_out[j] = next_out[j + 1] if inside[j] else j
    t_ref = traj.event_time if traj.event_time is not None else float(t[0])
    end = t[-1]
    for j in range(start, n):
        if not inside[j]:
            continue
        if t[j] + dwell > end + 1e-9:
            return None
        k = next_out[j]
        if k == n or t[k] > t[j] + dwell + 1e-9:
            return float(t[j] - t_ref)
    return None


def secondary_dip(traj: Trajectory, prominence: float = 0.02, threshold: float = 0.05) -> SecondaryDip | None:
    """Deepest post-nadir local minimum that is prominent and below ``f0 - threshold``."""
    _require(traj)
    i_nadir = int(np.argmin(traj.f))
    peaks, _ = find_peaks(-traj.f, prominence=prominence)
    peaks = peaks[(peaks > i_nadir) & (traj.f[peaks] < traj.f0 - threshold)]
    if len(peaks) == 0:
        return None
    i = int(peaks[np.argmin(traj.f[peaks])])
    return SecondaryDip(float(traj.times[i]), float(traj.f0 - traj.f[i]))


def utilization_summary(traj: Trajectory) -> list[ResourceUsage]:
    out = []
    t = traj.times
    for rid in traj.resource_ids:
        p = traj.p_out[rid]
        e = traj.energy[rid]
        sat = e[:-1] <= 0.0
        out.append(ResourceUsage(
            id=rid,
            peak_power=float(p.max()) if len(p) else 0.0,
            energy_used=float(np.trapezoid(p, t)) if len(p) > 1 else 0.0,
            time_saturated=float(np.sum(np.diff(t)[sat])) if len(t) > 1 else 0.0,
        ))
    return out


def compute_metrics(traj: Trajectory, settings: MetricSettings = MetricSettings(), case_id: int | None = None) -> MetricsReport:
    nadir, t_nadir = frequency_nadir(traj)
    return MetricsReport(
        nadir_hz=nadir,
        nadir_time=t_nadir,
        max_rocof=max_rocof(traj, settings.rocof_window),
        recovery_time=recovery_time(traj, settings.recovery_deadband, settings.dwell),
        secondary_dip=secondary_dip(traj, settings.dip_prominence, settings.dip_threshold),
        resources=utilization_summary(traj),
        case_id=case_id,
    )
