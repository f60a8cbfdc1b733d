"""Case runs, four-case comparison and availability sweeps, with file output."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import CASE_NAMES, ScenarioConfig, SweepSpec, build_case
from .engine import Trajectory, run_simulation
from .metrics import EmptyTrajectory, MetricsReport, compute_metrics

log = logging.getLogger(__name__)

COMPARISON_HEADER = (
    "case_id", "case", "nadir_hz", "nadir_time_s", "max_rocof_hz_s",
    "recovery_time_s", "secondary_dip_time_s", "secondary_dip_depth_hz",
)
SWEEP_HEADER = ("scale", "nadir", "max_rocof", "recovery_time", "secondary_dip_depth")


def fmt(x) -> str:
    """Fixed 9-significant-digit rendering; empty string for missing values."""
    if x is None:
        return ""
    return format(float(x), ".9g")


def _round(x):
    if isinstance(x, float):
        return x if not math.isfinite(x) else float(format(x, ".9g"))
    if isinstance(x, dict):
        return {k: _round(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_round(v) for v in x]
    return x


@dataclass
class CaseResult:
    config: ScenarioConfig
    trajectory: Trajectory
    report: MetricsReport


def run_case(config: ScenarioConfig) -> CaseResult:
    traj = run_simulation(config)
    report = compute_metrics(traj, config.metrics, case_id=config.case_id)
    log.info("case %d: nadir %.4f Hz at %.2f s", config.case_id, report.nadir_hz, report.nadir_time)
    return CaseResult(config, traj, report)


def _map(fn, items: Sequence, jobs: int) -> list:
    # results come back in submission order, so output is independent of jobs
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# --- writers ----------------------------------------------------------------

def trajectory_header(traj: Trajectory) -> list[str]:
    cols = ["time_s", "f_hz", "rocof_hz_s", "p_gov_pu"]
    for rid in traj.resource_ids:
        cols += [f"p_{rid}_pu", f"e_{rid}_pus", f"w_{rid}"]
    return cols


def write_trajectory_csv(traj: Trajectory, path: Path) -> Path:
    if traj is None or len(traj.times) == 0:
        raise EmptyTrajectory("refusing to write an empty trajectory")
    cols = [traj.times, traj.f, traj.rocof, traj.gov_total]
    for rid in traj.resource_ids:
        cols += [traj.p_out[rid], traj.energy[rid], traj.weight[rid]]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trajectory_header(traj))
        for row in zip(*cols):
            w.writerow([fmt(v) for v in row])
    return path


def write_metrics_json(report: MetricsReport, path: Path) -> Path:
    path.write_text(json.dumps(_round(report.to_dict()), indent=2, sort_keys=True) + "\n")
    return path


def write_outputs(traj: Trajectory, report: MetricsReport, out_dir: str | Path, stem: str) -> list[Path]:
    """Write ``<stem>_trajectory.csv`` and ``<stem>_metrics.json``."""
    if traj is None or len(traj.times) == 0:
        raise EmptyTrajectory("trajectory has no samples; nothing written")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    try:
        written.append(write_trajectory_csv(traj, out / f"{stem}_trajectory.csv"))
        written.append(write_metrics_json(report, out / f"{stem}_metrics.json"))
    except BaseException:
        _remove(written)
        raise
    return written


def _remove(paths: Sequence[Path]):
    for p in paths:
        try:
            Path(p).unlink()
        except FileNotFoundError:
            pass


def _comparison_row(r: MetricsReport) -> list[str]:
    dip = r.secondary_dip
    return [str(r.case_id), CASE_NAMES[r.case_id], fmt(r.nadir_hz), fmt(r.nadir_time), fmt(r.max_rocof),
            fmt(r.recovery_time), fmt(None if dip is None else dip.time), fmt(None if dip is None else dip.depth)]


# --- workflows --------------------------------------------------------------

def run_single(config: ScenarioConfig, out_dir: str | Path) -> CaseResult:
    result = run_case(config)
    write_outputs(result.trajectory, result.report, out_dir, f"case{config.case_id}")
    return result


def run_compare(config: ScenarioConfig, out_dir: str | Path, jobs: int = 1) -> list[CaseResult]:
    """Run Cases 1-4 on one base config and write the comparison tree.

    Files: ``case<k>_trajectory.csv``, ``case<k>_metrics.json``,
    ``comparison.csv`` and ``frequency_traces.csv`` (all cases on one time
    axis).  Anything written before a failure is removed.
    """
    cases = [build_case(config, c) for c in (1, 2, 3, 4)]
    results = _map(run_case, cases, jobs)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        for res in results:
            written += write_outputs(res.trajectory, res.report, out, f"case{res.config.case_id}")
        path = out / "comparison.csv"
        written.append(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(COMPARISON_HEADER)
            for res in results:
                w.writerow(_comparison_row(res.report))
        path = out / "frequency_traces.csv"
        written.append(path)
        times = results[0].trajectory.times
        for res in results[1:]:
            if not np.array_equal(res.trajectory.times, times):
                raise RuntimeError("case trajectories are not on a common time axis")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["time_s"] + [f"f_case{r.config.case_id}_hz" for r in results])
            for i, t in enumerate(times):
                w.writerow([fmt(t)] + [fmt(r.trajectory.f[i]) for r in results])
    except BaseException:
        _remove(written)
        raise
    return results


def scaled_config(config: ScenarioConfig, spec: SweepSpec, scale: float) -> ScenarioConfig:
    resources = tuple(
        replace(r, availability=r.availability * scale) if r.kind is spec.target_class else r
        for r in config.resources
    )
    return replace(build_case(config, spec.base_case), resources=resources)


def sweep_availability(config: ScenarioConfig, spec: SweepSpec, out_dir: str | Path | None = None,
                       jobs: int = 1) -> list[tuple[float, MetricsReport]]:
    """Scale availability of one resource class and collect metrics per scale.

    Writes ``sweep_<class>.csv`` when ``out_dir`` is given.
    """
    if not any(r.kind is spec.target_class for r in config.resources):
        log.warning("no %s resources in roster; sweep rows will be identical", spec.target_class.value)
    configs = [scaled_config(config, spec, s) for s in spec.scale_factors]
    results = _map(run_case, configs, jobs)
    rows = [(s, r.report) for s, r in zip(spec.scale_factors, results)]
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"sweep_{spec.target_class.value}.csv"
        try:
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(SWEEP_HEADER)
                for s, rep in rows:
                    dip = rep.secondary_dip
                    w.writerow([fmt(s), fmt(rep.nadir_hz), fmt(rep.max_rocof), fmt(rep.recovery_time),
                                fmt(None if dip is None else dip.depth)])
        except BaseException:
            _remove([path])
            raise
    return rows
