import math

import numpy as np
import pytest

from ffrsim.coordinator import Mode
from ffrsim.engine import ConfigInvalid, SimSettings, simulate
from ffrsim.resources import make_preset

from conftest import lag_resource, two_unit_grid

SIM = SimSettings(1e-3, 12.0, 1, 1.0)


def roster():
    return [
        make_preset("bess", energy_budget=0.02),
        make_preset("datacenter", energy_budget=0.5),
        make_preset("ev"),
    ]


def trip_grid():
    return two_unit_grid(trip_output=0.05, headroom=0.1)


def test_row_count_and_sampling():
    traj = simulate(trip_grid(), roster(), Mode.DYNAMIC, SimSettings(1e-3, 3.0, 10, 1.0), trip_gen="G2")
    assert len(traj) == 301
    assert traj.sample_interval == pytest.approx(0.01)
    assert traj.times[-1] == pytest.approx(3.0)


def test_deterministic_reruns():
    a = simulate(trip_grid(), roster(), Mode.DYNAMIC, SIM, trip_gen="G2")
    b = simulate(trip_grid(), roster(), Mode.DYNAMIC, SIM, trip_gen="G2")
    assert np.array_equal(a.f, b.f)
    for rid in a.resource_ids:
        assert np.array_equal(a.p_out[rid], b.p_out[rid])


def test_no_ffr_matches_empty_roster():
    a = simulate(trip_grid(), roster(), Mode.NO_FFR, SIM, trip_gen="G2")
    b = simulate(trip_grid(), [], Mode.DYNAMIC, SIM, trip_gen="G2")
    assert np.array_equal(a.f, b.f)
    assert all((a.p_out[r] == 0).all() for r in a.resource_ids)


def test_event_detected_just_after_trip():
    traj = simulate(trip_grid(), roster(), Mode.DYNAMIC, SIM, trip_gen="G2")
    assert traj.event_time is not None
    assert 1.0 < traj.event_time < 1.1


def test_no_event_without_trip():
    traj = simulate(trip_grid(), roster(), Mode.DYNAMIC, SIM, trip_gen="")
    assert traj.event_time is None
    assert all((traj.weight[r] == 0).all() for r in traj.resource_ids)


@pytest.mark.parametrize("mode", list(Mode))
def test_latency_and_energy_invariants(mode):
    res = roster()
    traj = simulate(trip_grid(), res, mode, SIM, trip_gen="G2")
    for r in res:
        p = traj.p_out[r.id]
        e = traj.energy[r.id]
        if traj.event_time is not None:
            early = traj.times < traj.event_time + r.latency_tau - 1e-9
            assert (p[early] == 0.0).all()
        assert (e >= 0).all() and (e <= r.energy_budget).all()
        assert (np.diff(e) <= 1e-15).all()
        used = r.energy_budget - e[-1]
        assert abs(used - np.trapezoid(p, traj.times)) <= 1e-6
        assert (p <= r.p_max * r.availability + 1e-12).all()


def test_ffr_support_raises_nadir():
    base = simulate(trip_grid(), [], Mode.NO_FFR, SIM, trip_gen="G2")
    helped = simulate(trip_grid(), [lag_resource(gain=0.5, p_max=0.02)], Mode.UNSTRUCTURED, SIM, trip_gen="G2")
    assert helped.f.min() > base.f.min()


def test_invalid_settings_rejected():
    with pytest.raises(ConfigInvalid):
        simulate(trip_grid(), [], Mode.NO_FFR, SimSettings(0.01, 5.0, 1, 1.0))
    with pytest.raises(ConfigInvalid):
        simulate(trip_grid(), [lag_resource(p_max=-1.0)], Mode.NO_FFR, SIM)


def test_rocof_column_is_backward_difference():
    traj = simulate(trip_grid(), [], Mode.NO_FFR, SimSettings(1e-3, 2.0, 1, 1.0), trip_gen="G2")
    k = 1001
    assert traj.rocof[k] == pytest.approx((traj.f[k] - traj.f[k - 1]) / 1e-3, rel=1e-9)
    assert math.isclose(traj.rocof[k], -0.05 * 60 / (2 * 4.0), rel_tol=1e-2)
