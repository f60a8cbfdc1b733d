import logging
import math

import pytest

from ffrsim.coordinator import (
    DEFAULT_LAYERS,
    AllocationState,
    Allocator,
    LayerId,
    Mode,
    NotTriggered,
    ServiceLayer,
    TooSlow,
    allocate_weights,
    detect_event,
    fastest_layer,
    layer_activity,
    layer_eligibility,
    layer_violations,
    layer_window_active,
    saturation_taper,
    weight_rate_bound,
)
from ffrsim.resources import DelayLine, ResourceState, make_preset

ARREST, SUSTAINED, EF = DEFAULT_LAYERS


def fresh_states(resources, dt=1e-3):
    return {r.id: ResourceState.initial(r, dt) for r in resources}


def test_eligibility_bess():
    assert layer_eligibility(make_preset("bess")) == set(LayerId)


def test_eligibility_ev():
    assert layer_eligibility(make_preset("ev")) == {LayerId.SUSTAINED, LayerId.ENERGY_FOLLOWING}


def test_eligibility_too_slow():
    with pytest.raises(TooSlow):
        layer_eligibility(make_preset("ev", latency_tau=50.0))


def test_fastest_layer():
    assert fastest_layer(make_preset("bess")).id is LayerId.ARREST
    assert fastest_layer(make_preset("datacenter")).id is LayerId.SUSTAINED


def test_activity_values():
    assert layer_activity(SUSTAINED, 0.2) == 0.0
    assert layer_activity(ARREST, 0.05) == pytest.approx(0.5)
    assert layer_activity(ARREST, 2.0) == pytest.approx(0.5)
    assert layer_activity(ARREST, 3.0) == 0.0
    assert layer_activity(ARREST, 0.5) == 1.0
    assert layer_activity(EF, 1e6) == 1.0


def test_activity_raised_cosine_shape():
    # quarter point of a raised cosine: 0.5 (1 - cos(pi / 4))
    assert layer_activity(SUSTAINED, 0.5 + 1.5 / 4) == pytest.approx(0.5 * (1 - math.cos(math.pi / 4)))


def test_window_active_is_rectangular():
    assert not layer_window_active(ARREST, 0.0)
    assert layer_window_active(ARREST, 1e-6)
    assert layer_window_active(ARREST, 2.999)
    assert not layer_window_active(ARREST, 3.0)
    assert layer_window_active(EF, 500.0)


def test_taper_values():
    res = make_preset("bess")
    for e, want in ((1.0, 1.0), (0.2, 1.0), (0.1, 0.5), (0.0, 0.0)):
        state = ResourceState(0.0, e * res.energy_budget, DelayLine(0))
        assert saturation_taper(state, res) == pytest.approx(want)


def test_detect_event_latches():
    alloc = AllocationState.initial(Mode.DYNAMIC, [])
    detect_event(-0.02, 1.0, alloc)
    assert alloc.event_time is None
    detect_event(-0.031, 10.004, alloc)
    assert alloc.event_time == 10.004
    detect_event(-0.5, 12.0, alloc)
    assert alloc.event_time == 10.004


def test_allocate_requires_event():
    res = [make_preset("bess")]
    with pytest.raises(NotTriggered):
        allocate_weights(1.0, AllocationState.initial(Mode.DYNAMIC, res), res, fresh_states(res))


def test_dynamic_early_arrest_only():
    res = [make_preset("bess"), make_preset("ev")]
    alloc = AllocationState.initial(Mode.DYNAMIC, res)
    alloc.event_time = 0.0
    allocate_weights(0.1, alloc, res, fresh_states(res))
    assert alloc.weights["ev"] == 0.0
    assert alloc.weights["bess"] == pytest.approx(alloc.taper["bess"] * 1.0)


def test_dynamic_taper_times_activity():
    res = [make_preset("bess")]
    states = fresh_states(res)
    states["bess"].energy_remaining = 0.1 * res[0].energy_budget
    alloc = AllocationState.initial(Mode.DYNAMIC, res)
    alloc.event_time = 0.0
    allocate_weights(0.5, alloc, res, states)
    assert alloc.weights["bess"] == pytest.approx(0.5)


def test_unstructured_all_ones():
    res = [make_preset(k) for k in ("bess", "datacenter", "ev")]
    alloc = AllocationState.initial(Mode.UNSTRUCTURED, res)
    alloc.event_time = 0.0
    for t in (0.0, 0.05, 3.0, 80.0):
        allocate_weights(t, alloc, res, fresh_states(res))
        assert set(alloc.weights.values()) == {1.0}


def test_no_ffr_all_zero():
    res = [make_preset("bess")]
    alloc = AllocationState.initial(Mode.NO_FFR, res)
    alloc.event_time = 0.0
    allocate_weights(1.0, alloc, res, fresh_states(res))
    assert alloc.weights["bess"] == 0.0


def test_static_layers_use_fastest_window():
    res = [make_preset("bess"), make_preset("datacenter"), make_preset("ev")]
    alloc = AllocationState.initial(Mode.STATIC_LAYERS, res)
    alloc.event_time = 0.0
    expect = {
        0.3: {"bess": 1.0, "datacenter": 0.0, "ev": 0.0},
        2.5: {"bess": 1.0, "datacenter": 1.0, "ev": 1.0},
        5.0: {"bess": 0.0, "datacenter": 1.0, "ev": 1.0},
        20.0: {"bess": 0.0, "datacenter": 0.0, "ev": 0.0},
    }
    for t, want in expect.items():
        allocate_weights(t, alloc, res, fresh_states(res))
        assert alloc.weights == want


def test_excluded_resource_warns(caplog):
    slow = make_preset("ev", id="slow", latency_tau=40.0)
    with caplog.at_level(logging.WARNING):
        alloc_obj = Allocator([slow])
    assert "excluding" in caplog.text
    alloc = AllocationState.initial(Mode.DYNAMIC, [slow])
    alloc.event_time = 0.0
    alloc_obj.allocate(20.0, alloc, fresh_states([slow]))
    assert alloc.weights["slow"] == 0.0


def test_weight_rate_bound_value():
    res = [make_preset("bess")]
    # narrowest fade is the 0.1 s arrest fade-in
    want = math.pi / (2 * 0.1) + 0.04 / (0.2 * 0.8)
    assert weight_rate_bound(res) == pytest.approx(want)


def test_layer_validation():
    assert layer_violations(DEFAULT_LAYERS) == []
    bad = (ServiceLayer(LayerId.ARREST, 3.0, (0.0, 0.1), (1.0, 3.0)), SUSTAINED, EF)
    assert layer_violations(bad)
    assert layer_violations(DEFAULT_LAYERS[:2])
    broken = ServiceLayer(LayerId.ARREST, 0.2, (0.5, 0.1), (0.2, 0.1))
    assert len(broken.violations()) >= 2
