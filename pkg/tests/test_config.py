import json
import warnings

import pytest

from ffrsim.config import (
    CASE_MODES,
    ParseError,
    ScenarioConfig,
    SweepSpec,
    UnknownCase,
    ValidationError,
    build_case,
    config_from_dict,
    default_config_path,
    installed_capacity,
    load_config,
    load_default_config,
)
from ffrsim.coordinator import DEFAULT_LAYERS, Mode


def raw_default():
    return json.loads(default_config_path().read_text())


def test_bundled_scenario_loads():
    cfg = load_default_config()
    assert len(cfg.grid.generators) == 10
    assert {r.kind.value for r in cfg.resources} == {"bess", "datacenter", "ev"}
    assert cfg.trip_gen == "G39"
    assert cfg.violations() == []


def test_bundled_trip_is_largest_unit():
    cfg = load_default_config()
    g39 = cfg.grid.generators[cfg.grid.index_of("G39")]
    assert g39.pre_fault_output == max(g.pre_fault_output for g in cfg.grid.generators)


def test_negative_p_max_names_field():
    data = raw_default()
    data["resources"][0]["p_max"] = -0.1
    with pytest.raises(ValidationError) as err:
        config_from_dict(data, default_config_path().parent)
    assert "resources[0].p_max" in {p for p, _ in err.value.problems}


def test_all_problems_reported_together():
    data = raw_default()
    data["resources"][0]["p_max"] = -0.1
    data["sim"]["dt"] = 0.5
    data["bogus"] = 1
    with pytest.raises(ValidationError) as err:
        config_from_dict(data, default_config_path().parent)
    paths = {p for p, _ in err.value.problems}
    assert {"resources[0].p_max", "sim.dt", "bogus"} <= paths


def test_missing_layers_warns_and_uses_defaults():
    data = raw_default()
    del data["layers"]
    with pytest.warns(UserWarning, match="layers"):
        cfg = config_from_dict(data, default_config_path().parent)
    assert cfg.layers == DEFAULT_LAYERS


def test_complete_config_does_not_warn():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        load_default_config()


def test_malformed_json(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ParseError):
        load_config(bad)
    with pytest.raises(ParseError):
        load_config(tmp_path / "missing.json")


def test_build_case_switches_mode_only():
    base = load_default_config()
    for k, mode in CASE_MODES.items():
        cfg = build_case(base, k)
        assert cfg.mode is mode
        assert cfg.resources == base.resources and cfg.grid == base.grid
    with pytest.raises(UnknownCase):
        build_case(base, 5)


def test_capacity_constant_across_cases():
    base = load_default_config()
    caps = {installed_capacity(build_case(base, k)) for k in (2, 3, 4)}
    assert len(caps) == 1


def test_overrides_revalidate():
    cfg = load_default_config().with_overrides(dt=2.5e-4, horizon=20.0)
    assert (cfg.sim.dt, cfg.sim.horizon) == (2.5e-4, 20.0)
    with pytest.raises(ValidationError):
        load_default_config().with_overrides(dt=0.01)


def test_round_trip_through_dict():
    cfg = load_default_config()
    again = config_from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg
    assert isinstance(again, ScenarioConfig) and again.mode is Mode.DYNAMIC


@pytest.mark.parametrize("scales", [[], [1.2], [-0.1]])
def test_sweep_spec_validation(scales):
    with pytest.raises(ValueError):
        SweepSpec("bess", scales)
