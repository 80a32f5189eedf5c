import json

import numpy as np
import pytest

from rampflow import (
    ConfigurationError,
    DemandProfile,
    build_dsl_network,
    build_three_ramp_network,
    demand_at,
    dsl_scenario,
    load_scenario,
    three_ramp_scenario,
)

S = 1.0 / 3600.0  # seconds -> hours


def test_table_demand_lookup_peak_hour_scenario():
    cfg = three_ramp_scenario()
    assert demand_at(cfg.mainline_demand, 450.0 * S) == 5500.0
    # ramp demand is flat across the whole horizon
    for t_s in (0.0, 450.0, 1000.0, 2000.0):
        assert demand_at(cfg.ramp_demands[0], t_s * S) == 1000.0
    assert demand_at(cfg.mainline_demand, 0.0) == 4000.0
    assert demand_at(cfg.mainline_demand, 2099.0 * S) == 4500.0


def test_table_demand_lookup_four_hour_scenario():
    # Column labels are interval end times: the (3, 3.5] interval carries
    # the second-to-last flow level, the final (3.5, 4] interval the last.
    cfg = dsl_scenario()
    assert demand_at(cfg.mainline_demand, 3.25) == 2500.0
    assert demand_at(cfg.mainline_demand, 3.75) == 1000.0
    assert demand_at(cfg.ramp_demands[0], 3.75) == 500.0
    assert demand_at(cfg.mainline_demand, 1.25) == 3500.0
    assert demand_at(cfg.ramp_demands[0], 1.25) == 1500.0


def test_demand_boundary_belongs_to_next_interval():
    profile = DemandProfile(breakpoints=((1.0, 100.0), (2.0, 200.0)))
    assert demand_at(profile, 0.999999) == 100.0
    assert demand_at(profile, 1.0) == 200.0


def test_demand_beyond_horizon_rejected():
    profile = DemandProfile(breakpoints=((1.0, 100.0),))
    with pytest.raises(ValueError):
        demand_at(profile, 1.0)
    with pytest.raises(ValueError):
        demand_at(profile, -0.1)


def test_demand_profile_validation():
    with pytest.raises(ConfigurationError):
        DemandProfile(breakpoints=())
    with pytest.raises(ConfigurationError):
        DemandProfile(breakpoints=((2.0, 100.0), (1.0, 50.0)))
    with pytest.raises(ConfigurationError):
        DemandProfile(breakpoints=((1.0, -5.0),))


def test_three_ramp_network_geometry():
    net = build_three_ramp_network()
    # regions within one cell length of 1.35 km
    for tag in ("A1", "A2", "A3"):
        idx = net.region_cells(tag)
        length = sum(net.length[i] for i in idx)
        assert abs(length - 1.35) <= 0.25 + 1e-12
    attach = list(net.ramp_cell)
    assert attach == sorted(attach)
    assert len(set(attach)) == 3
    assert np.all(net.density == 0.0)
    assert net.lanes.max() == net.lanes.min() == 3.0


def test_dsl_network_geometry_and_parameters():
    net = build_dsl_network()
    assert net.fd.v_ff == 60.0
    assert net.fd.rho_cr == 33.5
    assert net.fd.rho_jam == 180.0
    # capacity over both lanes lands on the stated ~4000 veh/h
    assert 2 * net.fd.capacity == pytest.approx(4020.0)
    s1 = net.region_cells("S1")
    assert sum(net.length[i] for i in s1) == pytest.approx(4.0)
    s2 = net.region_cells("S2")
    assert sum(net.length[i] for i in s2) == pytest.approx(2.0)
    assert np.all(net.density == 40.0)
    assert net.ramp_capacity[0] == 2000.0


def test_scenario_configs_build():
    for cfg in (three_ramp_scenario(), dsl_scenario()):
        net = cfg.build_network()
        assert net.n_ramps == len(cfg.ramp_demands)
        assert cfg.steps_per_interval >= 1
        assert cfg.n_intervals * cfg.control_interval == pytest.approx(cfg.horizon)


def test_controller_registry_validation():
    cfg = three_ramp_scenario()
    assert cfg.agents_for("none") == ()
    assert len(cfg.agents_for("maxplus")) == 3
    with pytest.raises(ConfigurationError):
        cfg.agents_for("metering_dsl")  # no gantries on this network
    with pytest.raises(ConfigurationError):
        cfg.agents_for("nonsense")
    dsl = dsl_scenario()
    assert len(dsl.agents_for("metering")) == 1
    assert len(dsl.agents_for("metering_dsl")) == 2


def test_scenario_invariants_validated():
    with pytest.raises(ConfigurationError):
        three_ramp_scenario(control_interval=7.0 / 3600.0)  # not a dt multiple
    with pytest.raises(ConfigurationError):
        three_ramp_scenario(horizon=2000.0 / 3600.0)  # not an interval multiple
    with pytest.raises(ConfigurationError):
        three_ramp_scenario(gamma=1.5)
    with pytest.raises(ConfigurationError):
        three_ramp_scenario(dt=60.0 / 3600.0).build_network()  # CFL


def test_load_scenario_builtin_names():
    assert load_scenario("three_ramp").name == "three_ramp"
    assert load_scenario("dsl").name == "dsl"


def test_load_scenario_from_json(tmp_path):
    path = tmp_path / "custom.json"
    path.write_text(
        json.dumps(
            {
                "network": "three_ramp",
                "episodes": 17,
                "seed": 99,
                "gamma": 0.8,
                "epsilon": {"start": 0.5, "decay": 0.9, "floor": 0.01},
                "demand": {
                    "mainline": [[300, 1000], [2100, 2000]],
                    "ramps": [[[2100, 100]], [[2100, 200]], [[2100, 300]]],
                },
            }
        )
    )
    cfg = load_scenario(str(path))
    assert cfg.episodes == 17
    assert cfg.seed == 99
    assert cfg.gamma == 0.8
    assert cfg.epsilon.start == 0.5
    assert demand_at(cfg.mainline_demand, 0.0) == 1000.0
    assert demand_at(cfg.ramp_demands[2], 0.0) == 300.0
    cfg.build_network()


def test_load_scenario_bad_inputs(tmp_path):
    with pytest.raises(ConfigurationError):
        load_scenario("/nonexistent/path.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigurationError):
        load_scenario(str(bad))
    missing = tmp_path / "missing.json"
    missing.write_text(json.dumps({"episodes": 5}))
    with pytest.raises(ConfigurationError):
        load_scenario(str(missing))
    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({"network": "ring_road"}))
    with pytest.raises(ConfigurationError):
        load_scenario(str(unknown))


def test_shipped_scenario_files_load():
    for name in ("scenarios/three_ramp.json", "scenarios/dsl.json"):
        cfg = load_scenario(name)
        cfg.build_network()


def test_demand_profile_must_cover_horizon():
    cfg = three_ramp_scenario(
        mainline_demand=DemandProfile(breakpoints=((0.25, 4000.0),))
    )
    with pytest.raises(ConfigurationError):
        cfg.build_network()
