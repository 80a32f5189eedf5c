import numpy as np
import pytest

from rampflow import FundamentalDiagram, fd_flow


@pytest.fixture
def dsl_fd():
    return FundamentalDiagram(v_ff=60.0, rho_cr=33.5, rho_jam=180.0)


def test_flow_zero_at_empty_road(dsl_fd):
    assert fd_flow(0.0, dsl_fd) == 0.0


def test_flow_zero_at_jam(dsl_fd):
    assert fd_flow(180.0, dsl_fd) == 0.0


def test_flow_at_critical_matches_stated_capacity(dsl_fd):
    # 60 km/h * 33.5 veh/km = 2010 veh/h/lane; both lanes give ~4000 veh/h
    per_lane = fd_flow(33.5, dsl_fd)
    assert per_lane == pytest.approx(2010.0, abs=1e-9)
    assert 2 * per_lane == pytest.approx(4020.0, abs=1e-9)


def test_flow_peaks_at_critical_density(dsl_fd):
    peak = fd_flow(dsl_fd.rho_cr, dsl_fd)
    assert peak == pytest.approx(dsl_fd.capacity)
    for rho in np.linspace(0.0, 180.0, 181):
        assert fd_flow(float(rho), dsl_fd) <= peak + 1e-9


def test_flow_is_continuous_at_critical(dsl_fd):
    eps = 1e-7
    below = fd_flow(dsl_fd.rho_cr - eps, dsl_fd)
    above = fd_flow(dsl_fd.rho_cr + eps, dsl_fd)
    assert below == pytest.approx(above, abs=1e-4)


def test_flow_monotone_up_then_down(dsl_fd):
    rhos = np.linspace(0.0, 180.0, 361)
    flows = [fd_flow(float(r), dsl_fd) for r in rhos]
    k = int(np.argmax(flows))
    assert all(a <= b + 1e-12 for a, b in zip(flows[:k], flows[1 : k + 1]))
    assert all(a >= b - 1e-12 for a, b in zip(flows[k:], flows[k + 1 :]))


def test_density_out_of_range_rejected(dsl_fd):
    with pytest.raises(ValueError):
        fd_flow(-1.0, dsl_fd)
    with pytest.raises(ValueError):
        fd_flow(180.1, dsl_fd)


def test_wave_speed_consistent_with_capacity(dsl_fd):
    # Congested branch must fall from capacity at rho_cr to zero at rho_jam.
    w = dsl_fd.wave_speed
    assert w == pytest.approx(
        dsl_fd.capacity / (dsl_fd.rho_jam - dsl_fd.rho_cr)
    )
    assert w > 0.0


@pytest.mark.parametrize(
    "v_ff,rho_cr,rho_jam",
    [
        (0.0, 33.5, 180.0),
        (-5.0, 33.5, 180.0),
        (60.0, 0.0, 180.0),
        (60.0, 180.0, 180.0),
        (60.0, 200.0, 180.0),
    ],
)
def test_invalid_diagram_rejected(v_ff, rho_cr, rho_jam):
    with pytest.raises(ValueError):
        FundamentalDiagram(v_ff=v_ff, rho_cr=rho_cr, rho_jam=rho_jam)
