"""Periodic finite-difference runs of the structural flows."""

import logging
import math

import numpy as np
import pytest

from conftest import make_potential, SOL1
from wdvvkit.exprlang import parse
from wdvvkit.hamop import affinors_from_psi, structural_flows
from wdvvkit.hierarchy import build_hierarchy
from wdvvkit.hydrosim import (
    BlowUp,
    FieldState,
    Grid1D,
    SimConfig,
    advisory_dt,
    conservation_report,
    functional_value,
    simulate_flow,
)
from wdvvkit.submanifold import reduce_potential


@pytest.fixture(scope="module")
def sol1_flows():
    S = reduce_potential(make_potential(SOL1), 1)
    return structural_flows(affinors_from_psi(S))


@pytest.fixture(scope="module")
def sol1_densities():
    S = reduce_potential(make_potential(SOL1), 1)
    levels = build_hierarchy(S, 2)
    return [lv.h for lv in levels]


def sine_state(grid, amplitude=0.01, component=1):
    x = grid.nodes()
    vals = np.zeros((grid.m, 3))
    vals[:, component] = amplitude * np.sin(2 * math.pi * x / grid.length)
    return FieldState(vals, 0.0)


def test_grid_contract():
    g = Grid1D(64, 2.0)
    assert g.dx == pytest.approx(2.0 / 64)
    x = g.nodes()
    assert x.shape == (64,)
    assert x[0] == 0.0 and x[-1] < 2.0
    with pytest.raises(ValueError):
        Grid1D(8, 1.0)
    with pytest.raises(ValueError):
        Grid1D(64, 0.0)


def test_translation_flow_round_trip(sol1_flows):
    # the first structural flow is the identity affinor: plain advection,
    # exactly periodic in time with period equal to the domain length
    g = Grid1D(128, 1.0)
    init = sine_state(g, amplitude=0.5)
    cfg = SimConfig(dt=1.0 / 1280, t_end=1.0)
    traj = simulate_flow(sol1_flows[0], init, g, cfg)
    final = traj[-1]
    assert final.time == pytest.approx(1.0)
    assert np.max(np.abs(final.values - init.values)) < 1e-4


def test_round_trip_error_refines_at_fourth_order(sol1_flows):
    def err(m):
        g = Grid1D(m, 1.0)
        init = sine_state(g, amplitude=0.5)
        cfg = SimConfig(dt=1.0 / (m * 10), t_end=1.0)
        traj = simulate_flow(sol1_flows[0], init, g, cfg)
        return np.max(np.abs(traj[-1].values - init.values))

    ratio = err(64) / err(128)
    assert ratio > 8.0


def test_functional_value_closed_form(sol1_densities):
    # h1 = u1 u3 + 1/2 u2^2 over one sine period in u2 integrates to pi/2
    g = Grid1D(256, 2 * math.pi)
    init = sine_state(g, amplitude=1.0)
    got = functional_value(sol1_densities[0], init, g)
    assert got == pytest.approx(math.pi / 2, abs=1e-12)


def test_rectangle_rule_constant_density():
    g = Grid1D(64, 3.0)
    vals = np.full((64, 3), 2.0)
    state = FieldState(vals, 0.0)
    # density u1 integrates to 2 * length exactly on the periodic grid
    got = functional_value(parse("u1", 3), state, g)
    assert got == pytest.approx(6.0, abs=1e-13)


def test_conservation_of_hierarchy_densities(sol1_flows, sol1_densities):
    g = Grid1D(128, 1.0)
    init = sine_state(g, amplitude=0.01)
    cfg = SimConfig(dt=2e-4, t_end=0.05, record_every=10)
    traj = simulate_flow(sol1_flows[1], init, g, cfg)
    drifts = conservation_report(traj, sol1_densities, g)
    assert len(drifts) == 2
    for d in drifts:
        assert d < 1e-6


def test_conservation_drift_decreases_under_refinement(sol1_flows, sol1_densities):
    def drift(m):
        g = Grid1D(m, 1.0)
        init = sine_state(g, amplitude=0.05)
        cfg = SimConfig(dt=1e-4, t_end=0.05)
        traj = simulate_flow(sol1_flows[1], init, g, cfg)
        return max(conservation_report(traj, sol1_densities, g))

    d64, d128 = drift(64), drift(128)
    assert d128 < d64


def test_flows_commute_to_third_order(sol1_flows):
    # u_t2 then u_t3 vs u_t3 then u_t2; the gap decays at least at O(t^2.5)
    g = Grid1D(64, 1.0)
    init = sine_state(g, amplitude=0.05)

    def gap(t):
        cfg = lambda: SimConfig(dt=t / 50, t_end=t)
        ab1 = simulate_flow(sol1_flows[1], init, g, cfg())[-1]
        ab2 = simulate_flow(sol1_flows[2], FieldState(ab1.values, 0.0), g, cfg())[-1]
        ba1 = simulate_flow(sol1_flows[2], init, g, cfg())[-1]
        ba2 = simulate_flow(sol1_flows[1], FieldState(ba1.values, 0.0), g, cfg())[-1]
        return np.max(np.abs(ab2.values - ba2.values))

    g1, g2 = gap(0.2), gap(0.1)
    order = math.log2(g1 / g2)
    assert order > 2.5


def test_zero_flow_is_identity(sol1_flows):
    from wdvvkit.algebra import PolyMatrix
    from wdvvkit.hamop import HydroFlow

    g = Grid1D(64, 1.0)
    init = sine_state(g, amplitude=0.3)
    zero_flow = HydroFlow(PolyMatrix.zeros(3, 3, 3))
    traj = simulate_flow(zero_flow, init, g, SimConfig(dt=1e-2, t_end=0.1))
    assert np.array_equal(traj[-1].values, init.values)


def test_constant_state_is_fixed_point(sol1_flows):
    g = Grid1D(64, 1.0)
    vals = np.tile(np.array([0.3, -0.2, 0.1]), (64, 1))
    traj = simulate_flow(sol1_flows[1], FieldState(vals, 0.0), g, SimConfig(dt=1e-3, t_end=0.02))
    assert np.max(np.abs(traj[-1].values - vals)) < 1e-13


def test_advisory_dt(sol1_flows):
    from wdvvkit.algebra import PolyMatrix
    from wdvvkit.hamop import HydroFlow

    g = Grid1D(64, 1.0)
    zero_flow = HydroFlow(PolyMatrix.zeros(3, 3, 3))
    assert advisory_dt(zero_flow, sine_state(g, amplitude=1.0), g) == math.inf
    # the second affinor keeps unit subdiagonal entries even at u = 0
    assert advisory_dt(sol1_flows[1], sine_state(g, amplitude=0.0), g) == pytest.approx(
        g.dx / 10.0
    )
    a = advisory_dt(sol1_flows[1], sine_state(g, amplitude=5.0), g)
    assert 0.0 < a < g.dx / 10.0
    # pure advection has unit speed: dx over ten
    assert advisory_dt(sol1_flows[0], sine_state(g, amplitude=1.0), g) == pytest.approx(
        g.dx / 10.0
    )


def test_blow_up_raises(sol1_flows, caplog):
    g = Grid1D(64, 1.0)
    init = sine_state(g, amplitude=5.0)
    with caplog.at_level(logging.WARNING):
        with pytest.raises(BlowUp) as ei:
            simulate_flow(sol1_flows[1], init, g, SimConfig(dt=0.05, t_end=5.0))
    assert ei.value.time > 0.0
    assert any("advisory" in r.message for r in caplog.records)


def test_record_cadence(sol1_flows):
    g = Grid1D(64, 1.0)
    init = sine_state(g, amplitude=0.01)
    cfg = SimConfig(dt=1e-3, t_end=0.01, record_every=5)
    traj = simulate_flow(sol1_flows[1], init, g, cfg)
    times = [s.time for s in traj]
    assert times[0] == 0.0
    assert times[-1] == pytest.approx(0.01)
    # initial state, step 5, step 10; the final step is not recorded twice
    assert len(traj) == 3
    assert times[1] == pytest.approx(0.005)


def test_state_validation():
    g = Grid1D(64, 1.0)
    with pytest.raises(ValueError):
        FieldState(np.full((64, 3), np.nan), 0.0)
    with pytest.raises(ValueError):
        SimConfig(dt=0.0, t_end=1.0)
    with pytest.raises(ValueError):
        SimConfig(dt=1e-3, t_end=-1.0)
