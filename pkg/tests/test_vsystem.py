from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ness_opt.benchmarks import EFFICIENT_DEVICE, SENSITIVITY_DEVICE, table_iii_params
from ness_opt.models.vsystem import (
    DegenerateMixingError,
    VModelParams,
    VState,
    VSystemModel,
    efficiency,
    mixing,
    pump_sensitivity,
    site2_population,
    steady_state_affine,
    vsystem_rhs,
)
from ness_opt.ode import evolve_to_steady


def test_mixing_closed_form():
    th, delta = mixing(VModelParams(eps_gap=1.3, J=0.12))
    assert delta == pytest.approx(1.32197, abs=1e-5)
    assert th == pytest.approx(0.5 * np.arctan(0.24 / 1.3), rel=1e-12)
    assert th == pytest.approx(0.0916, abs=5e-4)


def test_mixing_zero_gap():
    th, _ = mixing(VModelParams(eps_gap=0.0, J=0.3))
    assert th == pytest.approx(np.pi / 4)


def test_mixing_table_row():
    th, _ = mixing(VModelParams(eps_gap=0.257, J=2.690))
    assert th == pytest.approx(0.7617, abs=5e-4)


def test_mixing_degenerate():
    with pytest.raises(DegenerateMixingError):
        mixing(VModelParams(eps_gap=0.0, J=0.0))


def test_dark_ground_is_fixed_point():
    d = vsystem_rhs(VState(0, 0, 0, 0), replace(EFFICIENT_DEVICE, r=0.0))
    np.testing.assert_array_equal(d, 0.0)


def test_unitary_limit_rotates_coherence():
    p = VModelParams(eps_gap=1.3, J=0.12, gamma_d=0.0, Gamma=0.0, Gamma_RC=0.0, r=0.0)
    _, delta = mixing(p)
    y = np.array([0.3, 0.2, 0.05, -0.07])
    d = vsystem_rhs(y, p)
    np.testing.assert_allclose(d, [0.0, 0.0, delta * y[3], -delta * y[2]], atol=1e-15)


def test_site_population_symmetric_mixing():
    p = VModelParams(eps_gap=0.0, J=0.5)
    assert site2_population(np.array([0.3, 0.1, 0.0, 0.0]), p) == pytest.approx(0.2)


def test_site_population_no_mixing():
    # with no hopping the upper exciton is site 2
    p = VModelParams(eps_gap=1.0, J=0.0)
    assert site2_population(np.array([1.0, 0.0, 0.0, 0.0]), p) == pytest.approx(1.0)
    assert site2_population(np.array([0.0, 1.0, 0.0, 0.0]), p) == pytest.approx(0.0)


@settings(max_examples=100, deadline=None)
@given(
    gap=st.floats(0.01, 5.0),
    J=st.floats(0.01, 5.0),
    pp=st.floats(0, 1),
    pm=st.floats(0, 1),
    re=st.floats(-0.5, 0.5),
    im=st.floats(-0.5, 0.5),
)
def test_site_population_matches_basis_rotation(gap, J, pp, pm, re, im):
    p = VModelParams(eps_gap=gap, J=J)
    th, _ = mixing(p)
    c, s = np.cos(th), np.sin(th)
    # columns are |e+>, |e-> in the (|1>, |2>) basis
    V = np.array([[s, c], [c, -s]])
    rho_eig = np.array([[pp, re + 1j * im], [re - 1j * im, pm]])
    rho_site = V @ rho_eig @ V.T
    assert site2_population(np.array([pp, pm, re, im]), p) == pytest.approx(rho_site[1, 1].real, abs=1e-12)


def test_efficiency_needs_pumping():
    with pytest.raises(ZeroDivisionError):
        efficiency(np.zeros(4), replace(EFFICIENT_DEVICE, r=0.0))


def test_relaxation_matches_affine_solve():
    model = VSystemModel(EFFICIENT_DEVICE)
    theta = model.theta0()
    res = evolve_to_steady(model.rhs(theta), model.initial_state(), model.steady_config(theta))
    direct = steady_state_affine(EFFICIENT_DEVICE)
    assert np.max(np.abs(res.state - direct)) <= 1e-9 * np.max(np.abs(direct))


def test_table_row_is_efficient():
    p = table_iii_params(0)
    assert efficiency(steady_state_affine(p), p) > 0.99


v_params = st.builds(
    lambda G, gd, gap, J, grc: VModelParams(eps_gap=gap, J=J, gamma_d=gd, Gamma=G, Gamma_RC=grc),
    st.floats(1e-6, 1e-1),
    st.floats(1e6, 1e13),
    st.floats(0.01, 5.0),
    st.floats(0.01, 5.0),
    st.floats(0.01, 1.0),
)


@settings(max_examples=100, deadline=None)
@given(v_params)
def test_efficiency_bounded(p):
    eta = efficiency(steady_state_affine(p), p)
    assert -1e-9 <= eta <= 1 + 1e-6


def test_efficiency_decreases_with_recombination():
    etas = []
    for G in np.logspace(-5, -2, 25):
        p = replace(EFFICIENT_DEVICE, Gamma=float(G))
        etas.append(efficiency(steady_state_affine(p), p))
    assert np.all(np.diff(etas) < 0)


GRID = np.linspace(1e-10, 2e-9, 8)


def test_pump_sensitivity_ordering_and_trace():
    rows = pump_sensitivity(SENSITIVITY_DEVICE, GRID)
    assert rows.shape == (len(GRID), 6)
    assert np.all(rows[:, 2] > rows[:, 1])
    assert np.all(rows[:, 1] > 0)
    assert np.all(np.abs(rows[:, 5]) <= 1e-12)


def test_pump_sensitivity_matches_fd():
    rows = pump_sensitivity(SENSITIVITY_DEVICE, GRID)
    for row in rows:
        r = row[0]
        h = 1e-4 * r
        ref = (
            steady_state_affine(replace(SENSITIVITY_DEVICE, r=r + h))
            - steady_state_affine(replace(SENSITIVITY_DEVICE, r=r - h))
        ) / (2 * h)
        np.testing.assert_allclose(row[1:5], ref, rtol=1e-4, atol=1e-4 * np.max(np.abs(ref)))


def test_imaginary_coherence_flat_at_low_pumping():
    grid = np.linspace(1e-10, 2e-9, 39)
    rows = pump_sensitivity(SENSITIVITY_DEVICE, grid)
    im = rows[:, 4]
    low = grid <= 0.5e-9
    assert np.ptp(im[low]) < np.ptp(im[~low])


def test_pump_sensitivity_rejects_nonpositive_rate():
    with pytest.raises(ValueError):
        pump_sensitivity(SENSITIVITY_DEVICE, [0.0])


def test_negative_parameters_rejected():
    with pytest.raises(ValueError):
        VModelParams(Gamma=-1.0)
    with pytest.raises(ValueError):
        VSystemModel(active=("bogus",))
