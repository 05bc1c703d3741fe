from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ness_opt import dual as ad
from ness_opt.benchmarks import TABLE_I, table_i_params
from ness_opt.linalg import DensityState, NonUniqueSteadyStateError
from ness_opt.models.redfield import (
    BATHS,
    HEAT_PARAMS,
    HeatModel,
    HeatModelParams,
    UndefinedRectificationError,
    build_hamiltonian,
    generator_matrix,
    heat_current,
    liouvillian,
    rectification,
    redfield_tensor,
    upsilon,
)
from ness_opt.oracle import single_bath, thermal_check

ROW = table_i_params(8)


def currents(p):
    rho = liouvillian(p).right_null
    return {b: float(heat_current(b, rho, p)) for b in BATHS}


# -- Hamiltonian ---------------------------------------------------------------


def test_degenerate_energies():
    e = np.asarray(build_hamiltonian(ROW).energies)
    np.testing.assert_allclose(e, [0.0, 0.3769, 0.4021], atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_energies_match_dense_diagonalization(seed):
    rng = np.random.default_rng(seed)
    p = replace(ROW, theta1=rng.uniform(0.05, 1), theta2=rng.uniform(0.05, 1), J=rng.uniform(0, 0.5))
    eig = build_hamiltonian(p)
    H = np.asarray(eig.H)
    np.testing.assert_allclose(np.sort(np.asarray(eig.energies)), np.linalg.eigvalsh(H), atol=1e-12)
    U = np.asarray(eig.U)
    np.testing.assert_allclose(U.T @ H @ U, np.diag(np.asarray(eig.energies)), atol=1e-12)


def test_no_hopping_dephasing_is_off_diagonal():
    eig = build_hamiltonian(replace(ROW, theta1=0.3, theta2=0.5, J=0.0))
    SD = np.asarray(eig.S["D"])
    np.testing.assert_allclose(np.diag(SD), 0.0, atol=1e-12)
    assert abs(abs(SD[1, 2]) - 1.0) < 1e-12


def test_degenerate_coupling_elements():
    eig = build_hamiltonian(ROW)
    SH = np.asarray(eig.S["H"])
    pair = sorted([abs(SH[0, 1]), abs(SH[0, 2])])
    expected = sorted([abs(ROW.a0 - ROW.a1) / np.sqrt(2), (ROW.a0 + ROW.a1) / np.sqrt(2)])
    np.testing.assert_allclose(pair, expected, atol=1e-12)


# -- correlation rates -----------------------------------------------------------


def test_upsilon_zero_frequency_limit():
    assert upsilon(0.0, 1.0, 0.15, 25.0) == pytest.approx(0.075)
    assert upsilon(1e-9, 1.0, 0.15, 25.0) == pytest.approx(0.075, rel=1e-6)


def test_upsilon_closed_form():
    expected = 0.5 * np.exp(-1) * (1 / (np.e - 1) + 1)
    assert upsilon(1.0, 1.0, 1.0, 1.0) == pytest.approx(expected, rel=1e-12)
    assert upsilon(1.0, 1.0, 1.0, 1.0) == pytest.approx(0.290988, abs=1e-6)


@pytest.mark.parametrize("omega_c", [1.0, 5.0, 25.0])
def test_upsilon_detailed_balance(omega_c):
    w, T = 0.39, 0.15
    assert upsilon(w, 1.0, T, omega_c) / upsilon(-w, 1.0, T, omega_c) == pytest.approx(np.exp(w / T), rel=1e-12)


def test_upsilon_rejects_bad_temperature():
    with pytest.raises(ValueError):
        upsilon(0.1, 1.0, 0.0, 1.0)


def test_tensor_vanishes_without_coupling():
    p = replace(ROW, a0=0.0, a1=0.0, gamma_H=0.0)
    R = redfield_tensor("H", build_hamiltonian(p), p)
    np.testing.assert_array_equal(np.asarray(R), 0.0)


# -- generator -------------------------------------------------------------------


def test_trace_preservation():
    op = liouvillian(ROW)
    assert np.max(np.abs(op.left_null @ op.matrix)) < 1e-12
    assert np.max(np.abs(op.matrix @ op.right_null)) < 1e-10


def test_unitary_spectrum():
    p = replace(ROW, theta1=0.3, theta2=0.5, J=0.1, gamma_H=0.0, gamma_C=0.0, gamma_D=0.0)
    ev = np.linalg.eigvals(np.asarray(generator_matrix(p)))
    assert np.max(np.abs(ev.real)) < 1e-12
    e = np.asarray(build_hamiltonian(p).energies)
    freqs = sorted([abs(a - b) for a in e for b in e])
    np.testing.assert_allclose(sorted(np.abs(ev.imag)), freqs, atol=1e-12)


def test_unitary_only_steady_state_is_not_unique():
    p = replace(ROW, gamma_H=0.0, gamma_C=0.0, gamma_D=0.0)
    with pytest.raises(NonUniqueSteadyStateError):
        liouvillian(p)


def test_dual_generator_derivative_matches_fd():
    model = HeatModel(ROW)
    theta = model.theta0()
    rho = liouvillian(ROW).right_null
    dF = model.dF_dtheta(rho, theta)
    for i, name in enumerate(HEAT_PARAMS):
        h = 1e-6 * max(1.0, abs(theta[i]))
        tp, tm = theta.copy(), theta.copy()
        tp[i] += h
        tm[i] -= h
        ref = (model.residual(rho, tp) - model.residual(rho, tm)) / (2 * h)
        scale = max(np.max(np.abs(ref)), 1e-300)
        assert np.max(np.abs(dF[:, i] - ref)) / scale < 1e-6, name


# -- currents ------------------------------------------------------------------


def test_table_row_current():
    assert currents(ROW)["H"] == pytest.approx(1.934e-5, rel=0.02)


@pytest.mark.parametrize("row", range(len(TABLE_I)))
def test_reference_optima_currents(row):
    assert currents(table_i_params(row))["H"] == pytest.approx(TABLE_I[row, 9], rel=0.02)


def test_currents_balance():
    assert abs(sum(currents(ROW).values())) < 1e-10


def test_equal_temperatures_no_current():
    p = replace(ROW, T_H=0.12, T_C=0.12, T_D=0.12)
    for j in currents(p).values():
        assert abs(j) < 1e-10


def test_hot_bath_delivers_heat():
    p = replace(ROW, a0=1.0, a1=0.0, b0=0.0, b1=1.0)
    assert currents(p)["H"] > 0


@pytest.mark.parametrize("delta", [0.05, 0.1])
def test_degeneracy_maximizes_current(delta):
    split = replace(ROW, theta1=0.3895 * (1 + delta), theta2=0.3895 * (1 - delta))
    assert currents(ROW)["H"] >= currents(split)["H"]


heat_params = st.builds(
    lambda th1, th2, J, gH, gC, gD, a, b: HeatModelParams(
        theta1=th1, theta2=th2, J=J, gamma_H=gH, gamma_C=gC, gamma_D=gD, a0=a, a1=1 - a, b0=b, b1=1 - b
    ),
    st.floats(0.05, 1.0),
    st.floats(0.05, 1.0),
    st.floats(0.001, 1.0),
    st.floats(1e-5, 0.0025),
    st.floats(1e-5, 0.0025),
    st.floats(1e-5, 0.0025),
    st.floats(0.05, 0.95),
    st.floats(0.05, 0.95),
)


@settings(max_examples=40, deadline=None)
@given(heat_params)
def test_random_draws_are_physical(p):
    rho = liouvillian(p).right_null
    s = DensityState(rho)
    assert abs(s.trace - 1.0) < 1e-12
    assert s.eigenvalues().min() >= -1e-8
    assert abs(sum(float(heat_current(b, rho, p)) for b in BATHS)) < 1e-10


# -- rectification -------------------------------------------------------------


def test_symmetric_device_has_no_rectification():
    p = replace(ROW, theta1=0.4, theta2=0.4, J=0.05, gamma_H=0.001, gamma_C=0.001, gamma_D=0.0005)
    assert abs(rectification(p)) < 1e-8


@settings(max_examples=30, deadline=None)
@given(heat_params)
def test_rectification_bounded(p):
    assert abs(rectification(p)) <= 1.0


def test_rectification_undefined_without_current():
    p = replace(ROW, gamma_H=0.0)
    with pytest.raises(UndefinedRectificationError):
        rectification(p)


# -- thermalization ------------------------------------------------------------


def test_thermalizes_with_single_bath():
    base = replace(ROW, theta1=0.3, theta2=0.5, J=0.05, a0=0.7, a1=0.3)
    errs = [thermal_check(single_bath(base, "H", g)) for g in (1e-4, 1e-5, 1e-6)]
    assert errs[0] < 1e-2
    # the weak-coupling error is already at rounding level, so only require no growth beyond it
    assert all(b <= max(a, 1e-7) for a, b in zip(errs, errs[1:]))


def test_symmetric_coupling_has_dark_state():
    # a0 = a1 decouples one exciton at degeneracy, so the stationary state is not unique
    base = replace(ROW, a0=0.7, a1=0.7)
    with pytest.raises(NonUniqueSteadyStateError):
        thermal_check(single_bath(base, "H", 1e-4))


def test_parameter_validation():
    with pytest.raises(ValueError):
        HeatModelParams(a0=1.5)
    with pytest.raises(ValueError):
        HeatModelParams(gamma_H=0.01)
    with pytest.raises(ValueError):
        HeatModelParams(T_H=0.0)
    with pytest.raises(ValueError):
        HeatModel(active=("bogus",))


def test_dual_parameters_accepted():
    x = ad.lift(0.0025, 0, 1)
    p = replace(ROW, gamma_H=x)
    assert ad.is_dual(generator_matrix(p))
