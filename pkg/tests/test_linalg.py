import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ness_opt import dual as ad
from ness_opt.linalg import (
    DensityState,
    GaugeError,
    HermiticityError,
    NonUniqueSteadyStateError,
    RealSuperOp,
    complex_superop_to_real,
    eig_herm_2x2,
    from_matrix,
    levels_from_size,
    solve_deflated,
    steady_state_direct,
    to_matrix,
    trace_functional,
)
from ness_opt.models.redfield import HeatModelParams, liouvillian


def random_hermitian(rng, m):
    A = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    return A + A.conj().T


def test_pure_state_m2():
    np.testing.assert_array_equal(to_matrix(np.array([1.0, 0, 0, 0])), np.diag([1.0, 0]))


def test_maximally_mixed_m3():
    s = from_matrix(np.eye(3) / 3)
    np.testing.assert_allclose(s.coords, [1 / 3] * 3 + [0] * 6)
    assert s.trace == pytest.approx(1.0)


def test_coordinate_layout_is_diag_re_im_row_major():
    rho = np.zeros((3, 3), dtype=complex)
    rho[0, 1], rho[0, 2], rho[1, 2] = 1 + 4j, 2 + 5j, 3 + 6j
    rho = rho + rho.conj().T
    np.testing.assert_array_equal(from_matrix(rho).coords, [0, 0, 0, 1, 2, 3, 4, 5, 6])


@pytest.mark.parametrize("m", range(2, 9))
def test_round_trip_exact(m):
    rng = np.random.default_rng(m)
    H = random_hermitian(rng, m)
    np.testing.assert_array_equal(to_matrix(from_matrix(H)), H)
    c = rng.normal(size=m * m)
    np.testing.assert_array_equal(from_matrix(to_matrix(c)).coords, c)


def test_reconstruction_is_hermitian():
    c = np.random.default_rng(1).normal(size=16)
    M = to_matrix(c)
    np.testing.assert_array_equal(M, M.conj().T)


def test_non_hermitian_rejected():
    with pytest.raises(HermiticityError):
        from_matrix(np.array([[1.0, 1.0], [0.0, 0.0]]))


@pytest.mark.parametrize("n", [0, 1, 5, 10])
def test_bad_sizes(n):
    with pytest.raises(ValueError):
        levels_from_size(n)


def test_density_state_eigenvalues():
    s = DensityState(np.array([0.5, 0.5, 0.0, 0.0]))
    np.testing.assert_allclose(s.eigenvalues(), [0.5, 0.5])


# -- superoperator conversion ----------------------------------------------


@pytest.mark.parametrize("m", [2, 3, 4])
def test_complex_superop_matches_commutator(m):
    rng = np.random.default_rng(m)
    H = random_hermitian(rng, m)
    eye = np.eye(m)
    # row-major vec: vec(A X B) = kron(A, B^T) vec(X)
    S = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    R = complex_superop_to_real(S.real, S.imag, m)
    rho = random_hermitian(rng, m)
    expected = from_matrix(-1j * (H @ rho - rho @ H)).coords
    np.testing.assert_allclose(R @ from_matrix(rho).coords, expected, atol=1e-12)
    # trace preservation
    np.testing.assert_allclose(trace_functional(m) @ R, 0.0, atol=1e-12)


def test_complex_superop_accepts_duals():
    eye = np.eye(2)

    def real_commutator(t):
        j = t[0]
        H = ad.stack([ad.stack([1.0 + 0 * j, j]), ad.stack([j, -1.0 + 0 * j])])
        S_im = -(ad.kron(H, eye) - ad.kron(eye, H))
        return complex_superop_to_real(np.zeros((4, 4)), S_im, 2).reshape(16)

    J = ad.jacobian_forward(real_commutator, [0.3])[:, 0]
    ref = (real_commutator([0.3 + 1e-6]) - real_commutator([0.3 - 1e-6])) / 2e-6
    np.testing.assert_allclose(J, ref, atol=1e-8)


# -- 2x2 eigenproblem ----------------------------------------------------------


def test_eig_degenerate_sites():
    em, ep, th = eig_herm_2x2(0.3895, 0.3895, 0.0126)
    assert em == pytest.approx(0.3769, abs=1e-12)
    assert ep == pytest.approx(0.4021, abs=1e-12)
    assert th == pytest.approx(np.pi / 4)


def test_eig_splitting_closed_form():
    em, ep, _ = eig_herm_2x2(1.3, 0.0, 0.12)
    assert ep - em == pytest.approx(np.sqrt(1.69 + 0.0576), rel=1e-12)
    assert ep - em == pytest.approx(1.32197, abs=1e-5)


def test_eig_no_coupling():
    em, ep, _ = eig_herm_2x2(0.7, 0.7, 0.0)
    assert em == ep == 0.7


@settings(max_examples=1000, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(-10, 10))
def test_eig_reconstructs(h11, h22, h12):
    em, ep, th = eig_herm_2x2(h11, h22, h12)
    c, s = np.cos(th), np.sin(th)
    U = np.array([[-s, c], [c, s]])
    H = U @ np.diag([em, ep]) @ U.T
    np.testing.assert_allclose(H, [[h11, h12], [h12, h22]], atol=1e-12 * max(1.0, abs(h11), abs(h22), abs(h12)))


# -- deflated solves ----------------------------------------------------------


def test_deflated_diagonal():
    e1 = np.array([1.0, 0.0])
    op = RealSuperOp(np.diag([0.0, 2.0]), e1, e1)
    np.testing.assert_allclose(solve_deflated(op, np.array([0.0, 4.0])), [0.0, 2.0])


def test_deflated_zero_rhs():
    e1 = np.array([1.0, 0.0])
    op = RealSuperOp(np.diag([0.0, 2.0]), e1, e1)
    np.testing.assert_array_equal(solve_deflated(op, np.zeros(2)), np.zeros(2))


def test_deflated_gauge_violation():
    e1 = np.array([1.0, 0.0])
    op = RealSuperOp(np.diag([0.0, 2.0]), e1, e1)
    with pytest.raises(GaugeError):
        solve_deflated(op, np.array([1.0, 0.0]))


def test_deflated_needs_null_vectors():
    with pytest.raises(ValueError):
        solve_deflated(RealSuperOp(np.eye(2)), np.zeros(2))


def _random_heat_op(seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.1, 1.0)
    b = rng.uniform(0.1, 1.0)
    p = HeatModelParams(
        theta1=rng.uniform(0.1, 1.0),
        theta2=rng.uniform(0.1, 1.0),
        J=rng.uniform(0.001, 0.5),
        gamma_H=rng.uniform(1e-4, 2.5e-3),
        gamma_C=rng.uniform(1e-4, 2.5e-3),
        gamma_D=rng.uniform(1e-4, 2.5e-3),
        a0=a,
        a1=1 - a,
        b0=b,
        b1=1 - b,
    )
    return liouvillian(p)


@pytest.mark.parametrize("seed", range(5))
def test_deflated_on_random_liouvillian(seed):
    op = _random_heat_op(seed)
    rng = np.random.default_rng(100 + seed)
    b = rng.normal(size=9)
    b = b - (op.right_null @ b) * op.left_null
    y = solve_deflated(op, b)
    assert np.max(np.abs(op.matrix.T @ y - b)) < 1e-9
    assert abs(op.right_null @ y) < 1e-9
    # forward variant
    c = rng.normal(size=9)
    c = c - (op.left_null @ c) * op.right_null
    x = solve_deflated(op, c, transpose=False)
    assert np.max(np.abs(op.matrix @ x - c)) < 1e-9
    assert abs(op.left_null @ x) < 1e-9


def test_steady_state_direct_unit_trace():
    op = _random_heat_op(7)
    x = steady_state_direct(op)
    assert trace_functional(3) @ x == pytest.approx(1.0)
    assert np.max(np.abs(op.matrix @ x)) < 1e-14


def test_steady_state_direct_degenerate():
    # pure dephasing keeps every diagonal state stationary
    M = np.zeros((4, 4))
    M[2, 2] = M[3, 3] = -1.0
    with pytest.raises(NonUniqueSteadyStateError):
        steady_state_direct(RealSuperOp(M, trace_functional(2)))
