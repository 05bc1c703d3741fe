"""Real-coordinate density matrices, superoperators and gauge-fixed solves.

A Hermitian ``m x m`` matrix is stored as ``m**2`` real coordinates ordered
``[diagonal (m); Re of upper triangle; Im of upper triangle]`` with the upper
triangle walked row-major. Every Liouvillian in this package is expressed as a
real matrix acting on these coordinates.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from . import dual as ad

__all__ = [
    "DensityState",
    "RealSuperOp",
    "HermiticityError",
    "NonUniqueSteadyStateError",
    "GaugeError",
    "levels_from_size",
    "to_matrix",
    "from_matrix",
    "trace_functional",
    "eig_herm_2x2",
    "complex_superop_to_real",
    "solve_deflated",
    "steady_state_direct",
]


class HermiticityError(ValueError):
    """Input matrix is not Hermitian."""


class NonUniqueSteadyStateError(np.linalg.LinAlgError):
    """The Liouvillian has more than one stationary direction."""


class GaugeError(ValueError):
    """Right-hand side violates the solvability condition of a deflated solve."""


def levels_from_size(n: int) -> int:
    m = int(round(np.sqrt(n)))
    if m * m != n or m < 2:
        raise ValueError(f"coordinate length {n} is not m**2 with m >= 2")
    return m


@lru_cache(maxsize=16)
def _pairs(m: int) -> tuple[tuple[int, int], ...]:
    return tuple((i, j) for i in range(m) for j in range(i + 1, m))


@dataclass(frozen=True)
class DensityState:
    """Hermitian matrix in real coordinates."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        levels_from_size(c.size)
        object.__setattr__(self, "coords", c)

    @property
    def m(self) -> int:
        return levels_from_size(self.coords.size)

    @property
    def trace(self) -> float:
        return float(self.coords[: self.m].sum())

    def matrix(self) -> np.ndarray:
        return to_matrix(self)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix())


@dataclass(frozen=True)
class RealSuperOp:
    """Real linear map on density-state coordinates.

    ``left_null`` is the trace functional for trace-preserving generators and
    ``right_null`` the stationary state, normalized so that
    ``right_null @ left_null == 1``.
    """

    matrix: np.ndarray
    left_null: np.ndarray | None = None
    right_null: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    def with_right_null(self, r: np.ndarray) -> "RealSuperOp":
        return RealSuperOp(self.matrix, self.left_null, np.asarray(r, dtype=float))


def to_matrix(state: DensityState | np.ndarray) -> np.ndarray:
    c = state.coords if isinstance(state, DensityState) else np.asarray(state, dtype=float)
    m = levels_from_size(c.size)
    pairs = _pairs(m)
    npair = len(pairs)
    rho = np.diag(c[:m]).astype(complex)
    for p, (i, j) in enumerate(pairs):
        z = c[m + p] + 1j * c[m + npair + p]
        rho[i, j] = z
        rho[j, i] = np.conj(z)
    return rho


def from_matrix(mat: np.ndarray, atol: float = 1e-10) -> DensityState:
    mat = np.asarray(mat)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 2:
        raise ValueError(f"expected a square matrix with m >= 2, got shape {mat.shape}")
    dev = np.max(np.abs(mat - mat.conj().T))
    if dev >= atol:
        raise HermiticityError(f"matrix is not Hermitian (max deviation {dev:.3e})")
    m = mat.shape[0]
    pairs = _pairs(m)
    upper = np.array([mat[i, j] for i, j in pairs], dtype=complex)
    coords = np.concatenate([np.real(np.diag(mat)), upper.real, upper.imag])
    return DensityState(coords)


def trace_functional(m: int) -> np.ndarray:
    l = np.zeros(m * m)
    l[:m] = 1.0
    return l


@lru_cache(maxsize=16)
def _coordinate_maps(m: int):
    """Constant maps between coordinates and row-major complex vec(rho).

    Returns ``(b_re, b_im, rows_re, rows_im)``: ``vec = (b_re + i b_im) @ c``,
    and coordinates are read back as ``Re vec[rows_re]`` and
    ``Im vec[rows_im]``.
    """
    pairs = _pairs(m)
    n = m * m
    npair = len(pairs)
    b_re = np.zeros((n, n))
    b_im = np.zeros((n, n))
    for k in range(m):
        b_re[k * m + k, k] = 1.0
    for p, (i, j) in enumerate(pairs):
        b_re[i * m + j, m + p] = 1.0
        b_re[j * m + i, m + p] = 1.0
        b_im[i * m + j, m + npair + p] = 1.0
        b_im[j * m + i, m + npair + p] = -1.0
    rows_re = np.array([k * m + k for k in range(m)] + [i * m + j for i, j in pairs])
    rows_im = np.array([i * m + j for i, j in pairs], dtype=int)
    for a in (b_re, b_im, rows_re, rows_im):
        a.setflags(write=False)
    return b_re, b_im, rows_re, rows_im


def complex_superop_to_real(s_re, s_im, m: int):
    """Real coordinate matrix of the superoperator ``s_re + i s_im``.

    ``s_re``/``s_im`` act on row-major ``vec(rho)`` and may be duals. The
    superoperator must map Hermitian matrices to Hermitian matrices.
    """
    b_re, b_im, rows_re, rows_im = _coordinate_maps(m)
    re_part = s_re @ b_re - s_im @ b_im
    im_part = s_re @ b_im + s_im @ b_re
    return ad.concatenate([re_part[rows_re], im_part[rows_im]])


def eig_herm_2x2(h11, h22, h12):
    """Eigen-decomposition of the real symmetric matrix [[h11, h12], [h12, h22]].

    Returns ``(e_minus, e_plus, theta_mix)``; the eigenvector of ``e_plus``
    is ``(cos theta, sin theta)`` and that of ``e_minus`` is
    ``(-sin theta, cos theta)``. Works on duals.
    """
    mean = 0.5 * (h11 + h22)
    half = 0.5 * (h11 - h22)
    rad = ad.hypot(half, h12)
    theta = 0.5 * ad.atan2(2.0 * h12, h11 - h22)
    return mean - rad, mean + rad, theta


def solve_deflated(op: RealSuperOp, b: np.ndarray, transpose: bool = True, tol: float = 1e-9) -> np.ndarray:
    """Gauge-fixed solve against a singular trace-preserving superoperator.

    With ``transpose=True`` solves ``M^T y = b`` subject to ``r^T y = 0`` by LU
    on ``M^T + l r^T``; requires ``r^T b = 0``. With ``transpose=False`` solves
    ``M x = b`` subject to ``l^T x = 0`` via ``M + r l^T``; requires
    ``l^T b = 0``.
    """
    if op.left_null is None or op.right_null is None:
        raise ValueError("solve_deflated needs both null vectors")
    M = np.asarray(op.matrix, dtype=float)
    b = np.asarray(b, dtype=float)
    l, r = op.left_null, op.right_null
    scale = max(1.0, float(np.max(np.abs(b))) if b.size else 1.0)
    if transpose:
        check, A = r @ b, M.T + np.outer(l, r)
    else:
        check, A = l @ b, M + np.outer(r, l)
    if abs(check) > tol * scale:
        raise GaugeError(f"right-hand side has a component {check:.3e} along the zero mode")
    lu = _lu_factor_checked(A)
    y = sla.lu_solve(lu, b)
    res = np.max(np.abs((M.T if transpose else M) @ y - b)) if b.size else 0.0
    if res > tol * scale:
        raise NonUniqueSteadyStateError(f"deflated solve residual {res:.3e} exceeds {tol:.1e}")
    return y


def _lu_factor_checked(A: np.ndarray):
    with warnings.catch_warnings():
        warnings.simplefilter("error", sla.LinAlgWarning)
        try:
            lu = sla.lu_factor(A, check_finite=True)
        except (sla.LinAlgWarning, np.linalg.LinAlgError) as exc:
            raise NonUniqueSteadyStateError("deflated matrix is singular; steady state not unique") from exc
    diag = np.abs(np.diag(lu[0]))
    if diag.min() <= 1e-14 * max(diag.max(), 1e-300):
        raise NonUniqueSteadyStateError("deflated matrix is singular; steady state not unique")
    return lu


def steady_state_direct(op: RealSuperOp) -> np.ndarray:
    """Unit-trace stationary state by one LU solve of ``(M + l l^T) x = l``."""
    if op.left_null is None:
        raise ValueError("steady_state_direct needs the trace functional")
    l = op.left_null
    lu = _lu_factor_checked(np.asarray(op.matrix, dtype=float) + np.outer(l, l))
    x = sla.lu_solve(lu, l)
    return x / (l @ x)
