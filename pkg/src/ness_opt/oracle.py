"""Independent reference computations used to validate the main code paths.

Nothing here shares logic with the implicit-differentiation engine: gradients
come from central differences, steady states from a least-squares null-space
solve, and thermal populations from the Boltzmann distribution.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Callable

import numpy as np

from .linalg import NonUniqueSteadyStateError, RealSuperOp, trace_functional
from .models.redfield import BATHS, HeatModelParams, build_hamiltonian, liouvillian

__all__ = [
    "FDEvaluationError",
    "fd_gradient",
    "relative_error",
    "nullspace_steady",
    "affine_steady",
    "eigen_populations",
    "thermal_check",
    "single_bath",
]


class FDEvaluationError(RuntimeError):
    """The function failed at a perturbed point."""


def fd_gradient(
    g: Callable[[np.ndarray], float],
    theta,
    h_rel: float = 1e-6,
    names: tuple[str, ...] | None = None,
    order: int = 2,
) -> np.ndarray:
    """Central differences with step ``h_rel * max(1, |theta_i|)``.

    ``order=4`` uses the five-point stencil, which tolerates larger steps
    when ``g`` carries rounding noise.
    """
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    theta = np.asarray(theta, dtype=float)
    out = np.empty(theta.size)
    for i in range(theta.size):
        h = h_rel * max(1.0, abs(theta[i]))

        def at(k):
            t = theta.copy()
            t[i] += k * h
            return float(g(t))

        try:
            if order == 2:
                out[i] = (at(1) - at(-1)) / (2.0 * h)
            else:
                out[i] = (8.0 * (at(1) - at(-1)) - (at(2) - at(-2))) / (12.0 * h)
        except Exception as exc:
            label = names[i] if names else f"theta[{i}]"
            raise FDEvaluationError(f"evaluation failed while perturbing {label}: {exc}") from exc
    return out


def relative_error(a, b, floor: float = 1e-3) -> np.ndarray:
    """Componentwise ``|a - b| / max(|b|, floor * max|b|)``.

    The floor keeps components that are tiny compared to the whole gradient
    from being judged against their own rounding noise.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = np.maximum(np.abs(b), floor * np.max(np.abs(b), initial=0.0))
    scale = np.where(scale == 0, 1.0, scale)
    return np.abs(a - b) / scale


def nullspace_steady(op: RealSuperOp, null_tol: float = 1e-12) -> np.ndarray:
    """Unit-trace solution of ``M x = 0`` by least squares on ``[M; trace]``.

    Raises :class:`NonUniqueSteadyStateError` unless ``M`` has exactly one
    singular value below ``null_tol * sigma_max``.
    """
    M = np.asarray(op.matrix, dtype=float)
    n = M.shape[0]
    sv = np.linalg.svd(M, compute_uv=False)
    dim = int(np.sum(sv <= null_tol * sv[0]))
    if dim != 1:
        raise NonUniqueSteadyStateError(f"null space has dimension {dim}, expected 1")
    l = op.left_null if op.left_null is not None else trace_functional(int(round(np.sqrt(n))))
    stacked = np.vstack([M, l[None, :]])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    x, *_ = np.linalg.lstsq(stacked, rhs, rcond=None)
    return x


def affine_steady(A, b) -> np.ndarray:
    """Fixed point ``-A^{-1} b`` of an affine flow."""
    return np.linalg.solve(np.asarray(A, dtype=float), -np.asarray(b, dtype=float))


def eigen_populations(rho_coords, params: HeatModelParams) -> tuple[np.ndarray, np.ndarray]:
    """``(energies, populations)`` of a heat-model state in the Hamiltonian eigenbasis."""
    from .linalg import to_matrix

    eig = build_hamiltonian(params)
    U = np.asarray(eig.U, dtype=float)
    rho_eig = U.T @ to_matrix(rho_coords) @ U
    return np.asarray(eig.energies, dtype=float), np.real(np.diag(rho_eig))


def thermal_check(params: HeatModelParams) -> float:
    """Max relative deviation of steady populations from the Boltzmann distribution.

    Exactly one friction coefficient must be positive; the Gibbs state is taken
    at that bath's temperature.
    """
    active = [b for b in BATHS if params.gamma(b) > 0]
    if len(active) != 1:
        raise ValueError(f"thermal check needs exactly one active bath, got {active}")
    T = params.temperature(active[0])
    rho = nullspace_steady(liouvillian(params))
    e, p = eigen_populations(rho, params)
    w = np.exp(-(e - e.min()) / T)
    boltz = w / w.sum()
    return float(np.max(np.abs(p - boltz) / boltz))


def single_bath(params: HeatModelParams, bath: str, gamma: float) -> HeatModelParams:
    """Copy of ``params`` with only ``bath`` switched on at friction ``gamma``."""
    upd = {f"gamma_{b}": (gamma if b == bath else 0.0) for b in BATHS}
    return replace(params, **upd)
