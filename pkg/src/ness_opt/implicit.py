"""Steady-state sensitivities by the implicit function theorem.

At a fixed point ``F(rho_ss; theta) = 0`` the steady state responds as
``d rho_ss/d theta = -J^{-1} dF/d theta`` with ``J = dF/d rho``. For a scalar
observable only the vector-Jacobian product is needed: solve the adjoint
system ``J^T y = v`` once and contract ``-y^T dF/d theta``. Two backends solve
the adjoint system: an LU factorization (``direct``) and relaxation of the
adjoint flow ``dy/dt = J^T y - v`` to its fixed point (``relaxation``).

Trace-preserving generators are singular. The adjoint system is then only
solvable for cotangents with no component along the stationary state, so
cotangents are projected first; this does not change the product because the
trace of ``rho_ss`` is parameter independent.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.linalg as sla

from . import dual as ad
from . import ode
from .linalg import RealSuperOp, solve_deflated, steady_state_direct
from .models.base import LiouvillianModel

__all__ = [
    "BACKENDS",
    "AdjointProblem",
    "GradientReport",
    "SteadyStateError",
    "steady_state",
    "project_cotangent",
    "adjoint_direct",
    "adjoint_relaxation",
    "steady_state_vjp",
    "observable_gradient",
    "steady_state_jacobian_column",
    "steady_state_jacobian",
]

log = logging.getLogger(__name__)

BACKENDS = ("relaxation", "direct")


class SteadyStateError(RuntimeError):
    """Forward or adjoint steady state could not be reached."""


@dataclass
class AdjointProblem:
    """Adjoint system ``J^T y = v`` with an optional ``(left_null, right_null)`` gauge."""

    jacobian_T_apply: Callable[[np.ndarray], np.ndarray]
    v: np.ndarray
    gauge: tuple[np.ndarray, np.ndarray] | None = None
    matrix: np.ndarray | None = None

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=float)
        if self.gauge is not None:
            l, r = (np.asarray(g, dtype=float) for g in self.gauge)
            self.gauge = (l, r / (r @ l))

    @classmethod
    def from_matrix(cls, J: np.ndarray, v, gauge=None) -> "AdjointProblem":
        J = np.asarray(J, dtype=float)
        JT = J.T.copy()
        return cls(lambda y: JT @ y, v, gauge, J)


@dataclass
class GradientReport:
    gradient: np.ndarray
    backend: str
    adjoint_residual: float
    value: float = float("nan")
    state: np.ndarray | None = None
    steady_solves: int = 0
    fd_check: np.ndarray | None = None
    partial_theta: np.ndarray | None = field(default=None, repr=False)


def _check_backend(backend: str) -> None:
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}, got {backend!r}")


def steady_state(
    model: LiouvillianModel,
    theta,
    backend: str = "direct",
    cfg: ode.SteadyConfig | None = None,
) -> ode.SteadyResult:
    """Steady state by ODE relaxation or by a direct linear solve."""
    _check_backend(backend)
    cfg = cfg or model.steady_config(theta)
    if backend == "relaxation":
        return ode.evolve_to_steady(model.rhs(theta), model.initial_state(), cfg)
    A, b = model.matrices(theta)
    if model.has_gauge:
        x = steady_state_direct(RealSuperOp(A, model.left_null()))
    else:
        x = np.linalg.solve(A, -b)
    res = float(np.max(np.abs(A @ x + b)))
    return ode.SteadyResult(state=x, residual=res, elapsed_time=0.0, blocks_used=0, converged=True)


def project_cotangent(v, gauge) -> np.ndarray:
    """Remove the component of ``v`` along the stationary direction: ``v - (r.v) l``."""
    v = np.asarray(v, dtype=float)
    if gauge is None:
        return v
    l, r = gauge
    r = r / (r @ l)
    return v - (r @ v) * l


def _relative_residual(problem: AdjointProblem, y: np.ndarray, v: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(v))), 1e-300)
    return float(np.max(np.abs(problem.jacobian_T_apply(y) - v))) / scale if v.size else 0.0


def adjoint_direct(problem: AdjointProblem) -> np.ndarray:
    """Solve ``J^T y = v'`` by LU, deflating the zero mode when a gauge is given."""
    if problem.matrix is None:
        raise ValueError("direct adjoint needs an explicit Jacobian")
    v = project_cotangent(problem.v, problem.gauge)
    if not np.any(v):
        return np.zeros_like(v)
    if problem.gauge is not None:
        l, r = problem.gauge
        scale = float(np.max(np.abs(v)))
        return scale * solve_deflated(RealSuperOp(problem.matrix, l, r), v / scale)
    return sla.lu_solve(sla.lu_factor(problem.matrix.T), v)


def _gauge_rate(J: np.ndarray) -> float:
    # comparable to the typical relaxation rate, so the flow is no stiffer
    d = np.abs(np.diag(J))
    return float(np.mean(d)) if np.any(d) else 1.0


def adjoint_relaxation(problem: AdjointProblem, cfg: ode.SteadyConfig | None = None) -> np.ndarray:
    """Relax ``dy/dt = J^T y - v'`` from ``y(0) = 0`` to its fixed point.

    The cotangent is rescaled to unit max-norm before integrating so that
    tolerances are independent of the observable's units.
    """
    v = project_cotangent(problem.v, problem.gauge)
    scale = float(np.max(np.abs(v))) if v.size else 0.0
    if scale == 0.0:
        return np.zeros_like(v)
    base = cfg or ode.SteadyConfig()
    cfg = replace(
        base,
        abs_tol=1e-13,
        rel_tol=min(base.rel_tol, 1e-10),
        residual_tol=1e-12,
        divergence_bound=max(base.divergence_bound, 1e14),
    )
    vs = v / scale
    if problem.matrix is not None:
        AT = problem.matrix.T
        if problem.gauge is not None:
            # damp the gauge mode so a slightly inexact rho_ss cannot drive a drift along it
            l, r = problem.gauge
            AT = AT - _gauge_rate(problem.matrix) * np.outer(l, r)
        f = ode.AffineRHS(AT, -vs)
    elif problem.gauge is not None:
        l, r = problem.gauge
        f = lambda t, y: problem.jacobian_T_apply(y) - vs - (r @ y) * l  # noqa: E731
    else:
        f = lambda t, y: problem.jacobian_T_apply(y) - vs  # noqa: E731
    res = ode.evolve_to_steady(f, np.zeros_like(vs), cfg)
    if not res.converged:
        raise SteadyStateError(f"adjoint relaxation did not converge (residual {res.residual:.3e})")
    y = res.state
    if problem.gauge is not None:
        # strip the drift-free gauge component accumulated by rounding
        l, r = problem.gauge
        y = y - (r @ y) * l
    return scale * y


def _adjoint(problem: AdjointProblem, backend: str, cfg) -> np.ndarray:
    _check_backend(backend)
    return adjoint_direct(problem) if backend == "direct" else adjoint_relaxation(problem, cfg)


def _gauge(model: LiouvillianModel, rho_ss: np.ndarray):
    return (model.left_null(), rho_ss) if model.has_gauge else None


def steady_state_vjp(
    model: LiouvillianModel,
    theta,
    rho_ss,
    v,
    backend: str = "direct",
    cfg: ode.SteadyConfig | None = None,
    return_adjoint: bool = False,
):
    """``v^T d rho_ss/d theta`` as ``-y^T dF/d theta`` with ``J^T y = v'``."""
    theta = np.asarray(theta, dtype=float)
    rho_ss = np.asarray(rho_ss, dtype=float)
    A, _ = model.matrices(theta)
    problem = AdjointProblem.from_matrix(A, v, _gauge(model, rho_ss))
    y = _adjoint(problem, backend, cfg or model.steady_config(theta))
    grad = -(y @ model.dF_dtheta(rho_ss, theta))
    if return_adjoint:
        v_proj = project_cotangent(problem.v, problem.gauge)
        return grad, y, _relative_residual(problem, y, v_proj)
    return grad


def _resolve(model: LiouvillianModel, observable):
    return model.observable(observable) if isinstance(observable, str) else observable


def observable_gradient(
    model: LiouvillianModel,
    theta,
    observable,
    backend: str = "direct",
    cfg: ode.SteadyConfig | None = None,
    rho_ss: np.ndarray | None = None,
) -> GradientReport:
    """Total derivative of ``g(rho_ss(theta), theta)``.

    Uses one forward steady-state solve (skipped when ``rho_ss`` is given)
    and one adjoint solve.
    """
    _check_backend(backend)
    theta = np.asarray(theta, dtype=float)
    g = _resolve(model, observable)
    cfg = cfg or model.steady_config(theta)
    solves = 0
    if rho_ss is None:
        ss = steady_state(model, theta, backend, cfg)
        solves += 1
        if not ss.converged:
            raise SteadyStateError(f"steady state not converged (residual {ss.residual:.3e})")
        rho_ss = ss.state
    rho_ss = np.asarray(rho_ss, dtype=float)
    value = float(ad.value_of(g(rho_ss, theta)))
    dg_drho = ad.jacobian_forward(lambda r: g(r, theta), rho_ss)[0]
    dg_dtheta = ad.jacobian_forward(lambda th: g(rho_ss, th), theta)[0]
    vjp, _, adj_res = steady_state_vjp(model, theta, rho_ss, dg_drho, backend, cfg, return_adjoint=True)
    solves += 1
    return GradientReport(
        gradient=dg_dtheta + vjp,
        backend=backend,
        adjoint_residual=adj_res,
        value=value,
        state=rho_ss,
        steady_solves=solves,
        partial_theta=dg_dtheta,
    )


def steady_state_jacobian_column(
    model: LiouvillianModel,
    theta,
    param_index: int,
    rho_ss: np.ndarray | None = None,
) -> np.ndarray:
    """``d rho_ss / d theta_i`` from ``J x = -dF/d theta_i`` (traceless for gauged models)."""
    theta = np.asarray(theta, dtype=float)
    if not 0 <= param_index < model.n_params:
        raise IndexError(f"parameter index {param_index} out of range")
    if rho_ss is None:
        rho_ss = steady_state(model, theta).state
    A, _ = model.matrices(theta)
    rhs = -model.dF_dtheta(rho_ss, theta)[:, param_index]
    if model.has_gauge:
        op = RealSuperOp(A, model.left_null(), rho_ss / (model.left_null() @ rho_ss))
        scale = max(float(np.max(np.abs(rhs))), 1e-300)
        return scale * solve_deflated(op, rhs / scale, transpose=False)
    return np.linalg.solve(A, rhs)


def steady_state_jacobian(model: LiouvillianModel, theta, rho_ss: np.ndarray | None = None) -> np.ndarray:
    """Full ``d rho_ss / d theta`` of shape ``(n_state, n_params)``."""
    theta = np.asarray(theta, dtype=float)
    if rho_ss is None:
        rho_ss = steady_state(model, theta).state
    cols = [steady_state_jacobian_column(model, theta, i, rho_ss) for i in range(model.n_params)]
    return np.column_stack(cols)
