"""Dormand-Prince 5(4) integration and block-wise steady-state detection."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Union

import numba
import numpy as np

__all__ = [
    "SteadyConfig",
    "SteadyResult",
    "IntegrationResult",
    "AffineRHS",
    "IntegrationError",
    "StiffnessError",
    "DivergenceError",
    "StallError",
    "rk45_integrate",
    "evolve_to_steady",
]

log = logging.getLogger(__name__)


class IntegrationError(RuntimeError):
    """Base class for integrator failures."""


class StiffnessError(IntegrationError):
    """Step size fell below the representable fraction of the time span."""


class DivergenceError(IntegrationError):
    """Non-finite right-hand side or unbounded state."""


class StallError(IntegrationError):
    """Residual stopped decreasing; the flow has no attracting fixed point."""


@dataclass(frozen=True)
class SteadyConfig:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    residual_tol: float = 1e-10
    t_block: float = 1e4
    max_blocks: int = 1_000_000
    h_init: float = 1e-3
    # blocks allowed without a 1% improvement of the best residual
    stall_blocks: int = 20
    divergence_bound: float = 1e6

    def __post_init__(self):
        for name in ("abs_tol", "rel_tol", "residual_tol", "t_block", "h_init", "divergence_bound"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_blocks < 1:
            raise ValueError("max_blocks must be >= 1")
        if self.stall_blocks < 1:
            raise ValueError("stall_blocks must be >= 1")


@dataclass
class IntegrationResult:
    y: np.ndarray
    t: float
    h_last: float
    n_steps: int
    n_rejected: int


@dataclass
class SteadyResult:
    state: np.ndarray
    residual: float
    elapsed_time: float
    blocks_used: int
    converged: bool
    n_steps: int = 0
    n_rejected: int = 0
    history: list[float] = field(default_factory=list, repr=False)


@dataclass(frozen=True)
class AffineRHS:
    """Right-hand side ``f(y) = A @ y + b``; integrated by a compiled kernel."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A", np.ascontiguousarray(self.A, dtype=float))
        object.__setattr__(self, "b", np.ascontiguousarray(self.b, dtype=float))

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        return self.A @ y + self.b


RHS = Union[Callable[[float, np.ndarray], np.ndarray], AffineRHS]

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array(
    [
        [0, 0, 0, 0, 0, 0],
        [1 / 5, 0, 0, 0, 0, 0],
        [3 / 40, 9 / 40, 0, 0, 0, 0],
        [44 / 45, -56 / 15, 32 / 9, 0, 0, 0],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0, 0],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0],
        [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
    ]
)
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 5.0
_FAC_REJECT = 0.5
_UNDERFLOW = 1e-14

# status codes of the compiled kernel
_OK, _STIFF, _NONFINITE = 0, 1, 2


def _factor(err: float) -> float:
    if err == 0.0:
        return _FAC_MAX
    return min(_FAC_MAX, max(_FAC_MIN, _SAFETY * err**-0.2))


def _rk45_python(f, y0, t0, t1, h, atol, rtol, h_max):
    y = np.array(y0, dtype=float)
    t = t0
    span = t1 - t0
    k = np.empty((7, y.size))
    k[0] = f(t, y)
    if not np.all(np.isfinite(k[0])):
        raise DivergenceError("non-finite right-hand side at the initial state")
    n_steps = n_rej = 0
    while t < t1:
        h = min(h, h_max, t1 - t)
        for s in range(1, 7):
            k[s] = f(t + _C[s] * h, y + h * (_A[s, :s] @ k[:s]))
        y_new = y + h * (_A[6, :6] @ k[:6])
        if not np.all(np.isfinite(k)) or not np.all(np.isfinite(y_new)):
            raise DivergenceError(f"non-finite values at t={t:.6g}")
        err_vec = h * (_E @ k)
        scale = atol + rtol * max(np.max(np.abs(y)), np.max(np.abs(y_new)))
        err = np.max(np.abs(err_vec)) / scale
        if err <= 1.0:
            t = t1 if t1 - t - h <= 1e-15 * abs(t1) else t + h
            y = y_new
            k[0] = k[6]
            n_steps += 1
            h *= _factor(err)
        else:
            n_rej += 1
            h *= min(_FAC_REJECT, max(_FAC_MIN, _SAFETY * err**-0.2))
        if h < _UNDERFLOW * span and t < t1:
            raise StiffnessError(f"step size {h:.3e} underflow at t={t:.6g}")
    return y, t, h, n_steps, n_rej


@numba.njit(cache=True)
def _rk45_affine(A, b, y0, t0, t1, h, atol, rtol, h_max, C, Atab, E):  # pragma: no cover - compiled
    n = y0.size
    y = y0.copy()
    t = t0
    span = t1 - t0
    k = np.empty((7, n))
    k[0] = A @ y + b
    tmp = np.empty(n)
    y_new = np.empty(n)
    n_steps = 0
    n_rej = 0
    for i in range(n):
        if not np.isfinite(k[0, i]):
            return y, t, h, n_steps, n_rej, 2
    while t < t1:
        if h > h_max:
            h = h_max
        if h > t1 - t:
            h = t1 - t
        for s in range(1, 7):
            for i in range(n):
                acc = 0.0
                for j in range(s):
                    acc += Atab[s, j] * k[j, i]
                tmp[i] = y[i] + h * acc
            k[s] = A @ tmp + b
        # stage 7 evaluates at the 5th order solution
        for i in range(n):
            y_new[i] = tmp[i]
        err = 0.0
        ymax = 0.0
        finite = True
        for i in range(n):
            acc = 0.0
            for j in range(7):
                acc += E[j] * k[j, i]
            e = abs(h * acc)
            if not np.isfinite(e) or not np.isfinite(y_new[i]):
                finite = False
            if e > err:
                err = e
            a = abs(y[i])
            if a > ymax:
                ymax = a
            a = abs(y_new[i])
            if a > ymax:
                ymax = a
        if not finite:
            return y, t, h, n_steps, n_rej, 2
        err = err / (atol + rtol * ymax)
        if err <= 1.0:
            if t1 - t - h <= 1e-15 * abs(t1):
                t = t1
            else:
                t = t + h
            for i in range(n):
                y[i] = y_new[i]
            k[0] = k[6]
            n_steps += 1
            if err == 0.0:
                fac = 5.0
            else:
                fac = min(5.0, max(0.2, 0.9 * err**-0.2))
            h *= fac
        else:
            n_rej += 1
            h *= min(0.5, max(0.2, 0.9 * err**-0.2))
        if h < 1e-14 * span and t < t1:
            return y, t, h, n_steps, n_rej, 1
    return y, t, h, n_steps, n_rej, 0


def rk45_integrate(
    f: RHS,
    y0,
    t_span: tuple[float, float],
    abs_tol: float = 1e-12,
    rel_tol: float = 1e-10,
    h_init: float = 1e-3,
    h_max: float = np.inf,
) -> IntegrationResult:
    """Integrate ``dy/dt = f(t, y)`` over ``t_span`` with adaptive DOPRI5.

    Accepts a step when the embedded error estimate is at most
    ``abs_tol + rel_tol * ||y||_inf``; steps never exceed ``h_max``.
    """
    t0, t1 = map(float, t_span)
    if not t1 > t0:
        raise ValueError("t_span must satisfy t_end > t_start")
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    h = min(float(h_init), t1 - t0)
    if isinstance(f, AffineRHS):
        y, t, h, n, nrej, status = _rk45_affine(f.A, f.b, y0, t0, t1, h, abs_tol, rel_tol, float(h_max), _C, _A, _E)
        if status == _STIFF:
            raise StiffnessError(f"step size {h:.3e} underflow at t={t:.6g}")
        if status == _NONFINITE:
            raise DivergenceError(f"non-finite values at t={t:.6g}")
    else:
        y, t, h, n, nrej = _rk45_python(f, y0, t0, t1, h, abs_tol, rel_tol, h_max)
    return IntegrationResult(y=y, t=t, h_last=h, n_steps=n, n_rejected=nrej)


def _residual(f: RHS, t: float, y: np.ndarray) -> float:
    return float(np.max(np.abs(f(t, y))))


def _rounding_floor(f: RHS, y: np.ndarray) -> float:
    """Smallest residual resolvable in double precision for an affine flow."""
    if not isinstance(f, AffineRHS):
        return 0.0
    scale = np.abs(f.A) @ np.abs(y) + np.abs(f.b)
    return float(len(y) * np.finfo(float).eps * np.max(scale))


_MAX_STEP_CAPS = 4


def _cap_resolvable(h: float, res: float, y: np.ndarray) -> bool:
    # a capped step must still move the state by more than a few ulps
    return h * res > 4 * np.spacing(np.max(np.abs(y)))


def evolve_to_steady(f: RHS, y0, cfg: SteadyConfig | None = None) -> SteadyResult:
    """Integrate in blocks of ``cfg.t_block`` until ``||f(y)||_inf <= residual_tol``.

    For affine flows the tolerance is raised to the double-precision
    rounding floor of ``A @ y + b`` when that is larger, and a block that
    moves the state by no more than rounding counts as converged.

    Returns ``converged=False`` when ``max_blocks`` is exhausted. Raises
    :class:`DivergenceError` if the state leaves ``divergence_bound`` and
    `StallError` if the state drifts without the residual improving for
    ``stall_blocks`` consecutive blocks.
    """
    cfg = cfg or SteadyConfig()
    y = np.atleast_1d(np.asarray(y0, dtype=float)).copy()
    t = 0.0
    h = cfg.h_init
    res = _residual(f, t, y)
    history = [res]
    best, since_best = res, 0
    n_steps = n_rej = 0
    blocks = 0
    h_cap, n_caps = np.inf, 0
    tol = max(cfg.residual_tol, _rounding_floor(f, y))
    while res > tol and blocks < cfg.max_blocks:
        out = rk45_integrate(f, y, (t, t + cfg.t_block), cfg.abs_tol, cfg.rel_tol, h, h_cap)
        step = float(np.max(np.abs(out.y - y)))
        y, t = out.y, out.t
        h = max(out.h_last, cfg.h_init)
        n_steps += out.n_steps
        n_rej += out.n_rejected
        blocks += 1
        if np.max(np.abs(y)) > cfg.divergence_bound:
            raise DivergenceError(f"state norm exceeded {cfg.divergence_bound:g} at t={t:.6g}")
        res = _residual(f, t, y)
        tol = max(cfg.residual_tol, _rounding_floor(f, y))
        history.append(res)
        log.debug("block %d t=%.4g residual=%.3e", blocks, t, res)
        if step <= 2 * np.spacing(np.max(np.abs(y))):
            # a floating-point fixed point of the integrator: nothing left to resolve
            tol = max(tol, res)
            break
        if res < 0.99 * best:
            best, since_best = res, 0
        elif n_caps < _MAX_STEP_CAPS and _cap_resolvable(cfg.t_block / max(out.n_steps, 1) * 0.5, res, y):
            # steps riding the stability boundary leave an error floor; halve them
            h_cap = min(h_cap, cfg.t_block / max(out.n_steps, 1)) * 0.5
            h = min(h, h_cap)
            n_caps += 1
        else:
            since_best += 1
            if since_best >= cfg.stall_blocks:
                if step > 0.5 * res * cfg.t_block:
                    # still moving at the speed the residual implies: linear drift
                    raise StallError(
                        f"residual stalled at {res:.3e} for {since_best} blocks (t={t:.6g}); "
                        "the flow has a neutral direction"
                    )
                # parked at the rounding floor above residual_tol
                break
    converged = res <= tol
    if not converged:
        log.info("steady state not reached after %d blocks (residual %.3e)", blocks, res)
    return SteadyResult(
        state=y,
        residual=res,
        elapsed_time=t,
        blocks_used=blocks,
        converged=converged,
        n_steps=n_steps,
        n_rejected=n_rej,
        history=history,
    )
