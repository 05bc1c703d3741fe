"""V-system energy transfer under incoherent pumping with a reaction-center trap.

The reduced state is ``y = (p_plus, p_minus, re_coh, im_coh)``: the two
exciton populations and the real/imaginary parts of the coherence
``rho_{e+ e-}``. The ground population is closed as
``rho_gg = 1 - p_plus - p_minus``, so the dynamics are affine,
``dy/dt = A y + b``, with a nonsingular ``A``.

Site 2 (the one adjacent to the reaction center) lies ``eps_gap`` above
site 1. With ``tan(2 theta) = 2 J / eps_gap`` the excitons are
``|e+> = sin(theta)|1> + cos(theta)|2>`` and
``|e-> = cos(theta)|1> - sin(theta)|2>``. Rates are in 1/ps except
``gamma_d``, which is given in Hz.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

from .. import dual as ad
from ..ode import SteadyConfig
from .base import LiouvillianModel

__all__ = [
    "V_PARAMS",
    "HZ_TO_INV_PS",
    "VModelParams",
    "VState",
    "VSystemModel",
    "DegenerateMixingError",
    "mixing",
    "vsystem_generator",
    "vsystem_rhs",
    "site2_population",
    "efficiency",
    "steady_state_affine",
    "pump_sensitivity",
]

V_PARAMS = ("Gamma", "gamma_d", "eps_gap", "J")
HZ_TO_INV_PS = 1e-12


class DegenerateMixingError(ValueError):
    """Mixing angle undefined for zero gap and zero hopping."""


@dataclass(frozen=True)
class VModelParams:
    """Physical parameters; defaults are the optimized efficient device."""

    eps_gap: float = 1.3
    J: float = 0.12
    gamma_d: float = 3.53e11  # Hz
    Gamma: float = 7.2e-5
    Gamma_RC: float = 0.5
    r: float = 6.34e-10

    def __post_init__(self):
        for f in fields(self):
            if not ad.value_of(getattr(self, f.name)) >= 0:
                raise ValueError(f"{f.name} must be non-negative")

    @property
    def gamma_d_ps(self):
        return self.gamma_d * HZ_TO_INV_PS

    def with_values(self, names, values) -> "VModelParams":
        return replace(self, **dict(zip(names, values)))

    def as_dict(self) -> dict[str, float]:
        return {f.name: float(ad.value_of(getattr(self, f.name))) for f in fields(self)}


@dataclass(frozen=True)
class VState:
    p_plus: float
    p_minus: float
    re_coh: float
    im_coh: float

    @property
    def rho_gg(self) -> float:
        return 1.0 - self.p_plus - self.p_minus

    def as_array(self) -> np.ndarray:
        return np.array([self.p_plus, self.p_minus, self.re_coh, self.im_coh])

    @classmethod
    def from_array(cls, y) -> "VState":
        return cls(*map(float, y))


def mixing(params: VModelParams):
    """Mixing angle ``theta = atan2(2J, gap)/2`` and exciton splitting ``sqrt(gap^2 + 4J^2)``."""
    if ad.value_of(params.eps_gap) == 0 and ad.value_of(params.J) == 0:
        raise DegenerateMixingError("mixing angle undefined for eps_gap = J = 0")
    theta = 0.5 * ad.atan2(2.0 * params.J, params.eps_gap)
    delta = ad.hypot(params.eps_gap, 2.0 * params.J)
    return theta, delta


def vsystem_generator(params: VModelParams):
    """``(A, b)`` of the affine reduced master equation."""
    _, delta = mixing(params)
    s2 = 2.0 * params.J / delta
    c2 = params.eps_gap / delta
    cc = 0.5 * (1.0 + c2)  # cos^2 theta
    ss = 0.5 * (1.0 - c2)  # sin^2 theta
    r = params.r
    r_plus, r_minus, r_coh = r * (1.0 - c2), r * (1.0 + c2), r * s2
    G, grc, gd = params.Gamma, params.Gamma_RC, params.gamma_d_ps
    s2sq = s2 * s2
    zero = 0.0 * delta
    rows = [
        [
            -(2 * G + gd * s2sq + 2 * grc * cc) - r_plus,
            gd * s2sq - r_plus,
            grc * s2 - 2 * gd * s2 * c2,
            zero,
        ],
        [
            gd * s2sq - r_minus,
            -(2 * G + gd * s2sq + 2 * grc * ss) - r_minus,
            grc * s2 + 2 * gd * s2 * c2,
            zero,
        ],
        [
            0.5 * grc * s2 - gd * s2 * c2 - r_coh,
            0.5 * grc * s2 + gd * s2 * c2 - r_coh,
            -(2 * G + grc + 2 * gd * (1 - s2sq)),
            delta,
        ],
        [zero, zero, -delta, -(2 * G + 2 * gd + grc)],
    ]
    A = ad.stack([ad.stack([e + zero for e in row]) for row in rows])
    b = ad.stack([r_plus + zero, r_minus + zero, r_coh + zero, zero])
    return A, b


def vsystem_rhs(state, params: VModelParams) -> np.ndarray:
    y = state.as_array() if isinstance(state, VState) else np.asarray(state, dtype=float)
    A, b = vsystem_generator(params)
    return np.asarray(A) @ y + np.asarray(b)


def site2_population(state, params: VModelParams):
    """Population of site 2: ``cos^2 p_plus + sin^2 p_minus - sin(2 theta) re_coh``."""
    y = state.as_array() if isinstance(state, VState) else state
    _, delta = mixing(params)
    c2 = params.eps_gap / delta
    s2 = 2.0 * params.J / delta
    return 0.5 * (1.0 + c2) * y[0] + 0.5 * (1.0 - c2) * y[1] - s2 * y[2]


def efficiency(rho_ss, params: VModelParams):
    """Trapping efficiency ``Gamma_RC * rho_2 / r``."""
    if ad.value_of(params.r) == 0:
        raise ZeroDivisionError("efficiency undefined for zero pumping rate")
    return params.Gamma_RC / params.r * site2_population(rho_ss, params)


def steady_state_affine(params: VModelParams) -> np.ndarray:
    A, b = vsystem_generator(params)
    return np.linalg.solve(np.asarray(A, dtype=float), -np.asarray(b, dtype=float))


class VSystemModel(LiouvillianModel):
    """V-system with selectable active parameters (default ``Gamma, gamma_d, eps_gap, J``)."""

    name = "vsystem"
    has_gauge = False

    def __init__(self, params: VModelParams | None = None, active: tuple[str, ...] = V_PARAMS):
        super().__init__(active)
        self.params = params or VModelParams()
        valid = {f.name for f in fields(VModelParams)}
        bad = [n for n in active if n not in valid]
        if bad:
            raise ValueError(f"unknown V-system parameters {bad}")

    @property
    def state_size(self) -> int:
        return 4

    def params_at(self, theta) -> VModelParams:
        return self.params.with_values(self.param_names, [theta[i] for i in range(self.n_params)])

    def theta0(self) -> np.ndarray:
        return np.array([float(getattr(self.params, n)) for n in self.param_names])

    def generator(self, theta):
        return vsystem_generator(self.params_at(theta))

    def initial_state(self) -> np.ndarray:
        return np.zeros(4)

    def steady_config(self, theta=None) -> SteadyConfig:
        # populations scale with r, so tolerances do too
        r = float(self.params_at(theta).r) if theta is not None else self.params.r
        scale = max(r, 1e-300)
        return SteadyConfig(
            abs_tol=1e-14 * scale, rel_tol=1e-14, residual_tol=1e-13 * scale, t_block=1e4, divergence_bound=1e6
        )

    def observables(self):
        def eta(rho, theta):
            return efficiency(rho, self.params_at(theta))

        def rho2(rho, theta):
            return site2_population(rho, self.params_at(theta))

        def trace(rho, theta):
            # p_plus + p_minus + rho_gg with the closure
            return 1.0 + 0.0 * rho[0]

        return {
            "eta_loc": eta,
            "rho_2": rho2,
            "p_plus": lambda rho, theta: rho[0],
            "p_minus": lambda rho, theta: rho[1],
            "trace": trace,
        }

    def physical(self, theta) -> dict[str, float]:
        return {k: v for k, v in self.params_at(theta).as_dict().items()}


def pump_sensitivity(params: VModelParams, r_grid) -> np.ndarray:
    """Derivatives of the steady state with respect to ``r`` on a grid.

    Returns rows ``(r, dp_plus, dp_minus, dre, dim, dtrace)``.
    """
    from ..implicit import steady_state, steady_state_jacobian_column

    rows = []
    for r in np.asarray(r_grid, dtype=float):
        if not r > 0:
            raise ValueError("pumping rates must be positive")
        model = VSystemModel(replace(params, r=float(r)), active=("r",))
        theta = np.array([r])
        ss = steady_state(model, theta, backend="direct")
        col = steady_state_jacobian_column(model, theta, 0, rho_ss=ss.state)
        # rho_gg = 1 - p_plus - p_minus, so the trace derivative is exactly zero
        dtrace = col[0] + col[1] + (-col[0] - col[1])
        rows.append([r, *col, dtrace])
    return np.array(rows)
