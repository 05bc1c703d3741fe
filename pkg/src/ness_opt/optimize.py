"""Adam-based inverse design with constrained parameter transforms and restarts."""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import dual as ad
from .implicit import SteadyStateError, observable_gradient, steady_state
from .linalg import NonUniqueSteadyStateError
from .models.redfield import (
    GAMMA_MAX,
    HEAT_PARAMS,
    RECT_PARAMS,
    HeatModel,
    HeatModelParams,
)
from .models.vsystem import V_PARAMS, VModelParams, VSystemModel
from .ode import IntegrationError

__all__ = [
    "TransformSpec",
    "AdamState",
    "OptimizationRun",
    "Objective",
    "HeatCurrentObjective",
    "RectificationObjective",
    "EfficiencyObjective",
    "make_objective",
    "adam_step",
    "optimize",
    "optimize_restarts",
    "classify_model",
    "restart_rng",
]

log = logging.getLogger(__name__)

STOP_REASONS = ("target_reached", "max_iters", "stalled", "failed")


# -- transforms ---------------------------------------------------------------


@dataclass(frozen=True)
class TransformSpec:
    """Per-parameter maps from unconstrained values to physical ones.

    ``kinds[i]`` is ``"exp"``, ``"sigmoid_scaled"``, ``"softmax_pair"`` or
    ``"identity"``. ``maxima`` gives the cap of each scaled sigmoid and
    ``pairs`` the index pairs whose softmax lands on the 2-simplex.
    """

    names: tuple[str, ...]
    kinds: tuple[str, ...]
    maxima: dict = field(default_factory=dict)
    pairs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if len(self.names) != len(self.kinds):
            raise ValueError("every parameter needs a transform")
        known = {"exp", "sigmoid_scaled", "softmax_pair", "identity"}
        bad = set(self.kinds) - known
        if bad:
            raise ValueError(f"unknown transforms {sorted(bad)}")
        paired = sorted(i for p in self.pairs for i in p)
        soft = [i for i, k in enumerate(self.kinds) if k == "softmax_pair"]
        if paired != soft:
            raise ValueError("softmax_pair parameters must be listed in pairs exactly once")
        for i, k in enumerate(self.kinds):
            if k == "sigmoid_scaled" and self.names[i] not in self.maxima:
                raise ValueError(f"no maximum given for {self.names[i]}")

    def to_physical(self, u):
        """Physical parameters; accepts duals."""
        out: list = [None] * len(self.names)
        for i, kind in enumerate(self.kinds):
            if kind == "exp":
                out[i] = ad.exp(u[i])
            elif kind == "sigmoid_scaled":
                out[i] = self.maxima[self.names[i]] * ad.sigmoid(u[i])
            elif kind == "identity":
                out[i] = u[i]
        for i, j in self.pairs:
            out[i], out[j] = ad.softmax_pair(u[i], u[j])
        return ad.stack(out)

    def to_unconstrained(self, phys) -> np.ndarray:
        phys = np.asarray(phys, dtype=float)
        u = np.empty_like(phys)
        for i, kind in enumerate(self.kinds):
            if kind == "exp":
                u[i] = np.log(phys[i])
            elif kind == "sigmoid_scaled":
                x = phys[i] / self.maxima[self.names[i]]
                u[i] = np.log(x) - np.log1p(-x)
            elif kind == "identity":
                u[i] = phys[i]
        for i, j in self.pairs:
            u[i], u[j] = np.log(phys[i]), np.log(phys[j])
        return u

    def jacobian(self, u) -> np.ndarray:
        return ad.jacobian_forward(self.to_physical, u)

    def pullback_gradient(self, u, grad_phys) -> np.ndarray:
        """Gradient with respect to ``u`` from one in physical coordinates."""
        return self.jacobian(u).T @ np.asarray(grad_phys, dtype=float)


# -- Adam ---------------------------------------------------------------------


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step_count: int = 0
    lr: float = 0.02
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, n: int, **kw) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), **kw)


def adam_step(params, state: AdamState, grad, direction: str = "minimize") -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update; ``maximize`` ascends."""
    grad = np.asarray(grad, dtype=float)
    if not np.all(np.isfinite(grad)):
        raise FloatingPointError("non-finite gradient passed to Adam")
    if direction not in ("minimize", "maximize"):
        raise ValueError("direction must be 'minimize' or 'maximize'")
    g = -grad if direction == "maximize" else grad
    t = state.step_count + 1
    m = state.beta1 * state.m + (1 - state.beta1) * g
    v = state.beta2 * state.v + (1 - state.beta2) * g * g
    m_hat = m / (1 - state.beta1**t)
    v_hat = v / (1 - state.beta2**t)
    new = np.asarray(params, dtype=float) - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return new, replace(state, m=m, v=v, step_count=t)


# -- objectives -----------------------------------------------------------------


def restart_rng(master_seed: int, index: int) -> np.random.Generator:
    """Private stream for restart ``index``; independent of execution order."""
    return np.random.default_rng([int(master_seed), int(index)])


class Objective(ABC):
    """Scalar steady-state figure of merit with transforms and initial sampling."""

    name: str
    direction = "maximize"
    default_target: float | None = None
    default_lr = 0.02

    def __init__(self, backend: str = "direct"):
        self.backend = backend

    @property
    @abstractmethod
    def spec(self) -> TransformSpec: ...

    @abstractmethod
    def value_and_grad(self, phys: np.ndarray) -> tuple[float, np.ndarray]:
        """Objective and its gradient in physical coordinates."""

    @abstractmethod
    def value(self, phys: np.ndarray) -> float: ...

    @abstractmethod
    def sample_init(self, rng: np.random.Generator) -> np.ndarray:
        """Unconstrained starting point."""

    def summary_fields(self, phys: np.ndarray) -> dict:
        return {}


class HeatCurrentObjective(Objective):
    """Hot-bath heat current over all nine heat-model parameters."""

    name = "J_H"
    default_target = None

    def __init__(self, base: HeatModelParams | None = None, backend: str = "direct", gamma_init=(1e-5, 1e-4)):
        super().__init__(backend)
        self.model = HeatModel(base or HeatModelParams(), HEAT_PARAMS)
        self.gamma_init = gamma_init
        self._spec = TransformSpec(
            HEAT_PARAMS,
            ("exp", "exp", "sigmoid_scaled", "sigmoid_scaled", "sigmoid_scaled") + ("softmax_pair",) * 4,
            {f"gamma_{b}": GAMMA_MAX for b in "HCD"},
            ((5, 6), (7, 8)),
        )

    @property
    def spec(self) -> TransformSpec:
        return self._spec

    def value(self, phys):
        return float(self.model.observable("J_H")(steady_state(self.model, phys, self.backend).state, phys))

    def value_and_grad(self, phys):
        rep = observable_gradient(self.model, phys, "J_H", self.backend)
        return rep.value, rep.gradient

    def sample_init(self, rng):
        lo, hi = np.log(0.05), np.log(1.0)
        ln_theta, ln_j = rng.uniform(lo, hi, size=2)
        gam = rng.uniform(*self.gamma_init, size=3)
        logits = rng.uniform(-2.0, 2.0, size=4)
        x = gam / GAMMA_MAX
        return np.concatenate([[ln_theta, ln_j], np.log(x) - np.log1p(-x), logits])

    def summary_fields(self, phys):
        a, b = (phys[5], phys[6]), (phys[7], phys[8])
        return {"classification": classify_model(a, b)}


class RectificationObjective(Objective):
    """Rectification ratio with couplings pinned to a0 = b1 = 1."""

    name = "R"
    default_target = 0.95

    def __init__(self, base: HeatModelParams | None = None, backend: str = "direct", gamma_init=(1e-5, 1e-4)):
        super().__init__(backend)
        base = replace(base or HeatModelParams(), a0=1.0, a1=0.0, b0=0.0, b1=1.0)
        self.model = HeatModel(base, RECT_PARAMS)
        self.swapped = HeatModel(base.swapped_temperatures(), RECT_PARAMS)
        self.gamma_init = gamma_init
        self._spec = TransformSpec(
            RECT_PARAMS,
            ("exp", "exp", "sigmoid_scaled", "sigmoid_scaled", "sigmoid_scaled"),
            {f"gamma_{b}": GAMMA_MAX for b in "HCD"},
        )

    @property
    def spec(self) -> TransformSpec:
        return self._spec

    @staticmethod
    def _ratio(j, js):
        return (ad.absolute(j) - ad.absolute(js)) / (ad.absolute(j) + ad.absolute(js))

    def value(self, phys):
        g = self.model.observable("J_H")
        j = g(steady_state(self.model, phys, self.backend).state, phys)
        js = self.swapped.observable("J_H")(steady_state(self.swapped, phys, self.backend).state, phys)
        return float(self._ratio(j, js))

    def value_and_grad(self, phys):
        r1 = observable_gradient(self.model, phys, "J_H", self.backend)
        r2 = observable_gradient(self.swapped, phys, "J_H", self.backend)
        jac = ad.jacobian_forward(lambda x: ad.stack([self._ratio(x[0], x[1])]), [r1.value, r2.value])[0]
        return float(self._ratio(r1.value, r2.value)), jac[0] * r1.gradient + jac[1] * r2.gradient

    def sample_init(self, rng):
        lo, hi = np.log(0.05), np.log(1.0)
        ln_theta, ln_j = rng.uniform(lo, hi, size=2)
        x = rng.uniform(*self.gamma_init, size=3) / GAMMA_MAX
        return np.concatenate([[ln_theta, ln_j], np.log(x) - np.log1p(-x)])


class EfficiencyObjective(Objective):
    """V-system trapping efficiency over (Gamma, gamma_d [Hz], eps_gap, J)."""

    name = "eta_loc"
    default_target = 0.99
    default_lr = 0.1
    # log-uniform initial ranges
    init_ranges = {
        "Gamma": (1e-4, 1e-1),
        "gamma_d": (1e9, 1e13),
        "eps_gap": (0.1, 5.0),
        "J": (0.01, 5.0),
    }

    def __init__(
        self,
        base: VModelParams | None = None,
        backend: str = "direct",
        reject_above: float = 0.2,
        max_draws: int = 10_000,
    ):
        super().__init__(backend)
        self.model = VSystemModel(base or VModelParams(), V_PARAMS)
        self.reject_above = reject_above
        self.max_draws = max_draws
        self._spec = TransformSpec(V_PARAMS, ("exp",) * 4)

    @property
    def spec(self) -> TransformSpec:
        return self._spec

    def value(self, phys):
        return float(self.model.observable("eta_loc")(steady_state(self.model, phys, self.backend).state, phys))

    def value_and_grad(self, phys):
        rep = observable_gradient(self.model, phys, "eta_loc", self.backend)
        return rep.value, rep.gradient

    def sample_init(self, rng):
        lo = np.log([self.init_ranges[n][0] for n in V_PARAMS])
        hi = np.log([self.init_ranges[n][1] for n in V_PARAMS])
        for _ in range(self.max_draws):
            u = rng.uniform(lo, hi)
            # rejection keeps starts in the inefficient region
            if self.value(np.exp(u)) <= self.reject_above:
                return u
        raise RuntimeError(f"no initial point with eta_loc <= {self.reject_above} in {self.max_draws} draws")

    def summary_fields(self, phys):
        return {"ln_Gamma": float(np.log(phys[0])), "ln_gamma_d": float(np.log(phys[1]))}


def make_objective(name: str, backend: str = "direct", **kw) -> Objective:
    table = {"J_H": HeatCurrentObjective, "R": RectificationObjective, "eta_loc": EfficiencyObjective}
    if name not in table:
        raise ValueError(f"unknown objective {name!r}; choose from {sorted(table)}")
    return table[name](backend=backend, **kw)


# -- runs -----------------------------------------------------------------------


@dataclass
class OptimizationRun:
    seed: int
    objective: str
    param_names: tuple[str, ...]
    unconstrained: list[np.ndarray] = field(default_factory=list)
    physical: list[np.ndarray] = field(default_factory=list)
    values: list[float] = field(default_factory=list)
    grad_norms: list[float] = field(default_factory=list)
    stop_reason: str = "max_iters"
    error: str | None = None

    @property
    def iterations(self) -> int:
        return len(self.values)

    @property
    def succeeded(self) -> bool:
        return self.error is None and self.iterations > 0

    @property
    def final_physical(self) -> np.ndarray:
        return self.physical[-1]

    @property
    def final_value(self) -> float:
        return self.values[-1]

    @property
    def best_value(self) -> float:
        return max(self.values) if self.values else float("nan")


def optimize(
    objective: Objective,
    seed: int,
    max_iters: int = 200,
    target: float | None = None,
    lr: float | None = None,
    init: np.ndarray | None = None,
    master_seed: int = 0,
    grad_tol: float = 1e-12,
) -> OptimizationRun:
    """Adam on the unconstrained parameters of ``objective``.

    Each iteration evaluates the objective and its exact gradient at the
    current point, logs them, and then updates. Stops on reaching ``target``,
    after ``max_iters`` evaluations, or when the gradient norm drops below
    ``grad_tol``. Steady-state failures end the run with ``stop_reason``
    ``"failed"``.
    """
    spec = objective.spec
    target = objective.default_target if target is None else target
    state = AdamState.zeros(len(spec.names), lr=objective.default_lr if lr is None else lr)
    run = OptimizationRun(seed=seed, objective=objective.name, param_names=spec.names)
    try:
        u = np.asarray(init, dtype=float) if init is not None else objective.sample_init(restart_rng(master_seed, seed))
        for it in range(max_iters):
            phys = np.asarray(spec.to_physical(u), dtype=float)
            val, g_phys = objective.value_and_grad(phys)
            g_u = spec.pullback_gradient(u, g_phys)
            gnorm = float(np.linalg.norm(g_u))
            run.unconstrained.append(u.copy())
            run.physical.append(phys)
            run.values.append(float(val))
            run.grad_norms.append(gnorm)
            log.debug("seed %d iter %d %s=%.6g |g|=%.3e", seed, it, objective.name, val, gnorm)
            if target is not None and _reached(val, target, objective.direction):
                run.stop_reason = "target_reached"
                break
            if gnorm < grad_tol:
                run.stop_reason = "stalled"
                break
            u, state = adam_step(u, state, g_u, objective.direction)
        else:
            run.stop_reason = "max_iters"
    except (SteadyStateError, NonUniqueSteadyStateError, IntegrationError, FloatingPointError, RuntimeError) as exc:
        run.stop_reason = "failed"
        run.error = f"{type(exc).__name__}: {exc}"
        log.info("seed %d failed: %s", seed, run.error)
    return run


def _reached(val: float, target: float, direction: str) -> bool:
    return val > target if direction == "maximize" else val < target


def _run_one(args):
    name, backend, obj_kw, seed, kw = args
    return optimize(make_objective(name, backend, **obj_kw), seed, **kw)


def optimize_restarts(
    objective_name: str,
    seeds: Sequence[int],
    parallel: int = 1,
    backend: str = "direct",
    objective_kwargs: dict | None = None,
    **kw,
) -> list[OptimizationRun]:
    """Independent restarts; results are identical for any ``parallel``."""
    jobs = [(objective_name, backend, objective_kwargs or {}, int(s), kw) for s in seeds]
    if parallel <= 1 or len(jobs) <= 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=parallel) as pool:
        return list(pool.map(_run_one, jobs))


def classify_model(a, b, tol: float = 0.05) -> str:
    """Coupling topology: hot and cold baths on different sites (A) or the same site (B)."""
    a0, a1 = a
    b0, b1 = b
    hi = 1 - tol
    if (a0 > hi and b1 > hi) or (a1 > hi and b0 > hi):
        return "ModelA"
    if (a0 > hi and b0 > hi) or (a1 > hi and b1 > hi):
        return "ModelB"
    return "Mixed"
