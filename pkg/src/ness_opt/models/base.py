"""Abstract parameterized master equation with an affine generator."""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Callable

import numpy as np

from .. import dual as ad
from ..linalg import RealSuperOp
from ..ode import AffineRHS, SteadyConfig

__all__ = ["LiouvillianModel", "Observable"]

# g(rho, theta) -> scalar; must accept duals for either argument
Observable = Callable[[object, object], object]


class LiouvillianModel(ABC):
    """Dynamical system ``d rho/dt = A(theta) rho + b(theta)``.

    Subclasses implement :meth:`generator` with dual-number-compatible code so
    that ``dF/dtheta`` is available exactly by forward differentiation.
    ``param_names`` lists the active parameters in the order of ``theta``.
    """

    name: str = "model"
    #: whether A is singular with a trace functional as left null vector
    has_gauge: bool = False

    def __init__(self, param_names: tuple[str, ...]):
        self.param_names = tuple(param_names)

    @property
    def n_params(self) -> int:
        return len(self.param_names)

    @property
    @abstractmethod
    def state_size(self) -> int: ...

    @abstractmethod
    def theta0(self) -> np.ndarray:
        """Active parameter values of the model's base record."""

    @abstractmethod
    def generator(self, theta):
        """Return ``(A, b)``; ``b`` may be ``None`` for linear generators."""

    @abstractmethod
    def initial_state(self) -> np.ndarray: ...

    @abstractmethod
    def observables(self) -> dict[str, Observable]: ...

    @abstractmethod
    def physical(self, theta) -> dict[str, float]:
        """Named physical parameters at ``theta``, for reports."""

    def steady_config(self, theta=None) -> SteadyConfig:
        return SteadyConfig()

    def left_null(self) -> np.ndarray | None:
        return None

    # -- derived helpers ---------------------------------------------------
    def _check(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters {self.param_names}, got shape {theta.shape}")
        return theta

    def matrices(self, theta) -> tuple[np.ndarray, np.ndarray]:
        A, b = self.generator(self._check(theta))
        b = np.zeros(A.shape[0]) if b is None else np.asarray(b, dtype=float)
        return np.asarray(A, dtype=float), b

    def rhs(self, theta) -> AffineRHS:
        return AffineRHS(*self.matrices(theta))

    def superop(self, theta, right_null=None) -> RealSuperOp:
        A, _ = self.matrices(theta)
        return RealSuperOp(A, self.left_null(), right_null)

    def residual(self, rho, theta) -> np.ndarray:
        A, b = self.matrices(theta)
        return A @ np.asarray(rho, dtype=float) + b

    def rhs_value(self, rho, theta):
        """``F(rho; theta)`` with ``theta`` possibly dual."""
        A, b = self.generator(theta)
        out = A @ np.asarray(rho, dtype=float)
        return out if b is None else out + b

    def dF_dtheta(self, rho, theta) -> np.ndarray:
        """Partial derivative of ``F`` in ``theta`` at fixed ``rho``; shape (n, d)."""
        return ad.jacobian_forward(lambda th: self.rhs_value(rho, th), self._check(theta))

    def observable(self, name: str) -> Observable:
        obs = self.observables()
        if name not in obs:
            raise KeyError(f"unknown observable {name!r} for {self.name}; choose from {sorted(obs)}")
        return obs[name]
