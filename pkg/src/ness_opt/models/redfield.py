"""Three-level quantum heat-transfer model under Markovian Redfield theory.

Levels are ``|g>, |1>, |2>`` with ``eps_g = 0``. Two sites exchange an
excitation through hopping ``J``; a hot (H) and a cold (C) bath couple the
ground state to the sites and a third bath (D) couples the sites to each
other. Density states live in the site basis; the Redfield tensor is built in
the Hamiltonian eigenbasis and rotated once.

Every builder here accepts dual numbers for the parameters, so the generator
is differentiable end to end, including the 2x2 eigen-decomposition.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import NamedTuple

import numpy as np

from .. import dual as ad
from ..linalg import (
    RealSuperOp,
    complex_superop_to_real,
    eig_herm_2x2,
    steady_state_direct,
    trace_functional,
)
from ..ode import SteadyConfig
from .base import LiouvillianModel

__all__ = [
    "BATHS",
    "HEAT_PARAMS",
    "RECT_PARAMS",
    "GAMMA_MAX",
    "HeatModelParams",
    "Eigensystem",
    "HeatModel",
    "upsilon",
    "build_hamiltonian",
    "redfield_tensor",
    "bath_superops",
    "generator_matrix",
    "energy_weights",
    "liouvillian",
    "heat_current",
    "rectification",
    "UndefinedRectificationError",
]

BATHS = ("H", "C", "D")
GAMMA_MAX = 0.0025
HEAT_PARAMS = ("theta", "J", "gamma_H", "gamma_C", "gamma_D", "a0", "a1", "b0", "b1")
RECT_PARAMS = ("theta", "J", "gamma_H", "gamma_C", "gamma_D")
_M = 3


class UndefinedRectificationError(ZeroDivisionError):
    """Both heat currents vanish, so the rectification ratio is undefined."""


@dataclass(frozen=True)
class HeatModelParams:
    """Physical parameters; defaults are a high-current optimized device."""

    theta1: float = 0.3895
    theta2: float = 0.3895
    J: float = 0.0126
    a0: float = 0.9992
    a1: float = 0.0008
    b0: float = 0.9999
    b1: float = 0.0001
    gamma_H: float = 0.0025
    gamma_C: float = 0.0025
    gamma_D: float = 0.0001
    T_H: float = 0.15
    T_C: float = 0.1
    T_D: float = 0.12
    omega_c: float = 25.0
    rate_factor: float = 2.0

    def __post_init__(self):
        v = {f.name: ad.value_of(getattr(self, f.name)) for f in fields(self)}
        for name in ("a0", "a1", "b0", "b1"):
            if not 0 <= v[name] <= 1 + 1e-4:
                raise ValueError(f"{name}={v[name]} outside [0, 1]")
        for name in ("gamma_H", "gamma_C", "gamma_D"):
            # small slack so finite-difference probes at the cap stay valid
            if not 0 <= v[name] <= GAMMA_MAX * 1.01:
                raise ValueError(f"{name}={v[name]} outside [0, {GAMMA_MAX}]")
        for name in ("T_H", "T_C", "T_D", "omega_c", "rate_factor"):
            if not v[name] > 0:
                raise ValueError(f"{name} must be positive")
        if not v["J"] >= 0:
            raise ValueError("J must be non-negative")

    @property
    def theta(self):
        return self.theta1

    def gamma(self, bath: str):
        return getattr(self, f"gamma_{bath}")

    def temperature(self, bath: str) -> float:
        return getattr(self, f"T_{bath}")

    def get(self, name: str):
        return self.theta1 if name == "theta" else getattr(self, name)

    def with_values(self, names, values) -> "HeatModelParams":
        """Copy with ``names`` set to ``values``; ``theta`` sets both sites."""
        upd = {}
        for name, val in zip(names, values):
            if name == "theta":
                upd["theta1"] = upd["theta2"] = val
            else:
                upd[name] = val
        return replace(self, **upd)

    def swapped_temperatures(self) -> "HeatModelParams":
        return replace(self, T_H=self.T_C, T_C=self.T_H)

    def as_dict(self) -> dict[str, float]:
        return {f.name: float(ad.value_of(getattr(self, f.name))) for f in fields(self)}


class Eigensystem(NamedTuple):
    energies: object  # (eps_g, eps_minus, eps_plus)
    theta_mix: object
    U: object  # columns are eigenvectors in the site basis
    S: dict  # bath -> coupling operator in the eigenbasis
    H: object  # site-basis Hamiltonian


def upsilon(omega, gamma, T: float, omega_c: float):
    """Bath correlation rate for an Ohmic spectral density.

    Equals ``G(w)(n(w)+1)/2`` for ``w > 0`` and ``G(|w|) n(|w|)/2`` for
    ``w < 0`` with ``G(w) = gamma w exp(-w/omega_c)``, written in the single
    form ``gamma T exp(-|w|/omega_c) y/(e^y - 1) / 2`` with ``y = -w/T``, which
    is smooth through ``w = 0`` where it equals ``gamma T / 2``.
    """
    if not T > 0 or not omega_c > 0:
        raise ValueError("temperature and cutoff must be positive")
    return 0.5 * gamma * T * ad.exp(-ad.absolute(omega) / omega_c) * ad.x_over_expm1(-omega / T)


def _coupling_ops(params: HeatModelParams) -> dict:
    def sym(pairs):
        rows = [[0.0] * _M for _ in range(_M)]
        for (i, j), val in pairs:
            rows[i][j] = rows[j][i] = val
        return ad.stack([ad.stack(r) for r in rows])

    return {
        "H": sym([((0, 1), params.a0), ((0, 2), params.a1)]),
        "C": sym([((0, 1), params.b0), ((0, 2), params.b1)]),
        "D": sym([((1, 2), 1.0)]),
    }


def build_hamiltonian(params: HeatModelParams) -> Eigensystem:
    """Site Hamiltonian, its eigenbasis and the bath operators in that basis."""
    e_minus, e_plus, th = eig_herm_2x2(params.theta1, params.theta2, params.J)
    c, s = ad.cos(th), ad.sin(th)
    zero = 0.0 * c
    one = 1.0 + zero
    # columns: |g>, |e->, |e+>
    U = ad.stack(
        [
            ad.stack([one, zero, zero]),
            ad.stack([zero, -s, c]),
            ad.stack([zero, c, s]),
        ]
    )
    H = ad.stack(
        [
            ad.stack([zero, zero, zero]),
            ad.stack([zero, params.theta1 + zero, params.J + zero]),
            ad.stack([zero, params.J + zero, params.theta2 + zero]),
        ]
    )
    energies = ad.stack([zero, e_minus, e_plus])
    S = {k: U.T @ op @ U for k, op in _coupling_ops(params).items()}
    return Eigensystem(energies, th, U, S, H)


def redfield_tensor(bath: str, eig: Eigensystem, params: HeatModelParams):
    """Real tensor ``R[mu, nu, kappa, lambda]`` of one bath in the eigenbasis.

    ``Gamma+_{lnmk} = S_ln S_mk Y(w_km)`` and ``Gamma-_{lnmk} = S_ln S_mk Y(w_ln)``;
    this frequency assignment makes a single bath relax the system to its
    Gibbs state.
    """
    e = eig.energies
    omega = ad.stack([e - e[i] for i in range(_M)]).T  # omega[i, j] = e_i - e_j
    Y = params.rate_factor * upsilon(omega, params.gamma(bath), params.temperature(bath), params.omega_c)
    S = eig.S[bath]
    gp = ad.einsum("ln,mk,km->lnmk", S, S, Y)
    gm = ad.einsum("ln,mk,ln->lnmk", S, S, Y)
    delta = np.eye(_M)
    return (
        ad.einsum("lnmk->mnkl", gp)
        + ad.einsum("lnmk->mnkl", gm)
        - ad.einsum("nl,mjjk->mnkl", delta, gp)
        - ad.einsum("mk,ljjn->mnkl", delta, gm)
    )


def _to_site(R, U):
    """Rotate an eigenbasis superoperator (row-major vec) to the site basis."""
    K = ad.kron(U, U)
    return K @ R.reshape(_M * _M, _M * _M) @ K.T


def bath_superops(params: HeatModelParams):
    """Coordinate matrices ``(unitary, {bath: dissipator})`` in the site basis."""
    eig = build_hamiltonian(params)
    eye = np.eye(_M)
    comm = ad.kron(eig.H, eye) - ad.kron(eye, eig.H)
    zeros = np.zeros((_M * _M, _M * _M))
    unitary = complex_superop_to_real(zeros, -comm, _M)
    diss = {
        b: complex_superop_to_real(_to_site(redfield_tensor(b, eig, params), eig.U), zeros, _M) for b in BATHS
    }
    return unitary, diss, eig


def generator_matrix(params: HeatModelParams):
    unitary, diss, _ = bath_superops(params)
    return unitary + diss["H"] + diss["C"] + diss["D"]


def liouvillian(params: HeatModelParams) -> RealSuperOp:
    """Real 9x9 generator with trace functional and stationary state attached."""
    A = np.asarray(generator_matrix(params), dtype=float)
    op = RealSuperOp(A, trace_functional(_M))
    return op.with_right_null(steady_state_direct(op))


def energy_weights(H) -> object:
    """Coordinates ``w`` with ``w @ x == Tr[H X]`` for Hermitian ``X``, real symmetric ``H``."""
    return ad.stack([H[0, 0], H[1, 1], H[2, 2], 2.0 * H[0, 1], 2.0 * H[0, 2], 2.0 * H[1, 2], 0.0, 0.0, 0.0])


def heat_current(bath: str, rho_ss, params: HeatModelParams):
    """``Tr[H_S D^bath rho]``; positive when energy flows into the system."""
    _, diss, eig = bath_superops(params)
    return energy_weights(eig.H) @ (diss[bath] @ np.asarray(rho_ss, dtype=float))


def rectification(params: HeatModelParams) -> float:
    """Normalized current asymmetry under exchange of the H and C temperatures.

    Couplings are pinned to ``a0 = b1 = 1, a1 = b0 = 0`` (hot bath on site 1,
    cold bath on site 2).
    """
    p = replace(params, a0=1.0, a1=0.0, b0=0.0, b1=1.0)
    j = heat_current("H", liouvillian(p).right_null, p)
    ps = p.swapped_temperatures()
    js = heat_current("H", liouvillian(ps).right_null, ps)
    den = abs(j) + abs(js)
    if den == 0:
        raise UndefinedRectificationError("both heat currents vanish")
    return float((abs(j) - abs(js)) / den)


class HeatModel(LiouvillianModel):
    """Redfield heat-transfer model with selectable active parameters."""

    name = "heat"
    has_gauge = True

    def __init__(self, params: HeatModelParams | None = None, active: tuple[str, ...] = HEAT_PARAMS):
        super().__init__(active)
        self.params = params or HeatModelParams()
        valid = {"theta"} | {f.name for f in fields(HeatModelParams)}
        bad = [n for n in active if n not in valid]
        if bad:
            raise ValueError(f"unknown heat-model parameters {bad}")

    @property
    def state_size(self) -> int:
        return _M * _M

    def params_at(self, theta) -> HeatModelParams:
        return self.params.with_values(self.param_names, [theta[i] for i in range(self.n_params)])

    def theta0(self) -> np.ndarray:
        return np.array([float(self.params.get(n)) for n in self.param_names])

    def generator(self, theta):
        return generator_matrix(self.params_at(theta)), None

    def left_null(self) -> np.ndarray:
        return trace_functional(_M)

    def initial_state(self) -> np.ndarray:
        rho = np.zeros(_M * _M)
        rho[:_M] = 1.0 / _M
        return rho

    def steady_config(self, theta=None) -> SteadyConfig:
        return SteadyConfig(abs_tol=1e-15, rel_tol=1e-14, residual_tol=1e-14, t_block=1e4)

    def observables(self):
        def current(bath):
            def g(rho, theta):
                p = self.params_at(theta)
                _, diss, eig = bath_superops(p)
                return energy_weights(eig.H) @ (diss[bath] @ rho)

            return g

        def trace(rho, theta):
            return rho[0] + rho[1] + rho[2]

        return {"J_H": current("H"), "J_C": current("C"), "J_D": current("D"), "trace": trace}

    def physical(self, theta) -> dict[str, float]:
        p = self.params_at(theta)
        out = {"theta1": p.theta1, "theta2": p.theta2, "J": p.J}
        out.update({n: getattr(p, n) for n in ("gamma_H", "gamma_C", "gamma_D", "a0", "a1", "b0", "b1")})
        return {k: float(ad.value_of(v)) for k, v in out.items()}
