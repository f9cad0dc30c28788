"""Closed-form time evolution for every law in scope.

Density-matrix laws act multiplicatively in momentum space,

    rho(P, P', T) = exp(-i dE T - g(P, P') T) rho(P, P', 0),

with dE = (P^2 - P'^2)/2 and a law-specific decay rate g >= 0: zero for
von Neumann, dE^2 / (2 Lambda) for the stepwise-unitary (Milburn) law,
kappa (f(P) - f(P'))^2 / 2 for a Lindblad operator L = f(p).  Diagonal
elements are exactly constant, so positive-momentum support is preserved.

Wavefunction laws propagate Phi(P) by the free scaled kernel

    Psi(X, T) = eps^(-1/4) (2 pi)^(-1/2) int dP e^{i(PX - P^2 T/2)/sqrt(eps)} Phi(P),

and the Caldirola-Kanai (dissipative) variant is the same propagation with
T replaced by tau(T) = (1 - e^(-2 Gamma T)) / (2 Gamma).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Tuple, Union

import numpy as np

from .errors import ContractViolation
from .numerics import GAUSS_LEGENDRE, QuadratureSpec, gauss_legendre, nodes_for_phase
from .states import MomentumState

LINDBLAD_MOMENTUM = "p"
LINDBLAD_MOMENTUM_SQUARED = "p2"


@dataclass(frozen=True)
class VonNeumann:
    """Unitary free evolution of the density matrix."""


@dataclass(frozen=True)
class Milburn:
    """First-order stepwise-unitary decoherence with rate lambda_inv = 1/Lambda."""

    lambda_inv: float = 0.0

    def __post_init__(self):
        if self.lambda_inv < 0.0:
            raise ContractViolation(f"lambda_inv must be >= 0, got {self.lambda_inv}")


@dataclass(frozen=True)
class LindbladF:
    """Single Lindblad operator L = f(p) with f = p or f = p^2 (dimensionless kappa)."""

    f: str = LINDBLAD_MOMENTUM
    kappa: float = 0.0

    def __post_init__(self):
        if self.f not in (LINDBLAD_MOMENTUM, LINDBLAD_MOMENTUM_SQUARED):
            raise ContractViolation(f"unsupported Lindblad function {self.f!r}")
        if self.kappa < 0.0:
            raise ContractViolation(f"kappa must be >= 0, got {self.kappa}")


@dataclass(frozen=True)
class ScaledFree:
    """Free evolution with scaled Planck constant hbar sqrt(epsilon)."""

    epsilon: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise ContractViolation(f"epsilon must lie in (0, 1], got {self.epsilon}")


@dataclass(frozen=True)
class ScaledCK:
    """Scaled Caldirola-Kanai evolution with dimensionless friction Gamma."""

    epsilon: float = 1.0
    gamma: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise ContractViolation(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if self.gamma < 0.0:
            raise ContractViolation(f"gamma must be >= 0, got {self.gamma}")


DensityMatrixModel = Union[VonNeumann, Milburn, LindbladF]
EvolutionModel = Union[VonNeumann, Milburn, LindbladF, ScaledFree, ScaledCK]


def phase_and_decay(model: DensityMatrixModel, P, Pp) -> Tuple[np.ndarray, np.ndarray]:
    """Rates (dE, g) such that the evolution factor is exp((-i dE - g) T)."""
    P = np.asarray(P, dtype=float)
    Pp = np.asarray(Pp, dtype=float)
    dE = 0.5 * (P**2 - Pp**2)
    if isinstance(model, VonNeumann):
        return dE, np.zeros_like(dE)
    if isinstance(model, Milburn):
        return dE, 0.5 * model.lambda_inv * dE**2
    if isinstance(model, LindbladF):
        if model.f == LINDBLAD_MOMENTUM:
            diff = P - Pp
        else:
            diff = P**2 - Pp**2
        return dE, 0.5 * model.kappa * diff**2
    raise ContractViolation(f"{type(model).__name__} is not a density-matrix law")


def evolution_factor(model: DensityMatrixModel, P, Pp, T: float):
    """Multiplicative factor rho(P, P', T) / rho(P, P', 0).

    Hermitian in (P, P'), of modulus <= 1, and exactly 1 on the diagonal.
    """
    if T < 0.0:
        raise ContractViolation(f"T must be >= 0, got {T}")
    dE, g = phase_and_decay(model, P, Pp)
    out = np.exp((-1j * dE - g) * T)
    if out.ndim == 0:
        return complex(out)
    return out


def ck_tau(T: float, Gamma: float) -> float:
    """Reparametrized time tau(T) = (1 - e^(-2 Gamma T)) / (2 Gamma); tau = T at Gamma = 0."""
    if T < 0.0:
        raise ContractViolation(f"T must be >= 0, got {T}")
    if Gamma < 0.0:
        raise ContractViolation(f"Gamma must be >= 0, got {Gamma}")
    if Gamma == 0.0:
        return T
    return -math.expm1(-2.0 * Gamma * T) / (2.0 * Gamma)


class FreeEvolver:
    """Cached momentum grid for repeated scaled-free wavefunction evaluations.

    One instance amortizes node generation and state evaluation across the
    (X, T) sweeps used by figure scenarios.  Node counts follow the phase
    criterion for the largest |X| and T the instance has been asked for,
    growing (bucketed) on demand.
    """

    def __init__(self, state: MomentumState, epsilon: float, n_nodes: int | None = None):
        if not 0.0 < epsilon <= 1.0:
            raise ContractViolation(f"epsilon must lie in (0, 1], got {epsilon}")
        self.state = state
        self.epsilon = epsilon
        self.sqrt_eps = math.sqrt(epsilon)
        self.lo, self.hi = state.support()
        self._fixed_n = n_nodes
        self._grids: Dict[int, Tuple[np.ndarray, np.ndarray, np.ndarray]] = {}

    def _n_for(self, x_abs: float, t_max: float) -> int:
        if self._fixed_n is not None:
            return self._fixed_n
        pmax = max(abs(self.lo), abs(self.hi))
        phase = (x_abs * pmax + 0.5 * t_max * pmax**2) / self.sqrt_eps
        return nodes_for_phase(phase, minimum=256)

    def _grid(self, n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        got = self._grids.get(n)
        if got is None:
            nodes, weights = gauss_legendre(QuadratureSpec(n, self.lo, self.hi, GAUSS_LEGENDRE))
            amp = self.state.amplitude(nodes)
            got = (nodes, weights, amp)
            self._grids[n] = got
        return got

    def wavefunction_and_gradient(self, X, T) -> Tuple[np.ndarray, np.ndarray]:
        """Psi(X, T) and dPsi/dX on the broadcast grid of X and T.

        The gradient is obtained by differentiating under the integral
        (extra iP/sqrt(eps) weight), never by finite differences.
        """
        X = np.asarray(X, dtype=float)
        T = np.asarray(T, dtype=float)
        if np.any(T < 0.0):
            raise ContractViolation("T must be >= 0")
        n = self._n_for(float(np.max(np.abs(X), initial=0.0)), float(np.max(T, initial=0.0)))
        P, W, amp = self._grid(n)
        Xb, Tb = np.broadcast_arrays(X, T)
        shape = Xb.shape
        Xf = Xb.reshape(-1, 1)
        Tf = Tb.reshape(-1, 1)
        phase = np.exp(1j * (P * Xf - 0.5 * P**2 * Tf) / self.sqrt_eps)
        pre = self.epsilon ** (-0.25) / math.sqrt(2.0 * math.pi)
        wf = pre * (phase @ (W * amp))
        grad = pre * (phase @ (W * amp * 1j * P / self.sqrt_eps))
        return wf.reshape(shape), grad.reshape(shape)

    def wavefunction(self, X, T) -> np.ndarray:
        return self.wavefunction_and_gradient(X, T)[0]


_EVOLVERS: Dict[Tuple[MomentumState, float], FreeEvolver] = {}


def get_evolver(state: MomentumState, epsilon: float) -> FreeEvolver:
    key = (state, float(epsilon))
    ev = _EVOLVERS.get(key)
    if ev is None:
        ev = FreeEvolver(state, epsilon)
        if len(_EVOLVERS) > 32:
            _EVOLVERS.clear()
        _EVOLVERS[key] = ev
    return ev


def scaled_free_wavefunction(state: MomentumState, epsilon: float, X: float, T: float) -> complex:
    """Free scaled wavefunction Psi(X, T); at T = 0 the Fourier transform of Phi."""
    wf = get_evolver(state, epsilon).wavefunction(X, T)
    return complex(wf)


def scaled_ck_wavefunction(
    state: MomentumState, epsilon: float, Gamma: float, X: float, T: float
) -> complex:
    """Dissipative wavefunction: the free result evaluated at tau(T)."""
    return scaled_free_wavefunction(state, epsilon, X, ck_tau(T, Gamma))
