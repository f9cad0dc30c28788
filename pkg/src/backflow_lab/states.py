"""Initial states in dimensionless momentum space, plus mixtures.

All states are closed-form evaluators over the dimensionless momentum P
(lengths in units of mu, times in units of nu = mu^2 m / hbar), so every
downstream quadrature picks its own grid.  Positive-momentum states carry
a Heaviside factor and vanish identically for P < 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Tuple, Union

import numpy as np
from scipy.special import erfc

from .errors import ClassicalRegimeError, ContractViolation, DegenerateStateError
from .numerics import GAUSS_LEGENDRE, QuadratureSpec, gauss_legendre

_NORM_TOL = 1e-8
_BM_PREFACTOR = 18.0 / math.sqrt(35.0)
# Exact normalizer of P (exp(-(1+i/2)P) - exp(-(1+i/2)P/2)/6) on [0, inf).
_DAMPED_PREFACTOR = math.sqrt(1823508.0 / 253055.0)


class MomentumState:
    """Base class: a normalized wavefunction Phi(P) with known support."""

    #: True when the state vanishes identically for P < 0.
    theta_supported: bool = False

    def amplitude(self, P) -> np.ndarray:
        raise NotImplementedError

    def support(self) -> Tuple[float, float]:
        """Interval outside which |Phi| is below ~1e-13 of its peak."""
        raise NotImplementedError

    @cached_property
    def norm(self) -> float:
        """integral of |Phi|^2 dP, evaluated by quadrature on construction."""
        lo, hi = self.support()
        hi = max(hi, 40.0)
        nodes, weights = gauss_legendre(QuadratureSpec(800, lo, hi, GAUSS_LEGENDRE))
        amp = self.amplitude(nodes)
        value = float(weights @ (amp.real**2 + amp.imag**2))
        if abs(value - 1.0) > _NORM_TOL:
            raise DegenerateStateError(
                f"{type(self).__name__} norm {value} deviates from 1 beyond {_NORM_TOL}"
            )
        return value


@dataclass(frozen=True)
class BrackenMelloy(MomentumState):
    """Phi(P) = eps^(-3/4) (18/sqrt(35)) P (e^(-P/sqrt(eps)) - e^(-P/(2 sqrt(eps)))/6)."""

    epsilon: float = 1.0
    theta_supported = True

    def amplitude(self, P) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        s = math.sqrt(self.epsilon)
        out = (
            self.epsilon ** (-0.75)
            * _BM_PREFACTOR
            * P
            * (np.exp(-P / s) - np.exp(-P / (2.0 * s)) / 6.0)
        )
        return np.where(P >= 0.0, out, 0.0).astype(complex)

    def support(self) -> Tuple[float, float]:
        return 0.0, 66.0 * math.sqrt(self.epsilon)


@dataclass(frozen=True)
class ComplexDamped(MomentumState):
    """Phi(P) = C P (e^(-(1+i/2)P) - e^(-(1+i/2)P/2)/6), complex-valued."""

    theta_supported = True

    def amplitude(self, P) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        a = (1.0 + 0.5j) * P
        out = _DAMPED_PREFACTOR * P * (np.exp(-a) - np.exp(-a / 2.0) / 6.0)
        return np.where(P >= 0.0, out, 0.0)

    def support(self) -> Tuple[float, float]:
        return 0.0, 66.0


@dataclass(frozen=True)
class Exponential(MomentumState):
    """Phi(P) = sqrt(2) e^(-P) for P >= 0; no backflow on its own."""

    theta_supported = True

    def amplitude(self, P) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        out = math.sqrt(2.0) * np.exp(-P)
        return np.where(P >= 0.0, out, 0.0).astype(complex)

    def support(self) -> Tuple[float, float]:
        return 0.0, 32.0


@dataclass(frozen=True)
class GaussianSuperposition(MomentumState):
    """Two Gaussian packets exp(-(P-P0)^2/eps) with relative weight alpha e^(i theta).

    Normalized with N = (1 + alpha^2 + 2 alpha exp(-(P0a-P0b)^2/(2 eps))
    cos(theta))^(-1/2) and prefactor (2/pi)^(1/4) eps^(-1/4).
    """

    p0a: float
    p0b: float
    alpha: float
    theta: float
    epsilon: float = 1.0

    @property
    def normalization(self) -> float:
        d2 = (self.p0a - self.p0b) ** 2
        denom = (
            1.0
            + self.alpha**2
            + 2.0 * self.alpha * math.cos(self.theta) * math.exp(-d2 / (2.0 * self.epsilon))
        )
        if denom <= 1e-14:
            raise DegenerateStateError(
                "superposition cancels completely (normalization denominator <= 0)"
            )
        return denom ** (-0.5)

    def amplitude(self, P) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        eps = self.epsilon
        pre = self.normalization * (2.0 / math.pi) ** 0.25 * eps ** (-0.25)
        phase = self.alpha * (math.cos(self.theta) + 1j * math.sin(self.theta))
        return pre * (
            np.exp(-((P - self.p0a) ** 2) / eps)
            + phase * np.exp(-((P - self.p0b) ** 2) / eps)
        )

    def support(self) -> Tuple[float, float]:
        half = 12.0 * math.sqrt(self.epsilon / 2.0)
        return min(self.p0a, self.p0b) - half, max(self.p0a, self.p0b) + half


@dataclass(frozen=True)
class SingleGaussian(MomentumState):
    """One Gaussian packet of unit momentum width parameter, kicked by p0."""

    p0: float

    def amplitude(self, P) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        return ((2.0 / math.pi) ** 0.25 * np.exp(-((P - self.p0) ** 2))).astype(complex)

    def support(self) -> Tuple[float, float]:
        half = 12.0 / math.sqrt(2.0)
        return self.p0 - half, self.p0 + half


AnyState = Union[BrackenMelloy, ComplexDamped, Exponential, GaussianSuperposition, SingleGaussian]


def bm_state(epsilon: float = 1.0) -> BrackenMelloy:
    """The Bracken-Melloy backflow state at regime parameter epsilon."""
    if epsilon <= 0.0:
        raise ClassicalRegimeError(
            f"state undefined at the classical point (epsilon = {epsilon})"
        )
    if epsilon > 1.0:
        raise ContractViolation(f"epsilon must lie in (0, 1], got {epsilon}")
    state = BrackenMelloy(epsilon)
    state.norm
    return state


def complex_damped_state() -> ComplexDamped:
    state = ComplexDamped()
    state.norm
    return state


def exponential_state() -> Exponential:
    state = Exponential()
    state.norm
    return state


def gaussian_superposition(
    p0a: float,
    p0b: float,
    alpha: float,
    theta: float,
    epsilon: float = 1.0,
) -> GaussianSuperposition:
    """Superposition of two momentum-space Gaussians; see class docs."""
    if epsilon <= 0.0:
        raise ClassicalRegimeError(
            f"state undefined at the classical point (epsilon = {epsilon})"
        )
    if epsilon > 1.0:
        raise ContractViolation(f"epsilon must lie in (0, 1], got {epsilon}")
    if alpha < 0.0:
        raise ContractViolation(f"alpha must be >= 0, got {alpha}")
    state = GaussianSuperposition(p0a, p0b, alpha, theta, epsilon)
    state.normalization
    state.norm
    return state


def single_gaussian(p0: float) -> SingleGaussian:
    state = SingleGaussian(p0)
    state.norm
    return state


def pr_p_negative(state: MomentumState) -> float:
    """Probability of measuring a negative momentum (time independent).

    Zero exactly for Heaviside-supported states.  For Gaussian packets the
    closed form is
    (N^2/2) {erfc(sqrt(2) P0a/sqrt(eps)) + alpha^2 erfc(sqrt(2) P0b/sqrt(eps))
    + 2 alpha e^(-(P0a-P0b)^2/(2 eps)) cos(theta) erfc((P0a+P0b)/sqrt(2 eps))}.
    """
    if state.theta_supported:
        return 0.0
    if isinstance(state, SingleGaussian):
        return 0.5 * float(erfc(math.sqrt(2.0) * state.p0))
    if isinstance(state, GaussianSuperposition):
        eps = state.epsilon
        n2 = state.normalization**2
        cross = (
            2.0
            * state.alpha
            * math.exp(-((state.p0a - state.p0b) ** 2) / (2.0 * eps))
            * math.cos(state.theta)
        )
        return 0.5 * n2 * float(
            erfc(math.sqrt(2.0) * state.p0a / math.sqrt(eps))
            + state.alpha**2 * erfc(math.sqrt(2.0) * state.p0b / math.sqrt(eps))
            + cross * erfc((state.p0a + state.p0b) / math.sqrt(2.0 * eps))
        )
    raise ContractViolation(f"unsupported state type {type(state).__name__}")


def mixture_current_origin(w: float) -> float:
    """Initial current at the origin for the two-state mixture w phi1 + (1-w) phi2.

    j(0,0) = (1/pi)(1 - 71 w / 35); backflow requires w > 35/71.
    """
    if not 0.0 <= w <= 1.0:
        raise ContractViolation(f"mixture weight must lie in [0, 1], got {w}")
    return (1.0 - 71.0 * w / 35.0) / math.pi


@dataclass(frozen=True)
class DensityMatrixSpec:
    """A convex mixture of pure momentum states: sum_i w_i |phi_i><phi_i|."""

    terms: Tuple[Tuple[float, MomentumState], ...]

    def __post_init__(self):
        if not self.terms:
            raise ContractViolation("mixture needs at least one term")
        total = sum(w for w, _ in self.terms)
        if abs(total - 1.0) > 1e-12:
            raise ContractViolation(f"mixture weights sum to {total}, expected 1")
        for w, _ in self.terms:
            if not 0.0 < w <= 1.0:
                raise ContractViolation(f"mixture weight {w} outside (0, 1]")

    @classmethod
    def pure(cls, state: MomentumState) -> "DensityMatrixSpec":
        return cls(terms=((1.0, state),))

    def support(self) -> Tuple[float, float]:
        los, his = zip(*(s.support() for _, s in self.terms))
        return min(los), max(his)
