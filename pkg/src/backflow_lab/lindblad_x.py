"""Single Gaussian under the position-operator Lindblad equation, closed form.

With L = x the master equation in center-of-mass/relative coordinates
(R, r) reads (sigma_0 = m = hbar = 1, kappa in units hbar/(m sigma_0^4))

    d rho/dT = i d^2 rho/(dR dr) - (kappa/2) r^2 rho,

and the kicked Gaussian evolves to

    rho(R, r, T) = (4 pi a2)^(-1/2) exp[-a02 r^2 + i P0 r - (R - a10 - i a11 r)^2/(4 a2)]

with a02 = 1/8 + kappa T/2, a10 = P0 T, a11 = T/4 + kappa T^2/2, and
a2 = (1 + T^2/4 + kappa T^3/3)/2.  Momentum width grows as
w_T = sqrt(1 + 4 kappa T)/2, so negative momenta appear at any kick: this
coupling is incompatible with the positive-momentum premise of backflow,
which is why only momentum-function Lindblad operators feed the backflow
analysis.  Everything here is a diagnostic of that incompatibility.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .errors import ContractViolation


@dataclass(frozen=True)
class LindbladXParams:
    """Dimensionless kick P0 and coupling kappa (units fixed by sigma_0)."""

    p0_bar: float
    kappa_bar: float

    def __post_init__(self):
        if self.kappa_bar < 0.0:
            raise ContractViolation(f"kappa_bar must be >= 0, got {self.kappa_bar}")


@dataclass(frozen=True)
class GaussianCoefficients:
    a01: float
    a02: float
    a10: float
    a11: float
    a2: float


def coefficients(params: LindbladXParams, T: float) -> GaussianCoefficients:
    k = params.kappa_bar
    return GaussianCoefficients(
        a01=params.p0_bar,
        a02=0.125 + 0.5 * k * T,
        a10=params.p0_bar * T,
        a11=0.25 * T + 0.5 * k * T * T,
        a2=0.5 * (1.0 + 0.25 * T * T + k * T**3 / 3.0),
    )


def density_matrix(params: LindbladXParams, R: float, r: float, T: float) -> complex:
    """rho(R, r, T); Hermitian under r -> -r and of unit trace."""
    if T < 0.0:
        raise ContractViolation(f"T must be >= 0, got {T}")
    c = coefficients(params, T)
    arg = (
        -c.a02 * r * r
        + 1j * c.a01 * r
        - (R - c.a10 - 1j * c.a11 * r) ** 2 / (4.0 * c.a2)
    )
    return complex(np.exp(arg) / math.sqrt(4.0 * math.pi * c.a2))


def sigma_t(params: LindbladXParams, T: float) -> float:
    """Position width sqrt(1 + T^2/4 + kappa T^3/3)."""
    return math.sqrt(1.0 + 0.25 * T * T + params.kappa_bar * T**3 / 3.0)


def ell_t(params: LindbladXParams, T: float) -> float:
    """Coherence length {8 (a02 - a11^2/(4 a2))}^(-1/2); equals sigma_t at T = 0."""
    c = coefficients(params, T)
    return (8.0 * (c.a02 - c.a11**2 / (4.0 * c.a2))) ** -0.5


def ell_short_time(params: LindbladXParams, T: float) -> float:
    """Quadratic short-time expansion 1 - 2 kappa T + (1/8 + 6 kappa^2) T^2."""
    k = params.kappa_bar
    return 1.0 - 2.0 * k * T + (0.125 + 6.0 * k * k) * T * T


def w_t(params: LindbladXParams, T: float) -> float:
    """Momentum width sqrt(1 + 4 kappa T)/2 (units hbar/sigma_0)."""
    return 0.5 * math.sqrt(1.0 + 4.0 * params.kappa_bar * T)


def pr_p_negative_t(params: LindbladXParams, T: float) -> float:
    """Pr(P < 0, T) = erfc[sqrt(2) P0 / sqrt(1 + 4 kappa T)] / 2."""
    return 0.5 * float(erfc(math.sqrt(2.0) * params.p0_bar / math.sqrt(1.0 + 4.0 * params.kappa_bar * T)))


def pr_x_negative_t(params: LindbladXParams, T: float) -> float:
    """Pr(X < 0, T) = erfc[P0 T / (sqrt(2) sigma_T)] / 2."""
    return 0.5 * float(erfc(params.p0_bar * T / (math.sqrt(2.0) * sigma_t(params, T))))


def off_diagonal_suppression(kappa_bar: float, dx: float, T: float) -> float:
    """Coherence decay exp(-kappa dx^2 T / 2) under the non-unitary term alone."""
    return math.exp(-0.5 * kappa_bar * dx * dx * T)


@dataclass(frozen=True)
class DecoherenceTimescales:
    """The module's four timescales; all infinite at kappa = 0.

    tau_decoh comes from the short-time coherence length, tau_dx(dx) from
    the pure off-diagonal decay at separation dx (a superposition of
    localized packets a distance b apart decoheres on 2 * tau_dx(b)),
    tau_a marks the onset of negative momenta, and tau_s the time where
    they show up in the position distribution.
    """

    tau_decoh: float
    tau_a: float
    tau_s: float
    kappa_bar: float

    def tau_dx(self, dx: float) -> float:
        if self.kappa_bar == 0.0 or dx == 0.0:
            return math.inf
        return 2.0 / (self.kappa_bar * dx * dx)


def decoherence_timescales(params: LindbladXParams) -> DecoherenceTimescales:
    k = params.kappa_bar
    if k == 0.0:
        return DecoherenceTimescales(math.inf, math.inf, math.inf, 0.0)
    return DecoherenceTimescales(
        tau_decoh=1.0 / (2.0 * k),
        tau_a=1.0 / (4.0 * k),
        tau_s=(6.0 / k) ** (1.0 / 3.0),
        kappa_bar=k,
    )
