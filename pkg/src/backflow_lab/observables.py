"""Probability currents, densities, and half-space probabilities.

Density-matrix laws evaluate the current at the origin as

    J(0, T) = (1/4 pi) int dP int dP' W(P, P') rho(P, P', T),

with the law-specific weight W: (P + P') for von Neumann,
(P + P')(1 - i (P^2 - P'^2)/(4 Lambda)) for the stepwise-unitary law, and
(P + P' - i kappa (P - P')) for the Lindblad operator L = p.  The last
form follows from rewriting the L = p master equation as a continuity
equation; it keeps J real for Hermitian rho and obeys dPr/dT = -J(0, T)
(checked by the test suite), unlike a weight without the (P - P') factor.

Wavefunction (scaled and Caldirola-Kanai) laws use

    J(X, T) = sqrt(eps) Im{Psi* dPsi/dX} * e^(-2 Gamma T),

with the gradient computed by differentiating under the momentum integral.

Half-space probabilities integrate the position density over X < 0; the
X integral is done analytically per momentum pair, so Pr(T) reduces to a
double momentum sum with the kernel
int_{-Xmax}^0 e^{ikX} dX = Xmax e^{-i k Xmax/2} sinc(k Xmax / 2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Tuple, Union

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from .errors import ContractViolation, ResolutionError
from .evolution import (
    LINDBLAD_MOMENTUM,
    DensityMatrixModel,
    EvolutionModel,
    FreeEvolver,
    LindbladF,
    Milburn,
    ScaledCK,
    ScaledFree,
    VonNeumann,
    ck_tau,
    get_evolver,
    phase_and_decay,
)
from .numerics import GAUSS_LEGENDRE, QuadratureSpec, gauss_legendre, nodes_for_phase
from .states import DensityMatrixSpec, GaussianSuperposition, MomentumState, pr_p_negative
from .numerics import damped_erfc
from scipy.special import erfc as _erfc

#: Negative-momentum probability above which a state is rejected for
#: positive-momentum backflow calculations.
NEGATIVE_MOMENTUM_TOLERANCE = 1e-6

_IMAG_RESIDUE_LIMIT = 1e-6
_BLOCK = 512


@dataclass(frozen=True)
class CurrentSample:
    """One probe of the current: J at position X and time T."""

    T: float
    J: float
    X: float = 0.0


def _as_spec(spec: Union[DensityMatrixSpec, MomentumState]) -> DensityMatrixSpec:
    if isinstance(spec, MomentumState):
        return DensityMatrixSpec.pure(spec)
    return spec


def _check_positive_momentum(spec: DensityMatrixSpec) -> None:
    for _, state in spec.terms:
        if state.theta_supported:
            continue
        leak = pr_p_negative(state)
        if leak > NEGATIVE_MOMENTUM_TOLERANCE:
            raise ContractViolation(
                f"{type(state).__name__} carries negative-momentum probability "
                f"{leak:.3e} > {NEGATIVE_MOMENTUM_TOLERANCE}; not a backflow state"
            )


def _dm_grid(
    spec: DensityMatrixSpec, t_max: float, n_nodes: int | None
) -> Tuple[np.ndarray, np.ndarray, List[Tuple[float, np.ndarray]]]:
    lo, hi = spec.support()
    pmax = max(abs(lo), abs(hi))
    if n_nodes is None:
        n_nodes = nodes_for_phase(0.5 * t_max * pmax * pmax, minimum=240)
    nodes, weights = gauss_legendre(QuadratureSpec(n_nodes, lo, hi, GAUSS_LEGENDRE))
    weighted = [(w, weights * s.amplitude(nodes)) for w, s in spec.terms]
    return nodes, weights, weighted


def _current_weight_rows(model: DensityMatrixModel, Pr: np.ndarray, P: np.ndarray) -> np.ndarray:
    s = Pr[:, None] + P[None, :]
    if isinstance(model, VonNeumann):
        return s.astype(complex)
    if isinstance(model, Milburn):
        dE = 0.5 * (Pr[:, None] ** 2 - P[None, :] ** 2)
        return s * (1.0 - 0.5j * model.lambda_inv * dE)
    if isinstance(model, LindbladF):
        if model.f == LINDBLAD_MOMENTUM:
            return s - 1j * model.kappa * (Pr[:, None] - P[None, :])
        d2 = Pr[:, None] ** 2 - P[None, :] ** 2
        return s * (1.0 - 1j * model.kappa * d2)
    raise ContractViolation(f"{type(model).__name__} is not a density-matrix law")


def _blocked_bilinear(
    P: np.ndarray,
    weighted_amps: List[Tuple[float, np.ndarray]],
    rows_fn: Callable[[np.ndarray, slice], np.ndarray],
) -> complex:
    """sum_ij X_ij rho_ij with rho = sum_s w_s a_s (x) conj(a_s), block-rowed in X."""
    total = 0.0 + 0.0j
    n = P.size
    for start in range(0, n, _BLOCK):
        rows = slice(start, min(start + _BLOCK, n))
        X = rows_fn(P[rows], rows)
        for w, a in weighted_amps:
            total += w * np.dot(a[rows], X @ np.conj(a))
    return total


def current_origin(
    model: DensityMatrixModel,
    spec: Union[DensityMatrixSpec, MomentumState],
    T: float,
    *,
    n_nodes: int | None = None,
) -> float:
    """Current at the origin for a density-matrix law; mixtures combine linearly."""
    if T < 0.0:
        raise ContractViolation(f"T must be >= 0, got {T}")
    spec = _as_spec(spec)
    _check_positive_momentum(spec)
    P, _, weighted = _dm_grid(spec, t_max=T, n_nodes=n_nodes)

    def rows(Pr, _sl):
        dE, g = phase_and_decay(model, Pr[:, None], P[None, :])
        return _current_weight_rows(model, Pr, P) * np.exp((-1j * dE - g) * T)

    val = _blocked_bilinear(P, weighted, rows) / (4.0 * math.pi)
    if abs(val.imag) > _IMAG_RESIDUE_LIMIT * max(1.0, abs(val.real)):
        raise ResolutionError(
            f"current imaginary residue {val.imag:.3e} exceeds {_IMAG_RESIDUE_LIMIT}; "
            "raise the momentum node count"
        )
    return float(val.real)


def lindblad_p_current_origin(
    spec: Union[DensityMatrixSpec, MomentumState],
    kappa: float,
    T: float,
    *,
    n_nodes: int | None = None,
) -> float:
    """Current at the origin under the Lindblad operator L = p."""
    return current_origin(LindbladF(LINDBLAD_MOMENTUM, kappa), spec, T, n_nodes=n_nodes)


def current_origin_curve(
    model: DensityMatrixModel,
    spec: Union[DensityMatrixSpec, MomentumState],
    t_grid: np.ndarray,
    *,
    n_nodes: int | None = None,
) -> np.ndarray:
    """J(0, T) on a uniform time grid.

    The evolution factor between consecutive samples is a fixed matrix, so
    the curve is produced by one elementwise multiply per step instead of
    a fresh exponential; summation order is fixed and the result is
    deterministic.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise ContractViolation("t_grid must be a 1-d grid with at least 2 samples")
    if t[0] < 0.0:
        raise ContractViolation("t_grid must start at T >= 0")
    dt = float(t[1] - t[0])
    if not np.allclose(np.diff(t), dt, rtol=0.0, atol=1e-12 * max(dt, 1.0)):
        return np.array([current_origin(model, spec, float(ti), n_nodes=n_nodes) for ti in t])
    spec = _as_spec(spec)
    _check_positive_momentum(spec)
    P, _, weighted = _dm_grid(spec, t_max=float(t[-1]), n_nodes=n_nodes)
    if P.size > 1800:
        return np.array([current_origin(model, spec, float(ti), n_nodes=P.size) for ti in t])

    dE, g = phase_and_decay(model, P[:, None], P[None, :])
    rate = -1j * dE - g
    weight = _current_weight_rows(model, P, P)
    rho0 = np.zeros((P.size, P.size), dtype=complex)
    for w, a in weighted:
        rho0 += w * np.outer(a, np.conj(a))
    M = rho0 * weight * np.exp(rate * t[0])
    step = np.exp(rate * dt)
    out = np.empty(t.size)
    worst_imag = 0.0
    for i in range(t.size):
        val = M.sum()
        out[i] = val.real / (4.0 * math.pi)
        worst_imag = max(worst_imag, abs(val.imag) / (4.0 * math.pi))
        if i + 1 < t.size:
            M *= step
    if worst_imag > _IMAG_RESIDUE_LIMIT * max(1.0, float(np.max(np.abs(out)))):
        raise ResolutionError(
            f"current imaginary residue {worst_imag:.3e} exceeds {_IMAG_RESIDUE_LIMIT}"
        )
    return out


def scaled_current(
    state: MomentumState,
    epsilon: float,
    Gamma: float,
    X: float,
    T: float,
    *,
    evolver: FreeEvolver | None = None,
) -> float:
    """J(X, T) for the scaled free (Gamma = 0) or Caldirola-Kanai law."""
    ev = evolver if evolver is not None else get_evolver(state, epsilon)
    tau = ck_tau(T, Gamma)
    wf, grad = ev.wavefunction_and_gradient(X, tau)
    j = math.sqrt(epsilon) * float(np.imag(np.conj(wf) * grad))
    if Gamma > 0.0:
        j *= math.exp(-2.0 * Gamma * T)
    return j


def scaled_current_curve(
    state: MomentumState,
    epsilon: float,
    Gamma: float,
    t_grid: np.ndarray,
    *,
    X: float = 0.0,
    evolver: FreeEvolver | None = None,
) -> np.ndarray:
    """J(X, T) over a time grid, evaluated in memory-bounded blocks."""
    ev = evolver if evolver is not None else get_evolver(state, epsilon)
    t = np.asarray(t_grid, dtype=float)
    tau = np.array([ck_tau(float(ti), Gamma) for ti in t]) if Gamma > 0.0 else t
    out = np.empty(t.size)
    sq = math.sqrt(epsilon)
    for start in range(0, t.size, _BLOCK):
        sl = slice(start, min(start + _BLOCK, t.size))
        wf, grad = ev.wavefunction_and_gradient(np.full(tau[sl].shape, X), tau[sl])
        out[sl] = sq * np.imag(np.conj(wf) * grad)
    if Gamma > 0.0:
        out *= np.exp(-2.0 * Gamma * t)
    return out


def _halfspace_rows(k: np.ndarray, x_max: float) -> np.ndarray:
    # int_{-Xmax}^0 exp(i k X) dX, stable near k = 0.
    a = 0.5 * k * x_max
    return x_max * np.exp(-1j * a) * np.sinc(a / math.pi)


def negative_halfspace_probability_direct(
    model: EvolutionModel,
    spec: Union[DensityMatrixSpec, MomentumState],
    T: float,
    *,
    x_max: float = 40.0,
    n_nodes: int | None = None,
) -> float:
    """Pr(X < 0, T) by direct integration of the position density.

    Independent of the current-integration route; used as its oracle.  The
    spatial truncation at -x_max is the only approximation.
    """
    spec = _as_spec(spec)
    lo, hi = spec.support()
    if isinstance(model, (ScaledFree, ScaledCK)):
        eps = model.epsilon
        gamma = model.gamma if isinstance(model, ScaledCK) else 0.0
        tau = ck_tau(T, gamma)
        sq = math.sqrt(eps)
        if n_nodes is None:
            pmax = max(abs(lo), abs(hi))
            phase = (x_max * (hi - lo) + 0.5 * tau * pmax * pmax) / sq
            n_nodes = nodes_for_phase(0.625 * phase, minimum=240)
        P, _, weighted = _dm_grid(spec, t_max=0.0, n_nodes=n_nodes)

        def rows(Pr, _sl):
            dE = 0.5 * (Pr[:, None] ** 2 - P[None, :] ** 2) / sq
            k = (Pr[:, None] - P[None, :]) / sq
            return _halfspace_rows(k, x_max) * np.exp(-1j * dE * tau)

        val = _blocked_bilinear(P, weighted, rows) / (2.0 * math.pi * sq)
    else:
        if n_nodes is None:
            pmax = max(abs(lo), abs(hi))
            phase = x_max * (hi - lo) + 0.5 * T * pmax * pmax
            n_nodes = nodes_for_phase(0.625 * phase, minimum=240)
        P, _, weighted = _dm_grid(spec, t_max=0.0, n_nodes=n_nodes)

        def rows(Pr, _sl):
            dE, g = phase_and_decay(model, Pr[:, None], P[None, :])
            k = Pr[:, None] - P[None, :]
            return _halfspace_rows(k, x_max) * np.exp((-1j * dE - g) * T)

        val = _blocked_bilinear(P, weighted, rows) / (2.0 * math.pi)
    return float(val.real)


def position_density(
    model: EvolutionModel,
    spec: Union[DensityMatrixSpec, MomentumState],
    X: float,
    T: float,
    *,
    n_nodes: int | None = None,
) -> float:
    """Diagonal position density rho(X, X, T) for any law."""
    spec = _as_spec(spec)
    if isinstance(model, (ScaledFree, ScaledCK)):
        eps = model.epsilon
        gamma = model.gamma if isinstance(model, ScaledCK) else 0.0
        tau = ck_tau(T, gamma)
        dens = 0.0
        for w, state in spec.terms:
            wf = get_evolver(state, eps).wavefunction(X, tau)
            dens += w * float(np.abs(wf) ** 2)
        return dens
    lo, hi = spec.support()
    pmax = max(abs(lo), abs(hi))
    if n_nodes is None:
        phase = abs(X) * (hi - lo) + 0.5 * T * pmax * pmax
        n_nodes = nodes_for_phase(phase, minimum=240)
    P, _, weighted = _dm_grid(spec, t_max=0.0, n_nodes=n_nodes)

    def rows(Pr, _sl):
        dE, g = phase_and_decay(model, Pr[:, None], P[None, :])
        k = Pr[:, None] - P[None, :]
        return np.exp(1j * k * X) * np.exp((-1j * dE - g) * T)

    val = _blocked_bilinear(P, weighted, rows) / (2.0 * math.pi)
    return float(val.real)


def prob_negative_halfspace_closed(
    state: GaussianSuperposition, T: float, *, epsilon: float | None = None
) -> float:
    """Closed-form Pr(X < 0, T) for the two-Gaussian superposition.

    Valid for epsilon in [0, 1]; passing epsilon = 0 selects the classical
    branch, where interference vanishes and
    Pr = (erfc(P0a T/sqrt(2)) + alpha^2 erfc(P0b T/sqrt(2))) / (2 (1 + alpha^2)).
    The interference term is evaluated as exp(-(P0a-P0b)^2/(2 eps)) * erfc(z)
    through the scaled Faddeeva product, which stays finite even when
    erfc(z) alone would overflow.
    """
    p0a, p0b, alpha, theta = state.p0a, state.p0b, state.alpha, state.theta
    eps = state.epsilon if epsilon is None else float(epsilon)
    if eps < 0.0 or eps > 1.0:
        raise ContractViolation(f"epsilon must lie in [0, 1], got {eps}")
    delta = p0a - p0b
    if eps == 0.0:
        weight = 1.0 if delta == 0.0 else 0.0
        n2 = 1.0 / (1.0 + alpha**2 + 2.0 * alpha * math.cos(theta) * weight)
        direct = _erfc(p0a * T / math.sqrt(2.0)) + alpha**2 * _erfc(p0b * T / math.sqrt(2.0))
        cross = 2.0 * alpha * weight * math.cos(theta) * _erfc(p0a * T / math.sqrt(2.0))
        return 0.5 * n2 * float(direct + cross)
    sigma = math.sqrt(1.0 + eps * T * T / 4.0)
    c = delta * delta / (2.0 * eps)
    n2 = 1.0 / (1.0 + alpha**2 + 2.0 * alpha * math.cos(theta) * math.exp(-c))
    z = complex(0.5 * (p0a + p0b) * T, delta / math.sqrt(eps)) / (math.sqrt(2.0) * sigma)
    interference = damped_erfc(c, z)
    val = (
        _erfc(p0a * T / (math.sqrt(2.0) * sigma))
        + alpha**2 * _erfc(p0b * T / (math.sqrt(2.0) * sigma))
        + 2.0 * alpha * (math.cos(theta) * interference.real + math.sin(theta) * interference.imag)
    )
    return 0.5 * n2 * float(val)


@dataclass(frozen=True)
class HalfspaceCurve:
    """Pr(X < 0, T) on a time grid, built from the continuity equation."""

    t: np.ndarray
    pr: np.ndarray
    j: np.ndarray
    pr0: float
    tail_estimate: float
    simpson_error: float


def negative_halfspace_curve(
    model: EvolutionModel,
    spec: Union[DensityMatrixSpec, MomentumState],
    t_max: float,
    n_samples: int = 1025,
    *,
    x_max: float = 40.0,
    n_nodes: int | None = None,
    simpson_tol: float = 1e-5,
) -> HalfspaceCurve:
    """Pr(T) = Pr(0) - int_0^T J(0, t) dt on a uniform grid.

    Pr(0) comes from direct density integration over X < 0 (truncated at
    -x_max, with the tail estimated from the density there assuming an
    |X|^-4 envelope); the cumulative integral is composite Simpson.
    """
    if n_samples % 2 == 0:
        n_samples += 1
    if n_samples < 65:
        raise ContractViolation(f"n_samples must be >= 65, got {n_samples}")
    t = np.linspace(0.0, t_max, n_samples)
    spec_full = _as_spec(spec)
    pr0 = negative_halfspace_probability_direct(model, spec_full, 0.0, x_max=x_max)
    dens_edge = position_density(model, spec_full, -x_max, 0.0)
    tail = dens_edge * x_max / 3.0
    if isinstance(model, (ScaledFree, ScaledCK)):
        gamma = model.gamma if isinstance(model, ScaledCK) else 0.0
        if len(spec_full.terms) != 1:
            raise ContractViolation("wavefunction laws require a pure state")
        state = spec_full.terms[0][1]
        j = scaled_current_curve(state, model.epsilon, gamma, t)
    else:
        j = current_origin_curve(model, spec_full, t, n_nodes=n_nodes)
    dt = float(t[1] - t[0])
    cum = cumulative_simpson(j, dx=dt, initial=0.0)
    full = float(cum[-1])
    coarse = float(simpson(j[::2], dx=2.0 * dt))
    err = abs(full - coarse) / 15.0
    if err > simpson_tol:
        raise ResolutionError(
            f"Simpson error estimate {err:.3e} exceeds {simpson_tol}; refine the time grid"
        )
    return HalfspaceCurve(
        t=t, pr=pr0 - cum, j=j, pr0=pr0, tail_estimate=tail, simpson_error=err
    )


def prob_negative_halfspace_numeric(
    model: EvolutionModel,
    spec: Union[DensityMatrixSpec, MomentumState],
    T: float,
    *,
    n_samples: int = 1025,
    x_max: float = 40.0,
    n_nodes: int | None = None,
) -> float:
    """Pr(X < 0, T) through current integration (see negative_halfspace_curve)."""
    if T == 0.0:
        return negative_halfspace_probability_direct(model, spec, 0.0, x_max=x_max)
    curve = negative_halfspace_curve(
        model, spec, T, n_samples, x_max=x_max, n_nodes=n_nodes
    )
    return float(curve.pr[-1])
