"""Quadrature rules, special functions, and a symmetric eigensolver.

Everything downstream integrates momentum-space states over finite windows
(semi-infinite supports are truncated where the amplitude falls below a
tail threshold), so Gauss-Legendre rules on [lower, upper] and a rational
map for genuinely semi-infinite checks cover all needs.  Oscillatory
factors exp(-i P^2 T / 2) are handled by raising the node count linearly
with the accumulated phase (at least 8 nodes per 2*pi).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
from scipy.special import erfc as _scipy_erfc
from scipy.special import roots_legendre, wofz

from .errors import (
    ConfigurationError,
    ContractViolation,
    ConvergenceError,
    NumericalDomainError,
    RangeOverflowError,
)

GAUSS_LEGENDRE = "gauss-legendre"
MAPPED_SEMI_INFINITE = "mapped-semi-infinite"

#: Minimum node density for oscillatory integrands, nodes per 2*pi of phase.
NODES_PER_PERIOD = 8


@dataclass(frozen=True)
class QuadratureSpec:
    """A 1-d quadrature rule on [lower, upper].

    ``rule`` is either ``"gauss-legendre"`` (finite interval) or
    ``"mapped-semi-infinite"`` which integrates over [lower, inf) through
    the rational map u = lower + scale*t/(1-t), t in (0,1); ``upper`` is
    ignored for the mapped rule.
    """

    n_nodes: int
    lower: float
    upper: float = math.inf
    rule: str = GAUSS_LEGENDRE
    scale: float = 1.0

    def validate(self) -> None:
        if self.n_nodes < 2:
            raise ConfigurationError(f"n_nodes must be >= 2, got {self.n_nodes}")
        if self.rule == GAUSS_LEGENDRE:
            if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
                raise ConfigurationError("gauss-legendre needs finite bounds")
            if not self.upper > self.lower:
                raise ConfigurationError(
                    f"upper ({self.upper}) must exceed lower ({self.lower})"
                )
        elif self.rule == MAPPED_SEMI_INFINITE:
            if not math.isfinite(self.lower):
                raise ConfigurationError("mapped rule needs a finite lower bound")
            if self.scale <= 0:
                raise ConfigurationError(f"scale must be positive, got {self.scale}")
        else:
            raise ConfigurationError(f"unknown quadrature rule {self.rule!r}")


@lru_cache(maxsize=64)
def _unit_gauss_legendre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    # Cached raw nodes/weights on [-1, 1]; root generation is the costly part.
    x, w = roots_legendre(n)
    return x, w


def gauss_legendre(spec: QuadratureSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for ``spec``, nodes sorted ascending.

    For the finite rule the weights sum to (upper - lower).  For the
    mapped semi-infinite rule the weights carry the Jacobian
    scale/(1-t)^2 and decay integrals such as int_0^inf exp(-x) dx are
    reproduced to near machine precision at moderate node counts.
    """
    spec.validate()
    x, w = _unit_gauss_legendre(spec.n_nodes)
    if spec.rule == GAUSS_LEGENDRE:
        half = 0.5 * (spec.upper - spec.lower)
        nodes = spec.lower + half * (x + 1.0)
        weights = half * w
        return nodes, weights
    # Map t in (0,1) to u in [lower, inf).
    t = 0.5 * (x + 1.0)
    tw = 0.5 * w
    nodes = spec.lower + spec.scale * t / (1.0 - t)
    weights = tw * spec.scale / (1.0 - t) ** 2
    return nodes, weights


def nodes_for_phase(total_phase: float, minimum: int = 64) -> int:
    """Node count resolving an accumulated oscillatory phase (radians).

    Applies the 8-nodes-per-period criterion and rounds up to a multiple
    of 32 so repeated requests share cached rules.
    """
    n = max(minimum, int(math.ceil(NODES_PER_PERIOD * abs(total_phase) / (2.0 * math.pi))))
    return 32 * int(math.ceil(n / 32))


def integrate_2d(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    spec_p: QuadratureSpec,
    spec_q: QuadratureSpec,
) -> complex:
    """Tensor-product quadrature of a complex-valued f(p, p').

    ``f`` is evaluated once on the full node grid (meshgrid convention:
    first argument varies along rows).  Non-finite values abort with the
    offending node named.
    """
    p, wp = gauss_legendre(spec_p)
    q, wq = gauss_legendre(spec_q)
    P = p[:, None]
    Q = q[None, :]
    vals = np.asarray(f(P, Q), dtype=complex)
    if vals.shape != (p.size, q.size):
        vals = np.broadcast_to(vals, (p.size, q.size))
    bad = ~np.isfinite(vals)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise NumericalDomainError(
            f"integrand non-finite at node (p={p[i]:.6g}, p'={q[j]:.6g})"
        )
    return complex(wp @ vals @ wq)


def erfc_complex(z: complex) -> complex:
    """Complementary error function for complex argument.

    Evaluated through the Faddeeva function, erfc(z) = exp(-z^2) w(iz),
    which is the standard region-stable route; real arguments reduce to
    the ordinary erfc.  Arguments with Im(z)^2 - Re(z)^2 large enough
    that exp(-z^2) overflows are rejected.
    """
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise NumericalDomainError(f"erfc argument not finite: {z}")
    if z.imag == 0.0:
        return complex(_scipy_erfc(z.real))
    if z.imag * z.imag - z.real * z.real > 700.0:
        raise RangeOverflowError(
            f"erfc({z}) overflows: |Im z| too large relative to |Re z|"
        )
    return complex(_scipy_erfc(z))


def damped_erfc(c: float, z: complex) -> complex:
    """Stable product exp(-c) * erfc(z) for c >= 0.

    Written as exp(-c - z^2) * w(iz) so that huge erfc values against
    tiny Gaussian prefactors (large Im z) never overflow; w is bounded
    for Re(z) >= 0.  For Re(z) < 0 use erfc(z) = 2 - erfc(-z).
    """
    z = complex(z)
    if z.real >= 0.0:
        return complex(np.exp(-c - z * z) * wofz(1j * z))
    return 2.0 * math.exp(-c) - damped_erfc(c, -z)


def _power_iteration(
    matvec: Callable[[np.ndarray], np.ndarray],
    n: int,
    tol_abs: float,
    max_iterations: int,
    seed: int,
) -> Tuple[float, np.ndarray, float]:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    residual = math.inf
    for _ in range(max_iterations):
        u = matvec(v)
        lam = float(v @ u)
        r = u - lam * v
        residual = float(np.linalg.norm(r))
        if residual <= tol_abs:
            return lam, v, residual
        nu = np.linalg.norm(u)
        if nu == 0.0:
            # v is in the kernel; the zero eigenvalue is exact.
            return 0.0, v, 0.0
        v = u / nu
    return lam, v, residual


def symmetric_largest_eigenpair(
    matrix: np.ndarray,
    tol: float = 1e-10,
    max_iterations: int = 200_000,
) -> Tuple[float, np.ndarray]:
    """Largest (most positive) eigenvalue of a dense symmetric matrix.

    Two-phase power iteration: the first pass finds the dominant
    eigenvalue in magnitude (which also estimates ||M||); if that value
    is negative, a spectral shift M + cI with c slightly above |lambda|
    makes the largest algebraic eigenvalue dominant and the iteration is
    repeated on the shifted operator.  The returned eigenvector is
    normalized and satisfies ||M v - lambda v|| <= tol * ||M||.
    """
    M = np.asarray(matrix, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ContractViolation(f"matrix must be square, got shape {M.shape}")
    scale = float(np.abs(M).max())
    if scale == 0.0:
        return 0.0, np.eye(M.shape[0])[:, 0]
    asym = float(np.abs(M - M.T).max())
    if asym > 1e-12 * scale:
        raise ContractViolation(
            f"matrix not symmetric: max |M - M^T| = {asym:.3e} (scale {scale:.3e})"
        )
    n = M.shape[0]

    # Phase 1: dominant-magnitude eigenvalue.  max|M_ij| <= ||M||_2 for
    # symmetric M, so tol*scale is a conservative residual target; the cap
    # is short because phase 1 only needs a norm estimate unless the
    # dominant eigenvalue is already the most positive one.
    lam1, v1, res1 = _power_iteration(
        lambda x: M @ x,
        n,
        tol_abs=tol * scale,
        max_iterations=min(max_iterations, 20_000),
        seed=7,
    )
    if lam1 >= 0.0 and res1 <= tol * scale:
        return lam1, v1

    tol_abs = tol * max(abs(lam1), scale)
    shift = abs(lam1) * 1.05 + tol
    lam2, v2, res2 = _power_iteration(
        lambda x: M @ x + shift * x,
        n,
        tol_abs=tol_abs,
        max_iterations=max_iterations,
        seed=11,
    )
    lam = lam2 - shift
    residual = float(np.linalg.norm(M @ v2 - lam * v2))
    if residual > tol_abs:
        raise ConvergenceError(
            f"power iteration stalled after {max_iterations} iterations; "
            f"residual {residual:.3e} > {tol_abs:.3e}",
            residual=residual,
        )
    return lam, v2


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-8,
    max_depth: int = 40,
) -> float:
    """Recursive adaptive Simpson integration with absolute tolerance."""
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, fa, m, fm, b, fb, whole, tol, depth):
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        err = left + right - whole
        if depth <= 0 or abs(err) <= 15.0 * tol:
            return left + right + err / 15.0
        return recurse(a, fa, lm, flm, m, fm, left, tol / 2.0, depth - 1) + recurse(
            m, fm, rm, frm, b, fb, right, tol / 2.0, depth - 1
        )

    return recurse(a, fa, m, fm, b, fb, whole, tol, max_depth)
