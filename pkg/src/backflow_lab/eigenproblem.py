"""Largest-eigenvalue problem for extremal backflow on [u0, infinity).

The optimal transferred probability is the largest eigenvalue of

    -(1/pi) int_{u0}^inf dv sin(u^2 - v^2)/(u - v) phi(v) = Delta phi(u),

independent of the interval length, mass, and (scaled) Planck constant;
u0 = 0 gives the classic least upper bound around 0.04.  The integral
operator is discretized by the Nystrom method on Gauss-Legendre nodes
over [u0, U] and symmetrized with sqrt-weight similarity, so a symmetric
eigensolver applies and the spectrum is real by construction.

Truncation convergence is slow and the kernel oscillates on a scale that
shrinks like 1/U, so the default node count grows as U * (U - u0); each
result can carry its convergence table over doublings of U for audit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .errors import ContractViolation
from .numerics import (
    GAUSS_LEGENDRE,
    QuadratureSpec,
    gauss_legendre,
    symmetric_largest_eigenpair,
)

DEFAULT_TRUNCATION_MARGIN = 16.0


def kernel(u, v):
    """Backflow kernel -(1/pi) sin(u^2 - v^2)/(u - v).

    Written as -(u + v)/pi * sinc((u - v)(u + v)) which is symmetric,
    cancellation-free near the diagonal, and has the exact limit
    -2u/pi at u = v.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    s = u + v
    arg = (u - v) * s
    return -(s / math.pi) * np.sinc(arg / math.pi)


def default_node_count(u0_tilde: float, truncation_U: float) -> int:
    """Node count resolving the kernel oscillation over [u0, U]."""
    return max(400, int(math.ceil(truncation_U * (truncation_U - u0_tilde))))


def build_symmetrized_matrix(
    u0_tilde: float, truncation_U: float, n_nodes: int
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nystrom matrix S_ij = sqrt(w_i) K(u_i, u_j) sqrt(w_j) with its nodes/weights."""
    nodes, weights = gauss_legendre(
        QuadratureSpec(n_nodes, u0_tilde, truncation_U, GAUSS_LEGENDRE)
    )
    sw = np.sqrt(weights)
    S = sw[:, None] * kernel(nodes[:, None], nodes[None, :]) * sw[None, :]
    return S, nodes, weights


@dataclass(frozen=True)
class EigenResult:
    u0_tilde: float
    truncation_U: float
    n_nodes: int
    delta_max: float
    eigenvector: np.ndarray
    nodes: np.ndarray
    convergence: Tuple[Tuple[float, int, float], ...]


def delta_max(
    u0_tilde: float,
    truncation_U: float | None = None,
    n_nodes: int | None = None,
    *,
    convergence_levels: int = 0,
    tol: float = 1e-10,
) -> EigenResult:
    """Largest backflow eigenvalue at lower momentum cutoff u0_tilde.

    ``convergence_levels`` > 0 prepends solutions at halved truncations
    (coarse to fine) to the convergence table; node counts keep the same
    density policy at every level.  The eigenvector is returned at the
    quadrature nodes, back-transformed by 1/sqrt(w) and normalized so
    that sum w_i phi_i^2 = 1.
    """
    if u0_tilde < 0.0:
        raise ContractViolation(f"u0_tilde must be >= 0, got {u0_tilde}")
    if truncation_U is None:
        truncation_U = u0_tilde + DEFAULT_TRUNCATION_MARGIN
    if truncation_U <= u0_tilde:
        raise ContractViolation(
            f"truncation_U ({truncation_U}) must exceed u0_tilde ({u0_tilde})"
        )
    if n_nodes is None:
        n_nodes = default_node_count(u0_tilde, truncation_U)
    if n_nodes < 50:
        raise ContractViolation(f"n_nodes must be >= 50, got {n_nodes}")

    table: List[Tuple[float, int, float]] = []
    span = truncation_U - u0_tilde
    for level in range(convergence_levels, 0, -1):
        u_level = u0_tilde + span / (2.0**level)
        n_level = max(50, int(round(n_nodes * (u_level - u0_tilde) * u_level
                                    / (span * truncation_U))))
        S, _, _ = build_symmetrized_matrix(u0_tilde, u_level, n_level)
        lam, _ = symmetric_largest_eigenpair(S, tol=tol)
        table.append((u_level, n_level, lam))

    S, nodes, weights = build_symmetrized_matrix(u0_tilde, truncation_U, n_nodes)
    lam, vec = symmetric_largest_eigenpair(S, tol=tol)
    table.append((truncation_U, n_nodes, lam))
    phi = vec / np.sqrt(weights)
    return EigenResult(
        u0_tilde=u0_tilde,
        truncation_U=truncation_U,
        n_nodes=n_nodes,
        delta_max=lam,
        eigenvector=phi,
        nodes=nodes,
        convergence=tuple(table),
    )


def convergence_table(
    u0_tilde: float,
    truncations: Tuple[float, ...],
    n_nodes: int | None = None,
) -> List[Tuple[float, int, float]]:
    """delta_max across explicit truncations (node density per policy)."""
    rows = []
    for U in truncations:
        n = n_nodes if n_nodes is not None else default_node_count(u0_tilde, U)
        res = delta_max(u0_tilde, U, n)
        rows.append((U, n, res.delta_max))
    return rows


@dataclass(frozen=True)
class ClassicalMap:
    """Physical-parameter map u0_tilde = p0 sqrt(t_b / (4 sqrt(eps))).

    epsilon = 0 sends the cutoff to infinity for any p0 > 0; the classical
    curve itself is reported as identically zero.
    """

    p0: float
    t_b: float
    epsilon: float

    def __post_init__(self):
        if self.p0 < 0.0:
            raise ContractViolation(f"p0 must be >= 0, got {self.p0}")
        if self.t_b <= 0.0:
            raise ContractViolation(f"t_b must be > 0, got {self.t_b}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ContractViolation(f"epsilon must lie in [0, 1], got {self.epsilon}")

    @property
    def u0_tilde(self) -> float:
        if self.epsilon == 0.0:
            return math.inf if self.p0 > 0.0 else 0.0
        return self.p0 * math.sqrt(self.t_b / (4.0 * math.sqrt(self.epsilon)))


def delta_max_classical_map(
    cmap: ClassicalMap,
    truncation_U: float | None = None,
    n_nodes: int | None = None,
    *,
    tol: float = 1e-10,
) -> float:
    """delta_max at the cutoff induced by physical (p0, t_b, eps); 0 classically."""
    if cmap.epsilon == 0.0:
        return 0.0
    u0 = cmap.u0_tilde
    return delta_max(u0, truncation_U, n_nodes, tol=tol).delta_max
