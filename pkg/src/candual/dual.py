"""Canonical dual construction: G, F, the total complementary function,
the gap function, the dual objective with derivatives, and region tests.

For a dual m-vector sigma,

    G(sigma) = A + sum_k sigma_k B_k,      F(sigma) = f - sum_k sigma_k b_k,
    Xi(x, sigma) = x'G(sigma)x/2 - V*(sigma) - x'F(sigma),
    Pd(sigma) = -<G(sigma)^-1 F(sigma), F(sigma)>/2 - V*(sigma),

where Pd is Xi evaluated on the stationary trajectory x = G^-1 F.  The dual
feasible region splits by the sign of G: positive semidefinite (global-min
territory), negative definite, or indefinite.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SingularGError
from .problem import CanonicalProblem, lambda_of, grad_lambda

__all__ = [
    "Region",
    "RegionLabel",
    "G_of",
    "F_of",
    "xi_total",
    "gap",
    "dual_value",
    "dual_gradient",
    "dual_hessian",
    "classify_region",
    "primal_recovery",
    "equilibrium_solve",
    "EquilibriumSolution",
]

# rank cut for the generalized inverse: eigenvalues below RANK_RTOL * max|eig|
# count as zero
RANK_RTOL = 1e-10


class Region(str, enum.Enum):
    SA_PLUS_INTERIOR = "SaPlusInterior"
    SA_PLUS_BOUNDARY = "SaPlusBoundary"
    SA_MINUS = "SaMinus"
    INDEFINITE = "Indefinite"
    OUTSIDE_SA = "OutsideSa"


@dataclass(frozen=True)
class RegionLabel:
    """Sign classification of G(sigma) plus the evidence it rests on."""

    tag: Region
    min_eig: float
    max_eig: float
    col_space_residual: float

    @property
    def in_sa_plus(self) -> bool:
        return self.tag in (Region.SA_PLUS_INTERIOR, Region.SA_PLUS_BOUNDARY)


def G_of(p: CanonicalProblem, sigma) -> np.ndarray:
    sigma = p.check_sigma(sigma)
    return p.A + np.tensordot(sigma, p.B, axes=1)


def F_of(p: CanonicalProblem, sigma) -> np.ndarray:
    sigma = p.check_sigma(sigma)
    return p.f - sigma @ p.b


def xi_total(p: CanonicalProblem, x, sigma) -> float:
    """Total complementary value Xi(x, sigma)."""
    x = p.check_x(x)
    sigma = p.check_sigma(sigma)
    if not p.V.in_conj_domain(sigma):
        raise DomainError("sigma outside the declared dual region")
    G = G_of(p, sigma)
    return float(0.5 * x @ G @ x - p.V.conj_value(sigma) - x @ F_of(p, sigma))


def gap(p: CanonicalProblem, x, sigma) -> float:
    """Complementary gap x'G(sigma)x/2; its sign separates the duality regimes."""
    x = p.check_x(x)
    return float(0.5 * x @ G_of(p, sigma) @ x)


@dataclass(frozen=True)
class EquilibriumSolution:
    """Solution of G(sigma) x = F(sigma) under the generalized-inverse policy."""

    x: np.ndarray
    residual: float          # ||G x - F||, nonzero only at rank-deficient G
    rank_deficient: bool


def _col_residual_tol(F: np.ndarray) -> float:
    return 1e-8 * (1.0 + float(np.linalg.norm(F)))


def equilibrium_solve(p: CanonicalProblem, sigma) -> EquilibriumSolution:
    """Solve the equilibrium system, falling back to the minimum-norm solution.

    Rank is decided by eigenvalues above RANK_RTOL times the spectral radius.
    Raises SingularGError when F has a component outside the column space of a
    singular G beyond the scale-relative tolerance.
    """
    sigma = p.check_sigma(sigma)
    G = G_of(p, sigma)
    F = F_of(p, sigma)
    w, Q = np.linalg.eigh(G)
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    keep = np.abs(w) > RANK_RTOL * max(scale, 1e-300)
    c = Q.T @ F
    if np.all(keep):
        x = Q @ (c / w)
        return EquilibriumSolution(x, 0.0, False)
    residual = float(np.linalg.norm(c[~keep]))
    if residual > _col_residual_tol(F):
        raise SingularGError(
            f"G(sigma) singular and F outside its column space (residual {residual:.3e})"
        )
    x = np.zeros_like(F)
    if np.any(keep):
        x = Q[:, keep] @ (c[keep] / w[keep])
    return EquilibriumSolution(x, residual, True)


def primal_recovery(p: CanonicalProblem, sigma) -> np.ndarray:
    """Analytic primal point x = G(sigma)^-1 F(sigma) (minimum-norm at rank drop)."""
    return equilibrium_solve(p, sigma).x


def dual_value(p: CanonicalProblem, sigma) -> float:
    """Pd(sigma) = -<x, F(sigma)>/2 - V*(sigma) with x the equilibrium solution."""
    sigma = p.check_sigma(sigma)
    if not p.V.in_conj_domain(sigma):
        raise DomainError("sigma outside the declared dual region")
    sol = equilibrium_solve(p, sigma)
    return float(-0.5 * sol.x @ F_of(p, sigma) - p.V.conj_value(sigma))


def dual_gradient(p: CanonicalProblem, sigma) -> np.ndarray:
    """grad Pd(sigma) = Lambda(x) - grad V*(sigma) on the stationary trajectory."""
    sigma = p.check_sigma(sigma)
    if not p.V.in_conj_domain(sigma):
        raise DomainError("sigma outside the declared dual region")
    sol = equilibrium_solve(p, sigma)
    return lambda_of(p, sol.x) - p.V.conj_gradient(sigma)


def dual_hessian(p: CanonicalProblem, sigma) -> np.ndarray:
    """hess Pd(sigma) = -grad Lambda(x)' G^-1 grad Lambda(x) - hess V*(sigma)."""
    sigma = p.check_sigma(sigma)
    sol = equilibrium_solve(p, sigma)
    if sol.rank_deficient:
        raise SingularGError("dual Hessian requires invertible G(sigma)")
    G = G_of(p, sigma)
    L = grad_lambda(p, sol.x)
    Y = np.linalg.solve(G, L)
    H = -L.T @ Y - p.V.conj_hessian(sigma)
    return 0.5 * (H + H.T)


def classify_region(p: CanonicalProblem, sigma) -> RegionLabel:
    """Classify sigma by the inertia of G(sigma) and membership in the dual region.

    Eigenvalue tolerance is 1e-9 * (1 + spectral radius); the column-space
    residual tolerance is 1e-8 * (1 + ||F||).
    """
    sigma = p.check_sigma(sigma)
    G = G_of(p, sigma)
    F = F_of(p, sigma)
    w, Q = np.linalg.eigh(G)
    min_eig = float(w[0])
    max_eig = float(w[-1])
    scale = float(np.max(np.abs(w)))
    eps_psi = 1e-9 * (1.0 + scale)
    keep = np.abs(w) > RANK_RTOL * max(scale, 1e-300)
    c = Q.T @ F
    residual = float(np.linalg.norm(c[~keep])) if not np.all(keep) else 0.0

    if not p.V.in_conj_domain(sigma):
        return RegionLabel(Region.OUTSIDE_SA, min_eig, max_eig, residual)
    if min_eig > eps_psi:
        return RegionLabel(Region.SA_PLUS_INTERIOR, min_eig, max_eig, residual)
    if max_eig < -eps_psi:
        return RegionLabel(Region.SA_MINUS, min_eig, max_eig, residual)
    if abs(min_eig) <= eps_psi:
        # G is positive semidefinite and singular
        if residual <= _col_residual_tol(F):
            return RegionLabel(Region.SA_PLUS_BOUNDARY, min_eig, max_eig, residual)
        return RegionLabel(Region.OUTSIDE_SA, min_eig, max_eig, residual)
    # min eig is negative; remaining spectrum reaches zero or above
    if not np.all(keep) and residual > _col_residual_tol(F):
        return RegionLabel(Region.OUTSIDE_SA, min_eig, max_eig, residual)
    return RegionLabel(Region.INDEFINITE, min_eig, max_eig, residual)


def dual_state(p: CanonicalProblem, sigma):
    """Fused evaluation used by the Newton iteration.

    Returns (x, grad, hess, value) of the dual objective at sigma, or None
    when G is singular at the generalized-inverse tolerance or sigma leaves
    the declared dual region.  One factorization serves both solves.
    """
    sigma = p.check_sigma(sigma)
    if not p.V.in_conj_domain(sigma):
        return None
    G = p.A + np.tensordot(sigma, p.B, axes=1)
    F = p.f - sigma @ p.b
    try:
        x = np.linalg.solve(G, F)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(x)):
        return None
    L = (p.B @ x + p.b).T
    try:
        Y = np.linalg.solve(G, L)
    except np.linalg.LinAlgError:
        return None
    lam = 0.5 * (p.B @ x) @ x + p.b @ x
    grad = lam - p.V.conj_gradient(sigma)
    H = -L.T @ Y - p.V.conj_hessian(sigma)
    value = float(-0.5 * x @ F - p.V.conj_value(sigma))
    return x, grad, 0.5 * (H + H.T), value
