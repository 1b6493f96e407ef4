"""Canonical problem instances and primal-side evaluation.

A problem is the data of

    Pi(x) = V(Lambda(x)) + x'Ax/2 - x'f,
    Lambda(x)_k = x'B_k x / 2 + b_k'x,

with A and every B_k symmetric and V a canonical function of the m-vector
Lambda(x).  The primal domain is the pullback of V's domain through Lambda.
All objects are immutable after construction; every operation here is a pure
function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConsistencyError
from .families import CanonicalFunction

__all__ = [
    "CanonicalProblem",
    "lambda_of",
    "grad_lambda",
    "primal_value",
    "primal_gradient",
    "primal_hessian",
]

# reject matrices whose skew part exceeds this relative size; smaller skew
# parts store no energy and are symmetrized away
ASYMMETRY_REJECT = 1e-8


def _ingest_symmetric(M, n, name):
    M = np.asarray(M, dtype=float)
    if M.shape != (n, n):
        raise ValueError(f"{name} must be {n}x{n}, got {M.shape}")
    scale = max(1.0, float(np.linalg.norm(M)))
    if np.linalg.norm(M - M.T) > ASYMMETRY_REJECT * scale:
        raise ValueError(f"{name} is asymmetric beyond tolerance {ASYMMETRY_REJECT}")
    S = 0.5 * (M + M.T)
    S.flags.writeable = False
    return S


@dataclass(frozen=True)
class CanonicalProblem:
    """Immutable instance data: A, the B_k stack, the b_k stack, f, and V."""

    A: np.ndarray
    B: np.ndarray          # (m, n, n) stack, each slice symmetric
    b: np.ndarray          # (m, n) stack
    f: np.ndarray
    V: CanonicalFunction
    n: int = field(init=False)
    m: int = field(init=False)

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got shape {A.shape}")
        n = A.shape[0]
        B_in = list(self.B)
        m = len(B_in)
        if m < 1:
            raise ValueError("at least one quadratic measure B_k is required")
        if self.V.m != m:
            raise ValueError(f"family dimension {self.V.m} != number of B blocks {m}")
        b_in = list(self.b)
        if len(b_in) != m:
            raise ValueError(f"b has {len(b_in)} blocks, expected {m}")

        A = _ingest_symmetric(A, n, "A")
        B = np.empty((m, n, n))
        for k, Bk in enumerate(B_in):
            B[k] = _ingest_symmetric(Bk, n, f"B[{k}]")
        b = np.empty((m, n))
        for k, bk in enumerate(b_in):
            bk = np.asarray(bk, dtype=float)
            if bk.shape != (n,):
                raise ValueError(f"b[{k}] must have shape ({n},), got {bk.shape}")
            b[k] = bk
        f = np.asarray(self.f, dtype=float)
        if f.shape != (n,):
            raise ValueError(f"f must have shape ({n},), got {f.shape}")
        f = f.copy()

        for arr in (B, b, f):
            arr.flags.writeable = False
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "m", m)

    def check_x(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"x must have shape ({self.n},), got {x.shape}")
        return x

    def check_sigma(self, sigma):
        sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
        if sigma.shape != (self.m,):
            raise ValueError(f"sigma must have shape ({self.m},), got {sigma.shape}")
        return sigma


def lambda_of(p: CanonicalProblem, x) -> np.ndarray:
    """Quadratic measure Lambda(x), component k = x'B_k x / 2 + b_k'x."""
    x = p.check_x(x)
    return 0.5 * (p.B @ x) @ x + p.b @ x


def grad_lambda(p: CanonicalProblem, x) -> np.ndarray:
    """Jacobian of Lambda as an n-by-m matrix; column k = B_k x + b_k."""
    x = p.check_x(x)
    return (p.B @ x + p.b).T


def lambda_batch(p: CanonicalProblem, X) -> np.ndarray:
    """Lambda at each row of an (N, n) sample block; returns (N, m)."""
    X = np.asarray(X, dtype=float)
    quad = 0.5 * np.einsum("ni,kij,nj->nk", X, p.B, X, optimize=True)
    return quad + X @ p.b.T


def primal_value(p: CanonicalProblem, x) -> float:
    """Pi(x) = V(Lambda(x)) + x'Ax/2 - x'f.  Raises DomainError off-domain."""
    x = p.check_x(x)
    return float(p.V.value(lambda_of(p, x)) + 0.5 * x @ p.A @ x - x @ p.f)


def primal_values_batch(p: CanonicalProblem, X) -> np.ndarray:
    """Pi at each row of an (N, n) block; +inf where Lambda(x) leaves V's domain."""
    X = np.asarray(X, dtype=float)
    xi = lambda_batch(p, X)
    feas = np.asarray(p.V.in_domain(np.where(np.isfinite(xi), xi, 0.0)))
    feas &= np.all(np.isfinite(xi), axis=-1)
    out = np.full(X.shape[0], np.inf)
    if np.any(feas):
        vals = p.V.value(xi[feas])
        quad = 0.5 * np.einsum("ni,ij,nj->n", X[feas], p.A, X[feas], optimize=True)
        out[feas] = vals + quad - X[feas] @ p.f
    return out


def primal_gradient(p: CanonicalProblem, x) -> np.ndarray:
    """grad Pi(x) = grad Lambda(x) . grad V(Lambda(x)) + Ax - f."""
    x = p.check_x(x)
    s = p.V.gradient(lambda_of(p, x))
    return grad_lambda(p, x) @ s + p.A @ x - p.f


# tolerance for the caller-supplied dual image in primal_hessian
SIGMA_CONSISTENCY = 1e-8


def primal_hessian(p: CanonicalProblem, x, sigma) -> np.ndarray:
    """Second derivative of Pi at x, written through the canonical image.

    The caller supplies sigma = grad V(Lambda(x)); the identity
    hess V(xi) = (hess V*(sigma))^-1 turns the direct second derivative into

        G(sigma) + grad Lambda(x) (hess V*(sigma))^-1 grad Lambda(x)'.

    Raises ConsistencyError when sigma is not the canonical image of x.
    """
    x = p.check_x(x)
    sigma = p.check_sigma(sigma)
    sig_true = p.V.gradient(lambda_of(p, x))
    if np.linalg.norm(sigma - sig_true) > SIGMA_CONSISTENCY * (1.0 + np.linalg.norm(sig_true)):
        raise ConsistencyError(
            f"sigma differs from grad V(Lambda(x)) by {np.linalg.norm(sigma - sig_true):.3e}"
        )
    G = p.A + np.tensordot(sigma, p.B, axes=1)
    L = grad_lambda(p, x)
    W = np.linalg.inv(p.V.conj_hessian(sigma))
    H = G + L @ W @ L.T
    return 0.5 * (H + H.T)
