"""Canonical function families and their analytic Legendre conjugates.

A canonical function V is strictly convex on its domain, so the conjugate
V*(s) = sta{<xi; s> - V(xi)} is single-valued and the pairing

    s = grad V(xi)  <=>  xi = grad V*(s)  <=>  V(xi) + V*(s) = <xi; s>

holds wherever both sides are defined.  Families provide V and V* in closed
form; no numerical Legendre transform is performed.
"""

from __future__ import annotations

import abc

import numpy as np

from .errors import DomainError

__all__ = ["CanonicalFunction", "LogBarrierFamily", "QuadraticWellFamily", "make_family"]


class CanonicalFunction(abc.ABC):
    """Strictly convex function of an m-vector with an analytic conjugate.

    `value` and `in_domain` broadcast over leading axes (inputs of shape
    (..., m)); gradients and Hessians take single m-vectors.

    `in_conj_domain` tests the declared dual feasible region used by region
    classification and the critical-point search.  Conjugate evaluation is
    permitted on the (possibly larger) set where the formulas are finite and
    raises :class:`DomainError` only where the math breaks down.
    """

    m: int

    @abc.abstractmethod
    def value(self, xi) -> np.ndarray | float: ...

    @abc.abstractmethod
    def gradient(self, xi) -> np.ndarray: ...

    @abc.abstractmethod
    def hessian(self, xi) -> np.ndarray: ...

    @abc.abstractmethod
    def in_domain(self, xi): ...

    @abc.abstractmethod
    def conj_value(self, sigma) -> float: ...

    @abc.abstractmethod
    def conj_gradient(self, sigma) -> np.ndarray: ...

    @abc.abstractmethod
    def conj_hessian(self, sigma) -> np.ndarray: ...

    @abc.abstractmethod
    def in_conj_domain(self, sigma) -> bool: ...

    @abc.abstractmethod
    def conj_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-coordinate (lo, hi) walls of the declared dual region.

        Infinite entries mean no wall.  `conj_lo_closed` / `conj_hi_closed`
        say whether a finite wall belongs to the region.
        """

    conj_lo_closed: bool = True
    conj_hi_closed: bool = True

    @abc.abstractmethod
    def default_dual_box(self) -> list[tuple[float, float]]:
        """Per-coordinate search intervals used when no box is configured."""

    @abc.abstractmethod
    def describe(self) -> dict:
        """JSON-ready parameter record (used by the report writer)."""


def _as_point(v, m, name):
    a = np.asarray(v, dtype=float)
    if a.shape[-1] != m:
        raise ValueError(f"{name} must have trailing dimension {m}, got shape {a.shape}")
    return a


class LogBarrierFamily(CanonicalFunction):
    """V(xi) = -sum_k log(xi_k + d_k) with offsets d_k > 0.

    Conjugate: V*(s) = sum_k (-1 - d_k s_k - log(-s_k)), obtained from the
    stationarity of <xi; s> - V(xi), which gives xi_k = -1/s_k - d_k.
    The declared dual region is -1/d_k <= s_k < 0, the image of grad V over
    the nonnegative quadratic measures this family is paired with.
    """

    conj_lo_closed = True
    conj_hi_closed = False

    def __init__(self, d):
        d = np.atleast_1d(np.asarray(d, dtype=float))
        if d.ndim != 1 or d.size == 0:
            raise ValueError("d must be a nonempty vector")
        if not np.all(d > 0):
            raise ValueError("offsets d must be positive")
        self.d = d.copy()
        self.d.flags.writeable = False
        self.m = d.size

    def value(self, xi):
        xi = _as_point(xi, self.m, "xi")
        arg = xi + self.d
        if np.any(arg <= 0):
            raise DomainError("log argument <= 0: xi outside the family domain")
        return -np.sum(np.log(arg), axis=-1)

    def gradient(self, xi):
        xi = _as_point(xi, self.m, "xi")
        arg = xi + self.d
        if np.any(arg <= 0):
            raise DomainError("log argument <= 0: xi outside the family domain")
        return -1.0 / arg

    def hessian(self, xi):
        xi = _as_point(xi, self.m, "xi")
        arg = xi + self.d
        if np.any(arg <= 0):
            raise DomainError("log argument <= 0: xi outside the family domain")
        return np.diag(1.0 / arg**2)

    def in_domain(self, xi):
        xi = _as_point(xi, self.m, "xi")
        return np.all(xi + self.d > 0, axis=-1)

    def conj_value(self, sigma):
        sigma = _as_point(sigma, self.m, "sigma")
        if np.any(sigma >= 0):
            raise DomainError("conjugate requires sigma < 0 componentwise")
        return float(np.sum(-1.0 - self.d * sigma - np.log(-sigma)))

    def conj_gradient(self, sigma):
        sigma = _as_point(sigma, self.m, "sigma")
        if np.any(sigma >= 0):
            raise DomainError("conjugate requires sigma < 0 componentwise")
        return -self.d - 1.0 / sigma

    def conj_hessian(self, sigma):
        sigma = _as_point(sigma, self.m, "sigma")
        if np.any(sigma >= 0):
            raise DomainError("conjugate requires sigma < 0 componentwise")
        return np.diag(1.0 / sigma**2)

    def in_conj_domain(self, sigma):
        sigma = _as_point(sigma, self.m, "sigma")
        lo = -1.0 / self.d
        slack = 1e-12 * (1.0 + np.abs(lo))
        return bool(np.all(sigma >= lo - slack) and np.all(sigma < 0))

    def conj_bounds(self):
        return -1.0 / self.d, np.zeros(self.m)

    def default_dual_box(self):
        lo = -1.0 / self.d
        return [(0.999 * lo_k, 0.001 * lo_k) for lo_k in lo]

    def describe(self):
        return {"kind": "log", "d": [float(v) for v in self.d]}


class QuadraticWellFamily(CanonicalFunction):
    """V(xi) = sum_k alpha_k (xi_k - lam_k)^2 / 2 with stiffness alpha_k > 0.

    Conjugate: V*(s) = sum_k (s_k^2 / (2 alpha_k) + lam_k s_k), defined on all
    of R^m.  Both sides are quadratic, so derivative identities hold exactly.
    """

    def __init__(self, alpha, lam):
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        if alpha.shape != lam.shape or alpha.ndim != 1 or alpha.size == 0:
            raise ValueError("alpha and lam must be nonempty vectors of equal length")
        if not np.all(alpha > 0):
            raise ValueError("stiffness alpha must be positive")
        self.alpha = alpha.copy()
        self.lam = lam.copy()
        self.alpha.flags.writeable = False
        self.lam.flags.writeable = False
        self.m = alpha.size

    def value(self, xi):
        xi = _as_point(xi, self.m, "xi")
        return 0.5 * np.sum(self.alpha * (xi - self.lam) ** 2, axis=-1)

    def gradient(self, xi):
        xi = _as_point(xi, self.m, "xi")
        return self.alpha * (xi - self.lam)

    def hessian(self, xi):
        _as_point(xi, self.m, "xi")
        return np.diag(self.alpha)

    def in_domain(self, xi):
        xi = _as_point(xi, self.m, "xi")
        return np.all(np.isfinite(xi), axis=-1)

    def conj_value(self, sigma):
        sigma = _as_point(sigma, self.m, "sigma")
        return float(np.sum(sigma**2 / (2.0 * self.alpha) + self.lam * sigma))

    def conj_gradient(self, sigma):
        sigma = _as_point(sigma, self.m, "sigma")
        return sigma / self.alpha + self.lam

    def conj_hessian(self, sigma):
        _as_point(sigma, self.m, "sigma")
        return np.diag(1.0 / self.alpha)

    def in_conj_domain(self, sigma):
        sigma = _as_point(sigma, self.m, "sigma")
        return bool(np.all(np.isfinite(sigma)))

    def conj_bounds(self):
        return np.full(self.m, -np.inf), np.full(self.m, np.inf)

    def default_dual_box(self):
        # heuristic span covering the canonical images of unit-scale problems
        span = 3.0 * (1.0 + self.alpha * (1.0 + np.abs(self.lam)))
        return [(-s, s) for s in span]

    def describe(self):
        return {
            "kind": "quadratic-well",
            "alpha": [float(v) for v in self.alpha],
            "lambda": [float(v) for v in self.lam],
        }


def make_family(kind: str, **params) -> CanonicalFunction:
    """Construct a built-in family by document kind name."""
    if kind == "log":
        return LogBarrierFamily(**params)
    if kind == "quadratic-well":
        return QuadraticWellFamily(**params)
    raise ValueError(f"unknown family kind: {kind!r}")
