"""Exception types shared across the package."""


class CanonicalDualityError(Exception):
    """Base class for all library-specific errors."""


class DomainError(CanonicalDualityError):
    """A point lies outside the domain of the function being evaluated."""


class ConsistencyError(CanonicalDualityError):
    """Supplied dual variable does not match the canonical image of the primal point."""


class SingularGError(CanonicalDualityError):
    """G(sigma) is singular and the equilibrium system has no admissible solution."""


class SingularHessianError(CanonicalDualityError):
    """A Hessian required to be invertible is singular at the working tolerance."""


class DegenerateSpectrumError(CanonicalDualityError):
    """An eigenvalue sits at zero within tolerance, so a sign-split basis is undefined."""


class AllInfeasibleError(CanonicalDualityError):
    """Every probe sample fell outside the primal domain, even after shrinking."""


class BoxTooCoarseError(CanonicalDualityError):
    """The grid minimizer landed on the search box boundary; the box does not bracket it."""


class SchemaError(CanonicalDualityError):
    """A problem document violates the schema. The message names the offending field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
