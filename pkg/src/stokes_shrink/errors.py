"""Exception hierarchy shared by all modules."""


class StokesShrinkError(Exception):
    """Base class for every error raised by the package."""


class HypothesisViolation(StokesShrinkError):
    """The four-disk geometry hypothesis cannot hold for the given radii."""


class NonpositiveRadius(StokesShrinkError):
    """A radius is not positive or the radii are out of order."""


class UnknownTag(StokesShrinkError):
    """Region tag not recognised."""


class TruncationTooSmall(StokesShrinkError):
    """Radial truncation below the minimum supported size."""


class QuadratureFailure(StokesShrinkError):
    """Quadrature refinement changed an integral by more than the tolerance."""


class NotPositiveDefinite(StokesShrinkError):
    """The S0 Gram matrix failed its Cholesky factorisation."""


class ConvergenceFailure(StokesShrinkError):
    """Eigenpairs do not satisfy the residual tolerance."""


class SingularSystem(StokesShrinkError):
    """A linear solve was rank deficient."""


class DegenerateTraceSystem(StokesShrinkError):
    """Trace matching system for the harmonic part is singular."""


class RegionOutsideDomain(StokesShrinkError):
    """Region not contained in the domain where an expansion is defined."""


class ZeroFunction(StokesShrinkError):
    """A ratio was requested for an identically zero function."""


class NotInV0(StokesShrinkError):
    """Vorticity is not orthogonal to the harmonic functions of the disk."""


class ModeTruncationInsufficient(StokesShrinkError):
    """Omitted angular modes would contribute below the requested eigenvalue."""


class GroupMismatch(StokesShrinkError):
    """Eigenspace dimensions differ between the two domains."""


class TailTooLarge(StokesShrinkError):
    """Field not represented by the computed eigenbasis to tolerance."""


class StepRejected(StokesShrinkError):
    """Embedded error estimate exceeded the step tolerance."""

    def __init__(self, err, tol):
        super().__init__(f"step error {err:.3e} exceeds tolerance {tol:.3e}")
        self.err = err
        self.tol = tol


class SupportViolation(StokesShrinkError):
    """Cutoff support intersects the hole."""


class ConfigInvalid(StokesShrinkError):
    """Experiment configuration failed validation."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


class CommandUnknown(StokesShrinkError):
    """CLI command not recognised."""


class CacheCorrupt(StokesShrinkError):
    """Cached payload failed checksum verification."""
