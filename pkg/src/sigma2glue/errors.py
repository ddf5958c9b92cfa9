"""Exception types shared across the package.

Every guard that rejects an input raises one of these instead of a bare
ValueError so callers (and the CLI) can map failures to exit codes.
"""


class Sigma2GlueError(Exception):
    """Base class for all package errors."""


class ConeViolation(Sigma2GlueError):
    """State left the positivity cone v > 0, v^2 - (2k/(n-2k))^2 vdot^2 > 0."""


class ToleranceNotMet(Sigma2GlueError):
    """Integrator finished but conserved-quantity drift exceeds the budget."""


class PeriodNotFound(Sigma2GlueError):
    """No second minimum of v found inside the integrated window."""


class NonPositiveFactor(Sigma2GlueError):
    """Conformal factor (or a required positive field) is not positive."""


class OutOfDomain(Sigma2GlueError):
    """Point outside the validity region of a family or expansion."""


class OrbitRangeExceeded(Sigma2GlueError):
    """Requested cylinder coordinate falls outside the integrated orbit."""


class NotRadial(Sigma2GlueError):
    """Field claimed radial fails the radial-symmetry check."""


class LowFrequencyInput(Sigma2GlueError):
    """Spherical-harmonic input contains modes below the required degree."""


class ConstantModePresent(Sigma2GlueError):
    """Exterior-decay extension requested for data with an l=0 component."""


class GridMismatch(Sigma2GlueError):
    """Sampled profile does not match the operator's grid."""


class CalibrationUnstable(Sigma2GlueError):
    """Fitted normalization varies beyond the allowed spread."""


class SingularSystem(Sigma2GlueError):
    """Banded solve hit a numerically singular matrix."""


class SeriesDiverged(Sigma2GlueError):
    """Perturbation series produced growing increments."""


class RangeViolation(Sigma2GlueError):
    """Boundary-data map evaluated outside its stated range."""


class OutsideDomain(Sigma2GlueError):
    """Fixed-point iterate left its stated domain box."""


class ContractionFailed(Sigma2GlueError):
    """Picard iteration stopped contracting."""
