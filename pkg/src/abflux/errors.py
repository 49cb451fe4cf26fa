"""Exception hierarchy.

Two families: ``ValidationError`` for violated preconditions / malformed
input (CLI exit code 2) and ``NumericalError`` for runtime numerical
failures such as non-convergence (CLI exit code 1).
"""


class AbfluxError(Exception):
    pass


class ValidationError(AbfluxError):
    pass


class NumericalError(AbfluxError):
    pass


# --- geometry / configuration ---

class IntegerFluxError(ValidationError):
    """mu_m / mu_M requested for integer total flux."""


class NotOnCutError(ValidationError):
    """Point does not lie on the branch-cut set."""


class AtPoleError(ValidationError):
    """Point coincides with a pole within tolerance."""


class OnCutError(ValidationError):
    """Point lies on the branch-cut set where the phase is undefined."""


class PathConstructionError(NumericalError):
    """No cut-avoiding polyline could be constructed."""


class PoleOnLoopError(ValidationError):
    """A loop passes through a pole within tolerance."""


# --- special functions ---

class DomainError(ValidationError):
    """Argument outside the certified domain."""


class NearIntegerOrderError(ValidationError):
    """Hankel combination degenerates for near-integer order."""


class ConvergenceError(NumericalError):
    """An iteration failed to converge within its budget."""


# --- model resolvent ---

class TruncationError(NumericalError):
    """Certified mode-truncation tail exceeds the requested tolerance."""


class DiagonalError(ValidationError):
    """Tail bound requested at coincident radii where it is not summable."""


# --- lattice ---

class GeometryError(ValidationError):
    """Lattice geometry violates a build precondition."""


class ResolutionError(ValidationError):
    """Grid too coarse to separate poles."""


class GaugeMismatchError(ValidationError):
    """Gauge-fixed operators disagree where the identity requires equality."""


# --- fitting ---

class DegenerateDataError(ValidationError):
    """Samples unusable for the requested fit."""


class NonConvergenceError(NumericalError):
    """Nonlinear fit failed to converge."""


# --- wave solver ---

class CFLError(ValidationError):
    """Time step violates the stability bound."""


class HorizonError(ValidationError):
    """Requested final time would let boundary reflections pollute the probe."""


class QuadratureError(NumericalError):
    """Requested evaluation exceeds the certified quadrature range."""


class WindowError(ValidationError):
    """Fit window too short or too sparsely sampled."""


# --- cli ---

class UsageError(ValidationError):
    pass
