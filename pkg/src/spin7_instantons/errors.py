"""Exception types raised when a numerical or structural check fails."""


class BasisDecompositionError(ValueError):
    """An element expected in the Lie algebra does not lie in the span of the basis."""


class InvarianceError(ValueError):
    """A form or map that should be isotropy invariant is not."""


class InconsistentSystemError(ValueError):
    """A coefficient system has no admissible solution."""


class FlowError(RuntimeError):
    """ODE integration failed or drifted beyond tolerance."""


class CarrierError(ValueError):
    """A representation carrier failed its homomorphism or Casimir checks."""


class HomDimensionError(ValueError):
    """An intertwiner space disagrees with its Schur count."""


class SpectralError(ValueError):
    """A block spectrum violated a structural expectation."""


class CriticalRateError(ValueError):
    """A weight coincides with a critical rate."""


class CliffordError(ValueError):
    """Gamma matrices fail the Clifford relations."""


class EmptyBlockError(SpectralError):
    """A Frobenius block has no intertwiners, so there is no operator to build."""
