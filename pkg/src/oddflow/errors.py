"""Exception hierarchy shared across the package."""


class OddflowError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(OddflowError):
    """Bad configuration, malformed file, or invalid argument."""


class GridMismatchError(OddflowError):
    """Operands live on different grids or have the wrong shape."""


class HermitianSymmetryError(OddflowError):
    """A field claiming to be real-valued has a complex residue."""


class MeanModeError(OddflowError):
    """Operator requires a mean-zero field and got one with nonzero mean."""


class ConvergenceError(OddflowError):
    """Iterative solver ran out of iterations before reaching tolerance."""


class CancellationIdentityError(OddflowError):
    """A derived algebraic identity failed beyond its tolerance, which
    indicates corrupted or out-of-contract inputs."""


class RuntimeAbort(OddflowError):
    """Integration aborted (vacuum breach or non-finite values).

    Carries the offending time and a description of the quantity.
    """

    def __init__(self, message, t=None, quantity=None):
        super().__init__(message)
        self.t = t
        self.quantity = quantity
