"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration errors -> 2, data errors
-> 3, numerical errors -> 4.
"""


class ConfigurationError(ValueError):
    """Invalid parameters, shapes of *settings*, or ill-formed specs."""


class DataError(ValueError):
    """Bad input data: empty sample sets, non-finite values, broken files."""


class ShapeError(DataError):
    """Dimension mismatch between data arrays."""


class NumericalError(RuntimeError):
    """Base class for failures of the numerical pipeline itself."""


class SingularCovariance(NumericalError):
    """E[xx^T] is numerically singular: degenerate inputs or too few samples."""


class DegenerateSpan(NumericalError):
    """The null-space basis does not behave like a simultaneously
    diagonalizable family (near-singular probes or clustered eigenvalues
    after all retries)."""


class ComplexEigenpairs(NumericalError):
    """Eigen decomposition kept returning eigenpairs with large imaginary
    parts; valid inputs give real spectra almost surely."""


class ConvergenceFailure(NumericalError):
    """ALS failed to converge in every restart."""

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class RankDeficiency(NumericalError):
    """A matrix that must have rank k does not, within tolerance."""


class DivergenceError(NumericalError):
    """Gradient descent produced a non-finite loss."""


class AmbiguousSignWarning(UserWarning):
    """A sign-fix statistic was too close to zero to be trusted."""
