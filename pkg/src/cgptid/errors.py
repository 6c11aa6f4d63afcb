"""Exception types shared across the package."""


class CgptIdError(Exception):
    """Base class for domain errors raised by this package."""


class DegenerateGeometryError(CgptIdError):
    """Boundary is self-intersecting, has coincident nodes, or is otherwise unusable."""


class NearBoundaryError(CgptIdError):
    """Evaluation point too close to the boundary for plain quadrature accuracy."""


class ContrastError(CgptIdError):
    """Contrast outside the invertible range, or a scale ratio with the wrong sign."""


class NumericalFailureError(CgptIdError):
    """A linear solve produced an unacceptable residual or a singular factorization."""


class IllPosedSystemError(CgptIdError):
    """Coefficient matrix rank-deficient at some order; reconstruction not possible."""

    def __init__(self, message, order=None):
        super().__init__(message)
        self.order = order


class DegenerateCandidateError(CgptIdError):
    """Dictionary element violates the conditioning assumptions of the direct estimator."""


class DegenerateNormalizationError(CgptIdError):
    """A diagonal normalizer for the shape descriptors vanished."""


class NoSymmetryDetectedError(CgptIdError):
    """No anti-diagonal of the first descriptor matrix stands above the noise floor."""
