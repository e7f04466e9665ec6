"""Exception types raised by discpool."""

import numpy as np


class PoolingError(Exception):
    """Base class for all discpool errors."""


class EmptyClassError(PoolingError, ValueError):
    """A class label in 1..Q has no contributing samples."""


class ShapeMismatchError(PoolingError, ValueError):
    """Spatial shapes, channel counts or scale factors are incompatible."""


class DimensionMismatchError(PoolingError, ValueError):
    """Matrix or vector dimensions do not agree."""


class OutOfRangeError(PoolingError, IndexError):
    """A 1-based index lies outside its valid range."""


class NotPositiveDefiniteError(PoolingError, np.linalg.LinAlgError):
    """Cholesky factorization failed even with the ridge term."""


class SingularMatrixError(PoolingError, np.linalg.LinAlgError):
    """Explicit matrix inversion failed."""


class MalformedFileError(PoolingError, ValueError):
    """A dataset or operator file does not match its binary layout."""
