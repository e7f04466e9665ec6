"""scikit-learn transformer around :func:`discpool.pooling.fit`."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_array, check_is_fitted

from .fmap import LabeledDataset, SpatialShape
from .metrics import operator_separability
from .pooling import FitConfig, apply_values, fit


def _check_maps(X) -> np.ndarray:
    X = check_array(X, allow_nd=True, ensure_2d=False, dtype=np.float64)
    if X.ndim == 3:
        X = X[..., None]
    if X.ndim != 4:
        raise ValueError(f"expected (n_samples, I, J[, C]) feature maps, got shape {X.shape}")
    return X


def _to_flat(X: np.ndarray) -> np.ndarray:
    k, i, j, c = X.shape
    return X.transpose(0, 2, 1, 3).reshape(k, i * j, c)


class LearnedPooling(TransformerMixin, BaseEstimator):
    """Spatially-varying pooling learned in closed form from labeled maps.

    Parameters
    ----------
    alpha : float, default=0.0
        Weight of the locality penalty; 0 ignores spatial layout entirely.
    scale : float, default=2
        Downsampling factor, applied to both spatial axes.
    norm : {"l2", "l1"}, default="l2"
        Norm each pooling row is scaled to unit length in.
    n_eigvecs : {1, 2}, default=1
        Eigenvectors kept per location; 2 doubles the channel count.
    ridge : float, optional
        Diagonal loading of the constraint metric; derived from the data
        when omitted.
    max_per_class : int, optional
        Cap on samples per class entering the scatter matrices.
    epsilon : float, default=1e-8
        Floor on channel variances during normalization.
    grand_mean : {"algorithm", "weighted"}, default="algorithm"

    Attributes
    ----------
    operator_ : PoolingOperator
    classes_ : ndarray
        Original labels; class ``q`` internally is ``classes_[q - 1]``.
    eigenvalues_ : ndarray of shape (n_eigvecs, M)

    Examples
    --------
    >>> import numpy as np
    >>> from discpool import LearnedPooling
    >>> X = np.random.default_rng(0).standard_normal((20, 4, 4, 2))
    >>> y = np.arange(20) % 2
    >>> LearnedPooling(alpha=1.0).fit_transform(X, y).shape
    (20, 2, 2, 2)
    """

    def __init__(
        self,
        alpha=0.0,
        scale=2,
        norm="l2",
        n_eigvecs=1,
        ridge=None,
        max_per_class=None,
        epsilon=1e-8,
        grand_mean="algorithm",
    ):
        self.alpha = alpha
        self.scale = scale
        self.norm = norm
        self.n_eigvecs = n_eigvecs
        self.ridge = ridge
        self.max_per_class = max_per_class
        self.epsilon = epsilon
        self.grand_mean = grand_mean

    def _config(self) -> FitConfig:
        return FitConfig(
            alpha=self.alpha,
            scale=self.scale,
            norm=self.norm,
            num_eigvecs=self.n_eigvecs,
            ridge=self.ridge,
            max_per_class=self.max_per_class,
            epsilon=self.epsilon,
            grand_mean=self.grand_mean,
        )

    def _dataset(self, X, y) -> LabeledDataset:
        X = _check_maps(X)
        y = np.asarray(y)
        if y.shape != (X.shape[0],):
            raise ValueError(f"y must have shape ({X.shape[0]},), got {y.shape}")
        codes = np.minimum(np.searchsorted(self.classes_, y), len(self.classes_) - 1)
        if np.any(self.classes_[codes] != y):
            raise ValueError("y contains labels unseen during fit")
        return LabeledDataset(
            SpatialShape(X.shape[1], X.shape[2]), _to_flat(X), codes + 1, len(self.classes_)
        )

    def fit(self, X, y):
        """Learn the operator from maps ``X`` of shape ``(K, I, J[, C])``."""
        cfg = self._config()
        check_classification_targets(y)
        self.classes_ = np.unique(np.asarray(y))
        data = self._dataset(X, y)
        self.operator_ = fit(data, cfg)
        self.eigenvalues_ = self.operator_.eigenvalues
        self.n_features_in_ = data.shape.size * data.channels
        self.input_shape_ = (data.shape.rows, data.shape.cols, data.channels)
        return self

    def transform(self, X):
        """Pool ``X`` to shape ``(K, I', J', C * n_eigvecs)``."""
        check_is_fitted(self, "operator_")
        X = _check_maps(X)
        if X.shape[1:] != self.input_shape_:
            raise ValueError(f"X has map shape {X.shape[1:]}, expected {self.input_shape_}")
        op = self.operator_
        z = apply_values(op, _to_flat(X))
        k = z.shape[0]
        i2, j2 = op.output_shape
        return z.reshape(k, j2, i2, z.shape[-1]).transpose(0, 2, 1, 3)

    def score(self, X, y):
        """Mean per-location separability ratio of the pooled ``X``."""
        check_is_fitted(self, "operator_")
        return operator_separability(self.operator_, self._dataset(X, y)).aggregate
