"""Feature-map containers, column-major flattening and channel normalization.

A feature map of depth ``C`` over an ``I x J`` grid is stored flattened as an
``N x C`` matrix (``N = I * J``).  Each column is the column-major (Fortran
order) flattening of one channel's grid, so the row index ``i`` varies
fastest.  All public coordinates are 1-based; arrays are 0-based internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .exceptions import EmptyClassError, ShapeMismatchError

DEFAULT_EPSILON = 1e-8


def _frozen(array, dtype=np.float64) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class SpatialShape:
    """Grid size ``rows x cols`` of a spatial domain."""

    rows: int
    cols: int

    def __post_init__(self):
        if int(self.rows) != self.rows or int(self.cols) != self.cols:
            raise ShapeMismatchError(f"shape must be integral, got {self.rows}x{self.cols}")
        if self.rows < 1 or self.cols < 1:
            raise ShapeMismatchError(f"shape must be positive, got {self.rows}x{self.cols}")
        object.__setattr__(self, "rows", int(self.rows))
        object.__setattr__(self, "cols", int(self.cols))

    @property
    def size(self) -> int:
        return self.rows * self.cols

    def __iter__(self):
        return iter((self.rows, self.cols))


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """One sample: ``values`` is ``N x C`` with column-major spatial rows."""

    shape: SpatialShape
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != self.shape.size:
            raise ShapeMismatchError(
                f"values must be ({self.shape.size}, C), got {values.shape}"
            )
        object.__setattr__(self, "values", _frozen(values))

    @property
    def channels(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_grid(cls, grid) -> "FeatureMap":
        """Build from an ``(I, J)`` or ``(I, J, C)`` array."""
        grid = np.asarray(grid, dtype=np.float64)
        if grid.ndim == 2:
            grid = grid[:, :, None]
        if grid.ndim != 3:
            raise ShapeMismatchError(f"grid must be 2-D or 3-D, got ndim={grid.ndim}")
        shape = SpatialShape(grid.shape[0], grid.shape[1])
        return cls(shape, grid.reshape(shape.size, grid.shape[2], order="F"))

    def to_grid(self) -> np.ndarray:
        """Return the ``(I, J, C)`` grid."""
        return unflatten(self.values, self.shape)


@dataclass(frozen=True, eq=False)
class ChannelStats:
    """Per-channel mean and population variance."""

    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        means = np.atleast_1d(np.asarray(self.means, dtype=np.float64))
        variances = np.atleast_1d(np.asarray(self.variances, dtype=np.float64))
        if means.ndim != 1 or means.shape != variances.shape:
            raise ShapeMismatchError("means and variances must be equal-length vectors")
        if np.any(variances < 0):
            raise ValueError("variances must be non-negative")
        object.__setattr__(self, "means", _frozen(means))
        object.__setattr__(self, "variances", _frozen(variances))

    @property
    def channels(self) -> int:
        return self.means.shape[0]

    @classmethod
    def identity(cls, channels: int) -> "ChannelStats":
        return cls(np.zeros(channels), np.ones(channels))

    def scales(self, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
        return np.sqrt(np.maximum(self.variances, epsilon))


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """``K`` feature maps sharing one shape, with labels in ``1..Q``.

    Samples are held as a single ``(K, N, C)`` array; :attr:`samples` gives
    the per-sample :class:`FeatureMap` view.
    """

    shape: SpatialShape
    values: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        labels = np.asarray(self.labels)
        if values.ndim != 3 or values.shape[1] != self.shape.size:
            raise ShapeMismatchError(
                f"values must be (K, {self.shape.size}, C), got {values.shape}"
            )
        if values.shape[0] < 1:
            raise ValueError("dataset needs at least one sample")
        if labels.shape != (values.shape[0],):
            raise ShapeMismatchError(
                f"expected {values.shape[0]} labels, got shape {labels.shape}"
            )
        if not np.issubdtype(labels.dtype, np.integer):
            if not np.all(np.equal(np.mod(labels, 1), 0)):
                raise ValueError("labels must be integers")
        labels = labels.astype(np.int64)
        q = int(self.num_classes)
        if q < 1:
            raise ValueError("num_classes must be positive")
        if labels.min() < 1 or labels.max() > q:
            raise ValueError(f"labels must lie in 1..{q}")
        counts = np.bincount(labels, minlength=q + 1)[1:]
        if np.any(counts == 0):
            missing = [int(c) + 1 for c in np.flatnonzero(counts == 0)]
            raise EmptyClassError(f"classes without samples: {missing}")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "labels", _frozen(labels, np.int64))
        object.__setattr__(self, "num_classes", q)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def channels(self) -> int:
        return self.values.shape[2]

    @property
    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes + 1)[1:]

    @property
    def samples(self) -> list[FeatureMap]:
        return list(self)

    def __len__(self) -> int:
        return self.n_samples

    def __iter__(self) -> Iterator[FeatureMap]:
        for x in self.values:
            yield FeatureMap(self.shape, x)

    @classmethod
    def from_samples(
        cls, samples: Sequence[FeatureMap], labels, num_classes: int | None = None
    ) -> "LabeledDataset":
        if not samples:
            raise ValueError("dataset needs at least one sample")
        shape = samples[0].shape
        channels = samples[0].channels
        for fm in samples:
            if fm.shape != shape or fm.channels != channels:
                raise ShapeMismatchError("all samples must share shape and channel count")
        labels = np.asarray(labels)
        if num_classes is None:
            num_classes = int(labels.max())
        return cls(shape, np.stack([fm.values for fm in samples]), labels, num_classes)

    @classmethod
    def from_grids(cls, grids, labels, num_classes: int | None = None) -> "LabeledDataset":
        """Build from a ``(K, I, J)`` or ``(K, I, J, C)`` array."""
        grids = np.asarray(grids, dtype=np.float64)
        if grids.ndim == 3:
            grids = grids[..., None]
        if grids.ndim != 4:
            raise ShapeMismatchError(f"grids must be 3-D or 4-D, got ndim={grids.ndim}")
        k, i, j, c = grids.shape
        shape = SpatialShape(i, j)
        values = grids.transpose(0, 2, 1, 3).reshape(k, shape.size, c)
        labels = np.asarray(labels)
        if num_classes is None:
            num_classes = int(labels.max())
        return cls(shape, values, labels, num_classes)

    def to_grids(self) -> np.ndarray:
        """Return the ``(K, I, J, C)`` array."""
        k, _, c = self.values.shape
        i, j = self.shape
        return self.values.reshape(k, j, i, c).transpose(0, 2, 1, 3)

    def with_values(self, values) -> "LabeledDataset":
        return LabeledDataset(self.shape, values, self.labels, self.num_classes)


def flatten(grid) -> np.ndarray:
    """Column-major flattening of an ``I x J`` grid.

    ``out[(j-1)*I + i]`` (1-based) holds ``grid[i, j]``.

    >>> flatten([[1, 2], [3, 4]])
    array([1., 3., 2., 4.])
    """
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 2:
        raise ShapeMismatchError(f"grid must be 2-D, got ndim={grid.ndim}")
    return grid.ravel(order="F")


def unflatten(values, shape: SpatialShape) -> np.ndarray:
    """Inverse of :func:`flatten`.

    A length-``N`` vector gives an ``(I, J)`` grid; an ``N x C`` matrix gives
    an ``(I, J, C)`` grid.
    """
    values = np.asarray(values)
    if values.shape[0] != shape.size:
        raise ShapeMismatchError(f"expected {shape.size} rows, got {values.shape[0]}")
    if values.ndim == 1:
        return values.reshape(shape.rows, shape.cols, order="F")
    return values.reshape(shape.rows, shape.cols, values.shape[1], order="F")


def compute_channel_stats(data: LabeledDataset) -> ChannelStats:
    """Mean and population variance of each channel over all pixels and samples.

    Sums are exactly rounded, so the result does not depend on sample order.
    """
    flat = data.values.reshape(-1, data.channels)
    count = flat.shape[0]
    means = np.array([math.fsum(col) / count for col in flat.T])
    variances = np.array([math.fsum(col) / count for col in ((flat - means) ** 2).T])
    return ChannelStats(means, variances)


def _check_channels(values: np.ndarray, stats: ChannelStats):
    if values.shape[-1] != stats.channels:
        raise ShapeMismatchError(
            f"{values.shape[-1]} channels but stats cover {stats.channels}"
        )


def normalize_values(values, stats: ChannelStats, epsilon: float = DEFAULT_EPSILON):
    """Array form of :func:`normalize_channels`; channels on the last axis."""
    values = np.asarray(values, dtype=np.float64)
    _check_channels(values, stats)
    return (values - stats.means) / stats.scales(epsilon)


def denormalize_values(values, stats: ChannelStats, epsilon: float = DEFAULT_EPSILON):
    """Array form of :func:`denormalize_channels`; channels on the last axis."""
    values = np.asarray(values, dtype=np.float64)
    _check_channels(values, stats)
    return values * stats.scales(epsilon) + stats.means


def normalize_channels(
    fm: FeatureMap, stats: ChannelStats, epsilon: float = DEFAULT_EPSILON
) -> FeatureMap:
    """Standardize each channel: ``(f - mean) / sqrt(max(var, epsilon))``."""
    return FeatureMap(fm.shape, normalize_values(fm.values, stats, epsilon))


def denormalize_channels(
    fm: FeatureMap, stats: ChannelStats, epsilon: float = DEFAULT_EPSILON
) -> FeatureMap:
    """Exact inverse of :func:`normalize_channels`.

    Multiplies by the standard deviation (not the variance) before adding the
    mean back.
    """
    return FeatureMap(fm.shape, denormalize_values(fm.values, stats, epsilon))


def normalize_dataset(
    data: LabeledDataset, stats: ChannelStats | None = None, epsilon: float = DEFAULT_EPSILON
) -> tuple[LabeledDataset, ChannelStats]:
    """Normalize every sample, computing stats from ``data`` when not given."""
    if stats is None:
        stats = compute_channel_stats(data)
    return data.with_values(normalize_values(data.values, stats, epsilon)), stats
