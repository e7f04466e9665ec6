"""Closed-form fitting and application of spatially-varying linear pooling.

Every output location ``m`` gets its own weight vector over all ``N`` input
pixels.  Rows are the leading generalized eigenvectors of the scatter pair,
regularized by a penalty that grows with squared distance from the
location's anchor pixel.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .exceptions import ShapeMismatchError
from .fmap import (
    DEFAULT_EPSILON,
    ChannelStats,
    FeatureMap,
    LabeledDataset,
    SpatialShape,
    denormalize_values,
    normalize_dataset,
    normalize_values,
)
from .geig import default_ridge, top_k_geig
from .locality import LocalityConfig, penalty_matrix
from .scatter import GRAND_MEAN_CHOICES, ScatterPair, compute_scatter

NORM_CHOICES = ("l1", "l2")


@dataclass(frozen=True)
class FitConfig:
    """Hyperparameters of :func:`fit`.

    ``ridge=None`` resolves to ``1e-9 * max_m trace(B + alpha C_m) / N`` at
    fit time; the resolved value is what the fitted operator records.
    """

    alpha: float = 0.0
    scale: float = 2.0
    norm: str = "l2"
    num_eigvecs: int = 1
    ridge: float | None = None
    max_per_class: int | None = None
    epsilon: float = DEFAULT_EPSILON
    grand_mean: str = "algorithm"

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha}")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        norm = str(self.norm).lower()
        if norm not in NORM_CHOICES:
            raise ValueError(f"norm must be one of {NORM_CHOICES}, got {self.norm!r}")
        object.__setattr__(self, "norm", norm)
        if self.num_eigvecs not in (1, 2):
            raise ValueError(f"num_eigvecs must be 1 or 2, got {self.num_eigvecs}")
        if self.ridge is not None and not self.ridge > 0:
            raise ValueError(f"ridge must be positive, got {self.ridge}")
        if self.max_per_class is not None and self.max_per_class < 1:
            raise ValueError("max_per_class must be positive")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.grand_mean not in GRAND_MEAN_CHOICES:
            raise ValueError(f"grand_mean must be one of {GRAND_MEAN_CHOICES}")


def row_norms(rows: np.ndarray, norm: str) -> np.ndarray:
    order = 1 if norm == "l1" else 2
    return np.linalg.norm(rows, ord=order, axis=-1)


@dataclass(frozen=True, eq=False)
class PoolingOperator:
    """A fitted (or hand-built) pooling operator.

    Attributes
    ----------
    rows : ndarray of shape (num_eigvecs, M, N)
        ``rows[r, m-1]`` pools the input for output location ``m`` and
        eigen-index ``r+1``.
    input_shape, output_shape : SpatialShape
    channel_stats : ChannelStats
        Statistics used to normalize inputs and denormalize outputs.
    config : FitConfig
    eigenvalues, residuals : ndarray of shape (num_eigvecs, M), optional
        Solver diagnostics; not persisted.
    """

    rows: np.ndarray
    input_shape: SpatialShape
    output_shape: SpatialShape
    channel_stats: ChannelStats
    config: FitConfig
    eigenvalues: np.ndarray | None = None
    residuals: np.ndarray | None = None

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.float64)
        if rows.ndim == 2:
            rows = rows[None]
        expected = (self.config.num_eigvecs, self.output_shape.size, self.input_shape.size)
        if rows.shape != expected:
            raise ShapeMismatchError(f"rows must have shape {expected}, got {rows.shape}")
        rows.flags.writeable = False
        object.__setattr__(self, "rows", rows)

    @property
    def num_eigvecs(self) -> int:
        return self.rows.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.rows.shape[1]

    @property
    def n_inputs(self) -> int:
        return self.rows.shape[2]

    def row(self, location: int, eigvec: int = 1) -> np.ndarray:
        """Weights of 1-based ``location`` and ``eigvec``."""
        return self.rows[eigvec - 1, location - 1]


def _resolve_ridge(cfg: FitConfig, scatter: ScatterPair, penalties: np.ndarray) -> float:
    if cfg.ridge is not None:
        return float(cfg.ridge)
    worst = int(np.argmax(penalties.sum(axis=1)))
    return default_ridge(scatter.within, penalties[worst], cfg.alpha)


def fit_scatter(
    scatter: ScatterPair, locality: LocalityConfig, cfg: FitConfig
) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Solve every output location against a precomputed scatter pair.

    Returns ``(rows, eigenvalues, residuals, ridge)``; rows are normalized
    under ``cfg.norm``.
    """
    penalties = penalty_matrix(locality)
    ridge = _resolve_ridge(cfg, scatter, penalties)
    k = cfg.num_eigvecs
    m_total, n = penalties.shape
    rows = np.empty((k, m_total, n))
    eigenvalues = np.empty((k, m_total))
    residuals = np.empty((k, m_total))
    for m in range(m_total):
        sol = top_k_geig(scatter.between, scatter.within, penalties[m], cfg.alpha, ridge, k)
        vecs = sol.eigenvectors
        rows[:, m] = vecs / row_norms(vecs, cfg.norm)[:, None]
        eigenvalues[:, m] = sol.eigenvalues
        residuals[:, m] = sol.residuals
    return rows, eigenvalues, residuals, ridge


def fit(data: LabeledDataset, cfg: FitConfig | None = None) -> PoolingOperator:
    """Learn a pooling operator from labeled feature maps.

    Samples are channel-normalized with statistics of ``data``, the scatter
    pair is accumulated once, and each output location solves its own
    penalized generalized eigenproblem.
    """
    cfg = cfg or FitConfig()
    locality = LocalityConfig.from_scale(data.shape, cfg.scale)
    normalized, stats = normalize_dataset(data, epsilon=cfg.epsilon)
    scatter = compute_scatter(normalized, cfg.max_per_class, cfg.grand_mean)
    rows, eigenvalues, residuals, ridge = fit_scatter(scatter, locality, cfg)
    return PoolingOperator(
        rows=rows,
        input_shape=locality.input_shape,
        output_shape=locality.output_shape,
        channel_stats=stats,
        config=replace(cfg, ridge=ridge),
        eigenvalues=eigenvalues,
        residuals=residuals,
    )


def pool_values(rows: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Raw linear pooling without normalization.

    ``values`` is ``(N, C)`` or ``(K, N, C)``; the result stacks the
    eigen-index blocks along the channel axis: ``(..., M, r * C)``.
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim == 2:
        rows = rows[None]
    values = np.asarray(values, dtype=np.float64)
    if values.shape[-2] != rows.shape[2]:
        raise ShapeMismatchError(f"operator expects {rows.shape[2]} pixels, got {values.shape[-2]}")
    r, m, n = rows.shape
    out = np.zeros(values.shape[:-2] + (m, r, values.shape[-1]))
    # pixel-by-pixel accumulation: every output entry sums in the same order
    # regardless of channel count, batch size or BLAS threading
    weights = rows.transpose(1, 0, 2)[..., None]
    for k in range(n):
        out += weights[:, :, k] * values[..., k, None, None, :]
    return out.reshape(values.shape[:-2] + (m, r * values.shape[-1]))


def _check_input(op: PoolingOperator, shape: SpatialShape, channels: int):
    if shape != op.input_shape:
        raise ShapeMismatchError(
            f"operator expects {op.input_shape.rows}x{op.input_shape.cols} input, "
            f"got {shape.rows}x{shape.cols}"
        )
    if channels != op.channel_stats.channels:
        raise ShapeMismatchError(
            f"operator expects {op.channel_stats.channels} channels, got {channels}"
        )


def apply_values(op: PoolingOperator, values: np.ndarray) -> np.ndarray:
    """Normalize, pool and denormalize ``(..., N, C)`` values."""
    eps = op.config.epsilon
    g = normalize_values(values, op.channel_stats, eps)
    z = pool_values(op.rows, g)
    # eigen-index blocks reuse the stats of their source channel
    tiled = ChannelStats(
        np.tile(op.channel_stats.means, op.num_eigvecs),
        np.tile(op.channel_stats.variances, op.num_eigvecs),
    )
    return denormalize_values(z, tiled, eps)


def apply(op: PoolingOperator, fm: FeatureMap) -> FeatureMap:
    """Pool one feature map; output has ``C * num_eigvecs`` channels."""
    _check_input(op, fm.shape, fm.channels)
    return FeatureMap(op.output_shape, apply_values(op, fm.values))


def apply_dataset(op: PoolingOperator, data: LabeledDataset) -> LabeledDataset:
    """Pool every sample, keeping labels."""
    _check_input(op, data.shape, data.channels)
    return LabeledDataset(op.output_shape, apply_values(op, data.values), data.labels, data.num_classes)


def average_pooling_operator(
    input_shape: SpatialShape, scale: int, channels: int = 1
) -> PoolingOperator:
    """Non-overlapping ``s x s`` block averaging as a :class:`PoolingOperator`."""
    if int(scale) != scale:
        raise ShapeMismatchError(f"average pooling needs an integer scale, got {scale}")
    s = int(scale)
    locality = LocalityConfig.from_scale(input_shape, s)
    i_in = input_shape.rows
    i_out, j_out = locality.output_shape
    rows = np.zeros((locality.n_outputs, locality.n_inputs))
    for jo in range(j_out):
        for io in range(i_out):
            m = jo * i_out + io
            for dj in range(s):
                for di in range(s):
                    n = (jo * s + dj) * i_in + (io * s + di)
                    rows[m, n] = 1.0 / (s * s)
    cfg = FitConfig(alpha=0.0, scale=float(s), norm="l1", num_eigvecs=1)
    return PoolingOperator(
        rows=rows[None],
        input_shape=input_shape,
        output_shape=locality.output_shape,
        channel_stats=ChannelStats.identity(channels),
        config=cfg,
    )
