"""Class separability of pooled outputs and learned-vs-baseline comparison."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatchError, EmptyClassError
from .fmap import DEFAULT_EPSILON, LabeledDataset, compute_channel_stats, normalize_values
from .pooling import PoolingOperator, pool_values

FLAG_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SeparabilityReport:
    """Per-location scatter and their ratio.

    ``ratio[m]`` is ``inf`` and ``flagged[m]`` is true wherever the
    within-class scatter is not above tolerance; ``aggregate`` averages the
    remaining ratios (``nan`` if none remain).
    """

    between: np.ndarray
    within: np.ndarray
    ratio: np.ndarray
    flagged: np.ndarray
    aggregate: float
    convention: str = "weighted"

    @property
    def n_locations(self) -> int:
        return self.ratio.shape[0]

    @property
    def n_flagged(self) -> int:
        return int(self.flagged.sum())

    def lines(self) -> list[str]:
        out = []
        for m in range(self.n_locations):
            ratio = "inf" if self.flagged[m] else repr(float(self.ratio[m]))
            out.append(
                f"location={m + 1} S_b={float(self.between[m])!r} "
                f"S_w={float(self.within[m])!r} ratio={ratio}"
            )
        out.append(f"aggregate={float(self.aggregate)!r}")
        out.append(f"flagged={self.n_flagged}")
        out.append(f"grand_mean={self.convention}")
        return out


def separability(pooled, labels, num_classes: int, tol: float = FLAG_TOL) -> SeparabilityReport:
    """Between/within scatter of pooled outputs at every location.

    Parameters
    ----------
    pooled : array-like of shape (K, M, C)
        The output of pooling each sample; ``pooled[k, m]`` is the vector
        ``z_k`` at location ``m``.
    labels : array-like of shape (K,)
        Labels in ``1..num_classes``.
    num_classes : int
    tol : float
        ``S_w`` at or below ``tol`` times the total spread is flagged.

    Notes
    -----
    The grand mean is the sample-weighted mean of all ``z_k``; both scatters
    carry the ``1/Q`` factor and the within term the per-class ``1/K_q``.
    """
    z = np.asarray(pooled, dtype=np.float64)
    labels = np.asarray(labels)
    if z.ndim != 3 or labels.shape != (z.shape[0],):
        raise DimensionMismatchError(f"pooled must be (K, M, C) with K labels, got {z.shape}")
    q_total = int(num_classes)
    counts = np.bincount(labels, minlength=q_total + 1)[1:]
    if counts.shape[0] != q_total or np.any(counts == 0):
        raise EmptyClassError("every class in 1..Q needs at least one sample")

    grand = z.mean(axis=0)
    sb = np.zeros(z.shape[1])
    sw = np.zeros(z.shape[1])
    for q in range(1, q_total + 1):
        zq = z[labels == q]
        mean_q = zq.mean(axis=0)
        sb += np.sum((mean_q - grand) ** 2, axis=-1)
        sw += np.sum((zq - mean_q) ** 2, axis=(0, 2)) / zq.shape[0]
    sb /= q_total
    sw /= q_total

    spread = np.mean(np.sum((z - grand) ** 2, axis=-1), axis=0)
    flagged = sw <= tol * np.maximum(spread, np.finfo(float).tiny)
    ratio = np.full(sb.shape, np.inf)
    ratio[~flagged] = sb[~flagged] / sw[~flagged]
    aggregate = float(np.mean(ratio[~flagged])) if np.any(~flagged) else float("nan")
    return SeparabilityReport(sb, sw, ratio, flagged, aggregate)


def operator_separability(
    op: PoolingOperator, data: LabeledDataset, epsilon: float = DEFAULT_EPSILON
) -> SeparabilityReport:
    """Separability of ``op`` on ``data`` in channel-standardized space.

    ``data`` is standardized with its own channel statistics and pooled by
    the raw rows, so operators with different stored statistics are scored
    on the same footing.
    """
    stats = compute_channel_stats(data)
    g = normalize_values(data.values, stats, epsilon)
    return separability(pool_values(op.rows, g), data.labels, data.num_classes)


@dataclass(frozen=True, eq=False)
class Comparison:
    """Location-wise comparison of two reports.

    ``delta`` is ``learned - baseline`` (``nan`` where either side is
    flagged); ``winner`` holds ``"learned"``, ``"baseline"``, ``"tie"`` or
    ``"excluded"`` per location.
    """

    delta: np.ndarray
    winner: np.ndarray
    excluded: int
    aggregate_learned: float
    aggregate_baseline: float
    aggregate_winner: str

    def lines(self) -> list[str]:
        out = [
            f"location={m + 1} delta={float(d)!r} winner={w}"
            for m, (d, w) in enumerate(zip(self.delta, self.winner))
        ]
        out.append(f"aggregate_learned={self.aggregate_learned!r}")
        out.append(f"aggregate_baseline={self.aggregate_baseline!r}")
        out.append(f"aggregate_winner={self.aggregate_winner}")
        out.append(f"excluded={self.excluded}")
        return out


def _winner(a: float, b: float) -> str:
    if a > b:
        return "learned"
    if b > a:
        return "baseline"
    return "tie"


def compare(learned: SeparabilityReport, baseline: SeparabilityReport) -> Comparison:
    if learned.n_locations != baseline.n_locations:
        raise DimensionMismatchError(
            f"reports cover {learned.n_locations} and {baseline.n_locations} locations"
        )
    excluded = learned.flagged | baseline.flagged
    delta = np.where(excluded, np.nan, learned.ratio - baseline.ratio)
    winner = np.array(
        [
            "excluded" if ex else _winner(a, b)
            for ex, a, b in zip(excluded, learned.ratio, baseline.ratio)
        ]
    )
    keep = ~excluded
    agg_l = float(np.mean(learned.ratio[keep])) if keep.any() else float("nan")
    agg_b = float(np.mean(baseline.ratio[keep])) if keep.any() else float("nan")
    agg_winner = _winner(agg_l, agg_b) if keep.any() else "excluded"
    return Comparison(delta, winner, int(excluded.sum()), agg_l, agg_b, agg_winner)
