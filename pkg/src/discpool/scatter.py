"""Between-class and within-class scatter matrices over spatial positions.

Each sample is an ``N x C`` matrix, so an outer product ``X X^T`` sums over
channels and the scatter matrices are ``N x N``: they measure how pooling
weights on pixel pairs trade between-class spread against within-class spread.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .exceptions import EmptyClassError
from .fmap import LabeledDataset

GRAND_MEAN_CHOICES = ("algorithm", "weighted")


@dataclass(frozen=True, eq=False)
class ScatterPair:
    """Scatter matrices ``A`` (between) and ``B`` (within) with class means.

    Attributes
    ----------
    between : ndarray of shape (N, N)
    within : ndarray of shape (N, N)
    class_means : ndarray of shape (Q, N, C)
        Per-class mean feature map.
    grand_sum : ndarray of shape (N, C)
        Sum of the class means.
    class_counts : ndarray of shape (Q,)
        Number of samples that contributed per class.
    """

    between: np.ndarray
    within: np.ndarray
    class_means: np.ndarray
    grand_sum: np.ndarray
    class_counts: np.ndarray
    grand_mean: str = "algorithm"

    def __post_init__(self):
        for name in ("between", "within", "class_means", "grand_sum", "class_counts"):
            getattr(self, name).flags.writeable = False

    @property
    def n_features(self) -> int:
        return self.between.shape[0]


def select_per_class(labels: np.ndarray, max_per_class: int | None) -> np.ndarray:
    """Indices of contributing samples, ordered by label then dataset index."""
    labels = np.asarray(labels)
    order = np.argsort(labels, kind="stable")
    if max_per_class is None:
        return order
    if max_per_class < 1:
        raise ValueError("max_per_class must be positive")
    sorted_labels = labels[order]
    keep = np.zeros(order.shape, dtype=bool)
    for q in np.unique(sorted_labels):
        idx = np.flatnonzero(sorted_labels == q)
        keep[idx[:max_per_class]] = True
    return order[keep]


def _canonical(xs: np.ndarray) -> np.ndarray:
    """Order one class's samples by content so accumulation ignores input order."""
    keys = [hashlib.sha256(np.ascontiguousarray(x).tobytes()).digest() for x in xs]
    return xs[sorted(range(len(keys)), key=keys.__getitem__)]


def _symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def compute_scatter(
    data: LabeledDataset,
    max_per_class: int | None = None,
    grand_mean: str = "algorithm",
) -> ScatterPair:
    """Accumulate the scatter pair class by class.

    For each class ``q`` the sums ``S_q = sum X_k`` and ``T_q = sum X_k X_k^T``
    are formed over its samples, giving the class mean ``Xbar_q = S_q / K_q``
    and the within-class term ``T_q / K_q - Xbar_q Xbar_q^T``.  The
    between-class matrix is ``Tbar - Sbar Sbar^T / Q`` where ``Sbar`` and
    ``Tbar`` accumulate ``Xbar_q`` and ``Xbar_q Xbar_q^T``, i.e. the grand mean
    is the unweighted mean of class means.

    Within a class, samples are summed in an order fixed by their content, so
    any permutation of the dataset yields bit-identical matrices.

    Parameters
    ----------
    data : LabeledDataset
        Channel-normalized samples.
    max_per_class : int, optional
        Only the first ``max_per_class`` samples of each class (dataset order)
        contribute.
    grand_mean : {"algorithm", "weighted"}
        ``"algorithm"`` centers the class means on their unweighted mean;
        ``"weighted"`` centers them on the sample-weighted mean of all
        contributing samples instead.

    Returns
    -------
    ScatterPair
    """
    if grand_mean not in GRAND_MEAN_CHOICES:
        raise ValueError(f"grand_mean must be one of {GRAND_MEAN_CHOICES}")
    n = data.shape.size
    c = data.channels
    q_total = data.num_classes

    index = select_per_class(data.labels, max_per_class)
    labels = data.labels[index]

    grand_sum = np.zeros((n, c))
    t_bar = np.zeros((n, n))
    within = np.zeros((n, n))
    class_means = np.zeros((q_total, n, c))
    counts = np.zeros(q_total, dtype=np.int64)

    for q in range(1, q_total + 1):
        members = index[labels == q]
        k_q = members.size
        if k_q == 0:
            raise EmptyClassError(f"class {q} has no contributing samples")
        xs = _canonical(data.values[members])
        # (N, K_q * C) so that T_q = Y Y^T sums the per-sample outer products
        y = xs.transpose(1, 0, 2).reshape(n, k_q * c)
        s_q = xs.sum(axis=0)
        t_q = y @ y.T
        mean_q = s_q / k_q
        outer_q = mean_q @ mean_q.T

        class_means[q - 1] = mean_q
        counts[q - 1] = k_q
        grand_sum += mean_q
        t_bar += outer_q
        within += t_q / k_q - outer_q

    if grand_mean == "algorithm":
        between = t_bar - grand_sum @ grand_sum.T / q_total
    else:
        weighted = np.tensordot(counts, class_means, axes=1) / counts.sum()
        cross = grand_sum @ weighted.T
        between = t_bar - cross - cross.T + q_total * (weighted @ weighted.T)

    return ScatterPair(
        between=_symmetrize(between),
        within=_symmetrize(within),
        class_means=class_means,
        grand_sum=grand_sum,
        class_counts=counts,
        grand_mean=grand_mean,
    )


def rayleigh_ratio(p, scatter: ScatterPair) -> float:
    """Separability ratio ``p^T A p / p^T B p`` of a single pooling row."""
    p = np.asarray(p, dtype=np.float64)
    num = p @ scatter.between @ p
    den = p @ scatter.within @ p
    if den <= 0:
        return np.inf if num > 0 else 0.0
    return float(num / den)
