"""Synthetic labeled feature maps."""

from __future__ import annotations

import numpy as np

from .fmap import LabeledDataset, SpatialShape
from .locality import index_of_coord


def make_planted_signal(
    shape=(8, 8),
    channels: int = 4,
    n_samples: int = 400,
    n_classes: int = 2,
    signal_pixel=(5, 5),
    separation: float = 2.0,
    seed=None,
) -> tuple[LabeledDataset, int]:
    """Unit Gaussian noise with class information at a single pixel.

    Class ``q`` adds ``separation * (q - (Q + 1) / 2)`` to every channel of
    ``signal_pixel`` (1-based ``(i, j)``); all other pixels are pure noise.
    Labels are balanced and shuffled.

    Returns
    -------
    data : LabeledDataset
    signal_index : int
        1-based column-major index of the signal pixel.
    """
    rng = np.random.default_rng(seed)
    shape = SpatialShape(*shape)
    n_sig = index_of_coord(*signal_pixel, shape)
    labels = np.arange(n_samples) % n_classes + 1
    rng.shuffle(labels)
    values = rng.standard_normal((n_samples, shape.size, channels))
    offsets = separation * (labels - (n_classes + 1) / 2)
    values[:, n_sig - 1, :] += offsets[:, None]
    return LabeledDataset(shape, values, labels, n_classes), n_sig


def make_random_dataset(
    shape=(4, 4), channels: int = 3, n_samples: int = 40, n_classes: int = 3, seed=None
) -> LabeledDataset:
    """Gaussian maps with a random per-class mean map; every class non-empty."""
    rng = np.random.default_rng(seed)
    shape = SpatialShape(*shape)
    labels = np.concatenate(
        [np.arange(1, n_classes + 1), rng.integers(1, n_classes + 1, n_samples - n_classes)]
    )
    rng.shuffle(labels)
    centers = rng.standard_normal((n_classes, shape.size, channels))
    values = centers[labels - 1] + rng.standard_normal((n_samples, shape.size, channels))
    return LabeledDataset(shape, values, labels, n_classes)
