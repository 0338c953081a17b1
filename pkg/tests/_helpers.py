"""Builders shared across test modules."""

from __future__ import annotations

import numpy as np

from edgeclust.aggregation import Dataset, EdgeSummary
from edgeclust.geometry import Point2, Region

UNIT_REGION = Region(0.0, 1.0, 0.0, 1.0)


def make_dataset(counts, centroids, region=UNIT_REGION) -> Dataset:
    """Dataset with edge ids 0..n-1, bypassing the snapping pipeline."""
    summaries = tuple(
        EdgeSummary(i, int(c), Point2(float(x), float(y)))
        for i, (c, (x, y)) in enumerate(zip(counts, centroids))
    )
    return Dataset(summaries, region)


def random_dataset(rng: np.random.Generator, n: int, region=UNIT_REGION) -> Dataset:
    counts = rng.integers(1, 12, size=n)
    pad_x = 0.05 * (region.xmax - region.xmin)
    pad_y = 0.05 * (region.ymax - region.ymin)
    xs = rng.uniform(region.xmin + pad_x, region.xmax - pad_x, size=n)
    ys = rng.uniform(region.ymin + pad_y, region.ymax - pad_y, size=n)
    return make_dataset(counts, np.column_stack([xs, ys]), region)


def batch_means_se(x, n_batches: int = 100) -> float:
    """Monte Carlo standard error of the mean via nonoverlapping batch means."""
    x = np.asarray(x, dtype=float)
    usable = (len(x) // n_batches) * n_batches
    batches = x[:usable].reshape(n_batches, -1).mean(axis=1)
    return float(batches.std(ddof=1) / np.sqrt(n_batches))
