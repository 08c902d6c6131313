"""Built-in synthetic datasets: smoke-test blobs and the ringed planted
problem used to exercise hyperparameter search."""

from __future__ import annotations

import numpy as np

from . import rng
from .data_metrics import LabeledFeatures

_BLOBS_STREAM = 100
_RINGS_STREAM = 101


def blobs(
    n_train: int = 600,
    n_test: int = 150,
    classes: int = 3,
    dims: int = 12,
    separation: float = 6.0,
    seed: int = 0,
) -> tuple[LabeledFeatures, LabeledFeatures]:
    """Unit-variance gaussian blobs with centers at least `separation` apart.

    Returns (train, test); class counts are as balanced as the totals allow.
    """
    if classes > dims:
        raise ValueError("blobs needs dims >= classes")
    g = rng.stream_rng(seed, rng.SPLIT, _BLOBS_STREAM)
    # Orthogonal directions at distinct radii: classes are at least
    # `separation` apart and never sit symmetrically around the data mean,
    # so they survive both the direct path and the radial connection layer.
    q, _ = np.linalg.qr(g.standard_normal((dims, classes)))
    radii = separation * (0.8 + 0.9 * np.arange(classes))
    centers = q.T[:classes] * radii[:, None]

    def make(n: int) -> LabeledFeatures:
        labels = np.arange(n) % classes
        x = centers[labels] + g.standard_normal((n, dims))
        perm = g.permutation(n)
        return LabeledFeatures(x=x[perm], labels=labels[perm], classes=classes)

    return make(n_train), make(n_test)


def planted_rings(
    n: int = 1600,
    bands: float = 6.75,
    radius: float = 3.0,
    seed: int = 0,
) -> LabeledFeatures:
    """2-D two-class problem with alternating annular bands.

    The boundary is high-frequency in the radius, so a wide enhancement layer
    is required before the classifier can separate it; that makes the node
    count a planted structure for search tests to find.
    """
    g = rng.stream_rng(seed, rng.SPLIT, _RINGS_STREAM)
    r = np.sqrt(g.uniform(0.0, 1.0, n)) * radius
    theta = g.uniform(0.0, 2.0 * np.pi, n)
    x = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)
    labels = (np.floor(r / (radius / bands)).astype(np.int64)) % 2
    return LabeledFeatures(x=x, labels=labels, classes=2)
