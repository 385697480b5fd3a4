"""Small stimulus and hierarchy builders shared by the test modules."""

from __future__ import annotations

import numpy as np

from attnctl.hierarchy import HierarchyConfig, Stimulus, build_hierarchy

CORPUS_KINDS = ("items", "dense", "sparse")


def small_hierarchy(beta: float = 0.5, channels: int = 3, size: int = 8):
    return build_hierarchy(HierarchyConfig((channels, size, size), (channels,) * 3, (2, 2), (2, 2), beta=beta))


def tiny_hierarchy(seed: int, beta: float = 0.5):
    """At most 48 units; every third seed gets sparse random weights."""
    rng = np.random.default_rng(seed)
    rfs, strides = ((2, 2), (2, 2)) if seed % 2 == 0 else ((2, 1), (2, 1))
    weights = None
    if seed % 3 == 0:
        weights = (rng.random((2, 2, 1, 1)) * (rng.random((2, 2, 1, 1)) < 0.7),) + tuple(
            rng.random((2, 2, r, r)) * (rng.random((2, 2, r, r)) < 0.7) for r in rfs
        )
    return build_hierarchy(HierarchyConfig((2, 4, 4), (2, 2, 2), rfs, strides, weights=weights, beta=beta))


def random_stimulus(rng, channels: int = 3, size: int = 8, kind: str | None = None) -> Stimulus:
    kind = kind or CORPUS_KINDS[int(rng.integers(0, len(CORPUS_KINDS)))]
    v = np.zeros((channels, size, size))
    if kind == "dense":
        v = rng.random((channels, size, size))
    elif kind == "sparse":
        v = rng.random((channels, size, size)) * (rng.random((channels, size, size)) < 0.2)
    else:
        for _ in range(int(rng.integers(1, 5))):
            y, x = rng.integers(0, size - 1, size=2)
            v[int(rng.integers(0, channels)), y : y + 2, x : x + 2] = rng.uniform(0.2, 1.0)
    return Stimulus(v)


def item_stimulus(channels: int, size: int, items) -> Stimulus:
    """``items`` is a list of (channel, y, x, side, value) squares."""
    v = np.zeros((channels, size, size))
    for c, y, x, side, val in items:
        v[c, y : y + side, x : x + side] = val
    return Stimulus(v)
