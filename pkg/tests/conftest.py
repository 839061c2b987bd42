import math

import numpy as np
import pytest

from grsc.instance import Instance, grid_edges


def path_edges(n):
    return np.array([(i, i + 1) for i in range(n - 1)], dtype=np.int64).reshape(-1, 2)


def two_blobs(n_left, n_right):
    """Two disjoint paths, so no single component can reach both."""
    left = [(i, i + 1) for i in range(n_left - 1)]
    right = [(n_left + i, n_left + i + 1) for i in range(n_right - 1)]
    return np.array(left + right, dtype=np.int64).reshape(-1, 2)


SHAPES = ("path5", "path7", "g2x3", "g3x3", "g3x4", "g2x4", "blobs")


def shape_graph(shape):
    if shape.startswith("path"):
        n = int(shape[4:])
        return n, path_edges(n), None
    if shape == "blobs":
        return 8, two_blobs(4, 4), None
    r, c = map(int, shape[1:].split("x"))
    return r * c, grid_edges(r, c), (r, c)


def random_instance(rng, shape=None, *, k=None, d=1, max_species=2, quota=0.4):
    """Small random instance with integer data."""
    shape = shape or SHAPES[int(rng.integers(len(SHAPES)))]
    n, edges, grid = shape_graph(shape)
    s1, s2 = int(rng.integers(0, max_species + 1)), int(rng.integers(0, max_species + 1))
    w = rng.integers(0, 10, size=(s1 + s2, n)) * (rng.random((s1 + s2, n)) < 0.6)
    lam = [math.ceil(quota * w[s].sum()) for s in range(s1 + s2)]
    return Instance(n, edges, rng.integers(1, 10, size=n), s1, s2, w, lam,
                    int(rng.integers(0, s1 + 1)), int(rng.integers(0, s2 + 1)), d,
                    int(rng.integers(1, 4)) if k is None else k, grid_shape=grid)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
