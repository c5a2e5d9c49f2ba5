"""Regular grid over the bounding hypercube, stored sparsely.

Only nonempty bins are materialized. Empty bins exist implicitly as the
complement of the nonempty index set inside ``bins_per_axis ** d`` cells and
are sampled by rejection without ever enumerating the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._validation import DataError, check_points, check_positive
from .core_types import Bin, BoundingBox

# grids up to this many cells may be enumerated when rejection would stall
_ENUMERATE_LIMIT = 1 << 20


@dataclass(frozen=True, eq=False)
class GridConfig:
    """Bin width, privacy budget and filtering threshold of the grid pipeline."""

    bin_width: float
    epsilon: float
    threshold: float = 0.0

    def __post_init__(self):
        check_positive(self.bin_width, "bin_width")
        check_positive(self.epsilon, "epsilon", allow_inf=True)
        if not self.threshold >= 0:
            raise ValueError("threshold must be nonnegative")


def bins_per_axis(edge, width):
    # R / w is often a float a hair above an integer (1 / 0.1)
    return max(1, math.ceil(edge / width - 1e-9))


@dataclass(frozen=True, eq=False)
class GridCounts:
    """Sparse histogram of a dataset on a regular grid.

    ``indices`` holds the integer cell coordinates of the nonempty bins in
    lexicographic order and ``counts`` their point counts. ``total_bins`` is
    an exact Python integer, however large.
    """

    box: BoundingBox
    width: float
    bins_per_axis: int
    indices: np.ndarray
    counts: np.ndarray

    @property
    def dim(self):
        return self.box.dim

    @property
    def total_bins(self):
        return self.bins_per_axis**self.dim

    @property
    def log2_total_bins(self):
        return self.dim * math.log2(self.bins_per_axis)

    @property
    def n_nonempty(self):
        return self.indices.shape[0]

    @property
    def n_empty(self):
        return self.total_bins - self.n_nonempty

    @property
    def n_points(self):
        return int(self.counts.sum())

    def centers_of(self, indices):
        return self.box.low + (np.asarray(indices, dtype=np.float64) + 0.5) * self.width

    @property
    def centers(self):
        return self.centers_of(self.indices)

    def bins(self):
        edges = np.full(self.dim, self.width)
        return [Bin(c, edges, k) for c, k in zip(self.centers, self.counts)]

    def as_dict(self):
        """Map from index tuple to count."""
        return {tuple(int(v) for v in idx): int(k) for idx, k in zip(self.indices, self.counts)}


def cell_indices(X, box, width):
    """Integer cell coordinates of each row; closed-left cells, last one closed."""
    nb = bins_per_axis(box.edge, width)
    idx = np.floor((X - box.low) / width).astype(np.int64)
    return np.clip(idx, 0, nb - 1)


def grid_assign(X, box, width):
    """Count the points of ``X`` per cell of the width-``width`` grid on ``box``."""
    X = check_points(X)
    width = check_positive(width, "width")
    if X.shape[1] != box.dim:
        raise DataError(f"data has dimension {X.shape[1]}, box has {box.dim}")
    outside = np.flatnonzero(~box.contains(X))
    if outside.size:
        raise DataError(f"point {int(outside[0])} lies outside the bounding box")
    idx = cell_indices(X, box, width)
    uniq, counts = np.unique(idx, axis=0, return_counts=True)
    return GridCounts(box, width, bins_per_axis(box.edge, width), uniq, counts.astype(np.int64))


def count_vector_l1_sensitivity_check(data, neighbor, box, width):
    """L1 distance between the grid count vectors of two neighboring datasets.

    Neighbors have the same size and differ in at most one row (replacement).
    """
    X = check_points(data)
    Y = check_points(neighbor, name="neighbor")
    if X.shape != Y.shape:
        raise DataError("neighboring datasets must have the same shape")
    differing = np.count_nonzero(np.any(X != Y, axis=1))
    if differing > 1:
        raise DataError(f"datasets differ in {differing} records, not a neighboring pair")
    a = grid_assign(X, box, width).as_dict()
    b = grid_assign(Y, box, width).as_dict()
    return float(sum(abs(a.get(k, 0) - b.get(k, 0)) for k in a.keys() | b.keys()))


def enumerate_empty_bin_centers(grid, how_many, rng):
    """Centers of ``how_many`` distinct empty cells, uniformly without replacement.

    Each candidate is built from independently uniform per-axis coordinates
    and rejected if it is nonempty or already drawn. Memory is
    O(nonempty + how_many).
    """
    how_many = int(how_many)
    if how_many < 0:
        raise ValueError("how_many must be nonnegative")
    if how_many > grid.n_empty:
        raise ValueError(f"requested {how_many} empty bins but only {grid.n_empty} exist")
    d = grid.dim
    if how_many == 0:
        return np.empty((0, d))
    nb = grid.bins_per_axis
    # dense corner: too few empty cells for rejection to find them quickly
    if grid.total_bins <= _ENUMERATE_LIMIT and how_many * 2 > grid.n_empty:
        return grid.centers_of(_enumerate_empty(grid, how_many, rng))
    taken = {tuple(int(v) for v in idx) for idx in grid.indices}
    chosen = []
    batch = max(16, 2 * how_many)
    while len(chosen) < how_many:
        cand = rng.integers(0, nb, size=(batch, d))
        for row in cand:
            key = tuple(int(v) for v in row)
            if key in taken:
                continue
            taken.add(key)
            chosen.append(row)
            if len(chosen) == how_many:
                break
    return grid.centers_of(np.array(chosen, dtype=np.int64))


def _enumerate_empty(grid, how_many, rng):
    nb, d = grid.bins_per_axis, grid.dim
    flat_nonempty = np.ravel_multi_index(grid.indices.T, (nb,) * d) if grid.n_nonempty else []
    mask = np.ones(grid.total_bins, dtype=bool)
    mask[flat_nonempty] = False
    empty = np.flatnonzero(mask)
    pick = rng.choice(empty, size=how_many, replace=False)
    return np.stack(np.unravel_index(pick, (nb,) * d), axis=1)


def empty_bin_sampler(grid):
    """Sampler over the grid's empty cells for the implicit release step."""

    def sample(how_many, rng):
        return enumerate_empty_bin_centers(grid, how_many, rng)

    return sample
