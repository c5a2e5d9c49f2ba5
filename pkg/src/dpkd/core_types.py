"""Value types shared across the package.

Datasets are plain ``(n, d)`` float arrays. The synthetic output, and every
intermediate binned representation, is a :class:`WeightedDataset` holding
unnormalized weights (noisy counts); kernel routines normalize on the fly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import DataError, check_points

#: Edge used in place of a zero-width bounding box (all points identical).
MIN_EDGE = 1e-9


@dataclass(frozen=True, eq=False)
class BoundingBox:
    """Axis-aligned hypercube given by its center and edge length."""

    center: np.ndarray
    edge: float
    degenerate: bool = False

    def __post_init__(self):
        center = np.array(self.center, dtype=np.float64).reshape(-1)
        center.setflags(write=False)
        object.__setattr__(self, "center", center)
        if not np.all(np.isfinite(center)):
            raise ValueError("box center must be finite")
        if not self.edge > 0:
            raise ValueError(f"box edge must be positive, got {self.edge}")
        object.__setattr__(self, "edge", float(self.edge))

    @property
    def dim(self):
        return self.center.shape[0]

    @property
    def low(self):
        return self.center - self.edge / 2

    @property
    def high(self):
        return self.center + self.edge / 2

    def contains(self, X, rtol=1e-9):
        """Boolean mask of rows of ``X`` lying in the closed hypercube.

        Faces are widened by ``rtol * edge`` so that the extreme points a box
        was computed from always test as inside despite rounding.
        """
        X = np.atleast_2d(X)
        tol = rtol * self.edge
        return np.all((X >= self.low - tol) & (X <= self.high + tol), axis=1)

    def to_dict(self):
        return {"center": self.center.tolist(), "edge": self.edge, "degenerate": self.degenerate}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["center"], dtype=np.float64), d["edge"], d.get("degenerate", False))


@dataclass(frozen=True, eq=False)
class Bin:
    """A hyperrectangle with its noiseless point count."""

    center: np.ndarray
    edges: np.ndarray
    count: int

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.float64)
        if np.any(edges <= 0):
            raise ValueError("bin edges must be positive")
        if self.count < 0:
            raise ValueError("bin count must be nonnegative")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64))
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "count", int(self.count))


class WeightedDataset:
    """Weighted point set ``{(c_i, w_i)}`` with strictly positive weights.

    An empty release (no bin survived filtering) is representable; kernel
    routines reject it because its total weight is zero.
    """

    __slots__ = ("centers", "weights")

    def __init__(self, centers, weights, dim=None):
        centers = np.asarray(centers, dtype=np.float64)
        weights = np.asarray(weights, dtype=np.float64).reshape(-1)
        if centers.size == 0:
            if dim is None:
                dim = centers.shape[1] if centers.ndim == 2 else 0
            centers = centers.reshape(0, dim)
        elif centers.ndim == 1:
            centers = centers.reshape(-1, 1) if dim in (None, 1) else centers.reshape(-1, dim)
        if centers.shape[0] != weights.shape[0]:
            raise ValueError(
                f"{centers.shape[0]} centers but {weights.shape[0]} weights"
            )
        if dim is not None and centers.shape[1] != dim:
            raise ValueError(f"expected dimension {dim}, got {centers.shape[1]}")
        if not np.all(np.isfinite(centers)) or not np.all(np.isfinite(weights)):
            raise ValueError("centers and weights must be finite")
        if np.any(weights <= 0):
            raise ValueError("weights must be strictly positive")
        centers.setflags(write=False)
        weights.setflags(write=False)
        self.centers = centers
        self.weights = weights

    @classmethod
    def from_points(cls, X):
        """Unit weight per row of ``X``."""
        X = check_points(X)
        return cls(X, np.ones(X.shape[0]))

    @classmethod
    def empty(cls, dim):
        return cls(np.empty((0, dim)), np.empty(0), dim=dim)

    @property
    def dim(self):
        return self.centers.shape[1]

    @property
    def total_weight(self):
        return float(self.weights.sum())

    def normalized_weights(self):
        total = self.total_weight
        if not total > 0:
            raise DataError("total weight must be positive")
        return self.weights / total

    def __len__(self):
        return self.centers.shape[0]

    def __repr__(self):
        return f"WeightedDataset(m={len(self)}, dim={self.dim}, total_weight={self.total_weight:.6g})"

    def concat(self, other):
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        return WeightedDataset(
            np.vstack([self.centers, other.centers]),
            np.concatenate([self.weights, other.weights]),
            dim=self.dim,
        )


def as_weighted(data):
    """Coerce an array of points or a WeightedDataset to a WeightedDataset."""
    if isinstance(data, WeightedDataset):
        return data
    return WeightedDataset.from_points(data)


def bounding_box(X, min_edge=MIN_EDGE):
    """Smallest axis-aligned hypercube containing every row of ``X``.

    The center is the midpoint of the per-axis ranges and the edge is the
    largest range. If all points coincide the edge is replaced by ``min_edge``
    and the box is flagged ``degenerate``.
    """
    X = check_points(X)
    low = X.min(axis=0)
    high = X.max(axis=0)
    center = (low + high) / 2
    edge = float(np.max(high - low))
    if edge <= 0:
        return BoundingBox(center, min_edge, degenerate=True)
    return BoundingBox(center, edge)
