"""Private recursive (KD-style) partitioning with a data-independent prefix.

The root is the bounding hypercube. Every node splits at the midpoint of its
region along a cycling axis, and the scalar edge halves after each full round
of axes. The first ``h`` levels (largest edge still above ``s1``) split
unconditionally and spend no budget. Below that, a node stops when its count
is at most ``tau`` plus fresh Laplace noise, and nodes whose largest edge has
reached ``s2`` (depth ``h_prime``) never split.

Leaves are identified by their root-to-leaf path, a string over {0, 1}
(0 = low half). Only nonempty leaves are stored; the empty ones can be
rebuilt from the sorted nonempty paths and ``h`` whenever no empty node was
split, which holds with probability ``1 - delta`` once ``tau`` is at least
:func:`tau_floor`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import DataError, check_points, check_positive, check_probability
from .core_types import Bin, BoundingBox, bounding_box
from .noise import as_generator, binomial, laplace, laplace_tail, randbelow

# blocks at most this large are enumerated rather than rejection-sampled
_ENUMERATE_LIMIT = 1 << 16


@dataclass(frozen=True)
class TreeConfig:
    """Budget, recursion threshold and final-bin edge limits of the tree."""

    epsilon_prime: float
    tau: float
    s1: float
    s2: float

    def __post_init__(self):
        check_positive(self.epsilon_prime, "epsilon_prime", allow_inf=True)
        if not self.tau >= 0:
            raise ValueError(f"tau must be nonnegative, got {self.tau}")
        check_positive(self.s1, "s1")
        check_positive(self.s2, "s2")
        if not self.s2 < self.s1:
            raise ValueError(f"need s2 < s1, got s1={self.s1}, s2={self.s2}")

    def depth_budget(self, dim):
        """``ceil(d * log2(s1 / s2))`` data-dependent levels, as the privacy proof counts them."""
        return max(1, math.ceil(dim * math.log2(self.s1 / self.s2) - 1e-9))


def _ceil_log2(ratio):
    if ratio <= 1:
        return 0
    return max(0, math.ceil(math.log2(ratio) - 1e-9))


def tree_depths(edge, dim, s1, s2):
    """``(h, h_prime)``: depth where the largest edge first drops to ``s1`` and to ``s2``."""
    return dim * _ceil_log2(edge / s1), dim * _ceil_log2(edge / s2)


def node_geometry(box, path):
    """Center and per-axis edges of the node reached by ``path`` from ``box``."""
    d = box.dim
    center = box.center.copy()
    edges = np.full(d, box.edge)
    for k, bit in enumerate(path):
        axis = k % d
        w = edges[axis]
        center[axis] += w / 4 if bit == "1" else -w / 4
        edges[axis] = w / 2
    return center, edges


def tau_floor(h, h_prime, n, epsilon_prime, delta):
    """Smallest recursion threshold under which, w.p. ``1 - delta``, no empty node splits.

    ``(2 (h' - h) / eps') * ln((2^h + n (h' - h)) / delta)``, natural log.
    """
    h, h_prime, n = int(h), int(h_prime), int(n)
    if h < 0 or h_prime <= h:
        raise ValueError(f"need 0 <= h < h_prime, got h={h}, h_prime={h_prime}")
    if n < 1:
        raise ValueError("n must be at least 1")
    epsilon_prime = check_positive(epsilon_prime, "epsilon_prime")
    delta = check_probability(delta, "delta", open_interval=True)
    levels = h_prime - h
    # log(2^h + x) computed without overflowing for large h
    log_count = math.log(2**h + n * levels) if h < 1000 else h * math.log(2) + math.log1p(n * levels / 2**h)
    return 2.0 * levels / epsilon_prime * (log_count - math.log(delta))


def empty_leaf_upper_bound(h, h_prime, n):
    """At most ``2^h + n (h' - h)`` empty leaves when no empty node is split."""
    h, h_prime, n = int(h), int(h_prime), int(n)
    if h_prime < h:
        raise ValueError("need h_prime >= h")
    return 2**h + n * (h_prime - h)


@dataclass
class EmptyLeafSet:
    """The empty leaves of a partition tree, without enumerating level ``h``.

    ``explicit`` lists paths of empty leaves at depth ``>= h``. Each entry of
    ``blocks`` is a prefix of depth ``< h`` whose whole subtree is empty: it
    stands for all ``2^(h - depth)`` level-``h`` descendants except the
    ``excluded`` ones (empty nodes that were split anyway).
    """

    h: int
    explicit: list = field(default_factory=list)
    blocks: list = field(default_factory=list)

    def block_size(self, block):
        prefix, excluded = block
        return (1 << (self.h - len(prefix))) - len(excluded)

    @property
    def count(self):
        return len(self.explicit) + sum(self.block_size(b) for b in self.blocks)

    def expand(self):
        """Every empty-leaf path. Only for small trees."""
        out = set(self.explicit)
        for prefix, excluded in self.blocks:
            width = self.h - len(prefix)
            for v in range(1 << width):
                path = prefix + format(v, f"0{width}b") if width else prefix
                if path not in excluded:
                    out.add(path)
        return out

    def sample(self, how_many, rng):
        """``how_many`` distinct empty-leaf paths, uniformly without replacement."""
        how_many = int(how_many)
        total = self.count
        if how_many > total:
            raise ValueError(f"requested {how_many} empty leaves but only {total} exist")
        rng = as_generator(rng)
        remaining_explicit = list(self.explicit)
        block_sizes = [self.block_size(b) for b in self.blocks]
        chosen_in_block = [set() for _ in self.blocks]
        out = []
        for _ in range(how_many):
            r = randbelow(rng, total)
            total -= 1
            if r < len(remaining_explicit):
                # swap-remove keeps the draw O(1)
                remaining_explicit[r], remaining_explicit[-1] = remaining_explicit[-1], remaining_explicit[r]
                out.append(remaining_explicit.pop())
                continue
            r -= len(remaining_explicit)
            for j, size in enumerate(block_sizes):
                if r < size:
                    out.append(self._draw_from_block(j, chosen_in_block[j], rng))
                    block_sizes[j] -= 1
                    break
                r -= size
        return out

    def _draw_from_block(self, j, chosen, rng):
        prefix, excluded = self.blocks[j]
        width = self.h - len(prefix)
        span = 1 << width
        if span <= _ENUMERATE_LIMIT and (len(chosen) + len(excluded)) * 2 >= span:
            free = [v for v in range(span) if self._suffix(prefix, v, width) not in excluded and v not in chosen]
            v = free[randbelow(rng, len(free))]
        else:
            while True:
                v = randbelow(rng, span)
                if v not in chosen and self._suffix(prefix, v, width) not in excluded:
                    break
        chosen.add(v)
        return self._suffix(prefix, v, width)

    @staticmethod
    def _suffix(prefix, v, width):
        return prefix + format(v, f"0{width}b") if width else prefix


def reconstruct_empty_leaves(paths, h):
    """Rebuild the empty leaves from the nonempty-leaf paths and ``h`` alone.

    Sorting the paths orders the leaves left to right. Between consecutive
    leaves, and before the first and after the last, the siblings hanging off
    the two paths below their common ancestor are maximal empty subtrees.
    One rooted at depth ``>= h`` is an empty leaf; one rooted above ``h``
    covers a block of empty level-``h`` leaves.
    """
    paths = sorted(paths)
    out = EmptyLeafSet(int(h))

    def emit(root):
        if len(root) >= h:
            out.explicit.append(root)
        else:
            out.blocks.append((root, frozenset()))

    if not paths:
        emit("")
        return out
    # left siblings of the first leaf
    first = paths[0]
    for j, bit in enumerate(first):
        if bit == "1":
            emit(first[:j] + "0")
    for a, b in zip(paths, paths[1:]):
        lcp = _common_prefix_length(a, b)
        for j in range(len(a) - 1, lcp, -1):
            if a[j] == "0":
                emit(a[:j] + "1")
        for j in range(lcp + 1, len(b)):
            if b[j] == "1":
                emit(b[:j] + "0")
    # right siblings of the last leaf
    last = paths[-1]
    for j in range(len(last) - 1, -1, -1):
        if last[j] == "0":
            emit(last[:j] + "1")
    return out


def _common_prefix_length(a, b):
    n = min(len(a), len(b))
    for i in range(n):
        if a[i] != b[i]:
            return i
    return n


@dataclass(eq=False)
class PartitionTree:
    """Result of adaptive binning.

    Nonempty leaves are listed left to right with their noiseless counts.
    ``point_leaf[i]`` is the index of the leaf holding point ``i``.
    ``empty_leaves`` is the build-time record of the empty leaves, and
    ``empty_split`` flags a run in which some empty node was split, which
    invalidates reconstruction from the nonempty paths.
    """

    box: BoundingBox
    config: TreeConfig
    h: int
    h_prime: int
    noise_scale: float
    leaf_paths: list
    leaf_counts: np.ndarray
    point_leaf: np.ndarray
    empty_leaves: EmptyLeafSet
    empty_split: bool
    max_path_draws: int

    @property
    def dim(self):
        return self.box.dim

    @property
    def n_points(self):
        return int(self.leaf_counts.sum())

    @property
    def n_nonempty(self):
        return len(self.leaf_paths)

    def leaf_geometry(self):
        """Centers and edges of the nonempty leaves as ``(k, d)`` arrays."""
        d = self.dim
        centers = np.empty((len(self.leaf_paths), d))
        edges = np.empty((len(self.leaf_paths), d))
        for i, path in enumerate(self.leaf_paths):
            centers[i], edges[i] = node_geometry(self.box, path)
        return centers, edges

    def encode(self):
        """Public description: ``h``, ``h_prime``, the box and the nonempty-leaf paths."""
        return {
            "dim": self.dim,
            "h": self.h,
            "h_prime": self.h_prime,
            "box": self.box.to_dict(),
            "paths": list(self.leaf_paths),
        }


def decode_tree(encoding):
    """Inverse of :meth:`PartitionTree.encode`: ``(box, h, h_prime, paths)``."""
    box = BoundingBox.from_dict(encoding["box"])
    return box, int(encoding["h"]), int(encoding["h_prime"]), list(encoding["paths"])


def adaptive_binning(X, config, rng, box=None):
    """Build the partition tree of ``X``.

    Parameters
    ----------
    X : array-like of shape (n, d)
    config : TreeConfig
    rng : numpy.random.Generator
        Source of the split-decision noise.
    box : BoundingBox, optional
        Public root box. Defaults to the data's bounding hypercube, which is
        treated as public and costs no budget.

    Returns
    -------
    PartitionTree
    """
    X = check_points(X)
    n, d = X.shape
    rng = as_generator(rng)
    if box is None:
        box = bounding_box(X)
    else:
        if box.dim != d:
            raise DataError(f"data has dimension {d}, box has {box.dim}")
        outside = np.flatnonzero(~box.contains(X))
        if outside.size:
            raise DataError(f"point {int(outside[0])} lies outside the bounding box")
    R = box.edge
    if config.s1 > R * (1 + 1e-9):
        raise ValueError(f"s1={config.s1} exceeds the root edge {R}")
    h, h_prime = tree_depths(R, d, config.s1, config.s2)
    levels = h_prime - h
    scale = 2.0 * levels / config.epsilon_prime if levels > 0 else math.inf
    tau = float(config.tau)
    p_empty_split = laplace_tail(scale, tau) if levels > 0 and math.isfinite(scale) and scale > 0 else 0.0

    leaf_paths, leaf_counts = [], []
    point_leaf = np.full(n, -1, dtype=np.int64)
    empty = EmptyLeafSet(h)
    empty_split = False
    max_draws = 0

    # (point indices, path, center, noisy decisions so far on this path, forced split)
    stack = [(np.arange(n), "", box.center.copy(), 0, False)]
    while stack:
        idx, path, center, draws, forced = stack.pop()
        k = len(path)
        count = idx.size
        if count == 0 and k < h and not forced:
            # the unconditional prefix would expand this into 2^(h-k) empty
            # level-h nodes; only their split decisions need simulating
            size = 1 << (h - k)
            n_split = binomial(size, p_empty_split, rng) if p_empty_split > 0 else 0
            excluded = set()
            if n_split:
                empty_split = True
                width = h - k
                while len(excluded) < n_split:
                    sub = path + format(randbelow(rng, size), f"0{width}b")
                    if sub not in excluded:
                        excluded.add(sub)
                for sub in sorted(excluded, reverse=True):
                    sub_center, _ = node_geometry(box, sub)
                    stack.append((idx, sub, sub_center, draws + 1, True))
            empty.blocks.append((path, frozenset(excluded)))
            continue

        split = True
        if k >= h_prime:
            split = False
        elif k >= h and not forced:
            noise = laplace(scale, rng) if math.isfinite(scale) else 0.0
            draws += 1
            if count <= tau + noise:
                split = False
            elif count == 0:
                empty_split = True

        if not split:
            max_draws = max(max_draws, draws)
            if count:
                point_leaf[idx] = len(leaf_paths)
                leaf_paths.append(path)
                leaf_counts.append(count)
            else:
                empty.explicit.append(path)
            continue

        axis = k % d
        w = R / 2 ** (k // d)
        go_left = X[idx, axis] <= center[axis]
        left_center = center.copy()
        left_center[axis] -= w / 4
        right_center = center.copy()
        right_center[axis] += w / 4
        stack.append((idx[~go_left], path + "1", right_center, draws, False))
        stack.append((idx[go_left], path + "0", left_center, draws, False))

    return PartitionTree(
        box=box,
        config=config,
        h=h,
        h_prime=h_prime,
        noise_scale=scale,
        leaf_paths=leaf_paths,
        leaf_counts=np.asarray(leaf_counts, dtype=np.int64),
        point_leaf=point_leaf,
        empty_leaves=empty,
        empty_split=empty_split,
        max_path_draws=max_draws,
    )


def leaf_bins(tree):
    """One :class:`Bin` per nonempty leaf, left to right."""
    centers, edges = tree.leaf_geometry()
    return [Bin(c, e, k) for c, e, k in zip(centers, edges, tree.leaf_counts)]


def implicit_empty_leaves(tree):
    """Number of empty leaves and a uniform without-replacement sampler over them.

    The empty leaves are rebuilt from the nonempty paths and ``h``. If the
    build split an empty node, that reconstruction is wrong, and the
    build-time record is used instead.

    Returns
    -------
    count : int
    sampler : callable ``(how_many, rng) -> list of Bin`` with zero counts
    """
    if tree.empty_split:
        leaves = tree.empty_leaves
    else:
        leaves = reconstruct_empty_leaves(tree.leaf_paths, tree.h)

    def sampler(how_many, rng):
        out = []
        for path in leaves.sample(how_many, rng):
            center, edges = node_geometry(tree.box, path)
            out.append(Bin(center, edges, 0))
        return out

    return leaves.count, sampler
