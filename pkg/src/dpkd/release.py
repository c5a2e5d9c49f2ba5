"""Private release of binned counts and the two end-to-end synthesizers.

Every bin's count gets ``Lap(2 / eps_release)`` noise (replacement
neighbors change a count vector by at most 2 in L1). Noisy counts below the
threshold ``t`` are zeroed, and bins with positive noisy weight are emitted
at their centers. Empty bins go through the same rule, either one draw per
bin (explicit) or as a binomial number of survivors with conditional
Laplace weights (implicit); the two are equal in distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_nonnegative, check_points, check_positive, check_probability
from .adaptive_binning import TreeConfig, adaptive_binning, implicit_empty_leaves, node_geometry
from .core_types import Bin, WeightedDataset, bounding_box
from .grid_binning import GridConfig, empty_bin_sampler, grid_assign
from .noise import RngStreams, binomial, conditional_laplace, laplace, laplace_tail

#: Laplace scale per unit budget for a count vector under replacement neighbors.
COUNT_SENSITIVITY = 2.0

# explicit empty-bin handling enumerates every empty bin; refuse beyond this
_EXPLICIT_LIMIT = 1 << 22


@dataclass(frozen=True)
class PrivacySpec:
    """Budget split and filtering threshold.

    ``epsilon_partition`` is spent on the tree's split decisions (0 for the
    grid pipeline) and ``epsilon_release`` on the noisy counts. The total is
    their sum by sequential composition.
    """

    epsilon_partition: float = 0.0
    epsilon_release: float = 1.0
    threshold: float = 0.0

    def __post_init__(self):
        check_nonnegative(self.epsilon_partition, "epsilon_partition", allow_inf=True)
        check_positive(self.epsilon_release, "epsilon_release", allow_inf=True)
        if not self.threshold >= 0:
            raise ValueError(f"threshold must be nonnegative, got {self.threshold}")

    @property
    def total_epsilon(self):
        return self.epsilon_partition + self.epsilon_release

    @property
    def release_scale(self):
        """Laplace scale of the count noise; 0 in the noiseless limit."""
        return COUNT_SENSITIVITY / self.epsilon_release


@dataclass
class PrivacyLedger:
    """Per-query record of the budget spent by one run.

    This is a bookkeeping check that the noise scales add up to the declared
    budget. It is not a proof of privacy.
    """

    entries: list = field(default_factory=list)

    def charge(self, label, sensitivity, scale):
        """Record a Laplace query; its cost is ``sensitivity / scale``."""
        epsilon = sensitivity / scale if scale > 0 else math.inf
        self.entries.append({"label": label, "sensitivity": sensitivity, "scale": scale, "epsilon": epsilon})
        return epsilon

    def charge_epsilon(self, label, epsilon, note=None):
        entry = {"label": label, "sensitivity": None, "scale": None, "epsilon": float(epsilon)}
        if note:
            entry["note"] = note
        self.entries.append(entry)
        return float(epsilon)

    @property
    def total(self):
        return math.fsum(e["epsilon"] for e in self.entries)

    def check(self, declared):
        if not math.isclose(self.total, declared, rel_tol=1e-12, abs_tol=1e-12):
            raise RuntimeError(f"ledger total {self.total} differs from declared budget {declared}")

    def to_list(self):
        return [dict(e) for e in self.entries]


@dataclass(eq=False)
class SynthesisResult:
    """Synthetic dataset plus the partition, budget ledger and run statistics."""

    dataset: WeightedDataset
    ledger: PrivacyLedger
    stats: dict
    partition: object = None


def _noise(scale, rng, size):
    if scale == 0:
        return np.zeros(size)
    return laplace(scale, rng, size=size)


def _as_centers_counts(bins, dim=None):
    if isinstance(bins, tuple):
        centers, counts = bins
        return np.atleast_2d(np.asarray(centers, dtype=np.float64)), np.asarray(counts, dtype=np.float64)
    if len(bins) == 0:
        return np.empty((0, dim or 0)), np.empty(0)
    centers = np.array([b.center for b in bins])
    counts = np.array([b.count for b in bins], dtype=np.float64)
    return centers, counts


def _filter(centers, values, threshold, dim):
    values = np.where(values < threshold, 0.0, values)
    keep = values > 0
    return WeightedDataset(centers[keep], values[keep], dim=dim)


def release_nonempty(bins, spec, rng, *, noise=None, dim=None):
    """Noisy counts of the given bins, filtered at ``spec.threshold``.

    Parameters
    ----------
    bins : list of Bin, or a ``(centers, counts)`` tuple
    spec : PrivacySpec
    rng : numpy.random.Generator
    noise : array-like, optional
        Fixed noise values to use instead of sampling.
    dim : int, optional
        Dimension of the output when ``bins`` is empty.
    """
    centers, counts = _as_centers_counts(bins, dim)
    dim = centers.shape[1] if centers.ndim == 2 and centers.shape[0] else (dim or 0)
    if noise is None:
        noise = _noise(spec.release_scale, rng, counts.shape[0])
    noisy = counts + np.asarray(noise, dtype=np.float64)
    return _filter(centers.reshape(-1, dim), noisy, spec.threshold, dim)


def release_empty_explicit(empty_bin_centers, spec, rng, *, noise=None, dim=None):
    """One Laplace draw per empty bin; keep the bin iff the draw is ``>= t`` and positive."""
    centers = np.asarray(empty_bin_centers, dtype=np.float64)
    if centers.size == 0:
        return WeightedDataset.empty(dim if dim is not None else (centers.shape[1] if centers.ndim == 2 else 0))
    centers = np.atleast_2d(centers)
    dim = centers.shape[1]
    if noise is None:
        noise = _noise(spec.release_scale, rng, centers.shape[0])
    eta = np.asarray(noise, dtype=np.float64)
    keep = (eta >= spec.threshold) & (eta > 0)
    return WeightedDataset(centers[keep], eta[keep], dim=dim)


def release_empty_implicit(empty_count, center_sampler, spec, rng, *, dim):
    """Same distribution as the explicit release without touching every empty bin.

    The number of survivors is ``Binom(K, Pr[Lap >= t])``; that many distinct
    empty bins are drawn uniformly, each weighted by a Laplace draw
    conditioned on being ``>= t``.
    """
    scale = spec.release_scale
    if empty_count == 0 or scale == 0:
        return WeightedDataset.empty(dim)
    p = laplace_tail(scale, spec.threshold)
    m = binomial(empty_count, p, rng)
    if m == 0:
        return WeightedDataset.empty(dim)
    sampled = center_sampler(m, rng)
    if isinstance(sampled, list):
        sampled = np.array([b.center for b in sampled]).reshape(-1, dim)
    weights = np.atleast_1d(conditional_laplace(scale, spec.threshold, rng, size=m))
    # a draw of exactly 0 at t = 0 has probability zero but must not leak a zero weight
    keep = weights > 0
    return WeightedDataset(np.asarray(sampled)[keep], weights[keep], dim=dim)


def count_heavy_light(bins, t):
    """``(M, m)``: number of ``t/2``-heavy bins and points in ``3t/2``-light bins.

    Diagnostic on noiseless counts; never part of a release.
    """
    counts = np.asarray([b.count for b in bins] if bins and isinstance(bins[0], Bin) else bins, dtype=np.float64)
    M = int(np.count_nonzero(counts >= t / 2))
    m = int(counts[counts < 1.5 * t].sum())
    return M, m


def threshold_from_delta(epsilon, delta):
    """``t = 8 ln(1/delta) / epsilon``."""
    epsilon = check_positive(epsilon, "epsilon")
    delta = check_probability(delta, "delta", open_interval=True)
    return 8.0 * math.log(1.0 / delta) / epsilon


def threshold_from_n(epsilon, n, C=1.0):
    """``t = 8 C ln(n) / epsilon``, i.e. ``delta = n^-C``."""
    epsilon = check_positive(epsilon, "epsilon")
    if n < 2:
        raise ValueError("n must be at least 2")
    return 8.0 * C * math.log(n) / epsilon


def _streams(rng):
    if isinstance(rng, RngStreams):
        return rng
    if rng is None or isinstance(rng, (int, np.integer)):
        return RngStreams(0 if rng is None else int(rng))
    raise TypeError("rng must be an RngStreams or an integer seed")


def _json_int(value):
    # exact when small, a string when the grid is astronomically large
    return int(value) if value < 2**53 else str(value)


def synthesize_data_independent(data, grid_config, rng=0, *, box=None, empty_bins="implicit"):
    """Grid pipeline: bin, add noise to every bin (empty ones included), filter.

    Parameters
    ----------
    data : array-like of shape (n, d)
    grid_config : GridConfig
    rng : RngStreams or int
    box : BoundingBox, optional
        Public bounding box; defaults to the data's.
    empty_bins : {"implicit", "explicit"}
        How empty bins are released. Explicit enumerates them all.

    Returns
    -------
    SynthesisResult
    """
    X = check_points(data)
    streams = _streams(rng)
    box = bounding_box(X) if box is None else box
    grid = grid_assign(X, box, grid_config.bin_width)
    spec = PrivacySpec(0.0, grid_config.epsilon, grid_config.threshold)
    ledger = PrivacyLedger()
    ledger.charge("release", COUNT_SENSITIVITY, spec.release_scale)

    d = X.shape[1]
    released = release_nonempty((grid.centers, grid.counts), spec, streams["release"], dim=d)
    if empty_bins == "implicit":
        ghosts = release_empty_implicit(grid.n_empty, empty_bin_sampler(grid), spec, streams["empty_bins"], dim=d)
    elif empty_bins == "explicit":
        if grid.total_bins > _EXPLICIT_LIMIT:
            raise ValueError(f"explicit release would enumerate {grid.total_bins} bins")
        centers = _all_empty_grid_centers(grid)
        ghosts = release_empty_explicit(centers, spec, streams["empty_bins"], dim=d)
    else:
        raise ValueError(f"empty_bins must be 'implicit' or 'explicit', got {empty_bins!r}")
    ledger.check(spec.total_epsilon)

    M, m = count_heavy_light(list(grid.counts), grid_config.threshold)
    stats = {
        "mode": "grid",
        "n": int(X.shape[0]),
        "dim": d,
        "J": _json_int(grid.total_bins),
        "log2_J": grid.log2_total_bins,
        "bins_per_axis": grid.bins_per_axis,
        "nonempty_bins": grid.n_nonempty,
        "M": M,
        "m": m,
        "released_nonempty": len(released),
        "released_empty": len(ghosts),
        "threshold": grid_config.threshold,
    }
    return SynthesisResult(released.concat(ghosts), ledger, stats, grid)


def _all_empty_grid_centers(grid):
    nb, d = grid.bins_per_axis, grid.dim
    mask = np.ones(grid.total_bins, dtype=bool)
    if grid.n_nonempty:
        mask[np.ravel_multi_index(grid.indices.T, (nb,) * d)] = False
    idx = np.stack(np.unravel_index(np.flatnonzero(mask), (nb,) * d), axis=1)
    return grid.centers_of(idx)


def synthesize_data_dependent(data, tree_config, spec, rng=0, *, box=None, empty_bins="implicit"):
    """Tree pipeline: private adaptive partition, then the same release on its leaves.

    ``spec.epsilon_partition`` must equal ``tree_config.epsilon_prime``; the
    output is ``(eps' + eps'')``-DP by sequential composition.

    Returns
    -------
    SynthesisResult
    """
    if not math.isclose(spec.epsilon_partition, tree_config.epsilon_prime, rel_tol=1e-12):
        raise ValueError(
            f"spec.epsilon_partition={spec.epsilon_partition} differs from "
            f"tree_config.epsilon_prime={tree_config.epsilon_prime}"
        )
    X = check_points(data)
    streams = _streams(rng)
    tree = adaptive_binning(X, tree_config, streams["partition"], box=box)
    levels = tree.h_prime - tree.h
    if tree.max_path_draws > levels:
        raise RuntimeError(f"a path drew {tree.max_path_draws} noisy decisions, budget allows {levels}")
    ledger = PrivacyLedger()
    if levels > 0:
        ledger.charge("partition", COUNT_SENSITIVITY * levels, tree.noise_scale)
    else:
        ledger.charge_epsilon("partition", tree_config.epsilon_prime, note="no data-dependent levels; budget unused")
    ledger.charge("release", COUNT_SENSITIVITY, spec.release_scale)

    d = X.shape[1]
    centers, _ = tree.leaf_geometry()
    released = release_nonempty((centers.reshape(-1, d), tree.leaf_counts), spec, streams["release"], dim=d)
    if empty_bins == "implicit":
        count, sampler = implicit_empty_leaves(tree)
        ghosts = release_empty_implicit(count, sampler, spec, streams["empty_bins"], dim=d)
    elif empty_bins == "explicit":
        leaves = tree.empty_leaves
        if leaves.count > _EXPLICIT_LIMIT:
            raise ValueError(f"explicit release would enumerate {leaves.count} leaves")
        paths = sorted(leaves.expand())
        count = len(paths)
        empty_centers = np.array([node_geometry(tree.box, p)[0] for p in paths]).reshape(-1, d)
        ghosts = release_empty_explicit(empty_centers, spec, streams["empty_bins"], dim=d)
    else:
        raise ValueError(f"empty_bins must be 'implicit' or 'explicit', got {empty_bins!r}")
    ledger.check(spec.total_epsilon)

    M, m = count_heavy_light(list(tree.leaf_counts), spec.threshold)
    stats = {
        "mode": "tree",
        "n": int(X.shape[0]),
        "dim": d,
        "h": tree.h,
        "h_prime": tree.h_prime,
        "nonempty_leaves": tree.n_nonempty,
        "empty_leaves": _json_int(count),
        "empty_split": bool(tree.empty_split),
        "M": M,
        "m": m,
        "released_nonempty": len(released),
        "released_empty": len(ghosts),
        "threshold": spec.threshold,
        "tau": tree_config.tau,
    }
    return SynthesisResult(released.concat(ghosts), ledger, stats, tree)


__all__ = [
    "GridConfig",
    "PrivacyLedger",
    "PrivacySpec",
    "SynthesisResult",
    "TreeConfig",
    "count_heavy_light",
    "release_empty_explicit",
    "release_empty_implicit",
    "release_nonempty",
    "synthesize_data_dependent",
    "synthesize_data_independent",
    "threshold_from_delta",
    "threshold_from_n",
]
