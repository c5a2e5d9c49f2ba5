"""Gaussian kernel, kernel density and maximum mean discrepancy.

All routines use ``K(x, y) = exp(-||x - y||^2 / (2 * bandwidth^2))``. Weighted
inputs are normalized by their total weight, so noisy counts can be passed
directly.
"""

import numpy as np
from scipy.stats import qmc

from ._validation import DataError, check_points, check_positive
from .core_types import WeightedDataset, as_weighted

# rows per block in the chunked kernel sums; keeps a block near 40 MB
_BLOCK_ELEMS = 5_000_000


def kernel(x, y, bandwidth=1.0):
    """Gaussian kernel between two points."""
    bandwidth = check_positive(bandwidth, "bandwidth")
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    diff = x - y
    return float(np.exp(-diff @ diff / (2.0 * bandwidth**2)))


def _sq_dists(A, B, sq_a, sq_b):
    D = A @ B.T
    D *= -2.0
    D += sq_a[:, None]
    D += sq_b[None, :]
    np.maximum(D, 0.0, out=D)
    return D


def gram(X, Y, bandwidth=1.0):
    """Dense kernel matrix ``K[i, j] = K(X[i], Y[j])``."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if X.shape[1] != Y.shape[1]:
        raise ValueError("dimension mismatch")
    D = _sq_dists(X, Y, np.einsum("ij,ij->i", X, X), np.einsum("ij,ij->i", Y, Y))
    D *= -1.0 / (2.0 * bandwidth**2)
    return np.exp(D, out=D)


def kernel_matvec(X, Y, wy, bandwidth=1.0):
    """``sum_j wy[j] K(X[i], Y[j])`` for every row of ``X``, in blocks."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if X.shape[1] != Y.shape[1]:
        raise ValueError("dimension mismatch")
    wy = np.asarray(wy, dtype=np.float64)
    scale = -1.0 / (2.0 * bandwidth**2)
    sq_x = np.einsum("ij,ij->i", X, X)
    sq_y = np.einsum("ij,ij->i", Y, Y)
    out = np.empty(X.shape[0])
    step = max(1, _BLOCK_ELEMS // max(1, Y.shape[0]))
    for start in range(0, X.shape[0], step):
        stop = start + step
        D = _sq_dists(X[start:stop], Y, sq_x[start:stop], sq_y)
        D *= scale
        np.exp(D, out=D)
        out[start:stop] = D @ wy
    return out


def kernel_sum(X, Y, wx=None, wy=None, bandwidth=1.0):
    """``sum_ij wx[i] wy[j] K(X[i], Y[j])`` (unit weights when omitted)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    wx = np.ones(X.shape[0]) if wx is None else np.asarray(wx, dtype=np.float64)
    wy = np.ones(Y.shape[0]) if wy is None else np.asarray(wy, dtype=np.float64)
    # the shorter side goes on the inside of the block loop
    if X.shape[0] < Y.shape[0]:
        X, Y, wx, wy = Y, X, wy, wx
    return float(wx @ kernel_matvec(X, Y, wy, bandwidth))


def kernel_self_sum(X, w=None, bandwidth=1.0):
    """``sum_ij w[i] w[j] K(X[i], X[j])`` using only the upper block triangle."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    n = X.shape[0]
    w = np.ones(n) if w is None else np.asarray(w, dtype=np.float64)
    scale = -1.0 / (2.0 * bandwidth**2)
    sq = np.einsum("ij,ij->i", X, X)
    step = max(1, int(np.sqrt(_BLOCK_ELEMS)))
    total = 0.0
    for i0 in range(0, n, step):
        i1 = min(n, i0 + step)
        # diagonal block
        D = _sq_dists(X[i0:i1], X[i0:i1], sq[i0:i1], sq[i0:i1])
        D *= scale
        np.exp(D, out=D)
        total += float(w[i0:i1] @ D @ w[i0:i1])
        if i1 < n:
            D = _sq_dists(X[i0:i1], X[i1:], sq[i0:i1], sq[i1:])
            D *= scale
            np.exp(D, out=D)
            total += 2.0 * float(w[i0:i1] @ D @ w[i1:])
    return total


def kde(query, data, bandwidth=1.0):
    """Normalized kernel density of ``data`` at ``query``.

    ``query`` may be a single point (returns a float) or an (q, d) array
    (returns an array of q values).
    """
    bandwidth = check_positive(bandwidth, "bandwidth")
    data = as_weighted(data)
    w = data.normalized_weights()
    q = np.asarray(query, dtype=np.float64)
    single = q.ndim <= 1
    Q = q.reshape(1, -1) if single else q
    if Q.shape[1] != data.dim:
        raise ValueError(f"dimension mismatch: {Q.shape[1]} vs {data.dim}")
    values = kernel_matvec(Q, data.centers, w, bandwidth)
    return float(values[0]) if single else values


def default_eval_points(p, q, n_quasi=1000, seed=0):
    """Support of both datasets plus scrambled Sobol points in their joint box."""
    p, q = as_weighted(p), as_weighted(q)
    support = np.vstack([p.centers, q.centers])
    low, high = support.min(axis=0), support.max(axis=0)
    if n_quasi <= 0:
        return support
    sampler = qmc.Sobol(d=support.shape[1], scramble=True, seed=seed)
    # Sobol balance properties want a power of two; the extra points are cheap
    m = int(np.ceil(np.log2(max(n_quasi, 2))))
    pts = sampler.random_base2(m)[:n_quasi]
    span = np.where(high > low, high - low, 1.0)
    return np.vstack([support, low + pts * span])


def kde_sup_distance(p, q, eval_points=None, bandwidth=1.0):
    """Max over ``eval_points`` of ``|KD_p(x) - KD_q(x)|``.

    This lower-bounds the true supremum; by default the evaluation set is the
    union of both supports plus 1000 quasi-random points in their box.
    """
    p, q = as_weighted(p), as_weighted(q)
    if p.dim != q.dim:
        raise ValueError("dimension mismatch")
    if eval_points is None:
        eval_points = default_eval_points(p, q)
    eval_points = np.atleast_2d(np.asarray(eval_points, dtype=np.float64))
    if eval_points.shape[0] == 0:
        raise ValueError("eval_points must be nonempty")
    diff = kde(eval_points, p, bandwidth) - kde(eval_points, q, bandwidth)
    return float(np.max(np.abs(diff)))


def mmd(p, q, bandwidth=1.0):
    """Weighted (biased, V-statistic) MMD between two point sets."""
    bandwidth = check_positive(bandwidth, "bandwidth")
    p, q = as_weighted(p), as_weighted(q)
    if p.dim != q.dim:
        raise ValueError(f"dimension mismatch: {p.dim} vs {q.dim}")
    wp, wq = p.normalized_weights(), q.normalized_weights()
    kpp = kernel_self_sum(p.centers, wp, bandwidth)
    kqq = kernel_self_sum(q.centers, wq, bandwidth)
    kpq = kernel_sum(p.centers, q.centers, wp, wq, bandwidth)
    return float(np.sqrt(max(kpp + kqq - 2.0 * kpq, 0.0)))


class ReferenceMMD:
    """MMD against a fixed reference set, caching the reference self-term.

    The self-term is the quadratic part of the cost, so sweeps that compare
    many synthetic outputs to one large sensitive dataset pay it once.
    """

    def __init__(self, reference, bandwidth=1.0):
        self.bandwidth = check_positive(bandwidth, "bandwidth")
        self.reference = as_weighted(reference)
        self._w = self.reference.normalized_weights()
        self._self_term = None

    @property
    def self_term(self):
        if self._self_term is None:
            self._self_term = kernel_self_sum(self.reference.centers, self._w, self.bandwidth)
        return self._self_term

    def __call__(self, q):
        q = as_weighted(q)
        if q.dim != self.reference.dim:
            raise ValueError("dimension mismatch")
        wq = q.normalized_weights()
        kqq = kernel_self_sum(q.centers, wq, self.bandwidth)
        kpq = kernel_sum(self.reference.centers, q.centers, self._w, wq, self.bandwidth)
        return float(np.sqrt(max(self.self_term + kqq - 2.0 * kpq, 0.0)))

    def kde(self, query):
        return kde(query, self.reference, self.bandwidth)


def mmd_vs_standard_gaussian(sample, bandwidth=1.0):
    """Unbiased squared MMD between N(0, I_d) and ``sample``, in closed form.

    Returns the U-statistic value, which can be slightly negative.
    """
    gamma = check_positive(bandwidth, "bandwidth")
    Z = check_points(sample, name="sample")
    n, d = Z.shape
    if n < 2:
        raise DataError("need at least 2 sample points")
    g2 = gamma**2
    term1 = (g2 / (2.0 + g2)) ** (d / 2)
    sq = np.einsum("ij,ij->i", Z, Z)
    term2 = (2.0 / n) * (g2 / (1.0 + g2)) ** (d / 2) * np.exp(-sq / (2.0 * (1.0 + g2))).sum()
    off_diag = kernel_self_sum(Z, None, gamma) - n  # K(z, z) = 1 on the diagonal
    term3 = off_diag / (n * (n - 1))
    return float(term1 - term2 + term3)


def mmd_weighted_vs_standard_gaussian(data, bandwidth=1.0):
    """Population MMD between N(0, I_d) and a weighted point set.

    Same expectations as :func:`mmd_vs_standard_gaussian`, but the point set
    is treated as a distribution (normalized weights, diagonal included), so
    the result is the exact nonnegative distance.
    """
    gamma = check_positive(bandwidth, "bandwidth")
    data = as_weighted(data)
    w = data.normalized_weights()
    d = data.dim
    g2 = gamma**2
    term1 = (g2 / (2.0 + g2)) ** (d / 2)
    sq = np.einsum("ij,ij->i", data.centers, data.centers)
    term2 = 2.0 * (g2 / (1.0 + g2)) ** (d / 2) * float(w @ np.exp(-sq / (2.0 * (1.0 + g2))))
    term3 = kernel_self_sum(data.centers, w, gamma)
    return float(np.sqrt(max(term1 - term2 + term3, 0.0)))


__all__ = [
    "WeightedDataset",
    "ReferenceMMD",
    "default_eval_points",
    "gram",
    "kde",
    "kde_sup_distance",
    "kernel",
    "kernel_matvec",
    "kernel_self_sum",
    "kernel_sum",
    "mmd",
    "mmd_vs_standard_gaussian",
    "mmd_weighted_vs_standard_gaussian",
]
