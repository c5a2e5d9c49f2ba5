"""Slow, obviously-correct reference implementations used only by the tests."""

import itertools
import math

import numpy as np


def brute_kernel(x, y, bandwidth=1.0):
    return math.exp(-sum((a - b) ** 2 for a, b in zip(x, y)) / (2.0 * bandwidth**2))


def brute_kappa(P, wp, Q, wq, bandwidth=1.0):
    wp = [w / sum(wp) for w in wp]
    wq = [w / sum(wq) for w in wq]
    return sum(a * b * brute_kernel(p, q, bandwidth) for p, a in zip(P, wp) for q, b in zip(Q, wq))


def brute_mmd2(P, Q, wp=None, wq=None, bandwidth=1.0):
    wp = [1.0] * len(P) if wp is None else list(wp)
    wq = [1.0] * len(Q) if wq is None else list(wq)
    return (
        brute_kappa(P, wp, P, wp, bandwidth)
        + brute_kappa(Q, wq, Q, wq, bandwidth)
        - 2.0 * brute_kappa(P, wp, Q, wq, bandwidth)
    )


def brute_kde(x, P, w=None, bandwidth=1.0):
    w = [1.0] * len(P) if w is None else list(w)
    total = sum(w)
    return sum(wi / total * brute_kernel(x, p, bandwidth) for p, wi in zip(P, w))


def explicit_tree(X, center, R, h, h_prime, tau, scale, rng):
    """Fully materialized recursive partition.

    Returns ``(leaves, empty_split)`` where ``leaves`` maps every leaf path,
    empty or not, to its count.
    """
    X = np.asarray(X, dtype=float)
    d = X.shape[1]
    leaves = {}
    flags = {"empty_split": False}

    def rec(idx, path, c):
        k = len(path)
        if k >= h_prime:
            leaves[path] = len(idx)
            return
        if k >= h:
            if len(idx) <= tau + rng.laplace(0.0, scale):
                leaves[path] = len(idx)
                return
            if len(idx) == 0:
                flags["empty_split"] = True
        axis = k % d
        w = R / 2 ** (k // d)
        left = [i for i in idx if X[i, axis] <= c[axis]]
        right = [i for i in idx if X[i, axis] > c[axis]]
        cl, cr = list(c), list(c)
        cl[axis] -= w / 4
        cr[axis] += w / 4
        rec(left, path + "0", cl)
        rec(right, path + "1", cr)

    rec(list(range(X.shape[0])), "", list(center))
    return leaves, flags["empty_split"]


def empty_grid_cells(grid):
    """Every empty cell index of a small grid, by enumeration."""
    taken = {tuple(int(v) for v in idx) for idx in grid.indices}
    return [cell for cell in itertools.product(range(grid.bins_per_axis), repeat=grid.dim) if cell not in taken]


def simpson_kl_uniform_vs_gaussian(k, c, weights, nodes_per_box=2001):
    """KL(Q || N(0, 1)) by composite Simpson over each box support."""
    from scipy.integrate import simpson

    total = 0.0
    for i, w in zip(range(-k, k + 1), weights):
        x = np.linspace((2 * i - 1) * c, (2 * i + 1) * c, nodes_per_box)
        q = w / (2 * c)
        log_p = -0.5 * x**2 - 0.5 * math.log(2 * math.pi)
        total += simpson(q * (math.log(q) - log_p), x=x)
    return total
