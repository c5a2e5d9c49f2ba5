"""Ground-truth generators: Gaussian mixtures and uniform-box proxies of N(0, 1)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_positive
from .core_types import WeightedDataset
from .noise import as_generator

#: Recipe defaults: component means ~ N(100 * 1, 200 I), points ~ N(mean, 30 I).
MEANS_CENTER = 100.0
MEANS_SIGMA = math.sqrt(200.0)
COMPONENT_SIGMA = math.sqrt(30.0)


@dataclass(frozen=True, eq=False)
class GaussianMixtureSpec:
    """Spherical Gaussian mixture; ``component_sigma`` is the per-coordinate std."""

    dim: int
    n_components: int
    mixing_weights: np.ndarray
    means: np.ndarray
    component_sigma: float

    def __post_init__(self):
        w = np.asarray(self.mixing_weights, dtype=np.float64).reshape(-1)
        means = np.asarray(self.means, dtype=np.float64).reshape(self.n_components, self.dim)
        if w.shape[0] != self.n_components:
            raise ValueError("one mixing weight per component is required")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("mixing weights must be positive and sum to 1")
        if not self.component_sigma >= 0:
            raise ValueError("component_sigma must be nonnegative")
        object.__setattr__(self, "mixing_weights", w)
        object.__setattr__(self, "means", means)

    def to_dict(self):
        return {
            "dim": self.dim,
            "n_components": self.n_components,
            "mixing_weights": self.mixing_weights.tolist(),
            "means": self.means.tolist(),
            "component_sigma": self.component_sigma,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["dim"], d["n_components"], d["mixing_weights"], d["means"], d["component_sigma"])


def harmonic_weights(k):
    """Mixing weights proportional to ``1, 1/2, ..., 1/k``."""
    raw = 1.0 / np.arange(1, k + 1)
    return raw / raw.sum()


def benchmark_mixture_spec(dim, rng, n_components=10, component_sigma=COMPONENT_SIGMA,
                       means_center=MEANS_CENTER, means_sigma=MEANS_SIGMA):
    """The benchmark mixture: harmonic weights, means drawn around ``means_center``."""
    rng = as_generator(rng)
    means = rng.normal(means_center, means_sigma, size=(n_components, dim))
    return GaussianMixtureSpec(dim, n_components, harmonic_weights(n_components), means, float(component_sigma))


def sample_gaussian_mixture(spec, n, rng, return_labels=False):
    """``n`` i.i.d. draws: a component by its weight, then a spherical Gaussian around its mean."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = as_generator(rng)
    labels = rng.choice(spec.n_components, size=n, p=spec.mixing_weights)
    X = spec.means[labels] + spec.component_sigma * rng.standard_normal((n, spec.dim))
    return (X, labels) if return_labels else X


@dataclass(frozen=True, eq=False)
class UniformMixtureSpec:
    """Boxes ``[(2i - 1) c, (2i + 1) c)`` for ``i = -k..k`` with symmetric weights.

    ``weights[j]`` belongs to box ``i = j - k``.
    """

    k: int
    half_width: float
    weights: np.ndarray

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be nonnegative")
        check_positive(self.half_width, "half_width")
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if w.shape[0] != 2 * self.k + 1:
            raise ValueError(f"need {2 * self.k + 1} weights, got {w.shape[0]}")
        # far tail weights may underflow to exactly 0
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")
        if not np.allclose(w, w[::-1], rtol=1e-12, atol=0):
            raise ValueError("weights must be symmetric about box 0")
        object.__setattr__(self, "weights", w)

    @property
    def indices(self):
        return np.arange(-self.k, self.k + 1)

    @property
    def centers(self):
        return 2.0 * self.half_width * self.indices


def optimal_uniform_weights(k, c):
    """KL-optimal box weights: ``w_i`` proportional to ``exp(-2 i^2 c^2)``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    c = check_positive(c, "c")
    i = np.arange(-k, k + 1)
    raw = np.exp(-2.0 * i**2 * c**2)
    return UniformMixtureSpec(int(k), c, raw / raw.sum())


def kl_uniform_mixture_vs_gaussian(spec):
    """``KL(Q || N(0, 1))`` for the uniform-box mixture ``Q``.

    ``sum w_i ln(w_i / 2c) + ln(2 pi) / 2 + sum w_i c^2 (12 i^2 + 1) / 6``.
    """
    w, c, i = spec.weights, spec.half_width, spec.indices
    pos = w > 0
    entropy_part = float(np.sum(w[pos] * np.log(w[pos] / (2.0 * c))))
    quadratic_part = float(np.sum(w * c**2 * (12.0 * i**2 + 1.0) / 6.0))
    return entropy_part + 0.5 * math.log(2.0 * math.pi) + quadratic_part


def uniform_mixture_as_weighted_dataset(spec):
    """The ``2k + 1`` box centers ``2 c i`` with their weights; zero-weight boxes are dropped."""
    pos = spec.weights > 0
    return WeightedDataset(spec.centers[pos].reshape(-1, 1), spec.weights[pos], dim=1)


def sample_uniform_mixture(spec, n, rng):
    """``n`` draws from the uniform-box mixture, as an ``(n, 1)`` array."""
    rng = as_generator(rng)
    boxes = rng.choice(spec.indices, size=n, p=spec.weights)
    c = spec.half_width
    return ((2 * boxes - 1) * c + 2 * c * rng.random(n)).reshape(-1, 1)


def best_half_width(k, grid=None):
    """Half width minimizing the KL of the optimal ``k``-mixture, by grid search."""
    grid = np.linspace(0.01, 3.0, 3000) if grid is None else np.asarray(grid)
    values = [kl_uniform_mixture_vs_gaussian(optimal_uniform_weights(k, c)) for c in grid]
    j = int(np.argmin(values))
    return float(grid[j]), float(values[j])
