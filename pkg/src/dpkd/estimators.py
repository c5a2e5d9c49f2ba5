"""scikit-learn style front end to the two synthesizers.

``__init__`` stores hyperparameters verbatim and ``fit`` validates them and
sets the trailing-underscore attributes, so ``clone`` and ``get_params`` work.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_points, check_positive, check_probability
from .adaptive_binning import TreeConfig, tau_floor, tree_depths
from .core_types import bounding_box
from .grid_binning import GridConfig
from .kernels import kde
from .noise import RngStreams, as_generator
from .release import (
    PrivacySpec,
    synthesize_data_dependent,
    synthesize_data_independent,
    threshold_from_delta,
)


class _SynthesizerMixin:
    def _streams(self):
        seed = 0 if self.random_state is None else self.random_state
        return RngStreams(int(seed))

    def _set_result(self, X, result):
        self.result_ = result
        self.synthetic_ = result.dataset
        self.centers_ = np.asarray(result.dataset.centers)
        self.weights_ = np.asarray(result.dataset.weights)
        self.ledger_ = result.ledger
        self.stats_ = result.stats
        self.n_features_in_ = X.shape[1]

    def sample(self, n_samples, random_state=None):
        """Draw points from the synthetic centers with probability proportional to weight."""
        check_is_fitted(self, "synthetic_")
        if len(self.synthetic_) == 0:
            raise ValueError("the release is empty; nothing to sample from")
        rng = as_generator(random_state if random_state is not None else self._streams()["eval"])
        idx = rng.choice(len(self.synthetic_), size=int(n_samples), p=self.synthetic_.normalized_weights())
        return self.centers_[idx]

    def score_samples(self, X):
        """Kernel density of the synthetic dataset at each row of ``X``."""
        check_is_fitted(self, "synthetic_")
        X = check_points(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return kde(X, self.synthetic_, self.bandwidth)


class DataIndependentSynthesizer(_SynthesizerMixin, BaseEstimator):
    """Regular-grid synthesizer spending the whole budget on noisy bin counts.

    Parameters
    ----------
    epsilon : float
        Privacy budget.
    bin_width : float
        Grid cell edge ``w``.
    threshold : float or "auto"
        Filtering threshold ``t``. "auto" uses ``8 ln(1/delta) / epsilon``.
    delta : float
        Failure probability behind the automatic threshold.
    empty_bins : {"implicit", "explicit"}
    bandwidth : float
        Kernel bandwidth used by :meth:`score_samples`.
    random_state : int
        Seed of the named noise streams.
    """

    def __init__(self, epsilon=1.0, bin_width=0.5, threshold="auto", delta=0.05,
                 empty_bins="implicit", bandwidth=1.0, random_state=0):
        self.epsilon = epsilon
        self.bin_width = bin_width
        self.threshold = threshold
        self.delta = delta
        self.empty_bins = empty_bins
        self.bandwidth = bandwidth
        self.random_state = random_state

    def fit(self, X, y=None, box=None):
        X = check_points(X)
        if self.threshold == "auto":
            t = threshold_from_delta(self.epsilon, self.delta) if math.isfinite(self.epsilon) else 0.0
        else:
            t = float(self.threshold)
        config = GridConfig(float(self.bin_width), float(self.epsilon), t)
        result = synthesize_data_independent(X, config, self._streams(), box=box, empty_bins=self.empty_bins)
        self.threshold_ = t
        self.grid_ = result.partition
        self.box_ = self.grid_.box
        self._set_result(X, result)
        return self


class DataDependentSynthesizer(_SynthesizerMixin, BaseEstimator):
    """Adaptive-tree synthesizer: private partition, then noisy leaf counts.

    Parameters
    ----------
    epsilon : float
        Total budget ``eps' + eps''``.
    partition_fraction : float
        Share of ``epsilon`` spent on the split decisions (``eps'``).
    s1, s2 : float or None
        Largest and smallest final leaf edge. ``None`` picks ``R / 2`` and
        ``R / 64`` for the root edge ``R``.
    tau : float or "auto"
        Recursion threshold. "auto" uses the smallest value for which no
        empty node splits with probability ``1 - delta``.
    threshold : float or "auto"
        Release filtering threshold, "auto" meaning ``8 ln(1/delta) / eps''``.
    delta : float
    empty_bins : {"implicit", "explicit"}
    bandwidth : float
    random_state : int
    """

    def __init__(self, epsilon=1.0, partition_fraction=0.5, s1=None, s2=None, tau="auto",
                 threshold="auto", delta=0.05, empty_bins="implicit", bandwidth=1.0, random_state=0):
        self.epsilon = epsilon
        self.partition_fraction = partition_fraction
        self.s1 = s1
        self.s2 = s2
        self.tau = tau
        self.threshold = threshold
        self.delta = delta
        self.empty_bins = empty_bins
        self.bandwidth = bandwidth
        self.random_state = random_state

    def fit(self, X, y=None, box=None):
        X = check_points(X)
        n, d = X.shape
        epsilon = check_positive(self.epsilon, "epsilon", allow_inf=True)
        frac = check_probability(self.partition_fraction, "partition_fraction", open_interval=True)
        eps_prime, eps_release = epsilon * frac, epsilon * (1.0 - frac)
        box = bounding_box(X) if box is None else box
        R = box.edge
        s1 = R / 2 if self.s1 is None else float(self.s1)
        s2 = R / 64 if self.s2 is None else float(self.s2)
        h, h_prime = tree_depths(R, d, s1, s2)
        if self.tau == "auto":
            tau = tau_floor(h, h_prime, n, eps_prime, self.delta) if h_prime > h and math.isfinite(eps_prime) else 0.0
        else:
            tau = float(self.tau)
        if self.threshold == "auto":
            t = threshold_from_delta(eps_release, self.delta) if math.isfinite(eps_release) else 0.0
        else:
            t = float(self.threshold)
        config = TreeConfig(eps_prime, tau, s1, s2)
        spec = PrivacySpec(eps_prime, eps_release, t)
        result = synthesize_data_dependent(X, config, spec, self._streams(), box=box, empty_bins=self.empty_bins)
        self.tau_ = tau
        self.threshold_ = t
        self.tree_ = result.partition
        self.box_ = box
        self.privacy_spec_ = spec
        self._set_result(X, result)
        return self
