"""Randomness primitives: Laplace noise, its tails, and the empty-bin samplers.

Floating-point Laplace sampling is known to leak through the low-order bits
of its output (Mironov, 2012). These samplers are exact in distribution over
the reals but make no attempt at a hardened floating-point implementation.
"""

import math
import zlib

import numpy as np

from ._validation import check_positive, check_probability

#: Named stages that draw randomness. Each gets an independent stream so that
#: switching, e.g., explicit and implicit empty-bin handling leaves the other
#: stages' draws untouched.
STREAMS = ("data", "partition", "release", "empty_bins", "eval")


class RngStreams:
    """One seed forked into independent named ``numpy.random.Generator`` streams."""

    def __init__(self, seed=0):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self._streams = {}

    def stream(self, name):
        if name not in self._streams:
            key = zlib.crc32(name.encode("utf-8"))
            ss = np.random.SeedSequence(self.seed, spawn_key=(key,))
            self._streams[name] = np.random.Generator(np.random.PCG64(ss))
        return self._streams[name]

    def fork(self, index):
        """Independent child streams, e.g. one per repetition of an experiment."""
        ss = np.random.SeedSequence(self.seed, spawn_key=(0xF0F0, int(index)))
        return RngStreams(int(ss.generate_state(1, dtype=np.uint64)[0]))

    def __getitem__(self, name):
        return self.stream(name)


def as_generator(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None or isinstance(rng, (int, np.integer)):
        return np.random.default_rng(0 if rng is None else int(rng))
    raise TypeError(f"expected a numpy Generator or an integer seed, got {type(rng)!r}")


def _standard_laplace(rng, size):
    # exponential magnitude by inverse CDF on (0, 1], independent sign bit
    u = 1.0 - rng.random(size)
    magnitude = -np.log(u)
    sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
    return sign * magnitude


def laplace(scale, rng, size=None):
    """Draw from Laplace(0, scale)."""
    scale = check_positive(scale, "scale")
    rng = as_generator(rng)
    out = scale * _standard_laplace(rng, size)
    return float(out) if size is None else out


def laplace_tail(scale, alpha):
    """``Pr[Lap(0, scale) >= alpha]``."""
    scale = check_positive(scale, "scale")
    alpha = float(alpha)
    if alpha >= 0:
        return 0.5 * math.exp(-alpha / scale)
    return 1.0 - 0.5 * math.exp(alpha / scale)


def conditional_laplace(scale, threshold, rng, size=None):
    """Draw from Laplace(0, scale) conditioned on being ``>= threshold``.

    Above zero the Laplace tail is exponential, so for a nonnegative
    threshold the draw is ``threshold + Exp(scale)``. For a negative threshold
    the conditional mass splits between ``[threshold, 0)`` and ``[0, inf)``;
    each piece is sampled by inverting its CDF.
    """
    scale = check_positive(scale, "scale")
    rng = as_generator(rng)
    t = float(threshold)
    shape = () if size is None else size
    if t >= 0:
        out = t + scale * -np.log(1.0 - rng.random(shape))
        return float(out) if size is None else out
    head = math.exp(t / scale) if t > -math.inf else 0.0  # = 2 Pr[X < t]
    p_negative = (0.5 - 0.5 * head) / (1.0 - 0.5 * head)
    choose_negative = rng.random(shape) < p_negative
    v = 1.0 - rng.random(shape)  # (0, 1]
    # density proportional to exp(x / scale) on [t, 0)
    negative = scale * np.log(head + (1.0 - v) * (1.0 - head)) if head > 0 else scale * np.log(v)
    positive = scale * -np.log(v)
    out = np.where(choose_negative, np.minimum(negative, -0.0), positive)
    out = np.maximum(out, t)
    return float(out) if size is None else out


def binomial(n_trials, p, rng):
    """Exact Binomial(n_trials, p) sample.

    numpy's sampler is exact for any ``n_trials`` below 2**63. Beyond that
    (bin counts of astronomically fine grids) a Poisson or normal
    approximation is used.
    """
    p = check_probability(p, "p")
    n_trials = int(n_trials)
    if n_trials < 0:
        raise ValueError("n_trials must be nonnegative")
    rng = as_generator(rng)
    if n_trials == 0 or p == 0.0:
        return 0
    if p == 1.0:
        return n_trials
    if n_trials < 2**63:
        return int(rng.binomial(n_trials, p))
    mean = n_trials * p
    if mean < 1e6:
        return int(rng.poisson(mean))
    sd = math.sqrt(mean * (1.0 - p))
    return int(min(n_trials, max(0, round(rng.normal(mean, sd)))))


def randbelow(rng, n):
    """Uniform integer in ``[0, n)`` for arbitrarily large Python ``n``."""
    n = int(n)
    if n <= 0:
        raise ValueError("n must be positive")
    if n <= 2**63:
        return int(rng.integers(0, n))
    nbits = n.bit_length()
    nwords = (nbits + 62) // 63
    while True:
        words = rng.integers(0, 2**63, size=nwords, dtype=np.int64)
        value = 0
        for word in words:
            value = (value << 63) | int(word)
        value >>= 63 * nwords - nbits
        if value < n:
            return value
