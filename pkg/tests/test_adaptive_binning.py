import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import explicit_tree
from scipy import stats

from dpkd.adaptive_binning import (
    EmptyLeafSet,
    TreeConfig,
    adaptive_binning,
    decode_tree,
    empty_leaf_upper_bound,
    implicit_empty_leaves,
    leaf_bins,
    node_geometry,
    reconstruct_empty_leaves,
    tau_floor,
    tree_depths,
)
from dpkd.core_types import BoundingBox, bounding_box

NOISELESS = 1e12


def all_leaf_paths(tree):
    return set(tree.leaf_paths) | tree.empty_leaves.expand()


def assert_tiles(paths, box):
    """Leaves are prefix-free and their volumes add up to the root's."""
    ordered = sorted(paths)
    for a, b in zip(ordered, ordered[1:]):
        assert not b.startswith(a)
    volume = sum(np.prod(node_geometry(box, p)[1]) for p in paths)
    assert volume == pytest.approx(box.edge**box.dim, rel=1e-9)


class TestDepths:
    @pytest.mark.parametrize(
        "R, d, s1, s2, h, hp",
        [(10, 1, 10, 2.5, 0, 2), (16, 2, 4, 1, 4, 8), (10, 3, 3, 0.5, 6, 15), (1, 2, 1, 0.5, 0, 2)],
    )
    def test_examples(self, R, d, s1, s2, h, hp):
        assert tree_depths(R, d, s1, s2) == (h, hp)

    def test_depth_budget(self):
        assert TreeConfig(1.0, 1.0, 4.0, 1.0).depth_budget(3) == 6
        assert TreeConfig(1.0, 1.0, 4.0, 3.0).depth_budget(1) == 1


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs", [dict(s1=1.0, s2=1.0), dict(s1=1.0, s2=2.0), dict(tau=-1.0), dict(epsilon_prime=0.0)]
    )
    def test_invalid(self, kwargs):
        base = dict(epsilon_prime=1.0, tau=1.0, s1=2.0, s2=1.0)
        base.update(kwargs)
        with pytest.raises(ValueError):
            TreeConfig(**base)

    def test_s1_above_root_edge(self):
        with pytest.raises(ValueError, match="exceeds"):
            adaptive_binning([[0.0], [1.0]], TreeConfig(1.0, 1.0, 5.0, 0.1), np.random.default_rng(0))


def test_stops_immediately_with_huge_tau():
    tree = adaptive_binning([[0.0], [10.0]], TreeConfig(1.0, 1e9, 10.0, 2.5), np.random.default_rng(0))
    assert (tree.h, tree.h_prime) == (0, 2)
    assert tree.leaf_paths == [""]
    assert tree.n_points == 2


def test_noiseless_full_depth():
    X = np.random.default_rng(0).uniform(0, 8, size=(4000, 2))
    box = BoundingBox(np.array([4.0, 4.0]), 8.0)
    tree = adaptive_binning(X, TreeConfig(NOISELESS, 0.0, 8.0, 2.0), np.random.default_rng(0), box=box)
    assert tree.h_prime == 4 and tree.n_nonempty == 16
    _, edges = tree.leaf_geometry()
    assert np.all((edges >= 2.0) & (edges < 4.0))


def test_empty_half_holds_no_points():
    rng = np.random.default_rng(1)
    X = np.column_stack([rng.uniform(0, 4, 200), rng.uniform(0, 8, 200)])
    box = BoundingBox(np.array([4.0, 4.0]), 8.0)
    tree = adaptive_binning(X, TreeConfig(1.0, 5.0, 4.0, 1.0), rng, box=box)
    assert tree.h == 2
    assert all(tree.leaf_paths[i].startswith("0") for i in tree.point_leaf)
    assert "1" in {prefix for prefix, _ in tree.empty_leaves.blocks}


@pytest.mark.parametrize("seed", range(6))
def test_structure_invariants(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 4))
    X = rng.normal(size=(int(rng.integers(20, 400)), d))
    box = bounding_box(X)
    R = box.edge
    cfg = TreeConfig(1.0, float(rng.uniform(1, 20)), R / 2, R / 16)
    tree = adaptive_binning(X, cfg, rng)
    assert tree.leaf_counts.sum() == X.shape[0]
    assert np.all(tree.point_leaf >= 0)
    np.testing.assert_array_equal(np.bincount(tree.point_leaf, minlength=tree.n_nonempty), tree.leaf_counts)
    assert tree.max_path_draws <= tree.h_prime - tree.h
    for path in tree.leaf_paths:
        assert tree.h <= len(path) <= tree.h_prime
    _, edges = tree.leaf_geometry()
    assert edges.max() <= cfg.s1 * (1 + 1e-12)
    k = np.log2(R / edges)
    np.testing.assert_allclose(k, np.round(k), atol=1e-9)
    # points lie in their leaf
    centers, edges = tree.leaf_geometry()
    lo = centers[tree.point_leaf] - edges[tree.point_leaf] / 2
    hi = centers[tree.point_leaf] + edges[tree.point_leaf] / 2
    assert np.all((X >= lo - 1e-9 * R) & (X <= hi + 1e-9 * R))
    if tree.empty_leaves.count < 5000:
        assert_tiles(all_leaf_paths(tree), box)
    assert sum(b.count for b in leaf_bins(tree)) == X.shape[0]


def test_noise_scale_and_draw_budget():
    X = np.random.default_rng(3).normal(size=(500, 2))
    box = bounding_box(X)
    tree = adaptive_binning(X, TreeConfig(0.5, 3.0, box.edge / 2, box.edge / 32), np.random.default_rng(4))
    levels = tree.h_prime - tree.h
    assert tree.noise_scale == pytest.approx(2 * levels / 0.5)
    assert 0 < tree.max_path_draws <= levels


def test_data_independent_prefix_identical():
    box = BoundingBox(np.zeros(2), 8.0)
    rng = np.random.default_rng(5)
    cfg = TreeConfig(1.0, 4.0, 2.0, 0.5)
    prefixes = []
    for _ in range(2):
        X = rng.uniform(-4, 4, size=(30, 2))
        tree = adaptive_binning(X, cfg, rng, box=box)
        assert tree.h == 4
        level_h = {p[: tree.h] for p in all_leaf_paths(tree)}
        prefixes.append(level_h)
    assert prefixes[0] == prefixes[1] == {format(v, "04b") for v in range(16)}


class TestTauFloor:
    def test_fixture(self):
        assert tau_floor(2, 5, 100, 1.0, 0.1) == pytest.approx(6 * math.log(3040), rel=1e-14)
        assert tau_floor(2, 5, 100, 1.0, 0.1) == pytest.approx(48.1176767664016, rel=1e-12)

    def test_monotone(self):
        assert tau_floor(2, 5, 200, 1.0, 0.1) > tau_floor(2, 5, 100, 1.0, 0.1)
        assert tau_floor(2, 5, 100, 1.0, 0.01) > tau_floor(2, 5, 100, 1.0, 0.1)

    def test_linear_in_levels_up_to_log(self):
        a, b = tau_floor(0, 3, 50, 1.0, 0.1), tau_floor(0, 6, 50, 1.0, 0.1)
        assert b / a == pytest.approx(2 * math.log((1 + 300) / 0.1) / math.log((1 + 150) / 0.1), rel=1e-12)

    def test_large_h_no_overflow(self):
        assert math.isfinite(tau_floor(2000, 2010, 10, 1.0, 0.1))

    @pytest.mark.parametrize("args", [(3, 3, 10, 1.0, 0.1), (1, 3, 0, 1.0, 0.1), (1, 3, 10, 1.0, 1.0), (1, 3, 10, 0.0, 0.5)])
    def test_domain(self, args):
        with pytest.raises(ValueError):
            tau_floor(*args)


def test_empty_leaf_upper_bound():
    assert empty_leaf_upper_bound(2, 5, 100) == 304
    assert empty_leaf_upper_bound(3, 3, 100) == 8


class TestReconstruction:
    def test_mixed_depth_paths(self):
        leaves = reconstruct_empty_leaves(["01000", "101"], 2)
        assert leaves.count == 6
        assert leaves.expand() == {"00", "011", "0101", "01001", "100", "11"}

    def test_full_level_h(self):
        assert reconstruct_empty_leaves(["00", "01", "10", "11"], 2).count == 0

    def test_no_leaves(self):
        leaves = reconstruct_empty_leaves([], 3)
        assert leaves.count == 8

    def test_blocks_above_h(self):
        leaves = reconstruct_empty_leaves(["0000"], 4)
        assert leaves.count == 15
        assert {p for p, _ in leaves.blocks} == {"1", "01", "001"}
        assert leaves.explicit == ["0001"]

    def test_matches_noiseless_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            d = int(rng.integers(1, 4))
            n = int(rng.integers(1, 51))
            X = rng.uniform(-1, 1, size=(n, d)) * rng.uniform(0.2, 1, size=d)
            box = bounding_box(X)
            R = box.edge
            s1 = R / 2 ** int(rng.integers(0, 3))
            s2 = s1 / 2 ** int(rng.integers(1, 3))
            cfg = TreeConfig(NOISELESS, 2.5, s1, s2)
            tree = adaptive_binning(X, cfg, rng)
            oracle, empty_split = explicit_tree(X, box.center, R, tree.h, tree.h_prime, 2.5, 1e-12, rng)
            assert not empty_split and not tree.empty_split
            assert {p for p, c in oracle.items() if c} == set(tree.leaf_paths)
            empty = {p for p, c in oracle.items() if not c}
            assert tree.empty_leaves.expand() == empty
            assert reconstruct_empty_leaves(tree.leaf_paths, tree.h).expand() == empty

    def test_matches_noisy_oracle_trees(self):
        rng = np.random.default_rng(1)
        checked = 0
        for _ in range(1000):
            d = int(rng.integers(1, 4))
            n = int(rng.integers(1, 51))
            X = rng.normal(size=(n, d))
            box = bounding_box(X)
            R = box.edge
            h, hp = tree_depths(R, d, R / 2, R / 2 ** int(rng.integers(2, 4)))
            if hp > 8:
                hp = h + (8 - h) // d * d
            leaves, empty_split = explicit_tree(X, box.center, R, h, hp, 2.0, 0.5, rng)
            if empty_split:
                continue
            nonempty = [p for p, c in leaves.items() if c]
            got = reconstruct_empty_leaves(nonempty, h)
            assert got.expand() == {p for p, c in leaves.items() if not c}
            assert got.count <= empty_leaf_upper_bound(h, hp, n)
            checked += 1
        assert checked > 900

    def test_order_does_not_matter(self):
        a = reconstruct_empty_leaves(["101", "01000"], 2)
        assert a.expand() == reconstruct_empty_leaves(["01000", "101"], 2).expand()


class TestEmptyLeafSampler:
    def test_exhaustive_draw_is_the_set(self):
        leaves = reconstruct_empty_leaves(["01000", "101"], 2)
        got = leaves.sample(6, np.random.default_rng(0))
        assert sorted(got) == sorted(leaves.expand())

    def test_too_many(self):
        with pytest.raises(ValueError):
            reconstruct_empty_leaves(["01000", "101"], 2).sample(7, np.random.default_rng(0))

    def test_uniform_with_blocks_and_exclusions(self):
        leaves = EmptyLeafSet(3, explicit=["0000", "0001"], blocks=[("1", frozenset({"100"})), ("01", frozenset())])
        assert leaves.count == 2 + 3 + 2
        rng = np.random.default_rng(1)
        counts = {}
        for _ in range(7000):
            for p in leaves.sample(2, rng):
                counts[p] = counts.get(p, 0) + 1
        assert set(counts) == leaves.expand()
        assert stats.chisquare(list(counts.values())).pvalue > 0.001

    def test_huge_block(self):
        leaves = EmptyLeafSet(200, blocks=[("", frozenset())])
        got = leaves.sample(50, np.random.default_rng(2))
        assert len(set(got)) == 50 and all(len(p) == 200 for p in got)

    def test_sampler_returns_leaf_bins(self):
        X = np.random.default_rng(3).normal(size=(200, 2))
        tree = adaptive_binning(X, TreeConfig(1.0, 8.0, 2.0, 0.25), np.random.default_rng(4))
        count, sampler = implicit_empty_leaves(tree)
        assert count == tree.empty_leaves.count
        bins = sampler(min(count, 10), np.random.default_rng(5))
        expected = {tuple(node_geometry(tree.box, p)[0]) for p in tree.empty_leaves.expand()}
        assert all(tuple(b.center) in expected and b.count == 0 for b in bins)


def test_empty_split_fallback_is_flagged():
    X = np.random.default_rng(6).normal(size=(100, 2))
    box = bounding_box(X)
    # tau = 0 and large noise: empty nodes split half the time
    tree = adaptive_binning(X, TreeConfig(0.2, 0.0, box.edge / 4, box.edge / 64), np.random.default_rng(7))
    assert tree.empty_split
    count, _ = implicit_empty_leaves(tree)
    assert count == tree.empty_leaves.count
    assert count != reconstruct_empty_leaves(tree.leaf_paths, tree.h).count
    if count < 5000:
        assert_tiles(all_leaf_paths(tree), box)


def test_encode_round_trip():
    X = np.random.default_rng(8).normal(size=(300, 2))
    tree = adaptive_binning(X, TreeConfig(1.0, 10.0, 2.0, 0.25), np.random.default_rng(9))
    box, h, hp, paths = decode_tree(tree.encode())
    assert (h, hp) == (tree.h, tree.h_prime) and paths == tree.leaf_paths
    np.testing.assert_array_equal(box.center, tree.box.center)
    if not tree.empty_split:
        assert reconstruct_empty_leaves(paths, h).expand() == tree.empty_leaves.expand()


def test_deterministic_for_seed():
    X = np.random.default_rng(10).normal(size=(300, 3))
    a = adaptive_binning(X, TreeConfig(1.0, 5.0, 2.0, 0.25), np.random.default_rng(11))
    b = adaptive_binning(X, TreeConfig(1.0, 5.0, 2.0, 0.25), np.random.default_rng(11))
    assert a.leaf_paths == b.leaf_paths
    np.testing.assert_array_equal(a.leaf_counts, b.leaf_counts)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_empty_count_bounded_when_tau_at_floor(seed, d):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(60, d))
    box = bounding_box(X)
    h, hp = tree_depths(box.edge, d, box.edge / 2, box.edge / 8)
    tau = tau_floor(h, hp, 60, 1.0, 0.05)
    tree = adaptive_binning(X, TreeConfig(1.0, tau, box.edge / 2, box.edge / 8), rng)
    if not tree.empty_split:
        assert tree.empty_leaves.count <= empty_leaf_upper_bound(h, hp, 60)
