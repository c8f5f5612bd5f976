import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rebalance import neighbors


def brute_force_knn(points, query_index, k):
    dists = np.linalg.norm(points - points[query_index], axis=1)
    order = sorted((dists[i], i) for i in range(len(points)) if i != query_index)
    return [(i, d) for d, i in order[:k]]


def collect_nodes(node):
    yield node
    if not node.is_leaf:
        yield from collect_nodes(node.left)
        yield from collect_nodes(node.right)


def leaf_indices(node):
    for n in collect_nodes(node):
        if n.is_leaf:
            yield from n.indices.tolist()


class TestBuild:
    def test_single_point(self):
        tree = neighbors.build(np.array([[1.0, 2.0]]))
        assert tree.root.is_leaf
        assert tree.root.radius == 0.0

    def test_leaf_size_respected(self, rng):
        tree = neighbors.build(rng.random((100, 2)), leaf_size=8)
        for node in collect_nodes(tree.root):
            if node.is_leaf:
                assert 1 <= len(node.indices) <= 8

    def test_every_index_in_exactly_one_leaf(self, rng):
        tree = neighbors.build(rng.random((57, 3)), leaf_size=4)
        indices = sorted(leaf_indices(tree.root))
        assert indices == list(range(57))

    def test_bounding_invariant_exhaustive(self, rng):
        pts = rng.normal(0, 3, (80, 4))
        tree = neighbors.build(pts, leaf_size=5)
        for node in collect_nodes(tree.root):
            member = [i for i in leaf_indices(node)]
            dists = np.linalg.norm(pts[member] - node.centroid, axis=1)
            assert np.all(dists <= node.radius + 1e-9)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            neighbors.build(np.empty((0, 2)))

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            neighbors.build(np.array([[1.0, np.nan]]))


class TestKnn:
    def test_collinear_example(self):
        tree = neighbors.build(np.array([[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]]))
        assert neighbors.knn(tree, 0, 2) == [(1, 1.0), (2, 3.0)]

    def test_k_equals_n_minus_one(self, rng):
        pts = rng.random((12, 3))
        tree = neighbors.build(pts)
        got = neighbors.knn(tree, 4, 11)
        assert got == brute_force_knn(pts, 4, 11)

    def test_random_queries_match_brute_force(self, rng):
        pts = rng.random((200, 10))
        tree = neighbors.build(pts, leaf_size=16)
        for q in range(0, 200, 7):
            got = [i for i, _ in neighbors.knn(tree, q, 5)]
            want = [i for i, _ in brute_force_knn(pts, q, 5)]
            assert got == want

    def test_duplicates_remain_eligible(self):
        pts = np.array([[0.0, 0.0], [0.0, 0.0], [5.0, 5.0]])
        got = neighbors.knn(neighbors.build(pts), 0, 2)
        assert got[0] == (1, 0.0)

    def test_distances_non_decreasing(self, rng):
        pts = rng.normal(0, 1, (150, 5))
        tree = neighbors.build(pts)
        dists = [d for _, d in neighbors.knn(tree, 3, 30)]
        assert all(a <= b for a, b in zip(dists, dists[1:]))

    def test_k_out_of_range(self, rng):
        tree = neighbors.build(rng.random((5, 2)))
        with pytest.raises(ValueError):
            neighbors.knn(tree, 0, 5)
        with pytest.raises(ValueError):
            neighbors.knn(tree, 0, 0)

    def test_deterministic(self, rng):
        pts = rng.random((60, 4))
        a = neighbors.knn(neighbors.build(pts), 10, 7)
        b = neighbors.knn(neighbors.build(pts.copy()), 10, 7)
        assert a == b

    @given(
        n=st.integers(5, 60),
        dim=st.integers(1, 6),
        k=st.integers(1, 4),
        query=st.integers(0, 10**6),
        seed=st.integers(0, 2**31 - 1),
        leaf=st.integers(1, 8),
        grid=st.booleans(),
    )
    @settings(max_examples=150)
    def test_oracle_equivalence(self, n, dim, k, query, seed, leaf, grid):
        rng = np.random.default_rng(seed)
        pts = rng.random((n, dim))
        if grid:
            # duplicate-heavy coordinates to force distance ties
            pts = np.round(pts * 4) / 4
        q = query % n
        tree = neighbors.build(pts, leaf_size=leaf)
        got = [i for i, _ in neighbors.knn(tree, q, min(k, n - 1))]
        want = [i for i, _ in brute_force_knn(pts, q, min(k, n - 1))]
        assert got == want
