"""Exact Euclidean k-nearest-neighbor search over a ball tree."""

import heapq
from dataclasses import dataclass

import numpy as np

DEFAULT_LEAF_SIZE = 16


@dataclass(frozen=True)
class Node:
    centroid: np.ndarray
    radius: float
    indices: np.ndarray | None = None  # leaf payload
    left: "Node | None" = None
    right: "Node | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.indices is not None


@dataclass(frozen=True)
class BallTree:
    """Immutable spatial index; concurrent queries need no locking."""

    points: np.ndarray
    root: Node
    leaf_size: int


def _build_node(points: np.ndarray, indices: np.ndarray, leaf_size: int) -> Node:
    subset = points[indices]
    centroid = subset.mean(axis=0)
    radius = float(np.sqrt(((subset - centroid) ** 2).sum(axis=1).max()))
    if len(indices) <= leaf_size:
        return Node(centroid=centroid, radius=radius, indices=indices)
    spread = subset.max(axis=0) - subset.min(axis=0)
    dim = int(np.argmax(spread))  # ties resolve to the lower dimension
    # median pivot: stable sort on (coordinate, original index) keeps the
    # construction deterministic even with duplicate coordinates
    order = np.lexsort((indices, subset[:, dim]))
    mid = len(indices) // 2
    left = _build_node(points, indices[order[:mid]], leaf_size)
    right = _build_node(points, indices[order[mid:]], leaf_size)
    return Node(centroid=centroid, radius=radius, left=left, right=right)


def build(points: np.ndarray, leaf_size: int = DEFAULT_LEAF_SIZE) -> BallTree:
    points = np.ascontiguousarray(np.asarray(points, dtype=np.float64))
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValueError("need a non-empty 2-D point matrix")
    if not np.all(np.isfinite(points)):
        raise ValueError("points must have finite coordinates")
    if leaf_size < 1:
        raise ValueError("leaf_size must be >= 1")
    root = _build_node(points, np.arange(points.shape[0]), leaf_size)
    return BallTree(points=points, root=root, leaf_size=leaf_size)


def knn(tree: BallTree, query_index: int, k: int) -> list[tuple[int, float]]:
    """The k nearest points to ``points[query_index]``, self excluded by index.

    Returns (index, distance) pairs in ascending distance order; equal
    distances order by lower index. Exact: a node is pruned only when its
    best possible distance strictly exceeds the current k-th best.
    """
    n = tree.points.shape[0]
    if not 0 <= query_index < n:
        raise ValueError(f"query_index {query_index} out of range")
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")
    query = tree.points[query_index]

    # heap of (-distance, -index): the lexicographically worst survivor on top
    heap: list[tuple[float, int]] = []

    def consider(indices: np.ndarray):
        pts = tree.points[indices]
        dists = np.sqrt(((pts - query) ** 2).sum(axis=1))
        for idx, dist in zip(indices.tolist(), dists.tolist()):
            if idx == query_index:
                continue
            entry = (-dist, -idx)
            if len(heap) < k:
                heapq.heappush(heap, entry)
            elif entry > heap[0]:
                heapq.heapreplace(heap, entry)

    def lower_bound(node: Node) -> float:
        return max(0.0, float(np.linalg.norm(query - node.centroid)) - node.radius)

    def visit(node: Node):
        if len(heap) == k and lower_bound(node) > -heap[0][0]:
            return
        if node.is_leaf:
            consider(node.indices)
            return
        children = sorted((node.left, node.right), key=lower_bound)
        for child in children:
            visit(child)

    visit(tree.root)
    ordered = sorted(((-d, -i) for d, i in heap))
    return [(idx, dist) for dist, idx in ordered]


def knn_indices(tree: BallTree, query_index: int, k: int) -> np.ndarray:
    return np.asarray([idx for idx, _ in knn(tree, query_index, k)], dtype=np.int64)
