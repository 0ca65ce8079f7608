"""CART-style decision tree trained from scratch with Gini impurity splits."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class TreeNode:
    feature_index: int  # -1 for leaves
    threshold: float
    left: int  # child node index, -1 for leaves
    right: int
    leaf_probability: float  # fraction of positive (malicious) samples


@dataclass
class DecisionTreeModel:
    nodes: list[TreeNode] = field(default_factory=list)
    max_depth: int = 12

    def predict_proba_one(self, x: np.ndarray) -> float:
        node = self.nodes[0]
        while node.feature_index >= 0:
            if x[node.feature_index] <= node.threshold:
                node = self.nodes[node.left]
            else:
                node = self.nodes[node.right]
        return node.leaf_probability

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        return np.array([self.predict_proba_one(row) for row in X])

    def predict(self, X: np.ndarray, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_proba(X) >= threshold).astype(int)

    def depth(self) -> int:
        def walk(i: int) -> int:
            node = self.nodes[i]
            if node.feature_index < 0:
                return 0
            return 1 + max(walk(node.left), walk(node.right))

        return walk(0)


def _gini_split_scores(
    col: np.ndarray, y: np.ndarray, min_leaf: int
) -> tuple[float, float] | None:
    """Best (weighted child impurity, threshold) for one feature column.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values; ties resolve to the lowest threshold.
    """
    order = np.argsort(col, kind="stable")
    v = col[order]
    t = y[order]
    n = v.size
    valid = v[:-1] < v[1:]
    if min_leaf > 1:
        nl_int = np.arange(1, n)
        valid = valid & (nl_int >= min_leaf) & (n - nl_int >= min_leaf)
    if not valid.any():
        return None
    pos = np.cumsum(t)
    total_pos = pos[-1]
    nl = np.arange(1, n, dtype=np.float64)
    nr = n - nl
    pl = pos[:-1].astype(np.float64)
    pr = total_pos - pl
    gini_l = 1.0 - (pl / nl) ** 2 - ((nl - pl) / nl) ** 2
    gini_r = 1.0 - (pr / nr) ** 2 - ((nr - pr) / nr) ** 2
    weighted = (nl * gini_l + nr * gini_r) / n
    weighted[~valid] = np.inf
    i = int(np.argmin(weighted))
    threshold = (v[i] + v[i + 1]) / 2.0
    return float(weighted[i]), threshold


def train_decision_tree(
    X: np.ndarray | Sequence[Sequence[float]],
    y: np.ndarray | Sequence[int],
    max_depth: int = 12,
    min_samples_leaf: int = 1,
) -> DecisionTreeModel:
    """Greedy CART fit. Splits while a node is impure, within the depth
    budget, and some feature still varies; split ties break on the lowest
    feature index, then the lowest threshold, so training is deterministic.
    """
    X = np.asfortranarray(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ValueError("X and y shapes disagree")
    if y.size < 2:
        raise ValueError("need at least two training samples")
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("training data contains a single class")
    if not np.isin(classes, (0, 1)).all():
        raise ValueError("labels must be 0 (benign) or 1 (malicious)")

    model = DecisionTreeModel(max_depth=max_depth)
    root_candidates = [
        f for f in range(X.shape[1]) if X[:, f].min() < X[:, f].max()
    ]

    def build(idx: np.ndarray, depth: int, candidates: list[int]) -> int:
        node_slot = len(model.nodes)
        model.nodes.append(TreeNode(-1, 0.0, -1, -1, 0.0))
        labels = y[idx]
        prob = float(labels.mean())
        is_pure = prob in (0.0, 1.0)
        best: tuple[float, int, float] | None = None
        surviving: list[int] = []
        if not is_pure and depth < max_depth and idx.size >= 2 * min_samples_leaf:
            for f in candidates:
                col = X[idx, f]
                if col.min() == col.max():
                    continue
                surviving.append(f)
                scored = _gini_split_scores(col, labels, min_samples_leaf)
                if scored is None:
                    continue
                impurity, threshold = scored
                if best is None or impurity < best[0]:
                    best = (impurity, f, threshold)
        if best is None:
            model.nodes[node_slot] = TreeNode(-1, 0.0, -1, -1, prob)
            return node_slot
        _, f, threshold = best
        mask = X[idx, f] <= threshold
        left = build(idx[mask], depth + 1, surviving)
        right = build(idx[~mask], depth + 1, surviving)
        model.nodes[node_slot] = TreeNode(f, threshold, left, right, prob)
        return node_slot

    build(np.arange(y.size), 0, root_candidates)
    return model


TREE_FORMAT = "mutatree-dtree"


def tree_to_json(model: DecisionTreeModel) -> dict:
    return {
        "format": TREE_FORMAT,
        "version": 1,
        "max_depth": model.max_depth,
        "nodes": [
            [n.feature_index, n.threshold, n.left, n.right, n.leaf_probability]
            for n in model.nodes
        ],
    }


def tree_from_json(obj: dict) -> DecisionTreeModel:
    if obj.get("format") != TREE_FORMAT:
        raise ValueError(f"not a decision-tree document: {obj.get('format')!r}")
    nodes = [TreeNode(int(f), float(t), int(l), int(r), float(p)) for f, t, l, r, p in obj["nodes"]]
    return DecisionTreeModel(nodes=nodes, max_depth=int(obj["max_depth"]))


def save_tree(model: DecisionTreeModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(tree_to_json(model)) + "\n")


def load_tree(path: str | Path) -> DecisionTreeModel:
    return tree_from_json(json.loads(Path(path).read_text()))
