"""
Regression trees and tree ensembles.

One greedy builder serves all three learners.  It grows a tree on per-row
first and second derivatives ``g``, ``h`` of the loss and scores a split by

    gain = 1/2 [G_L^2/(H_L+lam) + G_R^2/(H_R+lam) - G^2/(H+lam)]

with leaf weight ``-sign(G) max(|G| - alpha, 0) / (H + lam)``.  For squared
loss (``h = 1``) and ``lam = alpha = 0`` the gain is half the reduction in
squared error, i.e. plain CART.  Thresholds are midpoints between sorted
distinct feature values; rows with ``x < threshold`` go left.  Ties in gain
go to the lower feature index, then the lower threshold.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "TreeError",
    "Tree",
    "TreeEnsemble",
    "grow_tree",
    "fit_tree",
    "fit_forest",
    "fit_boosted",
    "leaf_weight",
]

COMBINERS = ("single", "average", "additive")


class TreeError(ValueError):
    pass


@dataclass
class Tree:
    """Flat array representation; ``feature[i] == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    cover: np.ndarray

    def __post_init__(self) -> None:
        self.feature = np.asarray(self.feature, dtype=np.int64)
        self.left = np.asarray(self.left, dtype=np.int64)
        self.right = np.asarray(self.right, dtype=np.int64)
        self.threshold = np.asarray(self.threshold, dtype=float)
        self.value = np.asarray(self.value, dtype=float)
        self.cover = np.asarray(self.cover, dtype=float)

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def is_leaf(self, i: int) -> bool:
        return self.feature[i] < 0

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            nd = node[idx]
            go_left = X[idx, self.feature[nd]] < self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return self.value[node]

    def depth(self) -> int:
        def rec(i: int) -> int:
            if self.feature[i] < 0:
                return 0
            return 1 + max(rec(self.left[i]), rec(self.right[i]))

        return rec(0)

    def expected_value(self) -> float:
        """Cover-weighted mean of the leaf values."""
        leaves = self.feature < 0
        return float(self.value[leaves] @ self.cover[leaves] / self.cover[0])

    def check_covers(self, rtol: float = 1e-9) -> None:
        for i in np.flatnonzero(self.feature >= 0):
            l, r = self.left[i], self.right[i]
            total = self.cover[l] + self.cover[r]
            if abs(total - self.cover[i]) > rtol * max(1.0, abs(self.cover[i])):
                raise TreeError(f"node {i}: child covers {total} != parent cover {self.cover[i]}")
            if self.cover[i] <= 0:
                raise TreeError(f"node {i}: nonpositive cover")

    def to_nested(self, i: int = 0) -> dict:
        if self.feature[i] < 0:
            return {"leaf": float(self.value[i]), "cover": float(self.cover[i])}
        return {
            "feature": int(self.feature[i]),
            "threshold": float(self.threshold[i]),
            "cover": float(self.cover[i]),
            "left": self.to_nested(int(self.left[i])),
            "right": self.to_nested(int(self.right[i])),
        }

    @classmethod
    def from_nested(cls, root: dict) -> "Tree":
        cols: dict[str, list] = {k: [] for k in ("feature", "threshold", "left", "right", "value", "cover")}

        def add(node: dict) -> int:
            i = len(cols["feature"])
            for k in cols:
                cols[k].append(-1 if k in ("feature", "left", "right") else 0.0)
            cols["cover"][i] = float(node["cover"])
            if "leaf" in node:
                cols["value"][i] = float(node["leaf"])
                return i
            cols["feature"][i] = int(node["feature"])
            cols["threshold"][i] = float(node["threshold"])
            cols["left"][i] = add(node["left"])
            cols["right"][i] = add(node["right"])
            return i

        add(root)
        return cls(**{k: np.array(v) for k, v in cols.items()})


@dataclass
class TreeEnsemble:
    trees: list[Tree]
    base_score: float = 0.0
    combiner: str = "single"
    learning_rate: float = 1.0
    n_features: int = 0
    feature_names: list[str] = field(default_factory=list)
    train_loss: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.trees:
            raise TreeError("ensemble needs at least one tree")
        if self.combiner not in COMBINERS:
            raise TreeError(f"unknown combiner {self.combiner!r}")
        if self.combiner == "single" and len(self.trees) != 1:
            raise TreeError("single combiner takes exactly one tree")

    @property
    def tree_weight(self) -> float:
        if self.combiner == "average":
            return 1.0 / len(self.trees)
        if self.combiner == "additive":
            return self.learning_rate
        return 1.0

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.n_features and X.shape[1] != self.n_features:
            raise TreeError(f"expected {self.n_features} columns, got {X.shape[1]}")
        total = np.zeros(X.shape[0])
        for tree in self.trees:
            total += tree.predict(X)
        return self.base_score + self.tree_weight * total

    def expected_value(self) -> float:
        return self.base_score + self.tree_weight * sum(t.expected_value() for t in self.trees)


def leaf_weight(G: float, H: float, lam: float = 0.0, alpha: float = 0.0) -> float:
    """-sign(G) max(|G| - alpha, 0) / (H + lam)."""
    shrunk = max(abs(G) - alpha, 0.0)
    if shrunk == 0.0:
        return 0.0
    return -np.sign(G) * shrunk / (H + lam)


def _best_split(Xn, g, h, features, lam, min_child_weight):
    G, H = g.sum(), h.sum()
    if lam == 0.0:
        # without shrinkage the gain ignores a shift of g by a multiple of h;
        # centring removes the cancellation between its terms
        g = g - h * (G / H)
        G = g.sum()
    parent = G * G / (H + lam)
    # round-off in a gain is bounded by a few n*eps times this scale; gains that
    # close count as ties, and a split must beat that much (pure nodes never split)
    scale = float(np.sum(g * g / h))
    tol = 8.0 * g.size * np.finfo(float).eps * scale
    best = (tol, -1, 0.0)
    for j in features:
        x = Xn[:, j]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        cand = np.flatnonzero(xs[1:] > xs[:-1])
        if cand.size == 0:
            continue
        GL = np.cumsum(g[order])[cand]
        HL = np.cumsum(h[order])[cand]
        GR, HR = G - GL, H - HL
        ok = (HL >= min_child_weight) & (HR >= min_child_weight)
        if not ok.any():
            continue
        gain = 0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam) - parent)
        gain = np.where(ok, gain, -np.inf)
        # gains equal up to round-off count as ties: lowest threshold, then lowest feature
        top = float(np.max(gain))
        if top > best[0] + (tol if best[1] >= 0 else 0.0):
            k = int(np.argmax(gain >= top - tol))
            thr = 0.5 * (xs[cand[k]] + xs[cand[k] + 1])
            if not xs[cand[k]] < thr <= xs[cand[k] + 1]:  # midpoint rounded onto a neighbour
                thr = xs[cand[k] + 1]
            best = (top, int(j), float(thr))
    return best


def grow_tree(
    X: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    *,
    max_depth: Optional[int] = None,
    lam: float = 0.0,
    alpha: float = 0.0,
    min_child_weight: float = 1.0,
    feature_fraction: float = 1.0,
    rng: Optional[np.random.Generator] = None,
) -> Tree:
    """Grow one tree on weighted gradient statistics.

    ``g`` and ``h`` are already multiplied by the row weights; rows with
    ``h == 0`` are ignored.  ``cover`` of a node is its hessian sum.
    """
    X = np.asarray(X, dtype=float)
    keep = h > 0
    X, g, h = X[keep], g[keep], h[keep]
    p = X.shape[1]
    n_feat = max(1, int(round(feature_fraction * p)))
    if n_feat < p and rng is None:
        raise TreeError("feature subsampling needs a random generator")
    nodes: list[list] = []  # feature, threshold, left, right, value, cover

    def build(rows: np.ndarray, depth: int) -> int:
        i = len(nodes)
        G, H = float(g[rows].sum()), float(h[rows].sum())
        nodes.append([-1, 0.0, -1, -1, leaf_weight(G, H, lam, alpha), H])
        if (max_depth is not None and depth >= max_depth) or rows.size < 2:
            return i
        if n_feat < p:
            features = np.sort(rng.choice(p, size=n_feat, replace=False))
        else:
            features = range(p)
        gain, j, thr = _best_split(X[rows], g[rows], h[rows], features, lam, min_child_weight)
        if j < 0:
            return i
        mask = X[rows, j] < thr
        nodes[i][0], nodes[i][1] = j, thr
        nodes[i][2] = build(rows[mask], depth + 1)
        nodes[i][3] = build(rows[~mask], depth + 1)
        return i

    build(np.arange(X.shape[0]), 0)
    arr = list(zip(*nodes))
    return Tree(*(np.array(a) for a in arr))


def _check_xy(X, y):
    if y is None:
        X, y = X.X, X.y
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if X.shape[0] != y.size:
        raise TreeError("X and y have different numbers of rows")
    return X, y


def _wmean(w: np.ndarray, y: np.ndarray) -> float:
    return float(w @ y / w.sum())


def _shift_leaves(tree: Tree, c: float) -> Tree:
    leaves = tree.feature < 0
    tree.value = np.where(leaves, tree.value + c, tree.value)
    return tree


def fit_tree(X, y=None, max_depth: Optional[int] = None, min_leaf: int = 1) -> TreeEnsemble:
    """Single CART regression tree (variance-reduction splits)."""
    X, y = _check_xy(X, y)
    if (max_depth is not None and max_depth < 1) or min_leaf < 1:
        raise TreeError("require max_depth >= 1 and min_leaf >= 1")
    w = np.ones_like(y)
    ybar = _wmean(w, y)
    tree = grow_tree(X, w * (ybar - y), w, max_depth=max_depth, min_child_weight=min_leaf)
    return TreeEnsemble([_shift_leaves(tree, ybar)], 0.0, "single", 1.0, X.shape[1])


def fit_forest(
    X,
    y=None,
    n_trees: int = 100,
    max_depth: Optional[int] = None,
    min_leaf: int = 1,
    feature_fraction: float = 1.0 / 3.0,
    seed: int = 0,
    bootstrap: bool = True,
) -> TreeEnsemble:
    """Random forest: bootstrap rows per tree, random feature subset per split.

    Each tree draws from its own stream ``SeedSequence(seed).spawn(n_trees)[i]``
    so results do not depend on evaluation order.
    """
    X, y = _check_xy(X, y)
    if n_trees < 1 or not 0 < feature_fraction <= 1:
        raise TreeError("require n_trees >= 1 and 0 < feature_fraction <= 1")
    n = y.size
    trees = []
    for ss in np.random.SeedSequence(seed).spawn(n_trees):
        rng = np.random.default_rng(ss)
        w = np.bincount(rng.integers(0, n, n), minlength=n).astype(float) if bootstrap else np.ones(n)
        ybar = _wmean(w, y)
        tree = grow_tree(
            X, w * (ybar - y), w, max_depth=max_depth, min_child_weight=min_leaf,
            feature_fraction=feature_fraction, rng=rng,
        )
        trees.append(_shift_leaves(tree, ybar))
    return TreeEnsemble(trees, 0.0, "average", 1.0, X.shape[1])


def fit_boosted(
    X,
    y=None,
    n_rounds: int = 100,
    learning_rate: float = 0.1,
    max_depth: Optional[int] = 3,
    lambda_l2: float = 1.0,
    alpha_l1: float = 0.0,
    min_child_weight: float = 1.0,
) -> TreeEnsemble:
    """Second-order gradient boosting with squared loss (g = yhat - y, h = 1)."""
    X, y = _check_xy(X, y)
    if n_rounds < 1 or not 0 < learning_rate <= 1:
        raise TreeError("require n_rounds >= 1 and 0 < learning_rate <= 1")
    base = float(y.mean())
    pred = np.full(y.size, base)
    h = np.ones_like(y)
    trees, losses = [], [float(np.mean((pred - y) ** 2))]
    for _ in range(n_rounds):
        tree = grow_tree(X, pred - y, h, max_depth=max_depth, lam=lambda_l2, alpha=alpha_l1,
                         min_child_weight=min_child_weight)
        trees.append(tree)
        pred = pred + learning_rate * tree.predict(X)
        losses.append(float(np.mean((pred - y) ** 2)))
    return TreeEnsemble(trees, base, "additive", learning_rate, X.shape[1], train_loss=losses)
