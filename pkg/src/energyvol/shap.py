"""
Exact Shapley attributions for tree ensembles.

The value of a feature coalition ``S`` is the path-dependent conditional
expectation of the model: descend every tree, follow the explained row at
splits on features in ``S`` and average both children by their covers
otherwise.  :func:`tree_shap` computes the Shapley values of this game in
polynomial time per tree; :func:`brute_force_shapley` enumerates all ``2^p``
coalitions and serves as a reference for small ``p``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Optional, Sequence

import numba
import numpy as np

from energyvol.mlmodels.trees import Tree, TreeEnsemble

__all__ = [
    "ShapError",
    "ShapExplanation",
    "GlobalImportance",
    "tree_shap",
    "tree_shap_matrix",
    "brute_force_shapley",
    "global_importance",
    "MAX_BRUTE_FORCE_FEATURES",
]

MAX_BRUTE_FORCE_FEATURES = 15


class ShapError(ValueError):
    pass


@dataclass(frozen=True)
class ShapExplanation:
    base_value: float
    attributions: np.ndarray
    feature_values: np.ndarray
    model_output: float

    def local_accuracy_gap(self) -> float:
        return abs(self.base_value + float(np.sum(self.attributions)) - self.model_output)


@dataclass(frozen=True)
class GlobalImportance:
    """Mean absolute attribution per feature; ``order`` lists feature indices
    from most to least important (ties by lower index)."""

    values: np.ndarray
    order: np.ndarray
    feature_names: tuple

    def ranked(self) -> list[tuple[str, float]]:
        return [(self.feature_names[i], float(self.values[i])) for i in self.order]


# ---------------------------------------------------------------------------
# polynomial-time algorithm


@numba.njit(cache=True)
def _extend(pf, pz, po, pw, start, depth, zero_frac, one_frac, feat):
    pf[start + depth] = feat
    pz[start + depth] = zero_frac
    po[start + depth] = one_frac
    pw[start + depth] = 1.0 if depth == 0 else 0.0
    for i in range(depth - 1, -1, -1):
        pw[start + i + 1] += one_frac * pw[start + i] * (i + 1) / (depth + 1)
        pw[start + i] = zero_frac * pw[start + i] * (depth - i) / (depth + 1)


@numba.njit(cache=True)
def _unwind(pf, pz, po, pw, start, depth, idx):
    one_frac = po[start + idx]
    zero_frac = pz[start + idx]
    nxt = pw[start + depth]
    for i in range(depth - 1, -1, -1):
        if one_frac != 0.0:
            tmp = pw[start + i]
            pw[start + i] = nxt * (depth + 1) / ((i + 1) * one_frac)
            nxt = tmp - pw[start + i] * zero_frac * (depth - i) / (depth + 1)
        else:
            pw[start + i] = pw[start + i] * (depth + 1) / (zero_frac * (depth - i))
    for i in range(idx, depth):
        pf[start + i] = pf[start + i + 1]
        pz[start + i] = pz[start + i + 1]
        po[start + i] = po[start + i + 1]


@numba.njit(cache=True)
def _unwound_sum(pz, po, pw, start, depth, idx):
    one_frac = po[start + idx]
    zero_frac = pz[start + idx]
    nxt = pw[start + depth]
    total = 0.0
    for i in range(depth - 1, -1, -1):
        if one_frac != 0.0:
            tmp = nxt * (depth + 1) / ((i + 1) * one_frac)
            total += tmp
            nxt = pw[start + i] - tmp * zero_frac * (depth - i) / (depth + 1)
        elif zero_frac != 0.0:
            total += pw[start + i] / zero_frac * (depth + 1) / (depth - i)
    return total


# not cached: numba's on-disk cache mishandles self-recursive functions
@numba.njit
def _recurse(feature, threshold, left, right, value, cover, x, phi,
             pf, pz, po, pw, parent_start, node, depth, zero_frac, one_frac, feat):
    # copy the parent's path into this level's slice, then extend it
    start = parent_start + depth + 1
    for i in range(depth):
        pf[start + i] = pf[parent_start + i]
        pz[start + i] = pz[parent_start + i]
        po[start + i] = po[parent_start + i]
        pw[start + i] = pw[parent_start + i]
    _extend(pf, pz, po, pw, start, depth, zero_frac, one_frac, feat)

    j = feature[node]
    if j < 0:
        for i in range(1, depth + 1):
            w = _unwound_sum(pz, po, pw, start, depth, i)
            phi[pf[start + i]] += w * (po[start + i] - pz[start + i]) * value[node]
        return

    if x[j] < threshold[node]:
        hot, cold = left[node], right[node]
    else:
        hot, cold = right[node], left[node]
    hot_zero = cover[hot] / cover[node]
    cold_zero = cover[cold] / cover[node]
    in_zero = 1.0
    in_one = 1.0
    # a feature split on earlier in the path is undone and redone here
    idx = -1
    for i in range(1, depth + 1):
        if pf[start + i] == j:
            idx = i
            break
    if idx >= 0:
        in_zero = pz[start + idx]
        in_one = po[start + idx]
        _unwind(pf, pz, po, pw, start, depth, idx)
        depth -= 1
    _recurse(feature, threshold, left, right, value, cover, x, phi,
             pf, pz, po, pw, start, hot, depth + 1, hot_zero * in_zero, in_one, j)
    _recurse(feature, threshold, left, right, value, cover, x, phi,
             pf, pz, po, pw, start, cold, depth + 1, cold_zero * in_zero, 0.0, j)


@numba.njit
def _tree_shap_rows(feature, threshold, left, right, value, cover, X, max_depth):
    n, p = X.shape
    out = np.zeros((n, p))
    size = (max_depth + 3) * (max_depth + 4)
    pf = np.empty(size, dtype=np.int64)
    pz = np.empty(size)
    po = np.empty(size)
    pw = np.empty(size)
    for r in range(n):
        _recurse(feature, threshold, left, right, value, cover, X[r], out[r],
                 pf, pz, po, pw, 0, 0, 0, 1.0, 1.0, -1)
    return out


def _checked_trees(ensemble: TreeEnsemble) -> None:
    for k, tree in enumerate(ensemble.trees):
        try:
            tree.check_covers()
        except ValueError as exc:
            raise ShapError(f"tree {k}: malformed covers ({exc})") from None


def _as_rows(ensemble: TreeEnsemble, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if ensemble.n_features and X.shape[1] != ensemble.n_features:
        raise ShapError(f"expected {ensemble.n_features} columns, got {X.shape[1]}")
    for tree in ensemble.trees:
        used = tree.feature[tree.feature >= 0]
        if used.size and used.max() >= X.shape[1]:
            raise ShapError(f"tree splits on feature {used.max()} but rows have {X.shape[1]} columns")
    return X


def tree_shap_matrix(ensemble: TreeEnsemble, X, check: bool = True) -> tuple[float, np.ndarray]:
    """Base value and the ``(n, p)`` attribution matrix for the rows of ``X``."""
    X = _as_rows(ensemble, X)
    if check:
        _checked_trees(ensemble)
    phi = np.zeros(X.shape)
    for tree in ensemble.trees:
        if tree.n_nodes > 1:
            phi += _tree_shap_rows(tree.feature, tree.threshold, tree.left, tree.right,
                                   tree.value, tree.cover, X, tree.depth())
    return ensemble.expected_value(), ensemble.tree_weight * phi


def tree_shap(ensemble: TreeEnsemble, row) -> ShapExplanation:
    """Exact Shapley values of one row, summed over trees and scaled by the
    ensemble's per-tree weight (1/n for forests, the learning rate for boosting)."""
    x = np.asarray(row, dtype=float).ravel()
    base, phi = tree_shap_matrix(ensemble, x[None, :])
    return ShapExplanation(base, phi[0], x.copy(), float(ensemble.predict(x[None, :])[0]))


# ---------------------------------------------------------------------------
# exhaustive reference


def _coalition_values(tree: Tree, x: np.ndarray, p: int) -> np.ndarray:
    """v(S) of one tree for every coalition, indexed by bitmask."""
    masks = np.arange(2**p)
    out = np.zeros(2**p)
    stack = [(0, np.ones(2**p))]
    while stack:
        node, weight = stack.pop()
        j = tree.feature[node]
        if j < 0:
            out += weight * tree.value[node]
            continue
        known = (masks >> j) & 1 == 1
        goes_left = x[j] < tree.threshold[node]
        for child, is_left in ((tree.left[node], True), (tree.right[node], False)):
            follow = 1.0 if goes_left == is_left else 0.0
            frac = tree.cover[child] / tree.cover[node]
            stack.append((child, weight * np.where(known, follow, frac)))
    return out


def brute_force_shapley(ensemble: TreeEnsemble, row) -> ShapExplanation:
    """Shapley values by enumerating all feature coalitions (``p <= 15``)."""
    x = np.asarray(row, dtype=float).ravel()
    p = x.size
    if p > MAX_BRUTE_FORCE_FEATURES:
        raise ShapError(f"brute force needs p <= {MAX_BRUTE_FORCE_FEATURES}, got {p}")
    _as_rows(ensemble, x[None, :])
    v = np.zeros(2**p)
    for tree in ensemble.trees:
        v += _coalition_values(tree, x, p)
    v = ensemble.base_score + ensemble.tree_weight * v

    masks = np.arange(2**p)
    sizes = np.array([bin(m).count("1") for m in masks])
    # |S|! (p - |S| - 1)! / p! = 1 / (p * C(p-1, |S|))
    weights = np.array([1.0 / (p * comb(p - 1, s)) if s < p else 0.0 for s in range(p + 1)])
    phi = np.zeros(p)
    for j in range(p):
        without = masks[(masks >> j) & 1 == 0]
        phi[j] = float(weights[sizes[without]] @ (v[without | (1 << j)] - v[without]))
    return ShapExplanation(float(v[0]), phi, x.copy(), float(ensemble.predict(x[None, :])[0]))


# ---------------------------------------------------------------------------


def global_importance(
    ensemble: TreeEnsemble, X, feature_names: Optional[Sequence[str]] = None
) -> GlobalImportance:
    """Mean absolute attribution per feature over the rows of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        raise ShapError("dataset is empty")
    _, phi = tree_shap_matrix(ensemble, X)
    values = np.abs(phi).mean(axis=0)
    order = np.lexsort((np.arange(values.size), -values))
    if feature_names is None:
        feature_names = ensemble.feature_names or [f"x{j}" for j in range(values.size)]
    if len(feature_names) != values.size:
        raise ShapError("feature_names length does not match the number of columns")
    return GlobalImportance(values, order, tuple(feature_names))
