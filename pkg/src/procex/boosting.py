"""Multiclass gradient-boosted regression trees, written for determinism.

One regression tree per class per iteration is fitted to the softmax
log-loss residuals.  Splits are exact (no histograms): numeric features
split on midpoints between sorted unique values, categorical features
split on equality sets found by ordering the categories by mean residual.
Unseen category codes route to the right child.  Everything is seeded and
single-threaded, so refitting with the same seed reproduces the model
bit for bit.

The optional ``row_sampler`` hook lets a caller re-draw the training rows
for every boosting iteration while margins are maintained over the full
row pool; the relation extractor uses this for per-iteration negative
resampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

_EPS = 1e-12


@dataclass
class _TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left_categories: frozenset[int] = frozenset()
    is_categorical: bool = False
    left: "_TreeNode | None" = None
    right: "_TreeNode | None" = None
    value: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"value": self.value}
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left_categories": sorted(self.left_categories),
            "is_categorical": self.is_categorical,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "_TreeNode":
        if "value" in data:
            return cls(value=data["value"])
        return cls(
            feature=data["feature"],
            threshold=data["threshold"],
            left_categories=frozenset(data["left_categories"]),
            is_categorical=data["is_categorical"],
            left=cls.from_dict(data["left"]),
            right=cls.from_dict(data["right"]),
        )


@dataclass
class _RegressionTree:
    max_depth: int
    min_samples_leaf: int
    categorical: frozenset[int]
    root: _TreeNode = field(default_factory=_TreeNode)

    def fit(self, X: np.ndarray, gradients: np.ndarray, hessians: np.ndarray) -> None:
        self.root = self._build(X, gradients, hessians, np.arange(X.shape[0]), 0)

    def _leaf_value(self, gradients: np.ndarray, hessians: np.ndarray, rows: np.ndarray) -> float:
        # Newton step on the softmax loss (Friedman's multiclass update)
        return float(gradients[rows].sum() / (hessians[rows].sum() + _EPS))

    def _build(
        self,
        X: np.ndarray,
        gradients: np.ndarray,
        hessians: np.ndarray,
        rows: np.ndarray,
        depth: int,
    ) -> _TreeNode:
        node = _TreeNode(value=self._leaf_value(gradients, hessians, rows))
        if depth >= self.max_depth or rows.size < 2 * self.min_samples_leaf:
            return node
        split = self._best_split(X, gradients, rows)
        if split is None:
            return node
        feature, threshold, left_cats, left_rows, right_rows = split
        node.feature = feature
        if left_cats is not None:
            node.is_categorical = True
            node.left_categories = left_cats
        else:
            node.threshold = threshold
        node.left = self._build(X, gradients, hessians, left_rows, depth + 1)
        node.right = self._build(X, gradients, hessians, right_rows, depth + 1)
        return node

    def _best_split(self, X: np.ndarray, gradients: np.ndarray, rows: np.ndarray):
        g = gradients[rows]
        total_sum = g.sum()
        total_count = rows.size
        base_score = total_sum * total_sum / total_count
        best_gain = 1e-10  # require a strictly positive variance reduction
        best = None
        for feature in range(X.shape[1]):
            column = X[rows, feature]
            if feature in self.categorical:
                split = self._best_categorical(column, g, total_sum, total_count, base_score)
            else:
                split = self._best_numeric(column, g, total_sum, total_count, base_score)
            if split is not None and split[0] > best_gain:
                gain, threshold, left_cats, mask = split
                best_gain = gain
                best = (feature, threshold, left_cats, rows[mask], rows[~mask])
        return best

    def _best_numeric(self, column, g, total_sum, total_count, base_score):
        order = np.argsort(column, kind="stable")
        sorted_vals = column[order]
        sorted_g = g[order]
        prefix = np.cumsum(sorted_g)
        best = None
        best_gain = 0.0
        min_leaf = self.min_samples_leaf
        for i in range(min_leaf - 1, total_count - min_leaf):
            if sorted_vals[i] == sorted_vals[i + 1]:
                continue
            left_sum = prefix[i]
            n_left = i + 1
            gain = (
                left_sum * left_sum / n_left
                + (total_sum - left_sum) ** 2 / (total_count - n_left)
                - base_score
            )
            if gain > best_gain:
                best_gain = gain
                best = 0.5 * (sorted_vals[i] + sorted_vals[i + 1])
        if best is None:
            return None
        mask = column <= best
        return best_gain, float(best), None, mask

    def _best_categorical(self, column, g, total_sum, total_count, base_score):
        codes = column.astype(np.int64)
        cats, inverse = np.unique(codes, return_inverse=True)
        if cats.size < 2:
            return None
        sums = np.bincount(inverse, weights=g)
        counts = np.bincount(inverse)
        # ordering categories by mean residual makes the optimal partition
        # a prefix of this order, as in exact categorical regression splits
        order = np.argsort(sums / counts, kind="stable")
        best = None
        best_gain = 0.0
        left_sum = 0.0
        n_left = 0
        for i in range(cats.size - 1):
            left_sum += sums[order[i]]
            n_left += counts[order[i]]
            n_right = total_count - n_left
            if n_left < self.min_samples_leaf or n_right < self.min_samples_leaf:
                continue
            gain = left_sum**2 / n_left + (total_sum - left_sum) ** 2 / n_right - base_score
            if gain > best_gain:
                best_gain = gain
                best = frozenset(int(cats[j]) for j in order[: i + 1])
        if best is None:
            return None
        mask = np.isin(codes, sorted(best))
        return best_gain, 0.0, best, mask

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(X.shape[0])
        stack = [(self.root, np.arange(X.shape[0]))]
        while stack:
            node, rows = stack.pop()
            if rows.size == 0:
                continue
            if node.is_leaf:
                out[rows] = node.value
                continue
            column = X[rows, node.feature]
            if node.is_categorical:
                mask = np.isin(column.astype(np.int64), sorted(node.left_categories))
            else:
                mask = column <= node.threshold
            stack.append((node.left, rows[mask]))
            stack.append((node.right, rows[~mask]))
        return out


def _softmax(margins: np.ndarray) -> np.ndarray:
    shifted = margins - margins.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


class GradientBoostedTreesClassifier(BaseEstimator):
    """Deterministic multiclass gradient boosting over mixed feature types.

    Parameters
    ----------
    n_iterations : boosting rounds; each round adds one tree per class.
    learning_rate : shrinkage applied to every tree's contribution.
    max_depth : maximum tree depth.
    min_samples_leaf : minimum rows per leaf.
    categorical_features : column indices holding integer category codes.
    seed : seeds the per-iteration row sampler, when one is used.
    """

    def __init__(
        self,
        n_iterations: int = 100,
        learning_rate: float = 0.1,
        max_depth: int = 4,
        min_samples_leaf: int = 1,
        categorical_features: tuple[int, ...] = (),
        seed: int = 0,
    ):
        self.n_iterations = n_iterations
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.categorical_features = categorical_features
        self.seed = seed

    def fit(
        self,
        X: np.ndarray,
        y: Sequence,
        row_sampler: Callable[[int, np.random.Generator], np.ndarray] | None = None,
    ):
        """Fit on rows of ``X``; ``row_sampler(iteration, rng)`` may narrow each round.

        With a sampler the logged training loss is still measured over the
        full pool, whose margins are maintained incrementally.
        """
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        self.classes_ = np.unique(y)
        n_classes = self.classes_.size
        if n_classes < 2:
            raise ValueError("training data contains a single class")
        class_index = {c: k for k, c in enumerate(self.classes_)}
        targets = np.zeros((X.shape[0], n_classes))
        for i, label in enumerate(y):
            targets[i, class_index[label]] = 1.0

        categorical = frozenset(self.categorical_features)
        rng = np.random.default_rng(self.seed)
        margins = np.zeros((X.shape[0], n_classes))
        self.trees_: list[list[_RegressionTree]] = []
        self.train_log_loss_: list[float] = []
        factor = (n_classes - 1) / n_classes

        for iteration in range(self.n_iterations):
            rows = (
                np.arange(X.shape[0])
                if row_sampler is None
                else np.asarray(row_sampler(iteration, rng))
            )
            proba = _softmax(margins[rows])
            residual = targets[rows] - proba
            round_trees: list[_RegressionTree] = []
            for k in range(n_classes):
                r = residual[:, k]
                tree = _RegressionTree(self.max_depth, self.min_samples_leaf, categorical)
                # least-squares fit to the residuals; leaves take the Newton
                # step factor * sum(r) / sum(|r| (1 - |r|)) of multinomial boosting
                tree.fit(X[rows], factor * r, np.abs(r) * (1.0 - np.abs(r)))
                round_trees.append(tree)
                margins[:, k] += self.learning_rate * tree.predict(X)
            self.trees_.append(round_trees)
            full_proba = _softmax(margins)
            loss = -float(np.mean(np.log(np.clip(full_proba[targets.astype(bool)], _EPS, None))))
            self.train_log_loss_.append(loss)
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "trees_"):
            raise NotFittedError("GradientBoostedTreesClassifier is not fitted yet")

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        self._check_fitted()
        X = np.asarray(X, dtype=float)
        margins = np.zeros((X.shape[0], self.classes_.size))
        for round_trees in self.trees_:
            for k, tree in enumerate(round_trees):
                margins[:, k] += self.learning_rate * tree.predict(X)
        return margins

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _softmax(self.decision_function(X))

    def predict(self, X: np.ndarray) -> np.ndarray:
        proba = self.predict_proba(X)
        return self.classes_[np.argmax(proba, axis=1)]

    # -- persistence ---------------------------------------------------------

    def to_dict(self) -> dict:
        self._check_fitted()
        return {
            "config": self.get_params(),
            "classes": self.classes_.tolist(),
            "trees": [[t.root.to_dict() for t in round_trees] for round_trees in self.trees_],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GradientBoostedTreesClassifier":
        params = dict(data["config"])
        params["categorical_features"] = tuple(params.get("categorical_features", ()))
        model = cls(**params)
        model.classes_ = np.asarray(data["classes"])
        model.trees_ = [
            [
                _RegressionTree(
                    model.max_depth,
                    model.min_samples_leaf,
                    frozenset(model.categorical_features),
                    root=_TreeNode.from_dict(t),
                )
                for t in round_trees
            ]
            for round_trees in data["trees"]
        ]
        model.train_log_loss_ = data.get("train_log_loss", [])
        return model
