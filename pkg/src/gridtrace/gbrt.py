"""Gradient-boosted regression trees with squared-error loss.

Built for determinism rather than speed: split thresholds are midpoints
between consecutive sorted unique feature values, gains are sum-of-squared-
error reductions, and ties break toward the lowest feature index and lowest
threshold. Fitted models serialize to a versioned JSON document and reload
bit-exactly.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1


@dataclass
class Hyperparameters:
    n_trees: int = 200
    learning_rate: float = 0.05
    max_depth: int = 3
    min_samples_leaf: int = 5
    seed: int = 20240901

    def validate(self) -> None:
        if self.n_trees < 0:
            raise ValueError("n_trees must be >= 0")
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "learning_rate": self.learning_rate,
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "seed": self.seed,
        }


@dataclass
class TreeNode:
    """Axis-aligned split node or leaf (when ``feature`` is None)."""

    feature: Optional[int] = None
    threshold: Optional[float] = None
    gain: float = 0.0
    value: Optional[float] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def predict_one(self, x: np.ndarray) -> float:
        node = self
        while not node.is_leaf:
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node.value

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        if self.is_leaf:
            return np.full(X.shape[0], self.value)
        out = np.empty(X.shape[0])
        mask = X[:, self.feature] <= self.threshold
        if mask.any():
            out[mask] = self.left.predict_batch(X[mask])
        if not mask.all():
            out[~mask] = self.right.predict_batch(X[~mask])
        return out

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"value": self.value}
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "gain": self.gain,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeNode":
        if "value" in d:
            return cls(value=d["value"])
        return cls(
            feature=d["feature"],
            threshold=d["threshold"],
            gain=d["gain"],
            left=cls.from_dict(d["left"]),
            right=cls.from_dict(d["right"]),
        )


def _sse(y: np.ndarray) -> float:
    if y.size == 0:
        return 0.0
    return float(np.sum((y - y.mean()) ** 2))


def find_best_split(
    X: np.ndarray,
    y: np.ndarray,
    min_samples_leaf: int,
) -> Optional[tuple[int, float, float]]:
    """Best (feature, threshold, gain) by SSE reduction, or None.

    Scans features in ascending index order and thresholds in ascending
    order, keeping the first strict maximum, so exact gain ties resolve to
    the lowest feature index and lowest threshold.
    """
    n = y.shape[0]
    if n < 2 * min_samples_leaf:
        return None
    parent_sse = _sse(y)
    best: Optional[tuple[int, float, float]] = None
    for f in range(X.shape[1]):
        col = X[:, f]
        order = np.argsort(col, kind="stable")
        xs = col[order]
        ys = y[order]
        cum = np.cumsum(ys)
        cum2 = np.cumsum(ys * ys)
        total, total2 = cum[-1], cum2[-1]
        # Candidate boundaries sit between consecutive distinct sorted values,
        # with min_samples_leaf rows on each side.
        i = np.arange(min_samples_leaf, n - min_samples_leaf + 1)
        if i.size == 0:
            continue
        valid = xs[i - 1] != xs[i]
        if not valid.any():
            continue
        left_sum, left_sum2 = cum[i - 1], cum2[i - 1]
        right_sum = total - left_sum
        right_sum2 = total2 - left_sum2
        sse_left = left_sum2 - left_sum * left_sum / i
        sse_right = right_sum2 - right_sum * right_sum / (n - i)
        gains = np.where(valid, parent_sse - sse_left - sse_right, -np.inf)
        j = int(np.argmax(gains))  # first maximum: lowest threshold wins ties
        if best is None or gains[j] > best[2]:
            threshold = (xs[i[j] - 1] + xs[i[j]]) / 2.0
            best = (f, float(threshold), float(gains[j]))
    if best is None or best[2] <= 0.0:
        # A zero-gain split carries no signal; emit a leaf instead.
        return None
    return best


def _build_tree(
    X: np.ndarray,
    y: np.ndarray,
    depth: int,
    max_depth: int,
    min_samples_leaf: int,
) -> TreeNode:
    if depth >= max_depth:
        return TreeNode(value=float(y.mean()))
    split = find_best_split(X, y, min_samples_leaf)
    if split is None:
        return TreeNode(value=float(y.mean()))
    f, threshold, gain = split
    mask = X[:, f] <= threshold
    return TreeNode(
        feature=f,
        threshold=threshold,
        gain=gain,
        left=_build_tree(X[mask], y[mask], depth + 1, max_depth, min_samples_leaf),
        right=_build_tree(X[~mask], y[~mask], depth + 1, max_depth, min_samples_leaf),
    )


@dataclass
class GbrtModel:
    """A fitted boosting ensemble over a fixed feature matrix layout."""

    base_prediction: float
    trees: list[TreeNode]
    learning_rate: float
    hyperparameters: Hyperparameters
    column_features: list[str]
    training_mse: list[float] = field(default_factory=list)

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        preds = np.full(X.shape[0], self.base_prediction)
        for tree in self.trees:
            preds += self.learning_rate * tree.predict_batch(X)
        return preds

    def gain_importances(self) -> dict[str, float]:
        """Per-feature share of total split gain, folded by parent feature name."""
        totals: dict[str, float] = {}
        for name in self.column_features:
            totals.setdefault(name, 0.0)
        stack = list(self.trees)
        while stack:
            node = stack.pop()
            if node.is_leaf:
                continue
            totals[self.column_features[node.feature]] += node.gain
            stack.extend((node.left, node.right))
        grand = sum(totals.values())
        if grand <= 0.0:
            logger.warning("no positive split gain; importances fall back to uniform")
            k = len(totals)
            return {name: 1.0 / k for name in totals}
        return {name: total / grand for name, total in totals.items()}

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "base_prediction": self.base_prediction,
            "learning_rate": self.learning_rate,
            "hyperparameters": self.hyperparameters.to_dict(),
            "column_features": self.column_features,
            "training_mse": self.training_mse,
            "trees": [t.to_dict() for t in self.trees],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "GbrtModel":
        if d.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {d.get('format_version')!r}")
        return cls(
            base_prediction=d["base_prediction"],
            trees=[TreeNode.from_dict(t) for t in d["trees"]],
            learning_rate=d["learning_rate"],
            hyperparameters=Hyperparameters(**d["hyperparameters"]),
            column_features=list(d["column_features"]),
            training_mse=list(d["training_mse"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "GbrtModel":
        return cls.from_dict(json.loads(text))


def fit_gbrt(
    X: np.ndarray,
    y: np.ndarray,
    hyperparameters: Optional[Hyperparameters] = None,
    column_features: Optional[list[str]] = None,
) -> GbrtModel:
    """Fit squared-error boosting: each tree fits the ensemble's residuals.

    Training MSE is recorded after every round; it is non-increasing because
    leaf values are residual means and the learning rate is in (0, 1].
    """
    hp = hyperparameters or Hyperparameters()
    hp.validate()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be (n, k) and y (n,) with matching n")
    if y.size == 0:
        raise ValueError("cannot fit on empty data")
    if y.size < 2 * hp.min_samples_leaf:
        raise ValueError(
            f"need at least {2 * hp.min_samples_leaf} rows for min_samples_leaf={hp.min_samples_leaf}"
        )
    if column_features is None:
        column_features = [f"col_{i}" for i in range(X.shape[1])]
    if len(column_features) != X.shape[1]:
        raise ValueError("column_features length must match X columns")

    base = float(y.mean())
    preds = np.full(y.shape[0], base)
    trees: list[TreeNode] = []
    mse_per_round: list[float] = [float(np.mean((y - preds) ** 2))]
    for _ in range(hp.n_trees):
        residuals = y - preds
        tree = _build_tree(X, residuals, 0, hp.max_depth, hp.min_samples_leaf)
        trees.append(tree)
        preds = preds + hp.learning_rate * tree.predict_batch(X)
        mse_per_round.append(float(np.mean((y - preds) ** 2)))
    return GbrtModel(
        base_prediction=base,
        trees=trees,
        learning_rate=hp.learning_rate,
        hyperparameters=hp,
        column_features=column_features,
        training_mse=mse_per_round,
    )
