"""
Random forest of Gini CART trees with a JSON wire format.

Trees are stored as flat node lists, node 0 being the root:
    {"feature": f, "threshold": t, "left": i, "right": j}   split, x[f] <= t goes left
    {"leaf": true, "value": v}                               leaf, v = positive fraction
"""
import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.config import settings
from src.config.exceptions import ConfigError, SchemaMismatchError
from src.config.seeding import derive_seed
from src.decision.features import FeatureSchema

logger = logging.getLogger(__name__)

_EPS = 1e-12


@dataclass
class ForestConfig:
    n_trees: int = 100
    max_depth: int = 8
    min_leaf: int = 5
    bag_fraction: float = 0.8
    seed: int = settings.DEFAULT_SEED
    max_features: Optional[int] = None

    def validate(self, n_features: int) -> "ForestConfig":
        if self.n_trees < 1 or self.max_depth < 1 or self.min_leaf < 1:
            raise ConfigError(f"forest config values must be positive: {self}")
        if not 0.0 < self.bag_fraction <= 1.0:
            raise ConfigError(f"bag_fraction must lie in (0, 1], got {self.bag_fraction}")
        if self.max_features is not None and not 1 <= self.max_features <= n_features:
            raise ConfigError(f"max_features must lie in [1, {n_features}], got {self.max_features}")
        return self

    def resolved_max_features(self, n_features: int) -> int:
        if self.max_features is not None:
            return self.max_features
        return int(math.ceil(math.sqrt(n_features)))

    @classmethod
    def from_dict(cls, data: Dict) -> "ForestConfig":
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        unknown = set(data) - set(known)
        if unknown:
            raise ConfigError(f"unknown forest config keys: {sorted(unknown)}")
        return cls(**known)

    def to_dict(self) -> Dict:
        return asdict(self)


class DecisionTree:
    def __init__(self, nodes: List[Dict]):
        self.nodes = nodes
        self._compile()

    def _compile(self):
        n = len(self.nodes)
        self._feature = np.full(n, -1, dtype=np.int64)
        self._threshold = np.zeros(n, dtype=np.float64)
        self._left = np.full(n, -1, dtype=np.int64)
        self._right = np.full(n, -1, dtype=np.int64)
        self._value = np.zeros(n, dtype=np.float64)
        for i, node in enumerate(self.nodes):
            if node.get("leaf"):
                self._value[i] = node["value"]
            else:
                self._feature[i] = node["feature"]
                self._threshold[i] = node["threshold"]
                self._left[i] = node["left"]
                self._right[i] = node["right"]

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        idx = np.zeros(X.shape[0], dtype=np.int64)
        active = self._feature[idx] >= 0
        while np.any(active):
            rows = np.nonzero(active)[0]
            node = idx[rows]
            go_left = X[rows, self._feature[node]] <= self._threshold[node]
            idx[rows] = np.where(go_left, self._left[node], self._right[node])
            active = self._feature[idx] >= 0
        return self._value[idx]

    def depth(self) -> int:
        def walk(i: int) -> int:
            node = self.nodes[i]
            if node.get("leaf"):
                return 0
            return 1 + max(walk(node["left"]), walk(node["right"]))
        return walk(0)

    def split_features(self) -> List[int]:
        return [node["feature"] for node in self.nodes if not node.get("leaf")]

    def __eq__(self, other) -> bool:
        return isinstance(other, DecisionTree) and self.nodes == other.nodes


def _gini_split(xf: np.ndarray, y: np.ndarray, min_leaf: int):
    """Best midpoint split on one feature: (weighted impurity, threshold) or None"""
    n = xf.shape[0]
    order = np.argsort(xf, kind="stable")
    xs = xf[order]
    cum_pos = np.cumsum(y[order])
    total_pos = cum_pos[-1]
    n_left = np.arange(1, n, dtype=np.float64)
    n_right = n - n_left
    pos_left = cum_pos[:-1]
    pos_right = total_pos - pos_left
    valid = (xs[:-1] < xs[1:]) & (n_left >= min_leaf) & (n_right >= min_leaf)
    if not np.any(valid):
        return None
    with np.errstate(divide="ignore", invalid="ignore"):
        gini_left = 2.0 * pos_left * (n_left - pos_left) / n_left
        gini_right = 2.0 * pos_right * (n_right - pos_right) / n_right
    impurity = np.where(valid, (gini_left + gini_right) / n, np.inf)
    i = int(np.argmin(impurity))
    return float(impurity[i]), float((xs[i] + xs[i + 1]) / 2.0)


def grow_tree(X: np.ndarray, y: np.ndarray, max_depth: int, min_leaf: int,
              max_features: Optional[int] = None,
              rng: Optional[np.random.Generator] = None) -> DecisionTree:
    """Grow one CART tree by greedy Gini splits.

    Ties go to the lowest feature index, then the lowest threshold. Without an
    rng every feature is considered at every split.
    """
    n_features = X.shape[1]
    max_features = n_features if max_features is None else max_features
    nodes: List[Dict] = []

    def build(rows: np.ndarray, depth: int) -> int:
        index = len(nodes)
        nodes.append({})
        ys = y[rows]
        positives = float(ys.sum())
        value = positives / rows.shape[0]
        node_gini = 2.0 * positives * (rows.shape[0] - positives) / rows.shape[0] ** 2
        if depth >= max_depth or rows.shape[0] < 2 * min_leaf or node_gini <= 0.0:
            nodes[index] = {"leaf": True, "value": value}
            return index

        if rng is not None and max_features < n_features:
            candidates = np.sort(rng.choice(n_features, size=max_features, replace=False))
        else:
            candidates = np.arange(n_features)

        best = None
        for f in candidates:
            found = _gini_split(X[rows, f], ys, min_leaf)
            if found is not None and (best is None or found[0] < best[0] - _EPS):
                best = (found[0], int(f), found[1])
        if best is None or best[0] >= node_gini - _EPS:
            nodes[index] = {"leaf": True, "value": value}
            return index

        _, feature, threshold = best
        mask = X[rows, feature] <= threshold
        node = {"feature": feature, "threshold": threshold}
        nodes[index] = node
        node["left"] = build(rows[mask], depth + 1)
        node["right"] = build(rows[~mask], depth + 1)
        return index

    build(np.arange(X.shape[0]), 0)
    return DecisionTree(nodes)


class TreeEnsemble:
    """Mean-aggregated tree ensemble predicting a probability in [0, 1]"""

    def __init__(self, schema: FeatureSchema, trees: List[DecisionTree], config: Optional[Dict] = None):
        self.schema = schema
        self.trees = trees
        self.config = config or {}
        self.aggregation = "mean"

    def predict_proba(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != len(self.schema):
            raise SchemaMismatchError(f"ensemble expects {len(self.schema)} features, got {X.shape[1]}")
        per_tree = np.stack([tree.predict(X) for tree in self.trees], axis=0)
        # Sorting before the sum keeps the mean independent of tree order
        return np.sort(per_tree, axis=0).sum(axis=0) / len(self.trees)

    def predict_one(self, values: Sequence[float]) -> float:
        return float(self.predict_proba(np.asarray(values, dtype=np.float64)[None, :])[0])

    @property
    def is_constant(self) -> bool:
        return all(len(tree.nodes) == 1 for tree in self.trees)

    def to_dict(self) -> Dict:
        return {
            "schema": self.schema.to_dict(),
            "trees": [{"nodes": tree.nodes} for tree in self.trees],
            "aggregation": self.aggregation,
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "TreeEnsemble":
        if data.get("aggregation", "mean") != "mean":
            raise ConfigError(f"unsupported aggregation {data.get('aggregation')}")
        schema = FeatureSchema.from_dict(data["schema"])
        trees = [DecisionTree(item["nodes"]) for item in data["trees"]]
        for tree in trees:
            if any(f < 0 or f >= len(schema) for f in tree.split_features()):
                raise SchemaMismatchError("ensemble split feature outside its schema")
        return cls(schema, trees, data.get("config"))

    def save(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, sort_keys=True, separators=(",", ":"))

    @classmethod
    def load(cls, path) -> "TreeEnsemble":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


def train_forest(X, y, schema: FeatureSchema, config: Optional[ForestConfig] = None) -> TreeEnsemble:
    """Train a random forest

    Args:
        X: (n, d) feature matrix matching schema
        y: binary labels
        schema: feature schema of the columns of X
        config: forest hyperparameters
    Returns:
        TreeEnsemble: deterministic given config.seed
    """
    config = (config or ForestConfig()).validate(len(schema))
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ConfigError("training set must be a nonempty 2-D matrix")
    if X.shape[1] != len(schema):
        raise SchemaMismatchError(f"training matrix has {X.shape[1]} columns, schema has {len(schema)}")
    if X.shape[0] != y.shape[0]:
        raise ConfigError("feature and label counts differ")
    if not np.all((y == 0) | (y == 1)):
        raise ConfigError("labels must be binary 0/1")
    if np.all(y == y[0]):
        logger.warning(f"All {y.shape[0]} labels equal {int(y[0])}; forest degenerates to a constant predictor")

    n = X.shape[0]
    bag_size = int(math.ceil(config.bag_fraction * n))
    max_features = config.resolved_max_features(X.shape[1])
    trees = []
    for t in range(config.n_trees):
        rng = np.random.default_rng(derive_seed(config.seed, "tree", t))
        rows = np.sort(rng.choice(n, size=bag_size, replace=False))
        trees.append(grow_tree(X[rows], y[rows], config.max_depth, config.min_leaf, max_features, rng))
    logger.info(f"Trained {config.n_trees} trees on {n} rows ({bag_size} per bag, {max_features} features per split)")
    return TreeEnsemble(schema, trees, config.to_dict())
