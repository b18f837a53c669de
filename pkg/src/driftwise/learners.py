"""Minimal incremental models behind a uniform predict/learn interface.

Classification models report the probability of class 1 as their score; the
loss used downstream is the absolute difference between that score and the
0/1 target.  ``predict`` never mutates state; ``learn_one`` folds in exactly
one observation.  ``snapshot`` returns a frozen copy whose predictions never
change, which is what the interval baseline and static experiments need.
"""

from __future__ import annotations

import copy
import math

import numpy as np

from .datastream import Categorical, Numeric, Schema, agrawal_label, agrawal_label_batch, \
    agrawal_schema, stagger_label, stagger_label_batch, stagger_schema
from .errors import ConfigError, SchemaError


class Model:
    """Behavioral contract shared by all models."""

    def predict(self, features) -> float:
        raise NotImplementedError

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        """Row-wise predictions; default falls back to scalar ``predict``."""
        X = np.asarray(X, dtype=float)
        return np.array([self.predict(row) for row in X])

    def learn_one(self, features, target) -> None:
        raise NotImplementedError


class FrozenModel(Model):
    """Immutable view over a deep-copied model; ``learn_one`` is a no-op."""

    def __init__(self, inner: Model):
        self._inner = inner

    def predict(self, features) -> float:
        return self._inner.predict(features)

    def predict_batch(self, X) -> np.ndarray:
        return self._inner.predict_batch(X)

    def learn_one(self, features, target) -> None:
        pass


def snapshot(model: Model) -> FrozenModel:
    """Frozen copy that predicts exactly like ``model`` does right now."""
    return FrozenModel(copy.deepcopy(model))


class FrozenOracle(Model):
    """A fixed deterministic map from features to score.

    ``batch_fn``, when given, must agree with ``fn`` row-wise; it exists so
    hot paths can vectorize.
    """

    def __init__(self, fn, batch_fn=None):
        self._fn = fn
        self._batch_fn = batch_fn

    def predict(self, features) -> float:
        return float(self._fn(features))

    def predict_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self._batch_fn is not None:
            return np.asarray(self._batch_fn(X), dtype=float)
        return np.array([float(self._fn(row)) for row in X])

    def learn_one(self, features, target) -> None:
        pass


def agrawal_oracle(concept_id: int = 1) -> FrozenOracle:
    """Oracle that reproduces the agrawal labeling rule exactly."""
    agrawal_label(np.zeros(9), concept_id)  # validates the concept id
    return FrozenOracle(
        fn=lambda feats: agrawal_label(feats, concept_id),
        batch_fn=lambda X: agrawal_label_batch(X, concept_id).astype(float),
    )


def stagger_oracle(concept_id: int = 1) -> FrozenOracle:
    stagger_label(np.zeros(3), concept_id)
    return FrozenOracle(
        fn=lambda feats: stagger_label(feats, concept_id),
        batch_fn=lambda X: stagger_label_batch(X, concept_id).astype(float),
    )


class OnlineNaiveBayes(Model):
    """Gaussian/categorical naive Bayes with optional exponential forgetting.

    Numeric features keep per-class weighted Welford statistics (weight, mean,
    M2); categorical features keep per-class per-value counts with Laplace
    smoothing.  ``decay`` < 1 downweights old observations geometrically each
    step, which lets the model track concept drift; at the default 1.0 the
    statistics are the exact batch sufficient statistics.
    """

    def __init__(self, schema: Schema, laplace: float = 1.0, decay: float = 1.0,
                 var_floor: float = 1e-9):
        if schema.target_kind != "binary":
            raise ConfigError("naive Bayes supports binary targets only")
        if not (0.0 < decay <= 1.0):
            raise ConfigError(f"decay must be in (0, 1], got {decay}")
        self.schema = schema
        self.laplace = float(laplace)
        self.decay = float(decay)
        self.var_floor = float(var_floor)
        d = schema.n_features
        self._num_idx = np.array([j for j in range(d) if isinstance(schema.kinds[j], Numeric)],
                                 dtype=np.int64)
        self._cat_idx = np.array([j for j in range(d) if isinstance(schema.kinds[j], Categorical)],
                                 dtype=np.int64)
        k = len(self._num_idx)
        self.class_weight = np.zeros(2)
        # per-class weighted Welford state for numeric features
        self._w = np.zeros((2, k))
        self._mean = np.zeros((2, k))
        self._m2 = np.zeros((2, k))
        # pooled statistics back up classes that have not seen enough data yet
        self._gw = np.zeros(k)
        self._gmean = np.zeros(k)
        self._gm2 = np.zeros(k)
        self._cat_counts = [np.zeros((2, schema.kinds[j].cardinality)) for j in self._cat_idx]

    # -- updates ------------------------------------------------------------

    @staticmethod
    def _welford(w, mean, m2, x, decay):
        w_new = decay * w + 1.0
        delta = x - mean
        mean_new = mean + delta / w_new
        m2_new = decay * m2 + delta * (x - mean_new)
        return w_new, mean_new, m2_new

    def learn_one(self, features, target) -> None:
        feats = np.asarray(features, dtype=float)
        if feats.shape != (self.schema.n_features,):
            raise SchemaError(f"expected {self.schema.n_features} features, got {feats.shape}")
        y = int(target)
        if y not in (0, 1):
            raise SchemaError(f"binary target expected, got {target!r}")
        g = self.decay
        self.class_weight *= g
        self.class_weight[y] += 1.0
        if len(self._num_idx):
            x = feats[self._num_idx]
            # the untouched class only decays; scaling weight and M2 together
            # leaves its mean and variance unchanged
            other = 1 - y
            self._w[other] *= g
            self._m2[other] *= g
            self._w[y], self._mean[y], self._m2[y] = self._welford(
                self._w[y], self._mean[y], self._m2[y], x, g)
            self._gw, self._gmean, self._gm2 = self._welford(
                self._gw, self._gmean, self._gm2, x, g)
        for f, j in enumerate(self._cat_idx):
            table = self._cat_counts[f]
            table *= g
            table[y, int(feats[j])] += 1.0

    # -- inference ----------------------------------------------------------

    def _numeric_params(self):
        """Effective (mean, var) per class, falling back to pooled statistics
        where a class has too little weight; features with no data anywhere
        are masked out entirely."""
        use_class = self._w >= 2.0
        have_global = self._gw >= 2.0
        gvar = np.where(self._gw > 0, self._gm2 / np.maximum(self._gw, 1e-300), 0.0)
        var = np.where(use_class, self._m2 / np.maximum(self._w, 1e-300), gvar)
        mean = np.where(use_class, self._mean, self._gmean)
        active = use_class | have_global
        return mean, np.maximum(var, self.var_floor), active

    def predict_proba(self, features) -> np.ndarray:
        feats = np.asarray(features, dtype=float)
        if feats.shape != (self.schema.n_features,):
            raise SchemaError(f"expected {self.schema.n_features} features, got {feats.shape}")
        return self._proba_batch(feats[None, :])[0]

    def predict(self, features) -> float:
        return float(self.predict_proba(features)[1])

    def predict_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.schema.n_features:
            raise SchemaError(f"expected (n, {self.schema.n_features}) matrix, got {X.shape}")
        return self._proba_batch(X)[:, 1]

    def _proba_batch(self, X: np.ndarray) -> np.ndarray:
        n = X.shape[0]
        total = self.class_weight.sum()
        if total <= 0.0:
            return np.full((n, 2), 0.5)
        log_post = np.tile(np.log((self.class_weight + 1.0) / (total + 2.0)), (n, 1))
        if len(self._num_idx):
            mean, var, active = self._numeric_params()
            x = X[:, self._num_idx]
            for c in (0, 1):
                mask = active[c] & active[1 - c]  # compare classes on equal footing
                if mask.any():
                    diff = x[:, mask] - mean[c, mask]
                    log_post[:, c] += np.sum(
                        -0.5 * np.log(2.0 * math.pi * var[c, mask])
                        - diff * diff / (2.0 * var[c, mask]),
                        axis=1,
                    )
        for f, j in enumerate(self._cat_idx):
            table = self._cat_counts[f]
            card = table.shape[1]
            probs = (table + self.laplace) / (
                table.sum(axis=1, keepdims=True) + self.laplace * card)
            values = X[:, j].astype(np.int64)
            if values.min() < 0 or values.max() >= card:
                raise SchemaError(f"categorical feature index out of range for column {j}")
            log_post += np.log(probs[:, values]).T
        log_post -= log_post.max(axis=1, keepdims=True)
        post = np.exp(log_post)
        post /= post.sum(axis=1, keepdims=True)
        return post

    # exposed for tests of the Welford recursion
    def numeric_stats(self, class_id: int):
        """(weight, mean, population variance) per numeric feature."""
        w = self._w[class_id]
        var = np.where(w > 0, self._m2[class_id] / np.maximum(w, 1e-300), 0.0)
        return w.copy(), self._mean[class_id].copy(), var


class OnlineLogisticRegression(Model):
    """Plain SGD logistic regression over numerics plus one-hot categoricals."""

    def __init__(self, schema: Schema, learning_rate: float = 0.01, l2: float = 0.0):
        if schema.target_kind != "binary":
            raise ConfigError("logistic regression supports binary targets only")
        self.schema = schema
        self.learning_rate = float(learning_rate)
        self.l2 = float(l2)
        self._num_idx = [j for j in range(schema.n_features)
                         if isinstance(schema.kinds[j], Numeric)]
        self._cat_offsets = {}
        offset = len(self._num_idx)
        for j in range(schema.n_features):
            kind = schema.kinds[j]
            if isinstance(kind, Categorical):
                self._cat_offsets[j] = offset
                offset += kind.cardinality
        self.weights = np.zeros(offset)
        self.bias = 0.0

    def encode(self, features) -> np.ndarray:
        feats = np.asarray(features, dtype=float)
        if feats.shape != (self.schema.n_features,):
            raise SchemaError(f"expected {self.schema.n_features} features, got {feats.shape}")
        z = np.zeros_like(self.weights)
        z[: len(self._num_idx)] = feats[self._num_idx]
        for j, offset in self._cat_offsets.items():
            z[offset + int(feats[j])] = 1.0
        return z

    def _encode_batch(self, X: np.ndarray) -> np.ndarray:
        Z = np.zeros((X.shape[0], len(self.weights)))
        Z[:, : len(self._num_idx)] = X[:, self._num_idx]
        rows = np.arange(X.shape[0])
        for j, offset in self._cat_offsets.items():
            Z[rows, offset + X[:, j].astype(np.int64)] = 1.0
        return Z

    @staticmethod
    def _sigmoid(z):
        return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))),
                        np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))

    def predict(self, features) -> float:
        z = self.encode(features)
        return float(self._sigmoid(np.dot(self.weights, z) + self.bias))

    def predict_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.schema.n_features:
            raise SchemaError(f"expected (n, {self.schema.n_features}) matrix, got {X.shape}")
        return self._sigmoid(self._encode_batch(X) @ self.weights + self.bias)

    def log_loss(self, features, target) -> float:
        """Per-sample objective the SGD step descends: cross-entropy plus the
        L2 penalty on the weights (bias unpenalized)."""
        p = min(max(self.predict(features), 1e-12), 1.0 - 1e-12)
        y = float(target)
        penalty = 0.5 * self.l2 * float(np.dot(self.weights, self.weights))
        return -(y * math.log(p) + (1.0 - y) * math.log(1.0 - p)) + penalty

    def learn_one(self, features, target) -> None:
        z = self.encode(features)
        y = float(target)
        if y not in (0.0, 1.0):
            raise SchemaError(f"binary target expected, got {target!r}")
        p = float(self._sigmoid(np.dot(self.weights, z) + self.bias))
        err = p - y
        self.weights -= self.learning_rate * (err * z + self.l2 * self.weights)
        self.bias -= self.learning_rate * err
