"""Feature-importance estimators.

The streaming estimator charges each event a fixed price: for every feature
and every realization it evaluates the model exactly twice (once on the
observed vector, once with that feature's value spliced in from a sampled
past observation) and folds the risk difference into an exponentially
smoothed per-feature value.  The batch and exact estimators below serve as
references: the scaled permutation estimator is unbiased for the exact
pairwise form, which in turn is the oracle the streaming path must approach.
"""

from __future__ import annotations

import logging
from typing import Callable, Iterable, Sequence

import numpy as np

from .datastream import Instance, Schema
from .errors import ConfigError, DegenerateImportanceError, WarmupError
from .learners import Model
from .sampling import Sampler, make_sampler

log = logging.getLogger(__name__)

Loss = Callable[[np.ndarray, np.ndarray], np.ndarray]


def absolute_error(prediction, target):
    """Default norm on the output space; broadcasts over arrays."""
    return np.abs(np.asarray(prediction) - target)


def squared_error(prediction, target):
    diff = np.asarray(prediction) - target
    return diff * diff


LOSSES: dict[str, Loss] = {"absolute": absolute_error, "squared": squared_error}


def _subset_indices(subset) -> np.ndarray:
    idx = np.atleast_1d(np.asarray(subset, dtype=np.int64))
    if idx.size == 0:
        raise ConfigError("feature subset must not be empty")
    return idx


def splice(features, source_features, subset) -> np.ndarray:
    """Copy of ``features`` with the subset's values taken from the source."""
    out = np.array(features, dtype=float)
    idx = _subset_indices(subset)
    out[idx] = np.asarray(source_features, dtype=float)[idx]
    return out


def lambda_increment(model: Model, instance: Instance, source: Instance, subset,
                     loss: Loss = absolute_error) -> float:
    """Risk increase from replacing the subset's values with the source's.

    Exactly two model evaluations, by construction.
    """
    spliced = splice(instance.features, source.features, subset)
    risk_spliced = float(loss(model.predict(spliced), instance.target))
    risk_observed = float(loss(model.predict(instance.features), instance.target))
    return risk_spliced - risk_observed


# --------------------------------------------------------------------------
# streaming estimator
# --------------------------------------------------------------------------


class SmoothedImportance:
    """Per-feature exponentially smoothed value.

    The first increment a feature receives becomes its value outright; from
    then on ``value <- (1 - alpha) * value + alpha * increment``.
    """

    def __init__(self, n_features: int, alpha: float):
        if not 0.0 < alpha < 1.0:
            raise ConfigError(f"alpha must be strictly inside (0, 1), got {alpha}")
        self.alpha = float(alpha)
        self.values = np.zeros(n_features)
        self.initialized = np.zeros(n_features, dtype=bool)
        self._all_ready = False  # fast-path mirror of initialized.all()

    def update(self, increments: np.ndarray) -> None:
        if self._all_ready:
            self.values *= 1.0 - self.alpha
            self.values += self.alpha * np.asarray(increments, dtype=float)
        else:
            blended = (1.0 - self.alpha) * self.values + self.alpha * np.asarray(
                increments, dtype=float)
            self.values = np.where(self.initialized, blended, increments).astype(float)
            self.initialized = np.ones_like(self.initialized)
            self._all_ready = True

    def value(self) -> np.ndarray:
        if not self._all_ready:
            raise WarmupError("smoothed importance read before any update")
        return self.values.copy()


class _Realization:
    __slots__ = ("sampler", "smoothed")

    def __init__(self, sampler: Sampler, smoothed: SmoothedImportance):
        self.sampler = sampler
        self.smoothed = smoothed


class RealizationEnsemble:
    """Independent streaming-estimator runs whose mean is the reported value.

    Each realization owns its sampler and random state; nothing is shared, so
    realizations could run in parallel.  The caller drives the prequential
    loop: ``observe`` during sampler warm-up, ``step`` once warm, and the
    model's own update strictly afterwards.
    """

    def __init__(self, n_features: int, alpha: float, n_realizations: int,
                 sampler_factory: Callable[[np.random.Generator], Sampler], seed=0):
        if n_realizations < 1:
            raise ConfigError(f"need at least one realization, got {n_realizations}")
        self.n_features = n_features
        self.alpha = float(alpha)
        self.n_realizations = n_realizations
        if isinstance(seed, np.random.SeedSequence):
            root = seed
        else:
            root = np.random.SeedSequence(seed)
        self.realizations = [
            _Realization(sampler_factory(np.random.default_rng(child)),
                         SmoothedImportance(n_features, alpha))
            for child in root.spawn(n_realizations)
        ]

    @property
    def warm(self) -> bool:
        return all(r.sampler.warm for r in self.realizations)

    @property
    def initialized(self) -> bool:
        return all(r.smoothed.initialized.all() for r in self.realizations)

    def observe(self, instance: Instance) -> None:
        """Warm-up bookkeeping: feed the samplers without explaining."""
        for r in self.realizations:
            r.sampler.update(instance)

    def step(self, model: Model, instance: Instance, loss: Loss = absolute_error) -> np.ndarray:
        """One explanation step; returns the ensemble-mean importance vector.

        For every realization, each feature gets its own sampled replacement;
        the model is evaluated twice per (feature, realization) pair; the
        samplers only see the new instance after all draws are done.
        """
        if not self.warm:
            raise WarmupError("ensemble stepped before sampler warm-up completed")
        d, m = self.n_features, self.n_realizations
        base = np.asarray(instance.features, dtype=float)
        # rows 0..m*d-1 get one spliced feature each; rows m*d.. stay observed,
        # so one batched call covers all 2*d*m evaluations of this event
        block = np.tile(base, (2 * m * d, 1))
        diag = np.arange(d)
        replacements = np.empty(m * d)
        for i, r in enumerate(self.realizations):
            feats, _ = r.sampler.draw_many(d)  # draw j supplies feature j
            replacements[i * d:(i + 1) * d] = feats[diag, diag]
        block[np.arange(m * d), np.tile(diag, m)] = replacements
        risk = loss(model.predict_batch(block), instance.target)
        increments = (risk[: m * d] - risk[m * d:]).reshape(m, d)
        for i, r in enumerate(self.realizations):
            r.smoothed.update(increments[i])
            r.sampler.update(instance)
        return self.value()

    def value(self) -> np.ndarray:
        """Arithmetic mean across realizations."""
        first = self.realizations[0].smoothed
        if not first._all_ready:
            raise WarmupError("smoothed importance read before any update")
        out = first.values.copy()
        for r in self.realizations[1:]:
            out += r.smoothed.values
        out /= self.n_realizations
        return out


def make_ensemble(schema: Schema, alpha: float, n_realizations: int, sampler_kind: str,
                  reservoir_size: int, seed=0) -> RealizationEnsemble:
    d = schema.n_features
    return RealizationEnsemble(
        d, alpha, n_realizations,
        sampler_factory=lambda rng: make_sampler(sampler_kind, d, reservoir_size, rng),
        seed=seed,
    )


def ipfi_step(ensemble: RealizationEnsemble, model: Model, instance: Instance,
              loss: Loss = absolute_error) -> np.ndarray:
    """One streaming explanation step on the ensemble."""
    return ensemble.step(model, instance, loss)


# --------------------------------------------------------------------------
# batch and exact estimators
# --------------------------------------------------------------------------


def _as_matrix(dataset: Sequence[Instance]):
    X = np.stack([np.asarray(i.features, dtype=float) for i in dataset])
    y = np.array([i.target for i in dataset], dtype=float)
    return X, y


def _permutation_estimate(model, X, y, base_risk, subset, permutation, loss) -> float:
    """Mean risk increase when each row's subset values come from the row the
    permutation assigns to it.  Fixed points contribute zero by construction."""
    idx = _subset_indices(subset)
    spliced = X.copy()
    spliced[:, idx] = X[np.asarray(permutation)][:, idx]
    return float(np.mean(loss(model.predict_batch(spliced), y) - base_risk))


def pfi_over_permutations(model: Model, dataset: Sequence[Instance], subset,
                          permutations: Iterable[Sequence[int]],
                          loss: Loss = absolute_error) -> float:
    """Permutation estimator averaged over explicitly given permutations and
    rescaled by N/(N-1), which removes the fixed-point bias."""
    X, y = _as_matrix(dataset)
    n = len(dataset)
    if n < 2:
        raise ConfigError(f"need at least two observations, got {n}")
    base_risk = loss(model.predict_batch(X), y)
    estimates = [
        _permutation_estimate(model, X, y, base_risk, subset, perm, loss)
        for perm in permutations
    ]
    if not estimates:
        raise ConfigError("need at least one permutation")
    return n / (n - 1) * float(np.mean(estimates))


def batch_pfi(model: Model, dataset: Sequence[Instance], subset, n_permutations: int,
              rng: np.random.Generator, loss: Loss = absolute_error) -> float:
    """Scaled permutation estimator over uniformly drawn permutations."""
    if n_permutations < 1:
        raise ConfigError(f"need at least one permutation, got {n_permutations}")
    n = len(dataset)
    if n < 2:
        raise ConfigError(f"need at least two observations, got {n}")
    perms = [rng.permutation(n) for _ in range(n_permutations)]
    return pfi_over_permutations(model, dataset, subset, perms, loss)


def batch_pfi_vector(model: Model, dataset: Sequence[Instance], n_permutations: int,
                     rng: np.random.Generator, loss: Loss = absolute_error) -> np.ndarray:
    """Batch estimate for every singleton feature subset, in schema order."""
    d = len(np.asarray(dataset[0].features))
    return np.array([
        batch_pfi(model, dataset, j, n_permutations, rng, loss) for j in range(d)
    ])


def expected_pfi(model: Model, dataset: Sequence[Instance], subset,
                 loss: Loss = absolute_error) -> float:
    """Exact pairwise estimator: average risk over all source rows m != n,
    minus the model's own risk.  Quadratic in the dataset size; rows are
    evaluated in vectorized blocks of one row against all sources."""
    n = len(dataset)
    if n < 2:
        raise ConfigError(f"need at least two observations, got {n}")
    X, y = _as_matrix(dataset)
    idx = _subset_indices(subset)
    base_risk = loss(model.predict_batch(X), y)
    switch_total = 0.0
    for i in range(n):
        block = np.tile(X[i], (n, 1))
        block[:, idx] = X[:, idx]
        risks = loss(model.predict_batch(block), y[i])
        switch_total += float(risks.sum() - risks[i])  # drop the m == n term
    e_switch = switch_total / (n * (n - 1))
    e_orig = float(np.mean(base_risk))
    return e_switch - e_orig


def interval_pfi(model_snapshots: Sequence[Model], instances: Sequence[Instance],
                 interval: int, n_permutations: int, rng: np.random.Generator,
                 loss: Loss = absolute_error) -> list[tuple[int, np.ndarray]]:
    """Batch estimate over consecutive tumbling windows.

    Window k covers ``instances[k*interval:(k+1)*interval]`` and is scored by
    ``model_snapshots[k]``; the vector is reported at the window's final
    timestamp.  Incomplete trailing windows are skipped with a warning.
    """
    if interval < 2:
        raise ConfigError(f"interval must be >= 2, got {interval}")
    series = []
    for k, model in enumerate(model_snapshots):
        window = list(instances[k * interval:(k + 1) * interval])
        if len(window) < interval:
            log.warning("interval %d: only %d of %d observations available, skipping",
                        k, len(window), interval)
            continue
        vec = batch_pfi_vector(model, window, n_permutations, rng, loss)
        series.append((int(window[-1].timestamp), vec))
    return series


# --------------------------------------------------------------------------
# error metric
# --------------------------------------------------------------------------


def _min_max(vector: np.ndarray, name: str) -> np.ndarray:
    lo, hi = float(np.min(vector)), float(np.max(vector))
    if hi == lo:
        raise DegenerateImportanceError(
            f"{name} vector is constant ({lo}); min-max normalization undefined")
    return (vector - lo) / (hi - lo)


def normalized_error(estimate, reference) -> float:
    """Sum of per-feature absolute gaps after min-max normalizing each vector
    to [0, 1] independently."""
    est = np.asarray(estimate, dtype=float)
    ref = np.asarray(reference, dtype=float)
    if est.shape != ref.shape:
        raise ConfigError(f"shape mismatch: {est.shape} vs {ref.shape}")
    return float(np.sum(np.abs(_min_max(est, "estimate") - _min_max(ref, "reference"))))
