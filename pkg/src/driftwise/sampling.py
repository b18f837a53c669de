"""Replacement-sampling strategies over past observations, plus their exact laws.

Three strategies produce the replacement values used by the streaming
importance estimator:

* ``uniform_full``   - store everything, draw uniformly over all past steps.
* ``uniform``        - fixed reservoir with classic uniform-inclusion updates
                       (algorithm R); the marginal over past steps stays 1/s.
* ``geometric``      - fixed reservoir where every arrival overwrites a
                       uniformly chosen slot, so the marginal probability of
                       drawing step r decays geometrically with age.

A sampler must be warm (``seen >= warmup``) before it can draw; reservoirs
warm up after ``size`` observations, the full store after one.  Callers draw
replacements for the current event first and only then feed the event in via
``update`` - drawing never returns the observation being explained.
"""

from __future__ import annotations

import numpy as np

from .datastream import Instance
from .errors import ConfigError, WarmupError

UNIFORM_KINDS = ("uniform", "uniform_full", "uniform_reservoir")


class Sampler:
    """Common storage and draw plumbing; subclasses define the update rule."""

    kind = "base"

    def __init__(self, n_features: int, capacity: int, warmup: int, rng_or_seed):
        if isinstance(rng_or_seed, np.random.Generator):
            self.rng = rng_or_seed
        else:
            self.rng = np.random.default_rng(rng_or_seed)
        self._feats = np.empty((capacity, n_features))
        self._targets = np.empty(capacity)
        self._times = np.empty(capacity, dtype=np.int64)
        self.warmup = warmup
        self.seen = 0

    @property
    def warm(self) -> bool:
        return self.seen >= self.warmup

    @property
    def stored(self) -> int:
        raise NotImplementedError

    def update(self, instance: Instance) -> None:
        raise NotImplementedError

    def _draw_indices(self, k: int) -> np.ndarray:
        if self.seen < self.warmup:
            raise WarmupError(
                f"{self.kind} sampler drawn after {self.seen} of {self.warmup} warm-up steps")
        return self.rng.integers(0, self.stored, size=k)

    def draw(self) -> Instance:
        """One stored past observation, per this strategy's marginal law."""
        i = int(self._draw_indices(1)[0])
        return Instance(features=self._feats[i].copy(), target=float(self._targets[i]),
                        timestamp=int(self._times[i]))

    def draw_many(self, k: int):
        """(features, timestamps) for k independent draws; one RNG call."""
        idx = self._draw_indices(k)
        return self._feats[idx], self._times[idx]

    # read-only views for diagnostics and tests
    def stored_timestamps(self) -> np.ndarray:
        return self._times[: self.stored].copy()


class UniformFullStore(Sampler):
    """Keeps every past observation; draws are uniform over all of them."""

    kind = "uniform_full"

    def __init__(self, n_features: int, rng_or_seed=0, initial_capacity: int = 1024):
        super().__init__(n_features, initial_capacity, warmup=1, rng_or_seed=rng_or_seed)

    @property
    def stored(self) -> int:
        return self.seen

    def _grow(self):
        cap = self._feats.shape[0] * 2
        for name in ("_feats", "_targets", "_times"):
            old = getattr(self, name)
            new = np.empty((cap,) + old.shape[1:], dtype=old.dtype)
            new[: old.shape[0]] = old
            setattr(self, name, new)

    def update(self, instance: Instance) -> None:
        if self.seen == self._feats.shape[0]:
            self._grow()
        self._feats[self.seen] = instance.features
        self._targets[self.seen] = instance.target
        self._times[self.seen] = instance.timestamp
        self.seen += 1


class UniformReservoir(Sampler):
    """Fixed-size reservoir with uniform inclusion (algorithm R).

    After n observations each one sits in the reservoir with probability
    size/n, so a uniform slot draw hits past step r with probability 1/n.
    """

    kind = "uniform"

    def __init__(self, n_features: int, size: int, rng_or_seed=0):
        if size < 1:
            raise ConfigError(f"reservoir size must be >= 1, got {size}")
        super().__init__(n_features, size, warmup=size, rng_or_seed=rng_or_seed)
        self.size = size

    @property
    def stored(self) -> int:
        return min(self.seen, self.size)

    def update(self, instance: Instance) -> None:
        self.seen += 1
        if self.seen <= self.size:
            slot = self.seen - 1
        else:
            j = int(self.rng.integers(0, self.seen))  # include with prob size/seen
            if j >= self.size:
                return
            slot = j
        self._feats[slot] = instance.features
        self._targets[slot] = instance.target
        self._times[slot] = instance.timestamp


class GeometricReservoir(Sampler):
    """Fixed-size reservoir where every arrival replaces a uniform slot.

    The survival chance of a stored observation shrinks by (1 - 1/size) per
    step, which yields the geometric, recency-favoring marginal law.
    """

    kind = "geometric"

    def __init__(self, n_features: int, size: int, rng_or_seed=0):
        if size < 1:
            raise ConfigError(f"reservoir size must be >= 1, got {size}")
        super().__init__(n_features, size, warmup=size, rng_or_seed=rng_or_seed)
        self.size = size

    @property
    def stored(self) -> int:
        return min(self.seen, self.size)

    def update(self, instance: Instance) -> None:
        if self.seen < self.size:
            slot = self.seen
        else:
            slot = int(self.rng.integers(0, self.size))
        self._feats[slot] = instance.features
        self._targets[slot] = instance.target
        self._times[slot] = instance.timestamp
        self.seen += 1


def make_sampler(kind: str, n_features: int, size: int, rng_or_seed=0) -> Sampler:
    if kind == "uniform_full":
        return UniformFullStore(n_features, rng_or_seed)
    if kind in ("uniform", "uniform_reservoir"):
        return UniformReservoir(n_features, size, rng_or_seed)
    if kind == "geometric":
        return GeometricReservoir(n_features, size, rng_or_seed)
    raise ConfigError(f"unknown sampler kind {kind!r}")


def sampler_update(state: Sampler, instance: Instance) -> None:
    state.update(instance)


def sampler_draw(state: Sampler) -> Instance:
    return state.draw()


# --------------------------------------------------------------------------
# analytic laws
# --------------------------------------------------------------------------


def _check_geometric_args(size, warmup):
    if size is None or size < 1:
        raise ConfigError("geometric law needs a reservoir size >= 1")
    warmup = size if warmup is None else warmup
    if warmup != size:
        # the closed forms below assume the first `size` steps fill the slots
        raise ConfigError(f"geometric law assumes warmup == size, got {warmup} != {size}")
    return warmup


def marginal_probability(kind: str, step: int, index: int, size: int | None = None,
                         warmup: int | None = None) -> float:
    """P(the replacement drawn at time ``step`` originates from ``index``).

    ``step`` counts observations seen so far, so valid indices are
    0 <= index < step.  Uniform strategies give 1/step.  The geometric
    reservoir gives p(1-p)^(step-index-1) for index >= warmup and
    p(1-p)^(step-warmup) for the initial fill, with p = 1/size.
    """
    if not 0 <= index < step:
        raise ConfigError(f"index must satisfy 0 <= index < step, got {index} at step {step}")
    if kind in UNIFORM_KINDS:
        return 1.0 / step
    if kind == "geometric":
        warmup = _check_geometric_args(size, warmup)
        if step < warmup:
            raise ConfigError(f"geometric draws start at step {warmup}, got {step}")
        p = 1.0 / size
        if index >= warmup:
            return p * (1.0 - p) ** (step - index - 1)
        return p * (1.0 - p) ** (step - warmup)
    raise ConfigError(f"unknown sampler kind {kind!r}")


def marginal_distribution(kind: str, step: int, size: int | None = None,
                          warmup: int | None = None) -> np.ndarray:
    """The full draw distribution over past indices 0..step-1."""
    return np.array(
        [marginal_probability(kind, step, r, size, warmup) for r in range(step)])


def collision_probability(kind: str, step: int, size: int | None = None,
                          warmup: int | None = None) -> float:
    """P(two independent draws at ``step`` pick the same past index).

    This is the sum of squared marginals.  For uniform sampling it is 1/step;
    for the geometric reservoir it collapses to
    p/(2-p) * (1 + (1-p)^(2(step-warmup)+1)).
    """
    if kind in UNIFORM_KINDS:
        if step < 1:
            raise ConfigError(f"step must be >= 1, got {step}")
        return 1.0 / step
    if kind == "geometric":
        warmup = _check_geometric_args(size, warmup)
        if step < warmup:
            raise ConfigError(f"geometric draws start at step {warmup}, got {step}")
        p = 1.0 / size
        return p / (2.0 - p) * (1.0 + (1.0 - p) ** (2 * (step - warmup) + 1))
    raise ConfigError(f"unknown sampler kind {kind!r}")
