"""Analytic oracles for the streaming estimator's bias and variance, and the
Monte-Carlo studies that check them empirically.

The studies track a single feature with the zero-initialized smoothing
recursion (value starts at 0 and every increment is blended in with weight
alpha).  Its expectation saturates along ``phi * (1 - (1-alpha)^steps)``, so
the cold-start curve is the quantity under test.  The production estimator
instead assigns the first increment outright, which removes exactly that
cold-start gap; the studies also record the raw first increment so its
unbiasedness can be checked in the same run.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .datastream import AGRAWAL_FEATURES, Instance, agrawal_batch, agrawal_schema
from .errors import ConfigError
from .importance import Loss, absolute_error, splice
from .learners import agrawal_oracle
from .sampling import collision_probability, make_sampler

# --------------------------------------------------------------------------
# closed forms
# --------------------------------------------------------------------------


def static_bias(alpha: float, steps: int, phi: float) -> float:
    """Cold-start bias of the zero-initialized smoother under a fixed model:
    the estimate's mean trails the target by ``(1-alpha)^steps * phi``."""
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must be in (0, 1), got {alpha}")
    if steps < 1:
        raise ConfigError(f"steps must be >= 1, got {steps}")
    return (1.0 - alpha) ** steps * phi


def window_to_alpha(window: int) -> float:
    """Smoothing factor equivalent to an N-observation sliding window."""
    if window < 1:
        raise ConfigError(f"window must be >= 1, got {window}")
    return 2.0 / (window + 1.0)


def alpha_to_window(alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must be in (0, 1), got {alpha}")
    return 2.0 / alpha - 1.0


# Exact flip probabilities for the rule-1 oracle under the generator's
# uniform age/salary marginals.  Age bands hit 1/3 each; each rule's salary
# band spans 50 of the 130 salary units.  Partitioning salary by how many of
# the three bands cover it (lengths 5,25,25,25,25,25 out of 130 covering
# k = 0,1,2,2,1,0 bands) gives flip probability 2*(k/3)*(1-k/3) when age is
# redrawn; conditioning on the age band gives 2*(5/13)*(8/13) when salary is
# redrawn.  Everything else never enters the rule.
_PHI_AGE = (Fraction(100, 130)) * 2 * Fraction(1, 3) * Fraction(2, 3)          # 40/117
_PHI_SALARY = 3 * Fraction(1, 3) * 2 * Fraction(5, 13) * Fraction(8, 13)       # 80/169
_CLASS_A_RATE = 3 * Fraction(1, 3) * Fraction(5, 13)                           # 5/13


def agrawal_class_a_rate(concept_id: int = 1) -> Fraction:
    """Base probability that rule 1 accepts; the three disjoint age-band
    rectangles contribute 5/39 each."""
    if concept_id != 1:
        raise ConfigError("closed-form class rate is only derived for concept 1")
    return _CLASS_A_RATE


def agrawal_ground_truth(concept_id: int = 1) -> np.ndarray:
    """Exact importance of every agrawal feature for the rule-1 oracle.

    Only salary and age move the label; replacing any other feature can never
    flip the rule, so their importance is exactly zero.
    """
    if concept_id != 1:
        raise ConfigError("ground truth is only derived for concept 1")
    out = np.zeros(len(AGRAWAL_FEATURES))
    out[AGRAWAL_FEATURES.index("salary")] = float(_PHI_SALARY)
    out[AGRAWAL_FEATURES.index("age")] = float(_PHI_AGE)
    return out


# --------------------------------------------------------------------------
# study configurations and report container
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BiasStudyConfig:
    alpha: float = 0.01
    replications: int = 200
    checkpoints: tuple[int, ...] = (50, 100, 460)  # explained steps since warm-up
    sampler: str = "uniform_full"
    reservoir_size: int = 100
    feature: str = "salary"
    concept_id: int = 1
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.replications < 2:
            raise ConfigError("bias study needs at least 2 replications")
        if not self.checkpoints or min(self.checkpoints) < 1:
            raise ConfigError("checkpoints must be positive step counts")


@dataclass(frozen=True)
class VarianceStudyConfig:
    alphas: tuple[float, ...] = (0.05, 0.02, 0.01, 0.005)
    sampler: str = "uniform_full"
    reservoir_sizes: tuple[int, ...] = (100,)
    replications: int = 100
    realizations: int = 25  # ensemble size whose mean is the measured estimate
    feature: str = "salary"
    concept_id: int = 1
    seed: int = 0
    steps_factor: float = 50.0  # run length 50/alpha keeps residual cold-start bias < 1e-2
    tail_fraction: float = 0.1

    def __post_init__(self):
        if self.replications < 30:
            raise ConfigError("variance study needs at least 30 replications")
        if self.realizations < 1:
            raise ConfigError("variance study needs at least 1 realization")
        if any(not 0.0 < a < 1.0 for a in self.alphas):
            raise ConfigError("alphas must lie in (0, 1)")
        if len(self.alphas) > 1 and any(
                b >= a for a, b in zip(self.alphas, self.alphas[1:])):
            raise ConfigError("alpha grid must be strictly decreasing")
        if not 0.0 < self.tail_fraction <= 1.0:
            raise ConfigError("tail fraction must be in (0, 1]")


@dataclass(frozen=True)
class StudyRow:
    alpha: float
    sampler: str
    reservoir_size: int
    checkpoint: int
    mean: float
    variance: float
    analytic_bias: float


@dataclass
class StudyReport:
    rows: list[StudyRow]
    summary: dict = field(default_factory=dict)

    CSV_HEADER = ("alpha", "sampler", "L", "checkpoint", "mean", "variance", "analytic_bias")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.CSV_HEADER)
            for r in self.rows:
                writer.writerow([
                    repr(float(r.alpha)), r.sampler, r.reservoir_size, r.checkpoint,
                    repr(float(r.mean)), repr(float(r.variance)), repr(float(r.analytic_bias)),
                ])

    def summary_lines(self) -> list[str]:
        return [f"{k}: {v}" for k, v in sorted(self.summary.items())]


# --------------------------------------------------------------------------
# single-feature monte-carlo runs
# --------------------------------------------------------------------------


def _single_feature_run(model, X, y, sampler, alpha: float, feature: int,
                        checkpoints: set[int], loss: Loss = absolute_error):
    """Stream the rows through one zero-initialized single-feature smoother.

    Returns (values at requested explained-step counts, first raw increment).
    """
    value = 0.0
    explained = 0
    first_increment = None
    recorded: dict[int, float] = {}
    for t in range(len(y)):
        inst = Instance(X[t], float(y[t]), t)
        if sampler.warm:
            feats, _ = sampler.draw_many(1)
            spliced = splice(inst.features, feats[0], feature)
            increment = float(loss(model.predict(spliced), inst.target)) - float(
                loss(model.predict(inst.features), inst.target))
            if first_increment is None:
                first_increment = increment
            value = (1.0 - alpha) * value + alpha * increment
            explained += 1
            if explained in checkpoints:
                recorded[explained] = value
        sampler.update(inst)
    return recorded, first_increment


def _ensemble_feature_run(model, X, y, kind: str, size: int, alpha: float, feature: int,
                          checkpoints: set[int], n_realizations: int,
                          rng: np.random.Generator, loss: Loss = absolute_error):
    """Zero-initialized single-feature smoothing for ``n_realizations``
    independent samplers sharing one data stream; records the ensemble mean at
    the requested explained-step counts.

    Vectorized across realizations: each sampler only needs the studied
    feature's column, so reservoir state is an (n_realizations, size) array.
    Draw-before-update ordering matches the production samplers.
    """
    m = n_realizations
    rows = np.arange(m)
    warmup = 1 if kind == "uniform_full" else size
    if kind not in ("uniform_full", "uniform", "uniform_reservoir", "geometric"):
        raise ConfigError(f"unknown sampler kind {kind!r}")
    full_store = np.empty(len(y)) if kind == "uniform_full" else None
    slots = None if kind == "uniform_full" else np.empty((m, size))
    values = np.zeros(m)
    explained = 0
    recorded: dict[int, float] = {}
    base_row = np.empty_like(X[0])
    for t in range(len(y)):
        if t >= warmup:
            if kind == "uniform_full":
                replacements = full_store[rng.integers(0, t, size=m)]
            else:
                replacements = slots[rows, rng.integers(0, size, size=m)]
            np.copyto(base_row, X[t])
            block = np.tile(base_row, (m, 1))
            block[:, feature] = replacements
            risk_spliced = loss(model.predict_batch(block), y[t])
            risk_observed = float(loss(model.predict(X[t]), y[t]))
            values *= 1.0 - alpha
            values += alpha * (risk_spliced - risk_observed)
            explained += 1
            if explained in checkpoints:
                recorded[explained] = float(values.mean())
        v = X[t, feature]
        if kind == "uniform_full":
            full_store[t] = v
        elif t < size:
            slots[:, t] = v
        elif kind == "geometric":
            slots[rows, rng.integers(0, size, size=m)] = v
        else:  # uniform reservoir, algorithm R with inclusion probability size/(t+1)
            js = rng.integers(0, t + 1, size=m)
            included = js < size
            slots[rows[included], js[included]] = v
    return recorded


def run_bias_study(config: BiasStudyConfig = BiasStudyConfig()) -> StudyReport:
    """Replicate the streaming run and compare the empirical mean at each
    checkpoint against the saturation curve ``phi * (1 - (1-alpha)^steps)``."""
    schema = agrawal_schema()
    feature = schema.index(config.feature)
    phi = float(agrawal_ground_truth(config.concept_id)[feature])
    if phi == 0.0:
        raise ConfigError(f"feature {config.feature!r} has zero true importance; "
                          "the bias curve would be degenerate")
    model = agrawal_oracle(config.concept_id)
    checkpoints = sorted(set(config.checkpoints))
    max_steps = max(checkpoints)
    root = np.random.SeedSequence(config.seed)
    values = np.empty((config.replications, len(checkpoints)))
    first_increments = np.empty(config.replications)
    for rep, child in enumerate(root.spawn(config.replications)):
        stream_seed, sampler_seed = child.spawn(2)
        sampler = make_sampler(config.sampler, schema.n_features, config.reservoir_size,
                               np.random.default_rng(sampler_seed))
        total = sampler.warmup + max_steps
        X, y = agrawal_batch(np.random.default_rng(stream_seed), total, config.concept_id)
        recorded, first = _single_feature_run(model, X, y, sampler, config.alpha, feature,
                                              set(checkpoints))
        values[rep] = [recorded[c] for c in checkpoints]
        first_increments[rep] = first

    rows = []
    deviations = {}
    for k, steps in enumerate(checkpoints):
        mean = float(values[:, k].mean())
        var = float(values[:, k].var(ddof=1))
        bias = static_bias(config.alpha, steps, phi)
        se = math.sqrt(var / config.replications)
        deviations[steps] = abs(mean - (phi - bias)) / se if se > 0 else math.inf
        rows.append(StudyRow(config.alpha, config.sampler, config.reservoir_size,
                             steps, mean, var, bias))
    fi_mean = float(first_increments.mean())
    fi_se = float(first_increments.std(ddof=1)) / math.sqrt(config.replications)
    summary = {
        "phi": phi,
        "feature": config.feature,
        "standardized_deviation_by_checkpoint": deviations,
        "max_standardized_deviation": max(deviations.values()),
        "within_3_se": all(d <= 3.0 for d in deviations.values()),
        "first_increment_mean": fi_mean,
        "first_increment_se": fi_se,
        "first_increment_within_3_se": abs(fi_mean - phi) <= 3.0 * fi_se,
    }
    return StudyReport(rows, summary)


def run_variance_study(config: VarianceStudyConfig = VarianceStudyConfig()) -> StudyReport:
    """Estimate the settled reported estimate's variance for each
    (alpha, reservoir size) cell.

    The measured quantity mirrors what the engine reports: the mean over an
    ensemble of sampler realizations sharing one data stream.  Averaging over
    realizations integrates out most single-draw noise, which is the same for
    every strategy, and leaves the component the sampling law controls; the
    same-index collision probability multiplies that remaining noise, so the
    replacement probability ordering becomes measurable.

    Replications rerun the whole estimate on fresh streams and record it at
    evenly spaced checkpoints inside the final tail of a 50/alpha-step run;
    the cell's variance is the mean over checkpoints of the across-replication
    variance at that checkpoint (pointwise, not a time average: a time average
    would suppress exactly the short-memory, sampler-driven component).
    """
    schema = agrawal_schema()
    feature = schema.index(config.feature)
    phi = float(agrawal_ground_truth(config.concept_id)[feature])
    model = agrawal_oracle(config.concept_id)
    cells = [(a, size) for a in config.alphas for size in config.reservoir_sizes]
    root = np.random.SeedSequence(config.seed)
    rows = []
    variances = {}
    collisions = {}
    for cell_seq, (alpha, size) in zip(root.spawn(len(cells)), cells):
        steps = int(math.ceil(config.steps_factor / alpha))
        tail_start = int(math.floor(steps * (1.0 - config.tail_fraction))) + 1
        checkpoints = sorted(set(np.linspace(tail_start, steps, 16, dtype=int).tolist()))
        warmup = 1 if config.sampler == "uniform_full" else size
        tail_values = np.empty((config.replications, len(checkpoints)))
        for rep, child in enumerate(cell_seq.spawn(config.replications)):
            stream_seed, sampler_seed = child.spawn(2)
            X, y = agrawal_batch(np.random.default_rng(stream_seed), warmup + steps,
                                 config.concept_id)
            recorded = _ensemble_feature_run(
                model, X, y, config.sampler, size, alpha, feature, set(checkpoints),
                config.realizations, np.random.default_rng(sampler_seed))
            tail_values[rep] = [recorded[c] for c in checkpoints]
        mean = float(tail_values[:, -1].mean())
        var = float(tail_values.var(axis=0, ddof=1).mean())
        rows.append(StudyRow(alpha, config.sampler, size, steps, mean, var,
                             static_bias(alpha, steps, phi)))
        variances[(alpha, size)] = var
        collisions[(alpha, size)] = collision_probability(
            config.sampler, warmup + steps, size, warmup)

    summary = {
        "phi": phi,
        "feature": config.feature,
        "realizations": config.realizations,
        "variances": {f"alpha={a},L={s}": v for (a, s), v in variances.items()},
        "collision_probabilities": {f"alpha={a},L={s}": c for (a, s), c in collisions.items()},
    }
    if len(config.alphas) > 1:
        for size in config.reservoir_sizes:
            ordered = [variances[(a, size)] for a in config.alphas]
            summary[f"variance_decreases_with_alpha_L={size}"] = all(
                b < a for a, b in zip(ordered, ordered[1:]))
    if len(config.reservoir_sizes) > 1:
        for alpha in config.alphas:
            # reservoir sizes ascending means replacement probability descending
            ordered = [variances[(alpha, s)] for s in sorted(config.reservoir_sizes)]
            summary[f"variance_decreases_with_p_alpha={alpha}"] = all(
                b < a for a, b in zip(ordered, ordered[1:]))
    return StudyReport(rows, summary)
