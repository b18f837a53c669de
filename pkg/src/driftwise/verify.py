"""Self-check battery: every analytic law the package relies on, verified
against independent computation (direct sums, exhaustive enumeration, or
Monte Carlo).  ``driftwise verify`` runs these and fails on any miss."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .datastream import AgrawalStream, Instance, agrawal_batch
from .importance import absolute_error, expected_pfi, pfi_over_permutations
from .learners import FrozenOracle
from .sampling import (UniformFullStore, collision_probability, make_sampler,
                       marginal_distribution)
from .theory import (agrawal_class_a_rate, agrawal_ground_truth, alpha_to_window, static_bias,
                     window_to_alpha)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _result(name: str, passed: bool, detail: str) -> CheckResult:
    return CheckResult(name, bool(passed), detail)


def check_marginals_sum_to_one() -> CheckResult:
    worst = 0.0
    for kind, size in [("uniform", None), ("geometric", 2), ("geometric", 4),
                       ("geometric", 10), ("geometric", 100)]:
        start = 1 if size is None else size
        for step in range(start, 201):
            total = marginal_distribution(kind, step, size, size).sum()
            worst = max(worst, abs(total - 1.0))
    return _result("marginal probabilities sum to 1", worst <= 1e-12, f"max |sum-1| = {worst:.3e}")


def check_collision_matches_direct_sum() -> CheckResult:
    worst = 0.0
    for kind, size in [("uniform", None), ("geometric", 2), ("geometric", 4),
                       ("geometric", 10), ("geometric", 100)]:
        start = 1 if size is None else size
        for step in range(start, 201):
            direct = float(np.sum(marginal_distribution(kind, step, size, size) ** 2))
            closed = collision_probability(kind, step, size, size)
            worst = max(worst, abs(direct - closed))
    return _result("collision probability equals direct summation", worst <= 1e-12,
                   f"max |closed-direct| = {worst:.3e}")


def check_collision_geometric_limit() -> CheckResult:
    worst = 0.0
    for size in (2, 4, 10, 100):
        p = 1.0 / size
        value = collision_probability("geometric", size + 10**4, size, size)
        worst = max(worst, abs(value - p / (2.0 - p)))
    return _result("geometric collision approaches p/(2-p)", worst <= 1e-9,
                   f"max gap at 1e4 steps = {worst:.3e}")


def check_permutation_enumeration(seed: int = 7) -> CheckResult:
    """The scaled average over every permutation must equal the exact pairwise
    estimator, for a model that actually uses its inputs."""
    rng = np.random.default_rng(seed)
    model = FrozenOracle(
        fn=lambda x: math.sin(x[0]) + 0.5 * x[1] * x[1],
        batch_fn=lambda X: np.sin(X[:, 0]) + 0.5 * X[:, 1] ** 2,
    )
    worst = 0.0
    for n in range(2, 7):
        data = [Instance(rng.normal(size=2), float(rng.normal()), t) for t in range(n)]
        for feature in (0, 1):
            exact = expected_pfi(model, data, feature, absolute_error)
            enumerated = pfi_over_permutations(
                model, data, feature, itertools.permutations(range(n)), absolute_error)
            worst = max(worst, abs(exact - enumerated))
    return _result("all-permutation average equals exact pairwise estimator", worst <= 1e-10,
                   f"max gap over N=2..6 = {worst:.3e}")


def check_window_conversions() -> CheckResult:
    ok = (abs(window_to_alpha(199) - 0.01) <= 1e-15
          and abs(alpha_to_window(0.5) - 3.0) <= 1e-12
          and abs(alpha_to_window(window_to_alpha(1000)) - 1000.0) <= 1e-9)
    return _result("window/alpha conversions round-trip", ok, "N=199 -> 0.01, 0.5 -> 3")


def check_smoothing_telescopes(seed: int = 3) -> CheckResult:
    """Assignment-initialized smoothing equals the explicit geometric-weight
    sum with the first weight absorbing the initialization."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for alpha in (0.5, 0.1, 0.01):
        increments = rng.normal(size=40)
        value = increments[0]
        for lam in increments[1:]:
            value = (1.0 - alpha) * value + alpha * lam
        t = len(increments) - 1
        weights = np.array([(1.0 - alpha) ** t]
                           + [alpha * (1.0 - alpha) ** (t - s) for s in range(1, t + 1)])
        worst = max(worst, abs(value - float(weights @ increments)),
                    abs(weights.sum() - 1.0))
    return _result("smoothing telescopes into geometric weights summing to 1", worst <= 1e-12,
                   f"max gap = {worst:.3e}")


def check_static_bias_form() -> CheckResult:
    ok = (abs(static_bias(0.5, 1, 1.0) - 0.5) <= 1e-15
          and abs(static_bias(0.01, 100, 1.0) - 0.99 ** 100) <= 1e-15
          and static_bias(0.01, 10**4, 1.0) < 1e-30)
    return _result("cold-start bias closed form", ok, "0.5; 0.99^100 = 0.36603; decays below 1e-30")


def check_ground_truth_rationals() -> CheckResult:
    truth = agrawal_ground_truth(1)
    age, salary = truth[2], truth[0]
    ok = (abs(age - float(Fraction(40, 117))) <= 1e-15
          and abs(salary - float(Fraction(80, 169))) <= 1e-15
          and agrawal_class_a_rate(1) == Fraction(5, 13)
          and float(np.abs(np.delete(truth, [0, 2])).max()) == 0.0)
    return _result("ground-truth importances are the exact rationals", ok,
                   "age = 40/117, salary = 80/169, base rate = 5/13")


def check_uniform_draw_frequencies(seed: int = 11) -> CheckResult:
    sampler = UniformFullStore(n_features=1, rng_or_seed=seed)
    for t in range(4):
        sampler.update(Instance(np.array([float(t)]), 0.0, t))
    _, times = sampler.draw_many(100_000)
    freqs = np.bincount(times, minlength=4) / 100_000.0
    worst = float(np.abs(freqs - 0.25).max())
    return _result("full-store draws are uniform at s=4", worst <= 0.01,
                   f"max |freq-0.25| = {worst:.4f}")


def check_geometric_marginal_montecarlo(seed: int = 13, runs: int = 20_000) -> CheckResult:
    """Drive the real reservoir through its update rule many times and compare
    the draw frequencies with the analytic law at 3 Monte-Carlo sigmas."""
    size, extra = 8, 12
    step = size + extra
    rng = np.random.default_rng(seed)
    counts = np.zeros(step)
    for _ in range(runs):
        sampler = make_sampler("geometric", 1, size, rng)
        for t in range(step):
            sampler.update(Instance(np.array([float(t)]), 0.0, t))
        counts[int(sampler.draw().timestamp)] += 1
    freqs = counts / runs
    expected = marginal_distribution("geometric", step, size, size)
    se = np.sqrt(expected * (1.0 - expected) / runs)
    worst = float(np.abs(freqs - expected).max())
    ok = bool(np.all(np.abs(freqs - expected) <= 3.0 * se + 1e-12))
    return _result("geometric reservoir matches its marginal law (Monte Carlo)", ok,
                   f"max |freq-p| = {worst:.4f}")


def check_agrawal_prevalence(seed: int = 17) -> CheckResult:
    _, y = agrawal_batch(np.random.default_rng(seed), 100_000, 1)
    rate = float(np.mean(y))
    target = float(agrawal_class_a_rate(1))
    return _result("generated class balance matches the 5/13 geometry", abs(rate - target) <= 0.01,
                   f"rate = {rate:.4f}, target = {target:.4f}")


def check_ground_truth_montecarlo(seed: int = 19, n: int = 4000) -> CheckResult:
    """Exact pairwise estimator on a modest sample should sit near the
    closed-form importances."""
    from .learners import agrawal_oracle

    stream = AgrawalStream(concept_id=1, seed=seed)
    data = stream.take(n)
    model = agrawal_oracle(1)
    truth = agrawal_ground_truth(1)
    gaps = []
    for j, target in ((0, truth[0]), (2, truth[2])):
        gaps.append(abs(expected_pfi(model, data, j) - target))
    worst = max(gaps)
    return _result("pairwise estimator reproduces the closed-form importances", worst <= 0.04,
                   f"max gap at n={n}: {worst:.4f}")


ALL_CHECKS = (
    check_marginals_sum_to_one,
    check_collision_matches_direct_sum,
    check_collision_geometric_limit,
    check_permutation_enumeration,
    check_window_conversions,
    check_smoothing_telescopes,
    check_static_bias_form,
    check_ground_truth_rationals,
    check_uniform_draw_frequencies,
    check_geometric_marginal_montecarlo,
    check_agrawal_prevalence,
    check_ground_truth_montecarlo,
)


def run_all() -> list[CheckResult]:
    return [check() for check in ALL_CHECKS]
