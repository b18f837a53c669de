import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from driftwise.datastream import Instance
from driftwise.errors import ConfigError, WarmupError
from driftwise.sampling import (GeometricReservoir, UniformFullStore, UniformReservoir,
                                collision_probability, make_sampler, marginal_distribution,
                                marginal_probability, sampler_draw, sampler_update)


def inst(t):
    return Instance(np.array([float(t)]), 0.0, t)


def feed(sampler, n, start=0):
    for t in range(start, start + n):
        sampler_update(sampler, inst(t))


class TestMechanics:
    def test_full_store_holds_everything(self):
        s = UniformFullStore(1, rng_or_seed=0)
        feed(s, 2500)
        assert s.stored == 2500
        assert sorted(s.stored_timestamps()) == list(range(2500))

    def test_draw_before_warmup_fails(self):
        s = GeometricReservoir(1, size=10, rng_or_seed=0)
        feed(s, 9)
        with pytest.raises(WarmupError):
            sampler_draw(s)
        feed(s, 1, start=9)
        assert isinstance(sampler_draw(s), Instance)

    def test_full_store_draw_needs_one_observation(self):
        s = UniformFullStore(1, rng_or_seed=0)
        with pytest.raises(WarmupError):
            sampler_draw(s)
        feed(s, 1)
        assert sampler_draw(s).timestamp == 0

    def test_geometric_single_slot_tracks_latest(self):
        s = GeometricReservoir(1, size=1, rng_or_seed=0)
        for t in range(50):
            sampler_update(s, inst(t))
            assert sampler_draw(s).timestamp == t

    def test_stored_are_genuine_past_observations(self):
        for kind in ("uniform", "uniform_full", "geometric"):
            s = make_sampler(kind, 1, 16, 3)
            feed(s, 400)
            times = s.stored_timestamps()
            assert ((0 <= times) & (times < 400)).all()
            # the stored feature value still matches the original observation
            feats, ts = s.draw_many(64)
            assert np.array_equal(feats[:, 0].astype(int), ts)

    def test_geometric_each_slot_replaced_uniformly(self):
        s = GeometricReservoir(1, size=4, rng_or_seed=7)
        feed(s, 4)
        replaced = np.zeros(4, dtype=int)
        before = s.stored_timestamps()
        for t in range(4, 4 + 100_000):
            sampler_update(s, inst(t))
            after = s.stored_timestamps()
            changed = np.nonzero(after != before)[0]
            assert len(changed) == 1
            replaced[changed[0]] += 1
            before = after
        freqs = replaced / replaced.sum()
        assert np.abs(freqs - 0.25).max() < 0.01

    def test_invalid_sizes_and_kinds(self):
        with pytest.raises(ConfigError):
            make_sampler("geometric", 1, 0, 0)
        with pytest.raises(ConfigError):
            make_sampler("bogus", 1, 4, 0)


class TestMarginals:
    def test_uniform_is_one_over_step(self):
        assert marginal_probability("uniform", 5, 2) == pytest.approx(0.2)
        assert marginal_probability("uniform_full", 5, 0) == pytest.approx(0.2)

    def test_geometric_first_draw_after_fill(self):
        # size 2: the newest stored observation carries probability p
        assert marginal_probability("geometric", 3, 2, size=2) == pytest.approx(0.5)

    def test_out_of_range_index_rejected(self):
        with pytest.raises(ConfigError):
            marginal_probability("uniform", 5, 5)
        with pytest.raises(ConfigError):
            marginal_probability("uniform", 5, -1)

    def test_geometric_requires_matching_warmup(self):
        with pytest.raises(ConfigError):
            marginal_probability("geometric", 10, 3, size=4, warmup=2)

    @settings(max_examples=60, deadline=None)
    @given(kind=st.sampled_from(["uniform", "geometric"]),
           size=st.sampled_from([2, 4, 10, 100]),
           step=st.integers(1, 300))
    def test_distribution_sums_to_one(self, kind, size, step):
        if kind == "geometric":
            step = max(step, size)
        total = marginal_distribution(kind, step, size, size).sum()
        assert abs(total - 1.0) <= 1e-12

    def test_monotone_recency_of_geometric(self):
        for size in (2, 5, 20):
            for step in (size, size + 3, size + 50):
                probs = marginal_distribution("geometric", step, size, size)
                tail = probs[size:]
                assert (np.diff(tail) >= -1e-15).all()

    def test_resampling_probability_non_increasing_in_time(self):
        for kind, size in (("uniform", None), ("geometric", 8)):
            lo = 8 if kind == "geometric" else 1
            for r in (0, 3, 7):
                probs = [marginal_probability(kind, s, r, size, size)
                         for s in range(max(lo, r + 1), 60)]
                assert (np.diff(probs) <= 1e-15).all()


class TestCollision:
    @pytest.mark.parametrize("size", [2, 4, 10, 100])
    def test_closed_form_matches_direct_sum(self, size):
        for step in range(size, 201):
            direct = float((marginal_distribution("geometric", step, size, size) ** 2).sum())
            assert abs(collision_probability("geometric", step, size, size) - direct) <= 1e-12

    def test_uniform_collision(self):
        assert collision_probability("uniform", 4) == pytest.approx(0.25)
        for step in range(1, 201):
            direct = float((marginal_distribution("uniform", step) ** 2).sum())
            assert abs(collision_probability("uniform", step) - direct) <= 1e-12

    def test_geometric_small_case_by_hand(self):
        # size 2 at one step past the fill: 0.5^2 + 0.25^2 + 0.25^2
        assert collision_probability("geometric", 3, 2, 2) == pytest.approx(0.375)

    def test_geometric_limit(self):
        for size in (2, 4, 10, 100):
            p = 1.0 / size
            assert abs(collision_probability("geometric", size + 10**4, size, size)
                       - p / (2.0 - p)) <= 1e-9


class TestDrawLaws:
    def test_uniform_full_draw_frequencies(self):
        s = UniformFullStore(1, rng_or_seed=21)
        feed(s, 4)
        _, times = s.draw_many(100_000)
        freqs = np.bincount(times, minlength=4) / 100_000
        assert np.abs(freqs - 0.25).max() < 0.01

    def test_uniform_reservoir_marginal_is_uniform(self):
        # marginal over (reservoir evolution x slot draw) estimated over fresh runs
        runs, step, size = 30_000, 12, 4
        rng = np.random.default_rng(31)
        counts = np.zeros(step)
        for _ in range(runs):
            s = UniformReservoir(1, size=size, rng_or_seed=rng)
            feed(s, step)
            counts[int(s.draw().timestamp)] += 1
        freqs = counts / runs
        expected = np.full(step, 1.0 / step)
        se = np.sqrt(expected * (1 - expected) / runs)
        assert (np.abs(freqs - expected) <= 3.5 * se).all()

    def test_geometric_marginal_within_three_sigma(self):
        runs, size, extra = 30_000, 8, 12
        step = size + extra
        rng = np.random.default_rng(41)
        counts = np.zeros(step)
        for _ in range(runs):
            s = GeometricReservoir(1, size=size, rng_or_seed=rng)
            feed(s, step)
            counts[int(s.draw().timestamp)] += 1
        freqs = counts / runs
        expected = marginal_distribution("geometric", step, size, size)
        se = np.sqrt(expected * (1 - expected) / runs)
        assert (np.abs(freqs - expected) <= 3.5 * se).all()

    def test_geometric_process_simulation_matches_law(self):
        # independent vectorized re-implementation of the update process
        runs, size, extra = 100_000, 8, 12
        step = size + extra
        rng = np.random.default_rng(51)
        content = np.tile(np.arange(size), (runs, 1))
        for t in range(size, step):
            slots = rng.integers(0, size, size=runs)
            content[np.arange(runs), slots] = t
        drawn = content[np.arange(runs), rng.integers(0, size, size=runs)]
        freqs = np.bincount(drawn, minlength=step) / runs
        expected = marginal_distribution("geometric", step, size, size)
        se = np.sqrt(expected * (1 - expected) / runs)
        assert (np.abs(freqs - expected) <= 3.5 * se).all()

    def test_chi_square_goodness_of_fit(self):
        # production sampler draw histogram vs the analytic law
        runs, size, extra = 20_000, 8, 10
        step = size + extra
        rng = np.random.default_rng(61)
        counts = np.zeros(step)
        for _ in range(runs):
            s = GeometricReservoir(1, size=size, rng_or_seed=rng)
            feed(s, step)
            counts[int(s.draw().timestamp)] += 1
        expected = marginal_distribution("geometric", step, size, size) * runs
        result = stats.chisquare(counts, expected)
        assert result.pvalue > 0.01

    def test_chi_square_uniform_full(self):
        s = UniformFullStore(1, rng_or_seed=71)
        feed(s, 10)
        _, times = s.draw_many(100_000)
        counts = np.bincount(times, minlength=10).astype(float)
        result = stats.chisquare(counts, np.full(10, 10_000.0))
        assert result.pvalue > 0.01
