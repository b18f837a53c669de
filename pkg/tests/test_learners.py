import numpy as np
import pytest

from driftwise.datastream import AgrawalStream, agrawal_batch, agrawal_schema
from driftwise.errors import ConfigError, SchemaError
from driftwise.learners import (FrozenOracle, OnlineLogisticRegression, OnlineNaiveBayes,
                                agrawal_oracle, snapshot)


def feat(salary=60.0, age=30.0):
    return np.array([salary, 0.0, age, 0.0, 0.0, 0.0, 100.0, 5.0, 10.0])


class TestFrozenOracle:
    def test_concept_rule_prediction(self):
        oracle = agrawal_oracle(1)
        assert oracle.predict(feat(salary=60, age=30)) == 1.0
        assert oracle.predict(feat(salary=150, age=30)) == 0.0

    def test_learn_one_is_noop(self):
        oracle = agrawal_oracle(1)
        before = oracle.predict(feat())
        for _ in range(10):
            oracle.learn_one(feat(), 0.0)
        assert oracle.predict(feat()) == before

    def test_batch_agrees_with_scalar(self):
        oracle = agrawal_oracle(2)
        X, _ = agrawal_batch(np.random.default_rng(0), 500, 1)
        batch = oracle.predict_batch(X)
        scalar = np.array([oracle.predict(row) for row in X])
        assert np.array_equal(batch, scalar)


class TestSnapshot:
    def test_snapshot_is_isolated_from_learning(self):
        schema = agrawal_schema()
        model = OnlineNaiveBayes(schema)
        data = AgrawalStream(seed=1).take(300)
        for inst in data[:200]:
            model.learn_one(inst.features, inst.target)
        frozen = snapshot(model)
        probes = np.stack([i.features for i in data[200:]])
        before = frozen.predict_batch(probes)
        for inst in data[200:]:
            model.learn_one(inst.features, inst.target)
            frozen.learn_one(inst.features, inst.target)  # no-op by contract
        assert np.array_equal(frozen.predict_batch(probes), before)
        assert not np.array_equal(model.predict_batch(probes), before)

    def test_snapshot_matches_source_at_snapshot_time(self):
        schema = agrawal_schema()
        model = OnlineNaiveBayes(schema)
        data = AgrawalStream(seed=2).take(200)
        for inst in data[:100]:
            model.learn_one(inst.features, inst.target)
        frozen = snapshot(model)
        probes = np.stack([i.features for i in data[100:]])
        assert np.abs(frozen.predict_batch(probes) - model.predict_batch(probes)).max() == 0.0

    def test_snapshot_of_oracle_equivalent(self):
        oracle = agrawal_oracle(1)
        frozen = snapshot(oracle)
        X, _ = agrawal_batch(np.random.default_rng(3), 50, 1)
        assert np.array_equal(frozen.predict_batch(X), oracle.predict_batch(X))


class TestNaiveBayes:
    def test_untrained_predicts_half(self):
        model = OnlineNaiveBayes(agrawal_schema())
        assert model.predict(feat()) == 0.5

    def test_prior_dominance_after_one_sided_data(self):
        model = OnlineNaiveBayes(agrawal_schema())
        data = AgrawalStream(seed=4).take(200)
        for inst in data[:100]:
            model.learn_one(inst.features, 1.0)
        probes = np.stack([i.features for i in data[100:]])
        assert model.predict_batch(probes).min() > 0.9

    def test_probabilities_sum_to_one(self):
        model = OnlineNaiveBayes(agrawal_schema())
        data = AgrawalStream(seed=5).take(300)
        for inst in data[:250]:
            model.learn_one(inst.features, inst.target)
        for inst in data[250:]:
            proba = model.predict_proba(inst.features)
            assert abs(proba.sum() - 1.0) < 1e-9

    def test_welford_matches_batch_moments(self):
        schema = agrawal_schema()
        model = OnlineNaiveBayes(schema)
        X, _ = agrawal_batch(np.random.default_rng(6), 400, 1)
        numeric = [j for j in range(9) if not schema.is_categorical(j)]
        for n, row in enumerate(X, start=1):
            model.learn_one(row, 1.0)
            if n in (2, 17, 100, 400):
                w, mean, var = model.numeric_stats(1)
                ref_mean = X[:n, numeric].mean(axis=0)
                ref_var = X[:n, numeric].var(axis=0)
                assert w[0] == n
                assert np.allclose(mean, ref_mean, rtol=1e-10, atol=0)
                assert np.allclose(var, ref_var, rtol=1e-10, atol=1e-12)

    def test_batch_predictions_match_scalar(self):
        model = OnlineNaiveBayes(agrawal_schema())
        data = AgrawalStream(seed=7).take(500)
        for inst in data[:400]:
            model.learn_one(inst.features, inst.target)
        probes = np.stack([i.features for i in data[400:]])
        batch = model.predict_batch(probes)
        scalar = np.array([model.predict(row) for row in probes])
        assert np.allclose(batch, scalar, atol=1e-12)

    def test_learning_improves_on_concept(self):
        model = OnlineNaiveBayes(agrawal_schema())
        data = AgrawalStream(concept_id=1, seed=8).take(6000)
        for inst in data[:5000]:
            model.learn_one(inst.features, inst.target)
        hits = [float((model.predict(i.features) >= 0.5) == (i.target == 1.0))
                for i in data[5000:]]
        assert np.mean(hits) > 0.6

    def test_decay_tracks_label_flip(self):
        schema = agrawal_schema()
        adaptive = OnlineNaiveBayes(schema, decay=0.99)
        data = AgrawalStream(seed=9).take(2400)
        for inst in data[:1000]:
            adaptive.learn_one(inst.features, inst.target)
        for inst in data[1000:2000]:  # labels inverted
            adaptive.learn_one(inst.features, 1.0 - inst.target)
        hits = [float((adaptive.predict(i.features) >= 0.5) == (i.target == 0.0))
                for i in data[2000:]]
        assert np.mean(hits) > 0.55

    def test_rejects_bad_inputs(self):
        model = OnlineNaiveBayes(agrawal_schema())
        with pytest.raises(SchemaError):
            model.learn_one(np.zeros(3), 1.0)
        with pytest.raises(SchemaError):
            model.learn_one(feat(), 2.0)
        with pytest.raises(ConfigError):
            OnlineNaiveBayes(agrawal_schema(), decay=0.0)


class TestLogisticRegression:
    def test_zero_weights_predict_half(self):
        model = OnlineLogisticRegression(agrawal_schema())
        assert model.predict(feat()) == 0.5

    def test_single_step_raises_probability_on_positive(self):
        model = OnlineLogisticRegression(agrawal_schema(), learning_rate=0.001)
        x = feat()
        before = model.predict(x)
        model.learn_one(x, 1.0)
        assert model.predict(x) > before

    @staticmethod
    def _trained_small_model(seed, l2):
        # unit-scale synthetic features keep the sigmoid away from saturation
        from driftwise.datastream import Categorical, Numeric, Schema

        schema = Schema(names=("u", "v", "c"),
                        kinds=(Numeric(), Numeric(), Categorical(3)),
                        target_kind="binary")
        model = OnlineLogisticRegression(schema, learning_rate=0.05, l2=l2)
        rng = np.random.default_rng(seed)
        for _ in range(60):
            x = np.array([rng.normal(), rng.normal(), float(rng.integers(0, 3))])
            y = float(x[0] + 0.5 * x[1] > 0)
            model.learn_one(x, y)
        probe = np.array([0.4, -0.7, 1.0])
        return model, probe

    def test_gradient_matches_central_differences(self):
        model, x = self._trained_small_model(seed=10, l2=1e-3)
        y = 1.0
        z = model.encode(x)
        p = model.predict(x)
        analytic = (p - y) * z + model.l2 * model.weights
        eps = 1e-6
        checked = 0
        for k in np.nonzero(np.abs(analytic) > 1e-6)[0]:
            saved = model.weights[k]
            model.weights[k] = saved + eps
            up = model.log_loss(x, y)
            model.weights[k] = saved - eps
            down = model.log_loss(x, y)
            model.weights[k] = saved
            fd = (up - down) / (2 * eps)
            assert abs(fd - analytic[k]) / max(abs(analytic[k]), abs(fd)) < 1e-5
            checked += 1
        assert checked >= 3

    def test_bias_gradient_matches_central_differences(self):
        model, x = self._trained_small_model(seed=11, l2=0.0)
        y = 0.0
        analytic = model.predict(x) - y
        assert abs(analytic) > 1e-6
        eps = 1e-6
        saved = model.bias
        model.bias = saved + eps
        up = model.log_loss(x, y)
        model.bias = saved - eps
        down = model.log_loss(x, y)
        model.bias = saved
        fd = (up - down) / (2 * eps)
        assert abs(fd - analytic) / max(abs(analytic), abs(fd)) < 1e-5

    def test_batch_predictions_match_scalar(self):
        model = OnlineLogisticRegression(agrawal_schema(), learning_rate=0.0001)
        data = AgrawalStream(seed=12).take(120)
        for inst in data[:100]:
            model.learn_one(inst.features, inst.target)
        probes = np.stack([i.features for i in data[100:]])
        assert np.allclose(model.predict_batch(probes),
                           [model.predict(r) for r in probes], atol=1e-12)

    def test_deterministic_given_data_order(self):
        runs = []
        for _ in range(2):
            model = OnlineLogisticRegression(agrawal_schema(), learning_rate=0.001)
            for inst in AgrawalStream(seed=13).take(200):
                model.learn_one(inst.features, inst.target)
            runs.append(model.weights.copy())
        assert np.array_equal(runs[0], runs[1])
