import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from driftwise.datastream import (AgrawalStream, Categorical, DriftSpec, FeatureSwap,
                                  FunctionSwitch, Gradual, Instance, Numeric, Schema,
                                  StaggerStream, Sudden, agrawal_batch, agrawal_label,
                                  agrawal_label_batch, agrawal_next, agrawal_schema,
                                  apply_drift, csv_stream, stagger_batch, stagger_label,
                                  stagger_next)
from driftwise.errors import ConfigError, CsvFormatError, SchemaError


def feat(salary=60.0, age=30.0, elevel=0):
    return np.array([salary, 0.0, age, float(elevel), 0.0, 0.0, 100.0, 5.0, 10.0])


class TestAgrawalRule:
    def test_young_mid_salary_is_class_a(self):
        assert agrawal_label(feat(salary=60, age=30), 1) == 1

    def test_young_high_salary_is_class_b(self):
        assert agrawal_label(feat(salary=150, age=30), 1) == 0

    def test_old_low_salary_is_class_a(self):
        assert agrawal_label(feat(salary=50, age=65), 1) == 1

    def test_band_edges_inclusive(self):
        assert agrawal_label(feat(salary=50, age=39.9), 1) == 1
        assert agrawal_label(feat(salary=100, age=39.9), 1) == 1
        assert agrawal_label(feat(salary=100.01, age=39.9), 1) == 0

    def test_invalid_concept_rejected(self):
        with pytest.raises(ConfigError):
            agrawal_label(feat(), 4)
        with pytest.raises(ConfigError):
            agrawal_batch(np.random.default_rng(0), 5, 0)

    @pytest.mark.parametrize("concept", [1, 2, 3])
    def test_scalar_and_batch_rules_agree(self, concept):
        X, _ = agrawal_batch(np.random.default_rng(7), 2000, 1)
        batch = agrawal_label_batch(X, concept)
        scalar = np.array([agrawal_label(row, concept) for row in X])
        assert (batch == scalar).all()

    def test_class_a_prevalence_matches_geometry(self):
        # three 1/3 x 5/13 rectangles -> 5/13
        _, y = agrawal_batch(np.random.default_rng(11), 100_000, 1)
        assert abs(y.mean() - 5 / 13) < 0.01

    def test_next_draw_is_deterministic_and_valid(self):
        a = agrawal_next(np.random.default_rng(3), 1, timestamp=7)
        b = agrawal_next(np.random.default_rng(3), 1, timestamp=7)
        assert np.array_equal(a.features, b.features) and a.target == b.target
        agrawal_schema().validate(a)
        assert a.target == agrawal_label(a.features, 1)
        assert a.timestamp == 7


class TestStagger:
    def test_rule_red_and_small(self):
        # (shape=circle, size=small, color=red)
        assert stagger_label(np.array([0.0, 0.0, 0.0]), 1) == 1
        # large breaks the rule
        assert stagger_label(np.array([0.0, 2.0, 0.0]), 1) == 0

    def test_rate_is_one_ninth(self):
        _, y = stagger_batch(np.random.default_rng(5), 100_000, 1)
        assert abs(y.mean() - 1 / 9) < 0.01

    def test_invalid_concept(self):
        with pytest.raises(ConfigError):
            stagger_next(np.random.default_rng(0), 9)


class TestStreams:
    def test_determinism_bit_identical(self):
        a = AgrawalStream(concept_id=2, seed=9).take(300)
        b = AgrawalStream(concept_id=2, seed=9).take(300)
        assert all(np.array_equal(x.features, y.features) and x.target == y.target
                   for x, y in zip(a, b))

    def test_timestamps_strictly_increasing(self):
        ts = [i.timestamp for i in StaggerStream(seed=1).take(200)]
        assert ts == list(range(200))

    def test_instances_satisfy_schema(self):
        stream = AgrawalStream(concept_id=3, seed=2)
        for inst in stream.take(500):
            stream.schema.validate(inst)

    def test_schema_validation_rejects_bad_instances(self):
        schema = agrawal_schema()
        good = AgrawalStream(seed=0).take(1)[0]
        with pytest.raises(SchemaError):
            schema.validate(Instance(good.features[:5], good.target, 0))
        bad = good.features.copy()
        bad[3] = 9.0  # elevel cardinality is 5
        with pytest.raises(SchemaError):
            schema.validate(Instance(bad, good.target, 0))

    def test_schema_invariants(self):
        with pytest.raises(ConfigError):
            Schema(names=("x", "x"), kinds=(Numeric(), Numeric()))
        with pytest.raises(ConfigError):
            Categorical(0)


class TestCsvStream:
    def test_three_numeric_rows_in_order(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b,y\n1,2.5,0\n3,4.5,1\n5,6.5,0\n")
        stream = csv_stream(p)
        rows = list(stream)
        assert len(rows) == 3
        assert [r.target for r in rows] == [0.0, 1.0, 0.0]
        assert np.allclose(rows[1].features, [3.0, 4.5])
        assert stream.schema.target_name == "y"
        assert stream.schema.target_kind == "binary"

    def test_missing_target_column_named_in_error(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(ConfigError, match="label"):
            csv_stream(p, target_column="label")

    def test_first_seen_categorical_encoding(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("c,y\na,0\nb,1\na,0\n")
        stream = csv_stream(p)
        kind = stream.schema.kinds[0]
        assert isinstance(kind, Categorical)
        assert kind.cardinality == 2
        assert [int(r.features[0]) for r in stream] == [0, 1, 0]

    def test_replay_is_stable(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("c,y\nz,0\nq,1\nz,0\n")
        stream = csv_stream(p)
        first = [tuple(r.features) for r in stream]
        second = [tuple(r.features) for r in stream]
        assert first == second

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            csv_stream(tmp_path / "nope.csv")

    def test_malformed_row_reports_row_number(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b,y\n1,2,0\n1,0\n")
        with pytest.raises(CsvFormatError, match="row 2"):
            csv_stream(p)

    def test_numeric_hint_parse_failure_reports_row(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,y\n1,0\noops,1\n")
        with pytest.raises(CsvFormatError, match="row 2"):
            csv_stream(p, schema_hints={"a": "numeric"})

    def test_regression_target_detected(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,y\n1,0.25\n2,1.5\n")
        assert csv_stream(p).schema.target_kind == "numeric"


class TestDrift:
    def test_sudden_feature_swap_boundary(self):
        base = AgrawalStream(concept_id=1, seed=4)
        spec = DriftSpec(FeatureSwap(((0, 2),)), position=5, profile=Sudden())
        plain = base.take(8)
        drifted = apply_drift(base, spec, 0).take(8)
        assert np.array_equal(drifted[4].features, plain[4].features)
        assert drifted[5].features[0] == plain[5].features[2]
        assert drifted[5].features[2] == plain[5].features[0]

    def test_feature_swap_is_involution(self):
        base = AgrawalStream(concept_id=1, seed=4)
        spec = DriftSpec(FeatureSwap(((0, 8), (2, 7))), position=3, profile=Sudden())
        twice = apply_drift(apply_drift(base, spec, 0), spec, 1)
        for a, b in zip(base.take(30), twice.take(30)):
            assert np.array_equal(a.features, b.features)
            assert a.target == b.target

    def test_sudden_function_switch_relabels(self):
        base = AgrawalStream(concept_id=1, seed=6)
        spec = DriftSpec(FunctionSwitch(1, 2), position=100, profile=Sudden())
        drifted = apply_drift(base, spec, 0).take(300)
        for inst in drifted[:100]:
            assert inst.target == agrawal_label(inst.features, 1)
        for inst in drifted[100:]:
            assert inst.target == agrawal_label(inst.features, 2)

    def test_gradual_ramp_endpoint(self):
        base = AgrawalStream(concept_id=1, seed=6)
        spec = DriftSpec(FunctionSwitch(1, 2), position=10, profile=Gradual(width=20))
        drifted = apply_drift(base, spec, 3).take(100)
        for inst in drifted[30:]:
            assert inst.target == agrawal_label(inst.features, 2)
        for inst in drifted[:10]:
            assert inst.target == agrawal_label(inst.features, 1)

    def test_gradual_ramp_mixes_in_between(self):
        base = AgrawalStream(concept_id=1, seed=8)
        spec = DriftSpec(FeatureSwap(((0, 8),)), position=100, profile=Gradual(width=400))
        plain = base.take(500)
        drifted = apply_drift(base, spec, 5).take(500)
        swapped = [not np.array_equal(a.features, b.features)
                   for a, b in zip(plain[100:500], drifted[100:500])
                   if a.features[0] != a.features[8]]
        frac = np.mean(swapped)
        assert 0.2 < frac < 0.8  # linear 0 -> 1 ramp averages near 1/2

    def test_incompatible_swap_kinds_rejected(self):
        base = AgrawalStream(concept_id=1, seed=0)
        # elevel (5 levels) vs zipcode (9 levels)
        with pytest.raises(ConfigError, match="incompatible"):
            apply_drift(base, DriftSpec(FeatureSwap(((3, 5),)), position=0), 0)
        # numeric vs categorical
        with pytest.raises(ConfigError, match="incompatible"):
            apply_drift(base, DriftSpec(FeatureSwap(((0, 3),)), position=0), 0)

    def test_function_switch_needs_relabelable_stream(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,y\n1,0\n2,1\n")
        with pytest.raises(ConfigError, match="relabel"):
            apply_drift(csv_stream(p), DriftSpec(FunctionSwitch(1, 2), position=1), 0)

    def test_spec_validation(self):
        with pytest.raises(ConfigError):
            DriftSpec(FeatureSwap(((1, 1),)), position=0)
        with pytest.raises(ConfigError):
            DriftSpec(FunctionSwitch(1, 2), position=-1)
        with pytest.raises(ConfigError):
            DriftSpec(FunctionSwitch(1, 2), position=0, profile=Gradual(width=0))

    @settings(max_examples=25, deadline=None)
    @given(position=st.integers(0, 40), seed=st.integers(0, 10))
    def test_swap_involution_property(self, position, seed):
        base = StaggerStream(concept_id=2, seed=seed)
        spec = DriftSpec(FeatureSwap(((0, 1),)), position=position, profile=Sudden())
        twice = apply_drift(apply_drift(base, spec, 0), spec, 0)
        for a, b in zip(base.take(50), twice.take(50)):
            assert np.array_equal(a.features, b.features)
