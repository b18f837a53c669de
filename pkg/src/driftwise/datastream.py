"""Synthetic labeled streams, CSV ingestion, and concept-drift injection.

Streams yield :class:`Instance` objects whose ``features`` array stores numeric
values directly and categorical values as 0-based integer indices; the
:class:`Schema` says which is which.  All streams are replayable: iterating a
stream object twice produces the identical sequence, because random state is
rebuilt from the stored seed on every ``__iter__``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import ConfigError, CsvFormatError, SchemaError

_CHUNK = 1024  # generator batch size; purely an efficiency knob


# --------------------------------------------------------------------------
# schema and instances
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Numeric:
    """Numeric feature kind. Bounds document the generator's range; they are
    not enforced on ingested data."""

    low: float = -math.inf
    high: float = math.inf


@dataclass(frozen=True)
class Categorical:
    """Categorical feature kind; values are indices in ``range(cardinality)``."""

    cardinality: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.cardinality < 1:
            raise ConfigError(f"categorical cardinality must be >= 1, got {self.cardinality}")
        if self.labels is not None and len(self.labels) != self.cardinality:
            raise ConfigError("label count does not match cardinality")


FeatureKind = Numeric | Categorical


@dataclass(frozen=True)
class Schema:
    """Names and kinds of the feature columns plus the target kind."""

    names: tuple[str, ...]
    kinds: tuple[FeatureKind, ...]
    target_kind: str = "binary"  # "binary" or "numeric"
    target_name: str = "target"

    def __post_init__(self):
        if len(self.names) < 1:
            raise ConfigError("schema needs at least one feature")
        if len(self.names) != len(self.kinds):
            raise ConfigError("names and kinds differ in length")
        if len(set(self.names)) != len(self.names):
            raise ConfigError("feature names must be unique")
        if self.target_kind not in ("binary", "numeric"):
            raise ConfigError(f"unknown target kind {self.target_kind!r}")

    @property
    def n_features(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ConfigError(f"unknown feature {name!r}") from None

    def is_categorical(self, j: int) -> bool:
        return isinstance(self.kinds[j], Categorical)

    def validate(self, instance: "Instance") -> None:
        """Raise :class:`SchemaError` unless the instance satisfies this schema."""
        feats = np.asarray(instance.features, dtype=float)
        if feats.shape != (self.n_features,):
            raise SchemaError(f"expected {self.n_features} features, got shape {feats.shape}")
        for j, kind in enumerate(self.kinds):
            v = feats[j]
            if not np.isfinite(v):
                raise SchemaError(f"feature {self.names[j]!r} is not finite: {v}")
            if isinstance(kind, Categorical):
                if v != int(v) or not (0 <= int(v) < kind.cardinality):
                    raise SchemaError(
                        f"feature {self.names[j]!r}: index {v} outside cardinality {kind.cardinality}"
                    )
        if self.target_kind == "binary" and instance.target not in (0, 1):
            raise SchemaError(f"binary target expected, got {instance.target}")


@dataclass(frozen=True)
class Instance:
    """One stream observation: feature vector, target, arrival time."""

    features: np.ndarray
    target: float
    timestamp: int


def _seed_of(rng_or_seed) -> int:
    """Accept an int seed or a Generator; always come away with a stored seed."""
    if isinstance(rng_or_seed, np.random.Generator):
        return int(rng_or_seed.integers(0, 2**63 - 1))
    return int(rng_or_seed)


# --------------------------------------------------------------------------
# agrawal loan-approval generator
# --------------------------------------------------------------------------

AGRAWAL_FEATURES = (
    "salary",
    "commission",
    "age",
    "elevel",
    "car",
    "zipcode",
    "hvalue",
    "hyears",
    "loan",
)

_SALARY, _COMMISSION, _AGE, _ELEVEL, _CAR, _ZIPCODE, _HVALUE, _HYEARS, _LOAN = range(9)


def agrawal_schema() -> Schema:
    return Schema(
        names=AGRAWAL_FEATURES,
        kinds=(
            Numeric(20.0, 150.0),   # salary, thousands
            Numeric(0.0, 75.0),     # commission, thousands; 0 when salary >= 75
            Numeric(20.0, 80.0),    # age, years
            Categorical(5),         # education level
            Categorical(20),        # car make
            Categorical(9),         # zipcode
            Numeric(50.0, 1350.0),  # house value, thousands
            Numeric(1.0, 30.0),     # years owned
            Numeric(0.0, 500.0),    # loan, thousands
        ),
        target_kind="binary",
    )


def agrawal_label(features: Sequence[float], concept_id: int = 1) -> int:
    """Label one feature vector under one of the three decision rules.

    These are the first three rules of the classic loan-approval stream
    generator.  Salary thresholds are in thousands, matching the generated
    units.  Rule 3 follows the original generator's third function; its exact
    education bands are an assumption documented in the README.
    """
    salary = features[_SALARY]
    age = features[_AGE]
    elevel = int(features[_ELEVEL])
    if concept_id == 1:
        if age < 40:
            return int(50.0 <= salary <= 100.0)
        if age < 60:
            return int(75.0 <= salary <= 125.0)
        return int(25.0 <= salary <= 75.0)
    if concept_id == 2:
        if age < 40:
            return int(elevel in (0, 1))
        if age < 60:
            return int(elevel in (1, 2, 3))
        return int(elevel in (2, 3, 4))
    if concept_id == 3:
        if age < 40:
            lo, hi = (25.0, 75.0) if elevel in (0, 1) else (50.0, 100.0)
        elif age < 60:
            lo, hi = (50.0, 100.0) if elevel in (1, 2, 3) else (75.0, 125.0)
        else:
            lo, hi = (50.0, 100.0) if elevel in (2, 3, 4) else (25.0, 75.0)
        return int(lo <= salary <= hi)
    raise ConfigError(f"agrawal concept must be 1, 2 or 3, got {concept_id}")


def agrawal_label_batch(X: np.ndarray, concept_id: int = 1) -> np.ndarray:
    """Vectorized :func:`agrawal_label` over a (n, 9) feature matrix."""
    X = np.asarray(X, dtype=float)
    salary = X[:, _SALARY]
    age = X[:, _AGE]
    elevel = X[:, _ELEVEL].astype(np.int64)
    young = age < 40
    mid = (age >= 40) & (age < 60)
    old = age >= 60
    if concept_id == 1:
        in_band = (
            (young & (salary >= 50.0) & (salary <= 100.0))
            | (mid & (salary >= 75.0) & (salary <= 125.0))
            | (old & (salary >= 25.0) & (salary <= 75.0))
        )
        return in_band.astype(np.int64)
    if concept_id == 2:
        in_band = (
            (young & (elevel <= 1))
            | (mid & (elevel >= 1) & (elevel <= 3))
            | (old & (elevel >= 2))
        )
        return in_band.astype(np.int64)
    if concept_id == 3:
        lo = np.where(
            young,
            np.where(elevel <= 1, 25.0, 50.0),
            np.where(mid, np.where((elevel >= 1) & (elevel <= 3), 50.0, 75.0),
                     np.where(elevel >= 2, 50.0, 25.0)),
        )
        hi = lo + 50.0
        return ((salary >= lo) & (salary <= hi)).astype(np.int64)
    raise ConfigError(f"agrawal concept must be 1, 2 or 3, got {concept_id}")


def agrawal_batch(rng: np.random.Generator, n: int, concept_id: int = 1):
    """Draw ``n`` observations at once; returns ``(X, y)`` arrays.

    Only salary and age distributions matter for the rule-1 analysis; the
    remaining columns follow the original generator's auxiliary distributions.
    A commission value is drawn for every row and masked to zero where
    salary >= 75, so the consumed random stream does not depend on the data.
    """
    if concept_id not in (1, 2, 3):
        raise ConfigError(f"agrawal concept must be 1, 2 or 3, got {concept_id}")
    salary = rng.uniform(20.0, 150.0, n)
    commission_raw = rng.uniform(10.0, 75.0, n)
    commission = np.where(salary >= 75.0, 0.0, commission_raw)
    age = rng.uniform(20.0, 80.0, n)
    elevel = rng.integers(0, 5, n).astype(float)
    car = rng.integers(0, 20, n).astype(float)
    zipcode = rng.integers(0, 9, n).astype(float)
    hvalue = (9.0 - zipcode) * 100.0 * rng.uniform(0.5, 1.5, n)
    hyears = rng.integers(1, 31, n).astype(float)
    loan = rng.uniform(0.0, 500.0, n)
    X = np.column_stack(
        [salary, commission, age, elevel, car, zipcode, hvalue, hyears, loan]
    )
    return X, agrawal_label_batch(X, concept_id)


def agrawal_next(rng: np.random.Generator, concept_id: int = 1, timestamp: int = 0) -> Instance:
    """Draw a single labeled observation (a batch of one)."""
    X, y = agrawal_batch(rng, 1, concept_id)
    return Instance(features=X[0], target=float(y[0]), timestamp=timestamp)


# --------------------------------------------------------------------------
# stagger shapes generator
# --------------------------------------------------------------------------

STAGGER_FEATURES = ("shape", "size", "color")
_SHAPES = ("circle", "square", "triangle")
_SIZES = ("small", "medium", "large")
_COLORS = ("red", "green", "blue")


def stagger_schema() -> Schema:
    return Schema(
        names=STAGGER_FEATURES,
        kinds=(
            Categorical(3, _SHAPES),
            Categorical(3, _SIZES),
            Categorical(3, _COLORS),
        ),
        target_kind="binary",
    )


def stagger_label(features: Sequence[float], concept_id: int = 1) -> int:
    """The three classic boolean rules over shape/size/color."""
    shape, size, color = (int(features[0]), int(features[1]), int(features[2]))
    if concept_id == 1:  # red and small
        return int(color == 0 and size == 0)
    if concept_id == 2:  # green or circle
        return int(color == 1 or shape == 0)
    if concept_id == 3:  # medium or large
        return int(size in (1, 2))
    raise ConfigError(f"stagger concept must be 1, 2 or 3, got {concept_id}")


def stagger_label_batch(X: np.ndarray, concept_id: int = 1) -> np.ndarray:
    X = np.asarray(X)
    shape = X[:, 0].astype(np.int64)
    size = X[:, 1].astype(np.int64)
    color = X[:, 2].astype(np.int64)
    if concept_id == 1:
        return ((color == 0) & (size == 0)).astype(np.int64)
    if concept_id == 2:
        return ((color == 1) | (shape == 0)).astype(np.int64)
    if concept_id == 3:
        return ((size == 1) | (size == 2)).astype(np.int64)
    raise ConfigError(f"stagger concept must be 1, 2 or 3, got {concept_id}")


def stagger_batch(rng: np.random.Generator, n: int, concept_id: int = 1):
    if concept_id not in (1, 2, 3):
        raise ConfigError(f"stagger concept must be 1, 2 or 3, got {concept_id}")
    X = rng.integers(0, 3, size=(n, 3)).astype(float)
    return X, stagger_label_batch(X, concept_id)


def stagger_next(rng: np.random.Generator, concept_id: int = 1, timestamp: int = 0) -> Instance:
    X, y = stagger_batch(rng, 1, concept_id)
    return Instance(features=X[0], target=float(y[0]), timestamp=timestamp)


# --------------------------------------------------------------------------
# stream classes
# --------------------------------------------------------------------------


class SyntheticStream:
    """Infinite, replayable stream over a batched generator function."""

    def __init__(self, batch_fn, label_fn, schema: Schema, concept_id: int, seed):
        self._batch_fn = batch_fn
        self._label_fn = label_fn
        self._schema = schema
        self.concept_id = concept_id
        self.seed = _seed_of(seed)

    @property
    def schema(self) -> Schema:
        return self._schema

    def label(self, features, concept_id: int | None = None) -> float:
        """Relabel a feature vector under a (possibly different) concept."""
        cid = self.concept_id if concept_id is None else concept_id
        return float(self._label_fn(features, cid))

    def __iter__(self) -> Iterator[Instance]:
        rng = np.random.default_rng(self.seed)
        t = 0
        while True:
            X, y = self._batch_fn(rng, _CHUNK, self.concept_id)
            for i in range(_CHUNK):
                yield Instance(features=X[i], target=float(y[i]), timestamp=t)
                t += 1

    def take(self, n: int) -> list[Instance]:
        out = []
        for inst in self:
            out.append(inst)
            if len(out) >= n:
                break
        return out


class AgrawalStream(SyntheticStream):
    def __init__(self, concept_id: int = 1, seed=0):
        if concept_id not in (1, 2, 3):
            raise ConfigError(f"agrawal concept must be 1, 2 or 3, got {concept_id}")
        super().__init__(agrawal_batch, agrawal_label, agrawal_schema(), concept_id, seed)


class StaggerStream(SyntheticStream):
    def __init__(self, concept_id: int = 1, seed=0):
        if concept_id not in (1, 2, 3):
            raise ConfigError(f"stagger concept must be 1, 2 or 3, got {concept_id}")
        super().__init__(stagger_batch, stagger_label, stagger_schema(), concept_id, seed)


# --------------------------------------------------------------------------
# CSV ingestion
# --------------------------------------------------------------------------


class CsvStream:
    """Replayable stream over a CSV file.

    The whole file is parsed once at construction so the schema (including
    first-seen categorical encodings) is fixed before iteration; replays are
    therefore stable.  Columns are numeric when every cell parses as a float,
    categorical otherwise; ``schema_hints`` ({column: "numeric"|"categorical"})
    overrides detection.  A numeric-hinted column that fails to parse reports
    the offending data row (1-based, excluding the header).
    """

    def __init__(self, path, target_column: str | None = None, schema_hints: dict | None = None):
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"CSV file not found: {path}")
        hints = dict(schema_hints or {})
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise CsvFormatError(f"{path}: empty file, header row required") from None
            rows = []
            for i, row in enumerate(reader, start=1):
                if len(row) != len(header):
                    raise CsvFormatError(
                        f"{path}: row {i}: expected {len(header)} fields, got {len(row)}"
                    )
                rows.append(row)
        if target_column is None:
            target_column = header[-1]
        if target_column not in header:
            raise ConfigError(f"target column {target_column!r} not found in header {header}")
        for name in hints:
            if name not in header:
                raise ConfigError(f"schema hint for unknown column {name!r}")

        feature_names = tuple(n for n in header if n != target_column)
        kinds: list[FeatureKind] = []
        columns: list[np.ndarray] = []
        for name in feature_names:
            col = [r[header.index(name)] for r in rows]
            kind, values = self._encode_column(path, name, col, hints.get(name))
            kinds.append(kind)
            columns.append(values)

        target_raw = [r[header.index(target_column)] for r in rows]
        target_kind, targets = self._encode_target(path, target_column, target_raw,
                                                   hints.get(target_column))

        self._schema = Schema(
            names=feature_names,
            kinds=tuple(kinds),
            target_kind=target_kind,
            target_name=target_column,
        )
        self._X = np.column_stack(columns) if columns else np.empty((len(rows), 0))
        self._y = targets

    @staticmethod
    def _parse_numeric(path, name, col):
        values = np.empty(len(col))
        for i, cell in enumerate(col):
            try:
                values[i] = float(cell)
            except ValueError:
                raise CsvFormatError(
                    f"{path}: row {i + 1}: column {name!r}: cannot parse {cell!r} as a number"
                ) from None
        return values

    @classmethod
    def _encode_column(cls, path, name, col, hint):
        if hint not in (None, "numeric", "categorical"):
            raise ConfigError(f"schema hint for {name!r} must be 'numeric' or 'categorical'")
        if hint == "numeric":
            return Numeric(), cls._parse_numeric(path, name, col)
        if hint is None:
            try:
                return Numeric(), cls._parse_numeric(path, name, col)
            except CsvFormatError:
                pass  # fall through to categorical detection
        # first-seen order assigns indices; stored in the schema for stable replay
        levels: dict[str, int] = {}
        values = np.empty(len(col))
        for i, cell in enumerate(col):
            if cell not in levels:
                levels[cell] = len(levels)
            values[i] = levels[cell]
        return Categorical(len(levels), tuple(levels)), values

    @classmethod
    def _encode_target(cls, path, name, col, hint):
        if hint != "categorical":
            try:
                values = cls._parse_numeric(path, name, col)
                uniq = set(np.unique(values).tolist())
                if uniq <= {0.0, 1.0}:
                    return "binary", values
                return "numeric", values
            except CsvFormatError:
                if hint == "numeric":
                    raise
        levels: dict[str, int] = {}
        values = np.empty(len(col))
        for i, cell in enumerate(col):
            if cell not in levels:
                levels[cell] = len(levels)
            values[i] = levels[cell]
        if len(levels) != 2:
            raise ConfigError(
                f"{path}: categorical target {name!r} has {len(levels)} levels; only binary supported"
            )
        return "binary", values

    @property
    def schema(self) -> Schema:
        return self._schema

    def __len__(self) -> int:
        return len(self._y)

    def __iter__(self) -> Iterator[Instance]:
        for t in range(len(self._y)):
            yield Instance(features=self._X[t].copy(), target=float(self._y[t]), timestamp=t)

    def take(self, n: int) -> list[Instance]:
        out = []
        for inst in self:
            out.append(inst)
            if len(out) >= n:
                break
        return out


def csv_stream(path, target_column: str | None = None, schema_hints: dict | None = None) -> CsvStream:
    return CsvStream(path, target_column=target_column, schema_hints=schema_hints)


# --------------------------------------------------------------------------
# concept drift
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FunctionSwitch:
    """Relabel the stream with a different concept from the drift point on."""

    from_concept: int
    to_concept: int


@dataclass(frozen=True)
class FeatureSwap:
    """Exchange the values of the listed feature index pairs from the drift
    point on.  Pairs must join two numerics or two categoricals of equal
    cardinality."""

    pairs: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class Sudden:
    pass


@dataclass(frozen=True)
class Gradual:
    """New concept's per-sample probability ramps linearly 0 to 1 over
    ``width`` samples starting at the drift position."""

    width: int


@dataclass(frozen=True)
class DriftSpec:
    kind: FunctionSwitch | FeatureSwap
    position: int
    profile: Sudden | Gradual = field(default_factory=Sudden)

    def __post_init__(self):
        if self.position < 0:
            raise ConfigError(f"drift position must be >= 0, got {self.position}")
        if isinstance(self.profile, Gradual) and self.profile.width < 1:
            raise ConfigError(f"gradual width must be >= 1, got {self.profile.width}")
        if isinstance(self.kind, FeatureSwap):
            if not self.kind.pairs:
                raise ConfigError("feature swap needs at least one index pair")
            for a, b in self.kind.pairs:
                if a == b:
                    raise ConfigError(f"swap pair ({a}, {b}) must reference distinct indices")


def _compatible(a: FeatureKind, b: FeatureKind) -> bool:
    if isinstance(a, Numeric) and isinstance(b, Numeric):
        return True
    if isinstance(a, Categorical) and isinstance(b, Categorical):
        return a.cardinality == b.cardinality
    return False


class DriftStream:
    """Wrap a base stream and apply a :class:`DriftSpec` per sample.

    Gradual profiles flip a per-sample Bernoulli coin whose success
    probability ramps linearly from 0 at ``position`` to 1 at
    ``position + width``; sudden profiles switch at ``position`` exactly.
    """

    def __init__(self, base, spec: DriftSpec, rng_or_seed=0):
        self.base = base
        self.spec = spec
        self.seed = _seed_of(rng_or_seed)
        schema = base.schema
        if isinstance(spec.kind, FeatureSwap):
            for a, b in spec.kind.pairs:
                if not (0 <= a < schema.n_features and 0 <= b < schema.n_features):
                    raise ConfigError(f"swap pair ({a}, {b}) out of range for {schema.n_features} features")
                if not _compatible(schema.kinds[a], schema.kinds[b]):
                    raise ConfigError(
                        f"cannot swap {schema.names[a]!r} with {schema.names[b]!r}: incompatible kinds"
                    )
        else:
            if not hasattr(base, "label"):
                raise ConfigError("function drift needs a synthetic stream that can relabel features")

    @property
    def schema(self) -> Schema:
        return self.base.schema

    def _use_new(self, i: int, rng: np.random.Generator) -> bool:
        if i < self.spec.position:
            return False
        if isinstance(self.spec.profile, Sudden):
            return True
        ramp = (i - self.spec.position) / self.spec.profile.width
        if ramp >= 1.0:
            return True
        return bool(rng.random() < ramp)

    def __iter__(self) -> Iterator[Instance]:
        rng = np.random.default_rng(self.seed)
        kind = self.spec.kind
        for i, inst in enumerate(self.base):
            if not self._use_new(i, rng):
                if isinstance(kind, FunctionSwitch):
                    yield Instance(inst.features, self.base.label(inst.features, kind.from_concept),
                                   inst.timestamp)
                else:
                    yield inst
                continue
            if isinstance(kind, FeatureSwap):
                feats = inst.features.copy()
                for a, b in kind.pairs:
                    feats[a], feats[b] = feats[b], feats[a]
                yield Instance(feats, inst.target, inst.timestamp)
            else:
                yield Instance(inst.features, self.base.label(inst.features, kind.to_concept),
                               inst.timestamp)

    def take(self, n: int) -> list[Instance]:
        out = []
        for inst in self:
            out.append(inst)
            if len(out) >= n:
                break
        return out


def apply_drift(base_stream, spec: DriftSpec, rng_or_seed=0) -> DriftStream:
    """Inject the described drift into a base stream."""
    return DriftStream(base_stream, spec, rng_or_seed)
