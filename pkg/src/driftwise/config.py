"""Run configuration: JSON file keys, validation, and object wiring.

A config file is a flat JSON object; every key can also be given on the
command line, and flags override the file.  ``stream``, ``model`` and
``drift`` are small nested objects described in the README.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .datastream import (AgrawalStream, CsvStream, DriftSpec, FeatureSwap, FunctionSwitch,
                         Gradual, StaggerStream, Sudden, csv_stream)
from .errors import ConfigError
from .importance import LOSSES
from .learners import OnlineLogisticRegression, OnlineNaiveBayes, agrawal_oracle, stagger_oracle

EXPERIMENTS = ("A", "B", "C", "theory-bias", "theory-variance")
SAMPLER_KINDS = ("uniform", "uniform_full", "uniform_reservoir", "geometric")

# stable role keys for deriving child seeds; order-independent by construction
SEED_STREAM = 0
SEED_DRIFT = 1
SEED_ENSEMBLE = 2
SEED_BATCH = 3
SEED_SHUFFLE = 4
SEED_INTERVAL = 5

_SAMPLER_IDS = {kind: i for i, kind in enumerate(SAMPLER_KINDS)}


def child_seed(root_seed: int, *key: int) -> np.random.SeedSequence:
    """Deterministic child sequence for a named role; independent of the
    order in which roles are instantiated."""
    return np.random.SeedSequence(entropy=root_seed, spawn_key=tuple(key))


def sampler_seed_key(kind: str) -> int:
    return _SAMPLER_IDS[kind]


@dataclass
class RunConfig:
    experiment: str = "A"
    stream: dict = field(default_factory=lambda: {"generator": "agrawal", "concept": 1})
    model: dict = field(default_factory=lambda: {"kind": "frozen_oracle", "concept": 1})
    drift: dict | None = None
    sampler: str = "geometric"              # experiment B's estimator
    samplers: tuple[str, str] = ("uniform", "geometric")  # experiments A and C
    reservoir_size: int = 100
    alpha: float = 0.001
    realizations: int = 10
    interval: int = 1000
    interval_permutations: int = 10
    stream_length: int = 20000
    shuffles: int = 10
    loss: str = "absolute"
    report_every: int = 1
    seed: int = 0
    out: str = "out"
    study: dict = field(default_factory=dict)

    # -- construction --------------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        if isinstance(cfg.samplers, list):
            cfg.samplers = tuple(cfg.samplers)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        with path.open(encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "stream": self.stream,
            "model": self.model,
            "drift": self.drift,
            "sampler": self.sampler,
            "samplers": list(self.samplers),
            "reservoir_size": self.reservoir_size,
            "alpha": self.alpha,
            "realizations": self.realizations,
            "interval": self.interval,
            "interval_permutations": self.interval_permutations,
            "stream_length": self.stream_length,
            "shuffles": self.shuffles,
            "loss": self.loss,
            "report_every": self.report_every,
            "seed": self.seed,
            "out": self.out,
            "study": self.study,
        }

    # -- validation -----------------------------------------------------------

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.realizations < 1:
            raise ConfigError(f"realizations must be >= 1, got {self.realizations}")
        if self.stream_length < 1:
            raise ConfigError(f"stream_length must be >= 1, got {self.stream_length}")
        if self.interval < 2:
            raise ConfigError(f"interval must be >= 2, got {self.interval}")
        if self.reservoir_size < 1:
            raise ConfigError(f"reservoir_size must be >= 1, got {self.reservoir_size}")
        if self.shuffles < 1:
            raise ConfigError(f"shuffles must be >= 1, got {self.shuffles}")
        if self.report_every < 1:
            raise ConfigError(f"report_every must be >= 1, got {self.report_every}")
        if self.loss not in LOSSES:
            raise ConfigError(f"loss must be one of {sorted(LOSSES)}, got {self.loss!r}")
        if self.sampler not in SAMPLER_KINDS:
            raise ConfigError(f"sampler must be one of {SAMPLER_KINDS}, got {self.sampler!r}")
        for kind in self.samplers:
            if kind not in SAMPLER_KINDS:
                raise ConfigError(f"samplers entries must be in {SAMPLER_KINDS}, got {kind!r}")
        if len(self.samplers) != 2:
            raise ConfigError("samplers must name exactly two strategies to compare")
        if not isinstance(self.stream, dict):
            raise ConfigError("stream must be an object")
        if not isinstance(self.model, dict):
            raise ConfigError("model must be an object")
        if "csv" in self.stream and not Path(self.stream["csv"]).exists():
            raise ConfigError(f"csv file not found: {self.stream['csv']}")
        if self.experiment == "A" and self.drift is not None:
            raise ConfigError("experiment A is static; remove the drift spec")
        if self.experiment == "B" and self.model.get("kind") == "frozen_oracle":
            raise ConfigError("experiment B explains an incremental learner, not a frozen oracle")
        if self.experiment == "C":
            if self.drift is None or self.drift.get("kind") != "feature_swap":
                raise ConfigError("experiment C requires a feature_swap drift spec")

    # -- object wiring ----------------------------------------------------------

    def build_stream(self):
        spec = dict(self.stream)
        if "csv" in spec:
            return csv_stream(spec["csv"], spec.get("target"), spec.get("hints"))
        generator = spec.get("generator", "agrawal")
        concept = int(spec.get("concept", 1))
        seed = int(child_seed(self.seed, SEED_STREAM).generate_state(1)[0])
        if generator == "agrawal":
            return AgrawalStream(concept_id=concept, seed=seed)
        if generator == "stagger":
            return StaggerStream(concept_id=concept, seed=seed)
        raise ConfigError(f"unknown generator {generator!r}")

    def build_drift_spec(self) -> DriftSpec | None:
        if self.drift is None:
            return None
        spec = dict(self.drift)
        kind_name = spec.get("kind")
        if kind_name == "function_switch":
            kind = FunctionSwitch(int(spec["from_concept"]), int(spec["to_concept"]))
        elif kind_name == "feature_swap":
            pairs = tuple((int(a), int(b)) for a, b in spec["pairs"])
            kind = FeatureSwap(pairs)
        else:
            raise ConfigError(f"drift kind must be function_switch or feature_swap, got {kind_name!r}")
        profile_spec = spec.get("profile", "sudden")
        if profile_spec == "sudden":
            profile = Sudden()
        elif isinstance(profile_spec, dict) and "gradual" in profile_spec:
            profile = Gradual(int(profile_spec["gradual"]))
        else:
            raise ConfigError(f"profile must be 'sudden' or {{'gradual': width}}, got {profile_spec!r}")
        return DriftSpec(kind=kind, position=int(spec["position"]), profile=profile)

    def build_model(self, schema):
        spec = dict(self.model)
        kind = spec.pop("kind", "naive_bayes")
        if kind == "frozen_oracle":
            concept = int(spec.get("concept", 1))
            generator = self.stream.get("generator", "agrawal")
            if generator == "agrawal":
                return agrawal_oracle(concept)
            if generator == "stagger":
                return stagger_oracle(concept)
            raise ConfigError(f"no frozen oracle for generator {generator!r}")
        if kind == "naive_bayes":
            return OnlineNaiveBayes(schema, laplace=float(spec.get("laplace", 1.0)),
                                    decay=float(spec.get("decay", 1.0)))
        if kind == "logistic_regression":
            return OnlineLogisticRegression(schema,
                                            learning_rate=float(spec.get("learning_rate", 0.01)),
                                            l2=float(spec.get("l2", 0.0)))
        raise ConfigError(f"unknown model kind {kind!r}")

    def loss_fn(self):
        return LOSSES[self.loss]
