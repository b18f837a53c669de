"""driftwise: streaming permutation feature importance with drift-aware
sampling, batch references, synthetic drift streams, and statistical
self-checks."""

from .datastream import (AgrawalStream, Categorical, CsvStream, DriftSpec, FeatureSwap,
                         FunctionSwitch, Gradual, Instance, Numeric, Schema, StaggerStream,
                         Sudden, agrawal_next, apply_drift, csv_stream, stagger_next)
from .errors import (ConfigError, CsvFormatError, DegenerateImportanceError, DriftwiseError,
                     SchemaError, WarmupError)
from .importance import (RealizationEnsemble, SmoothedImportance, absolute_error, batch_pfi,
                         batch_pfi_vector, expected_pfi, interval_pfi, ipfi_step,
                         lambda_increment, make_ensemble, normalized_error,
                         pfi_over_permutations, squared_error)
from .learners import (FrozenModel, FrozenOracle, Model, OnlineLogisticRegression,
                       OnlineNaiveBayes, agrawal_oracle, snapshot, stagger_oracle)
from .sampling import (GeometricReservoir, Sampler, UniformFullStore, UniformReservoir,
                       collision_probability, make_sampler, marginal_distribution,
                       marginal_probability, sampler_draw, sampler_update)
from .theory import (BiasStudyConfig, StudyReport, VarianceStudyConfig, agrawal_class_a_rate,
                     agrawal_ground_truth, alpha_to_window, run_bias_study, run_variance_study,
                     static_bias, window_to_alpha)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
