"""Experiment runners: static approximation (A), online drift reaction (B),
sampler comparison (C), and the theory studies, plus report writing.

All runners are deterministic functions of (config, seed): every random
object derives its state from the run seed and a fixed role key, never from
instantiation order.  Reports carry long-format rows
``(t, feature, estimator, realization, value)`` with estimator names
``ipfi_uniform``, ``ipfi_geometric``, ``interval_pfi`` and ``batch_pfi``.
"""

from __future__ import annotations

import json
from collections import Counter, deque
from dataclasses import dataclass, field
from itertools import islice
from pathlib import Path

import numpy as np

from .config import (RunConfig, SEED_BATCH, SEED_DRIFT, SEED_ENSEMBLE, SEED_INTERVAL,
                     SEED_SHUFFLE, child_seed, sampler_seed_key)
from .datastream import DriftSpec, FeatureSwap, FunctionSwitch, Instance, apply_drift
from .errors import ConfigError
from .importance import (batch_pfi_vector, make_ensemble, normalized_error)
from .learners import snapshot
from .theory import BiasStudyConfig, StudyReport, VarianceStudyConfig, run_bias_study, \
    run_variance_study

ESTIMATOR_LABELS = {
    "uniform": "ipfi_uniform",
    "uniform_full": "ipfi_uniform",
    "uniform_reservoir": "ipfi_uniform",
    "geometric": "ipfi_geometric",
}


def estimator_label(sampler_kind: str) -> str:
    return ESTIMATOR_LABELS[sampler_kind]


@dataclass
class ExperimentReport:
    experiment: str
    feature_names: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    accuracy: list[tuple[int, float]] | None = None
    series: dict = field(default_factory=dict)  # label -> (times, matrix), for plots/metrics
    study: StudyReport | None = None
    config: dict = field(default_factory=dict)
    drift_position: int | None = None


# --------------------------------------------------------------------------
# shared pieces
# --------------------------------------------------------------------------


def _seed_int(seq: np.random.SeedSequence) -> int:
    return int(seq.generate_state(1)[0])


def _take(stream, n: int) -> list[Instance]:
    return list(islice(iter(stream), n))


def _build_drifted_stream(config: RunConfig):
    base = config.build_stream()
    spec = config.build_drift_spec()
    if spec is None:
        return base, None
    drifted = apply_drift(base, spec, _seed_int(child_seed(config.seed, SEED_DRIFT)))
    return drifted, spec


def _vector_rows(t: int, names, estimator: str, realization: str, vector) -> list[tuple]:
    return [(t, names[j], estimator, realization, float(vector[j])) for j in range(len(names))]


def _quartiles(values) -> dict:
    values = np.asarray(values, dtype=float)
    q1, q2, q3 = (float(np.percentile(values, q)) for q in (25, 50, 75))
    return {"median": q2, "iqr": q3 - q1, "q1": q1, "q3": q3, "values": values.tolist()}


def _accuracy_update(window: deque, prediction: float, target: float, binary: bool) -> float:
    if binary:
        window.append(1.0 if (prediction >= 0.5) == (target >= 0.5) else 0.0)
    else:
        window.append(abs(prediction - target))
    return float(np.mean(window))


# --------------------------------------------------------------------------
# experiment A: static approximation quality
# --------------------------------------------------------------------------


def run_experiment_a(config: RunConfig) -> ExperimentReport:
    """Explain a static model over reshuffled replays of one dataset and score
    the streaming estimates against the batch permutation reference."""
    config.validate()
    if config.drift is not None:
        raise ConfigError("experiment A is static; remove the drift spec")
    stream = config.build_stream()
    schema = stream.schema
    names = schema.names
    loss = config.loss_fn()
    instances = _take(stream, config.stream_length)
    if len(instances) < 2:
        raise ConfigError(f"need at least 2 observations, got {len(instances)}")

    model = config.build_model(schema)
    if config.model.get("kind") != "frozen_oracle":
        for inst in instances:  # pre-train, then freeze
            model.learn_one(inst.features, inst.target)
        model = snapshot(model)

    batch_rng = np.random.default_rng(child_seed(config.seed, SEED_BATCH))
    reference = batch_pfi_vector(model, instances, config.interval_permutations, batch_rng, loss)

    report = ExperimentReport("A", names, config=config.to_dict())
    t_final = instances[-1].timestamp
    report.rows.extend(_vector_rows(t_final, names, "batch_pfi", "ref", reference))
    report.series["batch_pfi"] = ([t_final], reference[None, :])

    errors: dict[str, list[float]] = {}
    finals: dict[str, list[np.ndarray]] = {}
    for k in range(config.shuffles):
        order = np.random.default_rng(child_seed(config.seed, SEED_SHUFFLE, k)).permutation(
            len(instances))
        shuffled = [Instance(instances[i].features, instances[i].target, pos)
                    for pos, i in enumerate(order)]
        for kind in config.samplers:
            label = estimator_label(kind)
            ensemble = make_ensemble(
                schema, config.alpha, config.realizations, kind, config.reservoir_size,
                seed=child_seed(config.seed, SEED_ENSEMBLE, sampler_seed_key(kind), k))
            for inst in shuffled:
                if ensemble.warm:
                    ensemble.step(model, inst, loss)
                else:
                    ensemble.observe(inst)
            final = ensemble.value()
            errors.setdefault(label, []).append(normalized_error(final, reference))
            finals.setdefault(label, []).append(final)
            report.rows.extend(
                _vector_rows(t_final, names, label, f"shuffle{k:02d}", final))

    for label, errs in errors.items():
        report.summary[label] = _quartiles(errs)
        report.series[label] = (list(range(len(finals[label]))), np.stack(finals[label]))
    return report


# --------------------------------------------------------------------------
# experiments B and C: prequential online runs
# --------------------------------------------------------------------------


def _prequential_run(config: RunConfig, sampler_kinds: list[str]) -> ExperimentReport:
    """Shared loop: explain each arriving observation with every requested
    estimator, then let the model learn it, with a tumbling-window batch
    baseline recomputed at interval boundaries."""
    stream, spec = _build_drifted_stream(config)
    schema = stream.schema
    names = schema.names
    binary = schema.target_kind == "binary"
    loss = config.loss_fn()
    model = config.build_model(schema)

    ensembles = {}
    for kind in sampler_kinds:
        label = estimator_label(kind)
        if label in ensembles:
            raise ConfigError(f"samplers {sampler_kinds} map to the same estimator label")
        ensembles[label] = make_ensemble(
            schema, config.alpha, config.realizations, kind, config.reservoir_size,
            seed=child_seed(config.seed, SEED_ENSEMBLE, sampler_seed_key(kind)))

    interval_rng = np.random.default_rng(child_seed(config.seed, SEED_INTERVAL))
    report = ExperimentReport(config.experiment, names, config=config.to_dict(),
                              drift_position=None if spec is None else spec.position)
    report.accuracy = []

    ipfi_times: dict[str, list[int]] = {label: [] for label in ensembles}
    ipfi_vectors: dict[str, list[np.ndarray]] = {label: [] for label in ensembles}
    interval_times: list[int] = []
    interval_vectors: list[np.ndarray] = []

    window: deque[Instance] = deque(maxlen=config.interval)
    acc_window: deque = deque(maxlen=1000)

    for step, inst in enumerate(islice(iter(stream), config.stream_length)):
        for label, ensemble in ensembles.items():
            if ensemble.warm:
                vec = ensemble.step(model, inst, loss)
                ipfi_times[label].append(inst.timestamp)
                ipfi_vectors[label].append(vec)
                if step % config.report_every == 0:
                    report.rows.extend(_vector_rows(inst.timestamp, names, label, "mean", vec))
            else:
                ensemble.observe(inst)
        rolled = _accuracy_update(acc_window, model.predict(inst.features), inst.target, binary)
        if step % config.report_every == 0:
            report.accuracy.append((inst.timestamp, rolled))
        model.learn_one(inst.features, inst.target)
        window.append(inst)
        if (step + 1) % config.interval == 0 and len(window) == config.interval:
            frozen = snapshot(model)
            vec = batch_pfi_vector(frozen, list(window), config.interval_permutations,
                                   interval_rng, loss)
            interval_times.append(inst.timestamp)
            interval_vectors.append(vec)
            report.rows.extend(_vector_rows(inst.timestamp, names, "interval_pfi", "ref", vec))

    for label in ensembles:
        report.series[label] = (ipfi_times[label], np.stack(ipfi_vectors[label])
                                if ipfi_vectors[label] else np.empty((0, len(names))))
    report.series["interval_pfi"] = (interval_times,
                                     np.stack(interval_vectors) if interval_vectors
                                     else np.empty((0, len(names))))
    return report


def first_crossing(times, matrix, idx_in: int, idx_out: int, start: int):
    """First reported time >= start where the incoming feature's importance
    exceeds the outgoing one's; None if it never does."""
    for t, vec in zip(times, matrix):
        if t >= start and vec[idx_in] > vec[idx_out]:
            return int(t)
    return None


def rank1_stability(times, matrix, start: int):
    """Modal top feature from ``start`` on, and the longest contiguous stretch
    of reports whose top feature differs from the mode."""
    ranked = [(t, int(np.argmax(vec))) for t, vec in zip(times, matrix) if t >= start]
    if not ranked:
        return None, 0
    modal = Counter(j for _, j in ranked).most_common(1)[0][0]
    longest = current = 0
    for _, j in ranked:
        current = current + 1 if j != modal else 0
        longest = max(longest, current)
    return modal, longest


def _reaction_summary(report: ExperimentReport, spec: DriftSpec | None, label: str,
                      names) -> dict:
    times, matrix = report.series[label]
    summary: dict = {}
    if spec is None:
        modal, longest = rank1_stability(times, matrix, start=(times[-1] + times[0]) // 2
                                         if times else 0)
        summary["rank1_modal_second_half"] = None if modal is None else names[modal]
        summary["rank1_longest_divergence"] = longest
        return summary
    position = spec.position
    pre = [vec for t, vec in zip(times, matrix) if t < position]
    if pre:
        summary["rank1_pre_drift"] = names[int(np.argmax(pre[-1]))]
    if isinstance(spec.kind, FeatureSwap):
        reactions = {}
        for a, b in spec.kind.pairs:
            if pre:
                out_idx, in_idx = (a, b) if pre[-1][a] >= pre[-1][b] else (b, a)
            else:
                out_idx, in_idx = a, b
            crossing = first_crossing(times, matrix, in_idx, out_idx, position)
            reactions[f"{names[out_idx]}->{names[in_idx]}"] = {
                "swapped_out": names[out_idx],
                "swapped_in": names[in_idx],
                "crossing_time": crossing,
                "crossing_delay": None if crossing is None else crossing - position,
            }
        summary["reaction"] = reactions
    elif isinstance(spec.kind, FunctionSwitch) and pre:
        rank1_pre = int(np.argmax(pre[-1]))
        change = None
        for t, vec in zip(times, matrix):
            if t >= position and int(np.argmax(vec)) != rank1_pre:
                change = int(t)
                break
        summary["rank1_change_time"] = change
        summary["rank1_change_delay"] = None if change is None else change - position
    post = [vec for t, vec in zip(times, matrix) if t >= position]
    if post:
        summary["rank1_final"] = names[int(np.argmax(post[-1]))]
    return summary


def run_experiment_b(config: RunConfig) -> ExperimentReport:
    """Prequential online run of a single streaming estimator with the
    tumbling-window baseline; summarizes how the importance ranking reacts to
    the configured drift."""
    config.validate()
    report = _prequential_run(config, [config.sampler])
    spec = config.build_drift_spec()
    label = estimator_label(config.sampler)
    report.summary[label] = _reaction_summary(report, spec, label, report.feature_names)
    return report


def run_experiment_c(config: RunConfig) -> ExperimentReport:
    """Run two sampling strategies side by side on an identical drifted stream
    and score each against the tumbling-window baseline before and after the
    drift point."""
    config.validate()
    report = _prequential_run(config, list(config.samplers))
    spec = config.build_drift_spec()
    position = spec.position
    interval_times, interval_matrix = report.series["interval_pfi"]
    for kind in config.samplers:
        label = estimator_label(kind)
        times, matrix = report.series[label]
        by_time = {t: vec for t, vec in zip(times, matrix)}
        pre, post = [], []
        for t, ref_vec in zip(interval_times, interval_matrix):
            if t not in by_time:
                continue  # boundary fell inside the estimator's warm-up
            err = normalized_error(by_time[t], ref_vec)
            (pre if t < position else post).append(err)
        entry: dict = {}
        if pre:
            entry["pre_drift"] = _quartiles(pre)
        if post:
            entry["post_drift"] = _quartiles(post)
        entry.update(_reaction_summary(report, spec, label, report.feature_names))
        report.summary[label] = entry
    medians = {estimator_label(kind): report.summary[estimator_label(kind)]
               .get("post_drift", {}).get("median") for kind in config.samplers}
    if all(v is not None for v in medians.values()):
        report.summary["post_drift_winner"] = min(medians, key=medians.get)
    return report


# --------------------------------------------------------------------------
# theory studies
# --------------------------------------------------------------------------


def run_theory(config: RunConfig) -> ExperimentReport:
    config.validate()
    params = dict(config.study)
    params.setdefault("seed", config.seed)
    for key in ("alphas", "reservoir_sizes", "checkpoints"):
        if key in params:
            params[key] = tuple(params[key])
    if config.experiment == "theory-bias":
        study = run_bias_study(BiasStudyConfig(**params))
    elif config.experiment == "theory-variance":
        study = run_variance_study(VarianceStudyConfig(**params))
    else:
        raise ConfigError(f"not a theory experiment: {config.experiment}")
    report = ExperimentReport(config.experiment, feature_names=(), config=config.to_dict())
    report.study = study
    report.summary = study.summary
    return report


def run(config: RunConfig) -> ExperimentReport:
    config.validate()
    if config.experiment == "A":
        return run_experiment_a(config)
    if config.experiment == "B":
        return run_experiment_b(config)
    if config.experiment == "C":
        return run_experiment_c(config)
    return run_theory(config)


# --------------------------------------------------------------------------
# output writing
# --------------------------------------------------------------------------


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return value


def write_importance_csv(path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("t,feature,estimator,realization,value\n")
        for t, feature, estimator, realization, value in rows:
            fh.write(f"{t},{feature},{estimator},{realization},{value!r}\n")


def write_outputs(report: ExperimentReport, outdir) -> list[Path]:
    """Write the delimited reports, the JSON summary, and the figures."""
    from . import plots  # deferred so headless library use never touches matplotlib

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    summary_path = outdir / "summary.json"
    payload = {"experiment": report.experiment, "summary": _jsonable(report.summary),
               "config": _jsonable(report.config)}
    summary_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                            encoding="utf-8")
    written.append(summary_path)

    if report.study is not None:
        study_path = outdir / "study.csv"
        report.study.to_csv(study_path)
        written.append(study_path)
        figure = outdir / ("bias_curve.png" if report.experiment == "theory-bias"
                           else "variance_curve.png")
        if report.experiment == "theory-bias":
            plots.plot_bias_study(report.study, figure)
        else:
            plots.plot_variance_study(report.study, figure)
        written.append(figure)
        return written

    csv_path = outdir / "importance.csv"
    write_importance_csv(csv_path, report.rows)
    written.append(csv_path)

    if report.accuracy is not None:
        acc_path = outdir / "accuracy.csv"
        with open(acc_path, "w", newline="", encoding="utf-8") as fh:
            fh.write("t,rolling_accuracy\n")
            for t, value in report.accuracy:
                fh.write(f"{t},{value!r}\n")
        written.append(acc_path)

    if report.experiment == "A":
        figure = outdir / "importance_by_feature.png"
        plots.plot_final_importance(report, figure)
    else:
        figure = outdir / "importance_series.png"
        plots.plot_importance_series(report, figure)
    written.append(figure)
    return written
