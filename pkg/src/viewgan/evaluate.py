"""Test-time metrics, the singleview baseline, and the repeated-splits runner.

Three test scenarios: score complete pairs as-is, or delete one view and
let the matching generator recomplete it before scoring, which measures how
much class information the completions carry. Items the decide rule marks
Fake are counted as errors; their rate is reported separately.
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass

import numpy as np

from .data import PartitionedDataset, SyntheticSpec, generate_synthetic, split_for_protocol
from .errors import ConfigError
from .model import TripartiteModel, decide_batch, discriminate, generate, new_model
from .nn import DEFAULT_HIDDEN_DIM, SOFTMAX, AdamState, adam_step, backward, forward, init_mlp
from .train import TrainConfig, _clamped_class_grad, train


class Scenario(enum.Enum):
    COMPLETE = "complete"
    VIEW1_GENERATED = "view1-generated"
    VIEW2_GENERATED = "view2-generated"


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    per_class: tuple
    macro_f1: float
    fake_rate: float
    n_test: int
    seed: int


def metrics_from_predictions(true_labels, predicted, fake, num_classes: int,
                             seed: int) -> MetricsReport:
    """Score predictions against labels; Fake predictions are always wrong.

    Builds a K x (K+1) confusion matrix whose last column collects Fake
    calls, so accuracy is exactly the diagonal mass over n_test. Per-class
    precision/recall/F1 use the 0/0 -> 0 convention.
    """
    y = np.asarray(true_labels, dtype=np.int64)
    pred = np.asarray(predicted, dtype=np.int64)
    fake = np.asarray(fake, dtype=bool)
    n = y.shape[0]
    if n < 1:
        raise ConfigError("empty test set")
    if y.shape != pred.shape or y.shape != fake.shape:
        raise ConfigError("labels, predictions, fake mask must share a shape")

    confusion = np.zeros((num_classes, num_classes + 1), dtype=np.int64)
    cols = np.where(fake, num_classes, pred)
    np.add.at(confusion, (y, cols), 1)

    accuracy = float(np.trace(confusion[:, :num_classes])) / n
    per_class = []
    for k in range(num_classes):
        tp = float(confusion[k, k])
        pred_k = float(confusion[:, k].sum())
        true_k = float(confusion[k, :].sum())
        precision = tp / pred_k if pred_k > 0 else 0.0
        recall = tp / true_k if true_k > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        per_class.append(ClassScores(precision, recall, f1))
    macro_f1 = float(np.mean([c.f1 for c in per_class]))
    return MetricsReport(accuracy, tuple(per_class), macro_f1,
                         float(np.mean(fake)), n, seed)


def _require_views(test, need1: bool, need2: bool, scenario: Scenario):
    for ex in test:
        if need1 and ex.view1 is None or need2 and ex.view2 is None:
            raise ValueError(f"scenario {scenario.value} needs a view this example lacks")


def evaluate(model: TripartiteModel, test, scenario: Scenario, seed: int = 0) -> MetricsReport:
    """Apply the decide rule to the test set under the given scenario.

    For the generated scenarios the target view is dropped and recompleted
    with one fresh noise draw per item before scoring.
    """
    if not test:
        raise ConfigError("empty test set")
    rng = np.random.default_rng(seed)
    if scenario == Scenario.COMPLETE:
        _require_views(test, True, True, scenario)
        x1 = np.stack([ex.view1 for ex in test])
        x2 = np.stack([ex.view2 for ex in test])
    elif scenario == Scenario.VIEW1_GENERATED:
        _require_views(test, False, True, scenario)
        x2 = np.stack([ex.view2 for ex in test])
        noise = rng.uniform(-1.0, 1.0, size=(len(test), model.d1))
        x1 = generate(model, 1, x2, noise)
    elif scenario == Scenario.VIEW2_GENERATED:
        _require_views(test, True, False, scenario)
        x1 = np.stack([ex.view1 for ex in test])
        noise = rng.uniform(-1.0, 1.0, size=(len(test), model.d2))
        x2 = generate(model, 2, x1, noise)
    else:
        raise ValueError(f"unknown scenario {scenario!r}")

    fake, cls = decide_batch(discriminate(model, x1, x2))
    y = np.array([int(np.argmax(ex.label)) for ex in test])
    return metrics_from_predictions(y, cls, fake, model.num_classes, seed)


# ---------------------------------------------------------------------------
# Singleview baseline: a plain classifier over one view, trained on every
# example where that view is observed.

def train_singleview_baseline(which_view: int, dataset: PartitionedDataset,
                              config: TrainConfig, test,
                              hidden_dim: int = DEFAULT_HIDDEN_DIM):
    """Train a softmax classifier on view v alone; evaluate by plain argmax.

    Returns (classifier, MetricsReport). The training pool is s_full plus
    the subset whose other view is missing.
    """
    if which_view == 1:
        pool = list(dataset.s_full) + list(dataset.s_missing2)
        dim = dataset.d1
        pick = lambda ex: ex.view1
    elif which_view == 2:
        pool = list(dataset.s_full) + list(dataset.s_missing1)
        dim = dataset.d2
        pick = lambda ex: ex.view2
    else:
        raise ValueError(f"which_view must be 1 or 2, got {which_view}")
    if not pool:
        raise ConfigError(f"no training examples observe view {which_view}")

    x = np.stack([pick(ex) for ex in pool])
    y_idx = np.array([int(np.argmax(ex.label)) for ex in pool])
    k = dataset.num_classes

    rng = np.random.default_rng(config.seed)
    net = init_mlp(dim, hidden_dim, k, SOFTMAX, rng)
    adam = AdamState.for_params(net.params(), config.alpha, config.beta1,
                                config.beta2, config.epsilon)
    m_b = min(config.minibatch_size, len(pool))
    for _ in range(config.iterations):
        idx = rng.integers(0, len(pool), size=m_b)
        trace = forward(net, x[idx])
        _, dlogits = _clamped_class_grad(trace.output, y_idx[idx], 1.0 / m_b)
        grads = backward(net, trace, dlogits)
        adam_step(net.params(), grads.params(), adam)

    x_test = np.stack([pick(ex) for ex in test])
    y_test = np.array([int(np.argmax(ex.label)) for ex in test])
    pred = np.argmax(forward(net, x_test).output, axis=1)
    report = metrics_from_predictions(y_test, pred, np.zeros(len(test), dtype=bool),
                                      k, config.seed)
    return net, report


# ---------------------------------------------------------------------------
# Repeated random splits.

@dataclass
class ExperimentSpec:
    """One experiment: n_repeats independent split/train/evaluate cycles.

    Exactly one data source: a complete-pairs file (pool re-split every
    repeat) or a synthetic spec (fresh draw every repeat). Per-repeat seeds
    are spawned from master_seed so repeats are independent but the whole
    experiment replays bit for bit.
    """

    n_repeats: int
    scenario: Scenario
    train_config: TrainConfig
    m_full: int
    m_missing1: int
    m_missing2: int
    data_pool: list | None = None
    synthetic: SyntheticSpec | None = None
    hidden_dim: int = DEFAULT_HIDDEN_DIM
    include_baselines: bool = True
    master_seed: int = 0

    def __post_init__(self):
        if self.n_repeats < 1:
            raise ConfigError("n_repeats must be at least 1")
        if (self.data_pool is None) == (self.synthetic is None):
            raise ConfigError("exactly one of data_pool and synthetic must be set")


@dataclass(frozen=True)
class RepeatResult:
    repeat: int
    accuracy: float
    macro_f1: float
    fake_rate: float
    baseline1_accuracy: float | None
    baseline2_accuracy: float | None
    bayes_accuracy: float | None


METRIC_FIELDS = ("accuracy", "macro_f1", "fake_rate",
                 "baseline1_accuracy", "baseline2_accuracy", "bayes_accuracy")


@dataclass(frozen=True)
class ExperimentResult:
    rows: tuple
    mean: dict
    std: dict


def _repeat_seeds(master_seed: int, n_repeats: int):
    """Six independent integer seeds per repeat, in a fixed role order."""
    children = np.random.SeedSequence(master_seed).spawn(n_repeats)
    return [[int(s) for s in child.generate_state(6)] for child in children]


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run the repeats and aggregate mean and std per metric column."""
    rows = []
    for r, seeds in enumerate(_repeat_seeds(spec.master_seed, spec.n_repeats)):
        s_data, s_init, s_train, s_eval, s_b1, s_b2 = seeds
        try:
            bayes = None
            if spec.synthetic is not None:
                synth = dataclasses.replace(spec.synthetic, seed=s_data,
                                            m_full=spec.m_full,
                                            m_missing1=spec.m_missing1,
                                            m_missing2=spec.m_missing2)
                dataset, test, bayes = generate_synthetic(synth)
            else:
                dataset, test = split_for_protocol(
                    spec.data_pool, spec.m_full, spec.m_missing1, spec.m_missing2, s_data)
            if not test:
                raise ConfigError("split left no test examples")

            model = new_model(dataset.d1, dataset.d2, dataset.num_classes,
                              np.random.default_rng(s_init), spec.hidden_dim)
            cfg = dataclasses.replace(spec.train_config, seed=s_train)
            train(model, dataset, cfg)
            report = evaluate(model, test, spec.scenario, seed=s_eval)

            b1 = b2 = None
            if spec.include_baselines:
                _, rep1 = train_singleview_baseline(
                    1, dataset, dataclasses.replace(spec.train_config, seed=s_b1),
                    test, spec.hidden_dim)
                _, rep2 = train_singleview_baseline(
                    2, dataset, dataclasses.replace(spec.train_config, seed=s_b2),
                    test, spec.hidden_dim)
                b1, b2 = rep1.accuracy, rep2.accuracy
            rows.append(RepeatResult(r, report.accuracy, report.macro_f1,
                                     report.fake_rate, b1, b2, bayes))
        except Exception as e:
            raise RuntimeError(f"repeat {r} failed: {e}") from e

    mean, std = {}, {}
    for name in METRIC_FIELDS:
        vals = [getattr(row, name) for row in rows]
        if all(v is not None for v in vals):
            arr = np.array(vals, dtype=np.float64)
            mean[name] = float(arr.mean())
            std[name] = float(arr.std())
    return ExperimentResult(tuple(rows), mean, std)


def write_experiment_csv(path, result: ExperimentResult) -> None:
    """Per-repeat rows then mean and std rows; blank cells for absent metrics."""
    def fmt(v):
        return "" if v is None else repr(float(v))

    with open(path, "w", encoding="ascii") as f:
        f.write("repeat," + ",".join(METRIC_FIELDS) + "\n")
        for row in result.rows:
            f.write(str(row.repeat) + ","
                    + ",".join(fmt(getattr(row, name)) for name in METRIC_FIELDS) + "\n")
        for label, agg in (("mean", result.mean), ("std", result.std)):
            f.write(label + ","
                    + ",".join(fmt(agg.get(name)) for name in METRIC_FIELDS) + "\n")
