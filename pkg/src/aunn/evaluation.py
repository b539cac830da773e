"""Majority-vote classification, metrics, data splits, and the
incremental-learning harness.

A "word" instance is a set of overlapped-segment feature vectors sharing
one label; it is classified by voting over per-segment predictions. The
incremental harness keeps one network alive across sessions, trains it on
each session's new rows, and re-evaluates against a fixed test pool after
every session.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .network import AuNetwork, InitConfig, init_network
from .training import TrainConfig, train

__all__ = [
    "METRIC_FIELDS",
    "SegmentSetInstance",
    "FeaturizedTrial",
    "SessionData",
    "SessionDataset",
    "BinaryMetrics",
    "MetricsReport",
    "RunSummary",
    "IncrementalConfig",
    "majority_vote_predict",
    "compute_metrics",
    "kfold_split",
    "session_split",
    "incremental_train_eval",
    "full_dataset_reference",
    "repeat_experiment",
]

METRIC_FIELDS = (
    "train_accuracy",
    "test_accuracy",
    "f1",
    "sensitivity",
    "specificity",
    "balanced",
)


@dataclass
class SegmentSetInstance:
    """One labeled instance decomposed into segment feature rows."""

    instance_id: str
    label: int
    features: np.ndarray      # (n_segments, n_features)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim != 2 or len(self.features) == 0:
            raise DataError(
                f"instance {self.instance_id!r} needs a non-empty segment "
                f"matrix, got shape {self.features.shape}"
            )

    @classmethod
    def from_feature_vectors(cls, instance_id, label, vectors):
        return cls(instance_id, label, np.stack([fv.values for fv in vectors]))


@dataclass
class FeaturizedTrial:
    """A trial reduced to segment feature rows with per-row labels."""

    trial_id: str
    features: np.ndarray      # (n_segments, n_features)
    labels: np.ndarray        # (n_segments,)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.features.ndim != 2 or len(self.features) != len(self.labels):
            raise DataError(
                f"trial {self.trial_id!r} has inconsistent feature/label "
                f"shapes {self.features.shape} vs {self.labels.shape}"
            )


@dataclass
class SessionData:
    session_id: str
    features: np.ndarray
    labels: np.ndarray


@dataclass
class SessionDataset:
    """Ordered train sessions plus one fixed test pool, disjoint at the
    trial level."""

    sessions: list
    test_features: np.ndarray
    test_labels: np.ndarray


@dataclass(frozen=True)
class BinaryMetrics:
    """One-vs-rest confusion-matrix metrics; 0/0 ratios are defined as 0."""

    accuracy: float
    precision: float
    f1: float
    sensitivity: float
    specificity: float
    balanced: float


@dataclass(frozen=True)
class MetricsReport:
    train_accuracy: float
    test_accuracy: float
    f1: float
    sensitivity: float
    specificity: float
    balanced: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in METRIC_FIELDS])


@dataclass
class RunSummary:
    """Per-session, per-metric mean and population std over repeats."""

    n_repeats: int
    mean: np.ndarray          # (n_sessions, len(METRIC_FIELDS))
    std: np.ndarray
    runs: list                # list (repeats) of lists of MetricsReport


@dataclass
class IncrementalConfig:
    epochs_per_session: int = 300
    epochs_full: int = 1200
    learning_rate: float = 0.001
    replay: str = "stream"            # or "cumulative"
    positive_class: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.replay not in ("stream", "cumulative"):
            raise DataError(f"unknown replay mode {self.replay!r}")


def majority_vote_predict(net: AuNetwork, inst: SegmentSetInstance) -> int:
    """Classify every segment and return the modal class; ties go to the
    lowest class index."""
    if len(inst.features) == 0:
        raise DataError(f"instance {inst.instance_id!r} has no segments")
    preds = net.predict_batch(inst.features)
    counts = np.bincount(preds, minlength=net.n_outputs)
    return int(np.argmax(counts))


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def compute_metrics(predicted, actual, positive_class: int) -> BinaryMetrics:
    """Confusion-matrix metrics with ``positive_class`` vs the rest."""
    predicted = np.asarray(predicted)
    actual = np.asarray(actual)
    if predicted.shape != actual.shape or predicted.ndim != 1:
        raise DataError(
            f"prediction/label vectors must match, got {predicted.shape} "
            f"vs {actual.shape}"
        )
    if len(predicted) == 0:
        raise DataError("cannot compute metrics on an empty set")
    pred_pos = predicted == positive_class
    act_pos = actual == positive_class
    tp = float(np.sum(pred_pos & act_pos))
    tn = float(np.sum(~pred_pos & ~act_pos))
    fp = float(np.sum(pred_pos & ~act_pos))
    fn = float(np.sum(~pred_pos & act_pos))
    sensitivity = _ratio(tp, tp + fn)
    specificity = _ratio(tn, tn + fp)
    precision = _ratio(tp, tp + fp)
    f1 = _ratio(2.0 * precision * sensitivity, precision + sensitivity)
    return BinaryMetrics(
        accuracy=_ratio(tp + tn, tp + tn + fp + fn),
        precision=precision,
        f1=f1,
        sensitivity=sensitivity,
        specificity=specificity,
        balanced=(sensitivity + specificity) / 2.0,
    )


def kfold_split(instances, k: int = 5, seed: int = 0) -> list:
    """Shuffle instances by seed and partition into k near-equal folds.

    Whole instances move together, so no instance's segments ever sit on
    both sides of a fold.
    """
    if len(instances) < k:
        raise DataError(f"need at least {k} instances, got {len(instances)}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(instances))
    folds = np.array_split(perm, k)
    splits = []
    for fold in folds:
        in_test = np.zeros(len(instances), dtype=bool)
        in_test[fold] = True
        train_set = [instances[i] for i in perm if not in_test[i]]
        test_set = [instances[i] for i in fold]
        splits.append((train_set, test_set))
    return splits


def session_split(sessions, seed: int = 0) -> SessionDataset:
    """Per session, send half the trials (rounded down) to that session's
    train set and pool the rest into one mixed test set.

    ``sessions`` is an ordered list of (session_id, list of
    FeaturizedTrial); the split is at the trial level.
    """
    rng = np.random.default_rng(seed)
    out_sessions = []
    test_feats = []
    test_labels = []
    for session_id, trials in sessions:
        if len(trials) < 2:
            raise DataError(
                f"session {session_id!r} has {len(trials)} trials; "
                f"need at least 2 to split"
            )
        perm = rng.permutation(len(trials))
        n_train = len(trials) // 2
        train_idx = np.sort(perm[:n_train])
        test_idx = np.sort(perm[n_train:])
        feats = np.concatenate([trials[i].features for i in train_idx])
        labels = np.concatenate([trials[i].labels for i in train_idx])
        out_sessions.append(SessionData(session_id, feats, labels))
        for i in test_idx:
            test_feats.append(trials[i].features)
            test_labels.append(trials[i].labels)
    return SessionDataset(
        sessions=out_sessions,
        test_features=np.concatenate(test_feats),
        test_labels=np.concatenate(test_labels),
    )


def _evaluate(net, data: SessionDataset, seen_feats, seen_labels,
              positive_class: int) -> MetricsReport:
    test_preds = net.predict_batch(data.test_features)
    bm = compute_metrics(test_preds, data.test_labels, positive_class)
    train_preds = net.predict_batch(seen_feats)
    train_acc = float(np.mean(train_preds == seen_labels))
    return MetricsReport(
        train_accuracy=train_acc,
        test_accuracy=bm.accuracy,
        f1=bm.f1,
        sensitivity=bm.sensitivity,
        specificity=bm.specificity,
        balanced=bm.balanced,
    )


def incremental_train_eval(layer_specs, init: InitConfig,
                           data: SessionDataset,
                           cfg: IncrementalConfig) -> list:
    """Train one persistent network session by session.

    Each session trains on only its own new rows ("stream") or on the
    union seen so far ("cumulative"). After every session the model is
    scored on the full, unchanged test set; train accuracy is always
    reported on the union of sessions seen so far. MF spans come from the
    first session (all that exists when the stream starts).
    """
    if not data.sessions:
        raise DataError("need at least one session")
    for s in data.sessions:
        if len(s.features) == 0:
            raise DataError(f"session {s.session_id!r} is empty")
    first = data.sessions[0]
    net = init_network(first.features.shape[1], layer_specs, init,
                       training_data=first.features)
    reports = []
    seen_feats = np.empty((0, first.features.shape[1]))
    seen_labels = np.empty((0,), dtype=int)
    for session in data.sessions:
        seen_feats = np.concatenate([seen_feats, session.features])
        seen_labels = np.concatenate([seen_labels, session.labels])
        if cfg.replay == "cumulative":
            fit_feats, fit_labels = seen_feats, seen_labels
        else:
            fit_feats, fit_labels = session.features, session.labels
        train(net, fit_feats, fit_labels,
              TrainConfig(schedule=((cfg.learning_rate, cfg.epochs_per_session),),
                          seed=cfg.seed))
        reports.append(_evaluate(net, data, seen_feats, seen_labels,
                                 cfg.positive_class))
    return reports


def full_dataset_reference(layer_specs, init: InitConfig,
                           data: SessionDataset,
                           cfg: IncrementalConfig) -> MetricsReport:
    """Train a fresh identical architecture on all sessions pooled and
    score it on the same test set; the ceiling the incremental model is
    compared against."""
    if not data.sessions:
        raise DataError("need at least one session")
    feats = np.concatenate([s.features for s in data.sessions])
    labels = np.concatenate([s.labels for s in data.sessions])
    if len(feats) == 0:
        raise DataError("pooled training set is empty")
    net = init_network(feats.shape[1], layer_specs, init, training_data=feats)
    train(net, feats, labels,
          TrainConfig(schedule=((cfg.learning_rate, cfg.epochs_full),),
                      seed=cfg.seed))
    return _evaluate(net, data, feats, labels, cfg.positive_class)


def repeat_experiment(experiment, n_repeats: int = 10,
                      base_seed: int = 0) -> RunSummary:
    """Run ``experiment(seed)`` for consecutive seeds and summarize.

    The experiment returns a list of MetricsReport (one per session; a
    single-report experiment may return a one-element list). Mean and
    population standard deviation are taken over the repeats.
    """
    if n_repeats < 1:
        raise DataError(f"n_repeats must be >= 1, got {n_repeats}")
    runs = []
    for r in range(n_repeats):
        result = experiment(base_seed + r)
        if isinstance(result, MetricsReport):
            result = [result]
        runs.append(list(result))
    lengths = {len(run) for run in runs}
    if len(lengths) != 1:
        raise DataError(f"repeats returned differing session counts: {lengths}")
    table = np.array([[rep.as_array() for rep in run] for run in runs])
    return RunSummary(
        n_repeats=n_repeats,
        mean=table.mean(axis=0),
        std=table.std(axis=0),
        runs=runs,
    )
