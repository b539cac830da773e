"""Command-line entry points.

Commands: ``features`` (raw trials -> feature dataset), ``train``,
``word-experiment`` (k-fold majority vote), ``incremental-experiment``
(session-wise stream with repeats), and ``gradcheck``. Every command takes
``--config`` plus ``--seed`` / ``--out`` overrides and is deterministic
for fixed inputs. Exit codes: 0 success, 1 usage or config error, 2 data
error, 3 gradcheck failure.
"""

import argparse
import os
import sys

import numpy as np

from .config import ExperimentConfig, load_config
from .errors import AuNnError, ConfigError, DataError
from .evaluation import (
    METRIC_FIELDS,
    FeaturizedTrial,
    SegmentSetInstance,
    full_dataset_reference,
    incremental_train_eval,
    kfold_split,
    majority_vote_predict,
    repeat_experiment,
    session_split,
)
from .features import featurize_trial, parse_trial_file
from .fileio import atomic_write_text, fmt_float
from .model_io import save_network
from .network import init_network
from .training import gradcheck_sweep, train

GRADCHECK_TOLERANCE = 1e-4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aunn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, needs_config=True):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=needs_config,
                       help="experiment config file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", default=None,
                       help="override the config output path")
        return p

    add("features", "extract wavelet-energy features from a trial directory")
    add("train", "train one network on a feature dataset")
    add("word-experiment", "k-fold majority-vote classification")
    add("incremental-experiment", "session-wise incremental learning")
    g = add("gradcheck", "finite-difference check of the gradients",
            needs_config=False)
    g.add_argument("--seeds", type=int, default=20,
                   help="number of random networks to sweep")
    g.add_argument("--step", type=float, default=1e-5,
                   help="central-difference step")
    g.add_argument("--corrupt", action="store_true",
                   help="self-test hook: corrupt one gradient and expect FAIL")
    return parser


def _effective_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.results_out = args.out
    return cfg


def _require(value, name):
    if not value:
        raise ConfigError(f"{name} must be set (config [paths] or --out)")
    return value


def _out_dir(cfg) -> str:
    out = _require(cfg.results_out, "results_out")
    os.makedirs(out, exist_ok=True)
    return out


# ---------------------------------------------------------------- datasets

FEATURE_KEY_COLS = ("instance_id", "session_id", "trial_id", "label")


def write_feature_dataset(path, rows) -> None:
    """rows: iterable of (instance_id, session_id, trial_id, label, values)."""
    first = rows[0]
    n_feat = len(first[4])
    header = ",".join(FEATURE_KEY_COLS + tuple(f"f{i + 1}" for i in range(n_feat)))
    lines = [header]
    for inst, sess, trial, label, values in rows:
        if len(values) != n_feat:
            raise DataError("inconsistent feature lengths across rows")
        lines.append(",".join([inst, sess, trial, str(int(label))]
                              + [fmt_float(v) for v in values]))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_feature_dataset(path):
    """Parse a feature dataset file into id lists plus label/feature arrays."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from None
    if not lines:
        raise DataError(f"{path}: empty dataset file")
    header = lines[0].split(",")
    if tuple(header[:4]) != FEATURE_KEY_COLS:
        raise DataError(f"{path}:1: unexpected header {lines[0]!r}")
    n_feat = len(header) - 4
    inst, sess, trial, labels, feats = [], [], [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4 + n_feat:
            raise DataError(
                f"{path}:{lineno}: expected {4 + n_feat} columns, got {len(parts)}"
            )
        try:
            labels.append(int(parts[3]))
            feats.append([float(p) for p in parts[4:]])
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from None
        inst.append(parts[0])
        sess.append(parts[1])
        trial.append(parts[2])
    if not feats:
        raise DataError(f"{path}: dataset has no rows")
    return {
        "instance_id": inst,
        "session_id": sess,
        "trial_id": trial,
        "labels": np.array(labels, dtype=int),
        "features": np.array(feats, dtype=float),
    }


def _check_contiguous_labels(labels) -> int:
    classes = np.unique(labels)
    n = len(classes)
    if classes.min() != 0 or classes.max() != n - 1:
        raise DataError(
            f"labels must be contiguous from 0, got classes {classes.tolist()}"
        )
    return n


def _natural_key(s: str):
    return (0, int(s)) if s.isdigit() else (1, s)


# ---------------------------------------------------------------- commands

def cmd_features(cfg: ExperimentConfig) -> int:
    src = _require(cfg.data_in, "data_in")
    out = _require(cfg.results_out, "results_out")
    try:
        names = sorted(
            n for n in os.listdir(src)
            if os.path.isfile(os.path.join(src, n))
        )
    except OSError as exc:
        raise DataError(f"cannot list trial directory {src}: {exc}") from None
    if not names:
        raise DataError(f"no trial files in {src}")

    rows = []
    n_channels = None
    for name in names:
        trial = parse_trial_file(os.path.join(src, name))
        if n_channels is None:
            n_channels = trial.n_channels
        elif trial.n_channels != n_channels:
            raise DataError(
                f"{name}: {trial.n_channels} channels, expected {n_channels}"
            )
        vectors = featurize_trial(trial, cfg.window_s, cfg.step_s,
                                  cfg.levels, cfg.log_energy)
        inst_id = f"{trial.subject_id}-{trial.session_id}-{trial.trial_id}"
        for fv in vectors:
            rows.append((inst_id, trial.session_id, trial.trial_id,
                         trial.label, fv.values))
    write_feature_dataset(out, rows)
    print(f"wrote {len(rows)} segment rows from {len(names)} trials to {out}")
    return 0


def cmd_train(cfg: ExperimentConfig) -> int:
    ds = read_feature_dataset(_require(cfg.data_in, "data_in"))
    n_classes = _check_contiguous_labels(ds["labels"])
    arch = cfg.architecture()
    if arch[-1].n_units != n_classes:
        raise ConfigError(
            f"last layer has {arch[-1].n_units} units but the dataset has "
            f"{n_classes} classes"
        )
    out = _out_dir(cfg)
    net = init_network(ds["features"].shape[1], arch, cfg.init_config(),
                       training_data=ds["features"])
    net, history = train(net, ds["features"], ds["labels"], cfg.train_config())
    save_network(net, os.path.join(out, "model.txt"))
    hist_lines = ["epoch,loss,train_accuracy"]
    hist_lines += [
        f"{i},{fmt_float(h.loss)},{fmt_float(h.train_accuracy)}"
        for i, h in enumerate(history)
    ]
    atomic_write_text(os.path.join(out, "history.csv"),
                      "\n".join(hist_lines) + "\n")
    final_acc = history[-1].train_accuracy if history else float("nan")
    print(f"final train accuracy {fmt_float(final_acc)}")
    return 0


def _group_instances(ds) -> list:
    order = []
    by_id = {}
    for idx, inst_id in enumerate(ds["instance_id"]):
        if inst_id not in by_id:
            by_id[inst_id] = []
            order.append(inst_id)
        by_id[inst_id].append(idx)
    instances = []
    for inst_id in order:
        idxs = by_id[inst_id]
        labels = set(ds["labels"][idxs].tolist())
        if len(labels) != 1:
            raise DataError(
                f"instance {inst_id!r} mixes labels {sorted(labels)}"
            )
        instances.append(
            SegmentSetInstance(inst_id, labels.pop(), ds["features"][idxs])
        )
    return instances


def cmd_word_experiment(cfg: ExperimentConfig) -> int:
    ds = read_feature_dataset(_require(cfg.data_in, "data_in"))
    n_classes = _check_contiguous_labels(ds["labels"])
    arch = cfg.architecture()
    if arch[-1].n_units != n_classes:
        raise ConfigError(
            f"last layer has {arch[-1].n_units} units but the dataset has "
            f"{n_classes} classes"
        )
    out = _out_dir(cfg)
    instances = _group_instances(ds)
    accs = []
    for fold, (train_set, test_set) in enumerate(
        kfold_split(instances, cfg.k_folds, cfg.seed)
    ):
        X = np.concatenate([inst.features for inst in train_set])
        y = np.concatenate(
            [np.full(len(inst.features), inst.label) for inst in train_set]
        )
        seed = cfg.seed + fold
        net = init_network(X.shape[1], arch, cfg.init_config(seed),
                           training_data=X)
        train(net, X, y, cfg.train_config(seed))
        hits = sum(
            majority_vote_predict(net, inst) == inst.label for inst in test_set
        )
        accs.append(hits / len(test_set))
    mean = float(np.mean(accs))
    std = float(np.std(accs))
    lines = ["fold,accuracy,std"]
    lines += [f"{i},{fmt_float(a)},{fmt_float(0.0)}" for i, a in enumerate(accs)]
    lines.append(f"mean,{fmt_float(mean)},{fmt_float(std)}")
    atomic_write_text(os.path.join(out, "word_experiment.csv"),
                      "\n".join(lines) + "\n")
    print(f"majority-vote accuracy mean {fmt_float(mean)} std {fmt_float(std)} "
          f"over {cfg.k_folds} folds")
    return 0


def _group_sessions(ds) -> list:
    if any(not s for s in ds["session_id"]):
        raise DataError("dataset rows are missing session tags")
    session_ids = sorted(set(ds["session_id"]), key=_natural_key)
    sessions = []
    for sid in session_ids:
        rows = [i for i, s in enumerate(ds["session_id"]) if s == sid]
        trial_ids = sorted({ds["trial_id"][i] for i in rows}, key=_natural_key)
        trials = []
        for tid in trial_ids:
            idxs = [i for i in rows if ds["trial_id"][i] == tid]
            trials.append(
                FeaturizedTrial(tid, ds["features"][idxs], ds["labels"][idxs])
            )
        sessions.append((sid, trials))
    return sessions


def _write_runs(path, summary, session_ids) -> None:
    lines = ["repeat,session," + ",".join(METRIC_FIELDS)]
    for r, run in enumerate(summary.runs):
        for s, report in enumerate(run):
            vals = ",".join(fmt_float(v) for v in report.as_array())
            lines.append(f"{r},{session_ids[s]},{vals}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def _write_summary(path, summary, session_ids) -> None:
    cols = [f"{m}_{stat}" for m in METRIC_FIELDS for stat in ("mean", "std")]
    lines = ["session," + ",".join(cols)]
    for s, sid in enumerate(session_ids):
        vals = []
        for m in range(len(METRIC_FIELDS)):
            vals.append(fmt_float(summary.mean[s, m]))
            vals.append(fmt_float(summary.std[s, m]))
        lines.append(f"{sid}," + ",".join(vals))
    atomic_write_text(path, "\n".join(lines) + "\n")


def cmd_incremental_experiment(cfg: ExperimentConfig) -> int:
    ds = read_feature_dataset(_require(cfg.data_in, "data_in"))
    _check_contiguous_labels(ds["labels"])
    out = _out_dir(cfg)
    sessions = _group_sessions(ds)
    arch = cfg.architecture()

    def run_incremental(seed):
        split = session_split(sessions, seed)
        return incremental_train_eval(arch, cfg.init_config(seed), split,
                                      cfg.incremental_config(seed))

    def run_reference(seed):
        split = session_split(sessions, seed)
        return [full_dataset_reference(arch, cfg.init_config(seed), split,
                                       cfg.incremental_config(seed))]

    inc = repeat_experiment(run_incremental, cfg.n_repeats, cfg.seed)
    ref = repeat_experiment(run_reference, cfg.n_repeats, cfg.seed)

    session_ids = [sid for sid, _ in sessions]
    _write_runs(os.path.join(out, "incremental_runs.csv"), inc, session_ids)
    _write_summary(os.path.join(out, "incremental_summary.csv"), inc, session_ids)
    _write_runs(os.path.join(out, "reference_runs.csv"), ref, ["all"])
    _write_summary(os.path.join(out, "reference_summary.csv"), ref, ["all"])
    final = inc.mean[-1, METRIC_FIELDS.index("test_accuracy")]
    print(f"incremental mean test accuracy after last session "
          f"{fmt_float(final)} over {cfg.n_repeats} repeats")
    return 0


def cmd_gradcheck(cfg: ExperimentConfig, args) -> int:
    err = gradcheck_sweep(n_seeds=args.seeds, step=args.step,
                          base_seed=cfg.seed, corrupt=args.corrupt)
    ok = np.isfinite(err) and err < GRADCHECK_TOLERANCE
    print(f"gradcheck max relative error {err:.6e} over {args.seeds} seeds: "
          f"{'PASS' if ok else 'FAIL'}")
    return 0 if ok else 3


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _effective_config(args)
        if args.command == "features":
            return cmd_features(cfg)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "word-experiment":
            return cmd_word_experiment(cfg)
        if args.command == "incremental-experiment":
            return cmd_incremental_experiment(cfg)
        if args.command == "gradcheck":
            return cmd_gradcheck(cfg, args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except AuNnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
