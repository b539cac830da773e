"""Experiment configuration: a flat key = value file with section headers.

The format is INI (stdlib configparser); every value round-trips exactly
through serialize/parse, including floats (written with repr).
"""

import configparser
from dataclasses import dataclass

from .errors import ConfigError
from .network import InitConfig, LayerSpec
from .training import TrainConfig
from .evaluation import IncrementalConfig

__all__ = ["ExperimentConfig", "parse_config", "serialize_config",
           "load_config", "save_config"]

TASKS = ("word_classification", "incremental_iws_iss")


@dataclass
class ExperimentConfig:
    # experiment
    task: str = "word_classification"
    seed: int = 0
    # network
    layers: tuple = (5,)
    n_mfs: int = 5
    mf_span: str = "data_range"
    consequent_scale: float = 0.1
    # training (word task / cmd_train)
    schedule: tuple = ((0.03, 500), (0.01, 500), (0.003, 500))
    batch_mode: str = "full_batch"
    batch_size: int = 32
    k_folds: int = 5
    # incremental task
    epochs_per_session: int = 300
    epochs_full: int = 1200
    learning_rate: float = 0.001
    n_repeats: int = 10
    replay: str = "stream"
    positive_class: int = 1
    # features
    window_s: float = 0.5
    step_s: float = 0.1
    levels: int = 4
    log_energy: bool = False
    # paths
    data_in: str = ""
    results_out: str = ""

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; expected one of {TASKS}")
        self.layers = tuple(int(u) for u in self.layers)
        self.schedule = tuple((float(lr), int(ep)) for lr, ep in self.schedule)
        if not self.layers:
            raise ConfigError("layers must name at least one layer width")
        if self.n_mfs < 1:
            raise ConfigError(f"n_mfs must be >= 1, got {self.n_mfs}")

    def architecture(self):
        return [LayerSpec(u, self.n_mfs) for u in self.layers]

    def init_config(self, seed=None) -> InitConfig:
        return InitConfig(
            seed=self.seed if seed is None else seed,
            mf_span_source=self.mf_span,
            consequent_scale=self.consequent_scale,
        )

    def train_config(self, seed=None) -> TrainConfig:
        return TrainConfig(
            schedule=self.schedule,
            batch_mode=self.batch_mode,
            batch_size=self.batch_size,
            seed=self.seed if seed is None else seed,
        )

    def incremental_config(self, seed=None) -> IncrementalConfig:
        return IncrementalConfig(
            epochs_per_session=self.epochs_per_session,
            epochs_full=self.epochs_full,
            learning_rate=self.learning_rate,
            replay=self.replay,
            positive_class=self.positive_class,
            seed=self.seed if seed is None else seed,
        )


_SECTIONS = {
    "experiment": ("task", "seed"),
    "network": ("layers", "n_mfs", "mf_span", "consequent_scale"),
    "training": ("schedule", "batch_mode", "batch_size", "k_folds"),
    "incremental": ("epochs_per_session", "epochs_full", "learning_rate",
                    "n_repeats", "replay", "positive_class"),
    "features": ("window_s", "step_s", "levels", "log_energy"),
    "paths": ("data_in", "results_out"),
}


def _format_value(name, value) -> str:
    if name == "layers":
        return ",".join(str(u) for u in value)
    if name == "schedule":
        return ",".join(f"{repr(lr)}:{ep}" for lr, ep in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_value(name, text, target_type):
    text = text.strip()
    try:
        if name == "layers":
            return tuple(int(p) for p in text.split(",") if p.strip())
        if name == "schedule":
            stages = []
            for part in text.split(","):
                lr, _, ep = part.partition(":")
                stages.append((float(lr), int(ep)))
            return tuple(stages)
        if target_type is bool:
            if text.lower() in ("true", "1", "yes", "on"):
                return True
            if text.lower() in ("false", "0", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {text!r}")
        return target_type(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {exc}") from None


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = []
    for section, names in _SECTIONS.items():
        lines.append(f"[{section}]")
        for name in names:
            lines.append(f"{name} = {_format_value(name, getattr(cfg, name))}")
        lines.append("")
    return "\n".join(lines)


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse failure: {exc}") from None

    defaults = ExperimentConfig()
    kwargs = {}
    known = {name: section for section, names in _SECTIONS.items() for name in names}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        for name, raw in parser.items(section):
            if name not in known or known[name] != section:
                raise ConfigError(f"unknown key {name!r} in section [{section}]")
            target = type(getattr(defaults, name))
            kwargs[name] = _parse_value(name, raw, target)
    return ExperimentConfig(**kwargs)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None


def save_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_config(cfg))
