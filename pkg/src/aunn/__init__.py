"""ANFIS-unit neural networks: fuzzy neurons, training, wavelet-energy
features, and the classification/incremental-learning experiment harnesses."""

from .errors import AuNnError, ConfigError, DataError, ShapeError
from .fuzzy import (
    AnfisUnit,
    TriangularMF,
    anfis_forward,
    consequent_outputs,
    firing_strengths,
    mf_eval,
    normalize_firings,
)
from .network import (
    AuNetwork,
    InitConfig,
    Layer,
    LayerSpec,
    init_network,
    network_forward,
    predict_class,
)
from .training import (
    AdamState,
    EpochStats,
    TrainConfig,
    adam_step,
    finite_diff_check,
    gradcheck_sweep,
    gradients,
    loss,
    train,
)

__all__ = [
    "AuNnError", "ConfigError", "DataError", "ShapeError",
    "AnfisUnit", "TriangularMF", "anfis_forward", "consequent_outputs",
    "firing_strengths", "mf_eval", "normalize_firings",
    "AuNetwork", "InitConfig", "Layer", "LayerSpec", "init_network",
    "network_forward", "predict_class",
    "AdamState", "EpochStats", "TrainConfig", "adam_step",
    "finite_diff_check", "gradcheck_sweep", "gradients", "loss", "train",
]

__version__ = "0.1.0"
