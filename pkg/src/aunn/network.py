"""Layered networks of ANFIS units with an argmax classification head.

Every unit in a layer consumes the full output vector of the previous
layer (fully connected), so a layer's math is stored as stacked arrays
with a leading unit axis and evaluated for a whole batch at once. The
per-unit :class:`~aunn.fuzzy.AnfisUnit` objects are views into that
storage, so single-vector and batched evaluation share parameters.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError
from .fuzzy import AnfisUnit, tri_degree, tri_degree_grads

__all__ = [
    "LayerSpec",
    "InitConfig",
    "Layer",
    "AuNetwork",
    "init_network",
    "network_forward",
    "predict_class",
]


@dataclass(frozen=True)
class LayerSpec:
    """Width of one layer and the MF (= rule) count of each of its units."""

    n_units: int
    n_mfs_per_unit: int

    def __post_init__(self):
        if self.n_units < 1 or self.n_mfs_per_unit < 1:
            raise ConfigError(
                f"layer spec must be positive, got {self.n_units} units "
                f"with {self.n_mfs_per_unit} MFs"
            )


@dataclass(frozen=True)
class InitConfig:
    """Parameter initialization policy.

    ``mf_span_source`` chooses where first-layer MF peaks are spread:
    across each feature's observed range ("data_range") or across [0, 1]
    ("fixed_unit_interval"). Hidden layers always use [-1, 1]. Consequent
    slopes are drawn uniformly from +-``consequent_scale``, biases start
    at zero.
    """

    seed: int = 0
    mf_span_source: str = "data_range"
    consequent_scale: float = 0.1

    def __post_init__(self):
        if self.mf_span_source not in ("data_range", "fixed_unit_interval"):
            raise ConfigError(f"unknown mf_span_source {self.mf_span_source!r}")
        if not np.isfinite(self.consequent_scale) or self.consequent_scale < 0:
            raise ConfigError("consequent_scale must be finite and >= 0")


class Layer:
    """One layer of ANFIS units sharing stacked parameter storage.

    * ``mf_params`` -- (n_units, n_inputs, n_rules, 3)
    * ``weights``   -- (n_units, n_rules, n_inputs)
    * ``bias``      -- (n_units, n_rules)
    """

    def __init__(self, mf_params, weights, bias):
        self.mf_params = np.ascontiguousarray(mf_params, dtype=float)
        self.weights = np.ascontiguousarray(weights, dtype=float)
        self.bias = np.ascontiguousarray(bias, dtype=float)
        if self.mf_params.ndim != 4 or self.mf_params.shape[3] != 3:
            raise ShapeError(
                f"layer mf_params must be (units, inputs, rules, 3), "
                f"got {self.mf_params.shape}"
            )
        u, i, r = self.mf_params.shape[:3]
        if self.weights.shape != (u, r, i) or self.bias.shape != (u, r):
            raise ShapeError("layer parameter shapes are inconsistent")
        self.units = [
            AnfisUnit(self.mf_params[k], self.weights[k], self.bias[k])
            for k in range(u)
        ]

    @property
    def n_units(self) -> int:
        return self.mf_params.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.mf_params.shape[1]

    @property
    def n_rules(self) -> int:
        return self.mf_params.shape[2]

    def forward_batch(self, X, with_cache=False):
        """Evaluate all units on a batch. X is (batch, n_inputs); the
        output is (batch, n_units)."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_inputs:
            raise ShapeError(
                f"expected batch of shape (n, {self.n_inputs}), got {X.shape}"
            )
        a = self.mf_params[..., 0]
        b = self.mf_params[..., 1]
        c = self.mf_params[..., 2]
        xb = X[:, None, :, None]
        mu = tri_degree(xb, a, b, c)          # (B, U, I, R)
        w = mu.prod(axis=2)                   # (B, U, R)
        s = w.sum(axis=2)                     # (B, U)
        nonzero = s > 0
        wn = np.where(
            nonzero[:, :, None],
            w / np.where(nonzero, s, 1.0)[:, :, None],
            1.0 / self.n_rules,
        )
        f = np.einsum("bi,uri->bur", X, self.weights) + self.bias[None]
        y = (wn * f).sum(axis=2)
        if not with_cache:
            return y
        cache = {"X": X, "mu": mu, "w": w, "s": s, "nonzero": nonzero,
                 "wn": wn, "f": f}
        return y, cache

    def backward(self, cache, dY):
        """Reverse-mode pass given d(loss)/d(layer outputs).

        Returns (dX, grads) where grads has keys "mf", "weights", "bias"
        shaped like the corresponding parameter arrays.
        """
        X = cache["X"]
        mu, w, s = cache["mu"], cache["w"], cache["s"]
        nonzero, wn, f = cache["nonzero"], cache["wn"], cache["f"]

        df = dY[:, :, None] * wn               # (B, U, R)
        dwn = dY[:, :, None] * f

        g_bias = df.sum(axis=0)
        g_weights = np.einsum("bur,bi->uri", df, X)
        dX = np.einsum("bur,uri->bi", df, self.weights)

        # Normalization: dL/dw_k = (dwn_k - sum_j dwn_j wn_j) / s, and the
        # all-zero uniform fallback passes no gradient.
        inner = (dwn * wn).sum(axis=2, keepdims=True)
        safe_s = np.where(nonzero, s, 1.0)[:, :, None]
        dw = np.where(nonzero[:, :, None], (dwn - inner) / safe_s, 0.0)

        # Product rule: d w_j / d mu_ij is the product of the other factors,
        # computed zero-safely (a single zero factor kills all but its own
        # slot, two or more kill everything).
        zcount = (mu == 0).sum(axis=2)                       # (B, U, R)
        safe_mu = np.where(mu == 0, 1.0, mu)
        prod_nz = safe_mu.prod(axis=2)                       # (B, U, R)
        zc = zcount[:, :, None, :]
        pnz = prod_nz[:, :, None, :]
        prod_excl = np.where(
            zc == 0,
            pnz / safe_mu,
            np.where((zc == 1) & (mu == 0), pnz, 0.0),
        )
        dmu = dw[:, :, None, :] * prod_excl                  # (B, U, I, R)

        a = self.mf_params[..., 0]
        b = self.mf_params[..., 1]
        c = self.mf_params[..., 2]
        d_dx, d_da, d_db, d_dc = tri_degree_grads(X[:, None, :, None], a, b, c)
        g_mf = np.stack(
            [
                (dmu * d_da).sum(axis=0),
                (dmu * d_db).sum(axis=0),
                (dmu * d_dc).sum(axis=0),
            ],
            axis=-1,
        )
        dX = dX + (dmu * d_dx).sum(axis=(1, 3))
        return dX, {"mf": g_mf, "weights": g_weights, "bias": g_bias}

    def branch_codes(self, X):
        """Encode, per (sample, unit, input, rule), which piece of each MF
        the input falls on, plus which (sample, unit) rows hit the all-zero
        firing fallback. Used by the finite-difference checker to detect
        kink crossings."""
        X = np.asarray(X, dtype=float)
        a = self.mf_params[..., 0]
        b = self.mf_params[..., 1]
        c = self.mf_params[..., 2]
        xb = X[:, None, :, None]
        codes = (
            (xb >= a).astype(np.uint8)
            + 2 * (xb >= b)
            + 4 * (xb > b)
            + 8 * (xb <= c)
            + 16 * (b - a > 0)
            + 32 * (c - b > 0)
        )
        w = tri_degree(xb, a, b, c).prod(axis=2)
        return codes, w.sum(axis=2) > 0


class AuNetwork:
    """Ordered ANFIS-unit layers; the last layer's width is the class count."""

    def __init__(self, input_dim: int, layers):
        if input_dim < 1:
            raise ConfigError("input_dim must be positive")
        if not layers:
            raise ConfigError("a network needs at least one layer")
        width = input_dim
        for idx, layer in enumerate(layers):
            if layer.n_inputs != width:
                raise ShapeError(
                    f"layer {idx} expects {layer.n_inputs} inputs but the "
                    f"previous width is {width}"
                )
            width = layer.n_units
        self.input_dim = input_dim
        self.layers = list(layers)

    @property
    def n_outputs(self) -> int:
        return self.layers[-1].n_units

    def forward(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.input_dim,):
            raise ShapeError(
                f"expected input vector of length {self.input_dim}, "
                f"got shape {x.shape}"
            )
        return self.forward_batch(x[None, :])[0]

    def forward_batch(self, X) -> np.ndarray:
        out = np.asarray(X, dtype=float)
        for layer in self.layers:
            out = layer.forward_batch(out)
        return out

    def predict_class(self, x) -> int:
        return int(np.argmax(self.forward(x)))

    def predict_batch(self, X) -> np.ndarray:
        return np.argmax(self.forward_batch(X), axis=1)

    def parameters(self):
        """Live parameter views, one dict per layer."""
        return [
            {"mf": l.mf_params, "weights": l.weights, "bias": l.bias}
            for l in self.layers
        ]

    def copy(self) -> "AuNetwork":
        return AuNetwork(
            self.input_dim,
            [
                Layer(l.mf_params.copy(), l.weights.copy(), l.bias.copy())
                for l in self.layers
            ],
        )


def _mf_grid(lo, hi, n_mfs):
    """Peaks evenly spaced on [lo, hi] with feet at the neighboring peaks;
    the outermost feet extend outward by one spacing."""
    if n_mfs > 1:
        peaks = np.linspace(lo, hi, n_mfs)
        spacing = (hi - lo) / (n_mfs - 1)
    else:
        peaks = np.array([(lo + hi) / 2.0])
        spacing = hi - lo
    if spacing <= 0:
        spacing = 1.0
    a = np.empty(n_mfs)
    c = np.empty(n_mfs)
    a[0] = peaks[0] - spacing
    a[1:] = peaks[:-1]
    c[-1] = peaks[-1] + spacing
    c[:-1] = peaks[1:]
    return np.stack([a, peaks, c], axis=-1)   # (n_mfs, 3)


def init_network(input_dim, layer_specs, init: InitConfig,
                 training_data=None) -> AuNetwork:
    """Build a network with data-spanning MF grids and seeded consequents.

    Deterministic for a fixed seed: identical calls produce identical
    parameter sets.
    """
    if not layer_specs:
        raise ConfigError("layer_specs must be non-empty")
    if init.mf_span_source == "data_range":
        if training_data is None:
            raise ConfigError("data_range initialization needs training data")
        data = np.asarray(training_data, dtype=float)
        if data.size == 0:
            raise ConfigError("data_range initialization needs training data")
        if data.ndim != 2 or data.shape[1] != input_dim:
            raise ShapeError(
                f"training data must be (n, {input_dim}), got {data.shape}"
            )
        spans = [(data[:, i].min(), data[:, i].max()) for i in range(input_dim)]
    else:
        spans = [(0.0, 1.0)] * input_dim

    rng = np.random.default_rng(init.seed)
    layers = []
    width = input_dim
    for depth, spec in enumerate(layer_specs):
        layer_spans = spans if depth == 0 else [(-1.0, 1.0)] * width
        grid = np.stack(
            [_mf_grid(lo, hi, spec.n_mfs_per_unit) for lo, hi in layer_spans]
        )                                                  # (width, R, 3)
        mf = np.broadcast_to(
            grid[None], (spec.n_units, width, spec.n_mfs_per_unit, 3)
        ).copy()
        weights = rng.uniform(
            -init.consequent_scale,
            init.consequent_scale,
            size=(spec.n_units, spec.n_mfs_per_unit, width),
        )
        bias = np.zeros((spec.n_units, spec.n_mfs_per_unit))
        layers.append(Layer(mf, weights, bias))
        width = spec.n_units
    return AuNetwork(input_dim, layers)


def network_forward(net: AuNetwork, x) -> np.ndarray:
    return net.forward(x)


def predict_class(net: AuNetwork, x) -> int:
    """Argmax over the last-layer outputs; ties go to the lowest index."""
    return net.predict_class(x)
