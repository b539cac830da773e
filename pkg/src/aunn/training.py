"""Loss, exact reverse-mode gradients, Adam with schedules, and a
finite-difference gradient checker.

The whole network is treated as one optimization problem: softmax
cross-entropy on the last-layer outputs, differentiated analytically
through consequents, normalization, rule products, and the piecewise
membership ramps. Prediction stays argmax; the softmax exists only to
make training differentiable.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, DataError
from .network import AuNetwork, Layer, LayerSpec

__all__ = [
    "TrainConfig",
    "AdamState",
    "EpochStats",
    "loss",
    "gradients",
    "adam_step",
    "train",
    "finite_diff_check",
    "gradcheck_sweep",
]

# Rows per backprop block: keeps the (batch, units, inputs, rules)
# intermediates bounded while the fixed block order keeps reductions
# deterministic.
_BLOCK_ROWS = 512


@dataclass
class TrainConfig:
    """Optimization schedule: a list of (learning_rate, epochs) stages run
    in order on the same parameters and optimizer state."""

    schedule: tuple = ((0.001, 100),)
    batch_mode: str = "full_batch"        # or "minibatch"
    batch_size: int = 32
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        self.schedule = tuple((float(lr), int(ep)) for lr, ep in self.schedule)
        for lr, epochs in self.schedule:
            if lr <= 0:
                raise ConfigError(f"learning rate must be > 0, got {lr}")
            if epochs < 0:
                raise ConfigError(f"epoch count must be >= 0, got {epochs}")
        if self.batch_mode not in ("full_batch", "minibatch"):
            raise ConfigError(f"unknown batch_mode {self.batch_mode!r}")
        if self.batch_mode == "minibatch" and self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ConfigError("Adam betas must lie in (0, 1)")


@dataclass
class AdamState:
    """First/second moment accumulators shaped exactly like the parameters."""

    m: list
    v: list
    step: int = 0

    @classmethod
    def zeros_like(cls, params) -> "AdamState":
        return cls(
            m=[{k: np.zeros_like(a) for k, a in layer.items()} for layer in params],
            v=[{k: np.zeros_like(a) for k, a in layer.items()} for layer in params],
        )


class EpochStats(NamedTuple):
    loss: float
    train_accuracy: float


def _zero_grads(params):
    return [{k: np.zeros_like(a) for k, a in layer.items()} for layer in params]


def _validate_batch(net: AuNetwork, X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or len(X) == 0:
        raise DataError(f"batch must be a non-empty matrix, got shape {X.shape}")
    if y.shape != (len(X),):
        raise DataError(
            f"labels must be one per row, got {y.shape} for {len(X)} rows"
        )
    y = y.astype(int)
    if y.min() < 0 or y.max() >= net.n_outputs:
        raise DataError(
            f"labels must lie in [0, {net.n_outputs}), "
            f"got range [{y.min()}, {y.max()}]"
        )
    return X, y


def _softmax_ce_rows(Z, y):
    """Per-row cross-entropy and softmax probabilities, computed with the
    usual max-shift for stability."""
    shifted = Z - Z.max(axis=1, keepdims=True)
    exps = np.exp(shifted)
    total = exps.sum(axis=1)
    probs = exps / total[:, None]
    ce = np.log(total) - shifted[np.arange(len(y)), y]
    return ce, probs


def loss(net: AuNetwork, X, y) -> float:
    """Mean softmax cross-entropy of the last-layer outputs."""
    X, y = _validate_batch(net, X, y)
    Z = net.forward_batch(X)
    ce, _ = _softmax_ce_rows(Z, y)
    return float(ce.mean())


def _loss_acc_grads(net: AuNetwork, X, y):
    """One pass over the batch in fixed-order blocks: mean loss, accuracy
    of the current parameters, and the full gradient set."""
    n = len(X)
    grads = _zero_grads(net.parameters())
    loss_sum = 0.0
    correct = 0
    for start in range(0, n, _BLOCK_ROWS):
        Xb = X[start:start + _BLOCK_ROWS]
        yb = y[start:start + _BLOCK_ROWS]
        caches = []
        cur = Xb
        for layer in net.layers:
            cur, cache = layer.forward_batch(cur, with_cache=True)
            caches.append(cache)
        ce, probs = _softmax_ce_rows(cur, yb)
        loss_sum += float(ce.sum())
        correct += int((np.argmax(cur, axis=1) == yb).sum())
        dZ = probs
        dZ[np.arange(len(yb)), yb] -= 1.0
        dZ /= n
        for layer, cache, gslot in zip(
            reversed(net.layers), reversed(caches), reversed(grads)
        ):
            dZ, g = layer.backward(cache, dZ)
            for key in gslot:
                gslot[key] += g[key]
    return loss_sum / n, correct / n, grads


def gradients(net: AuNetwork, X, y):
    """Exact derivatives of ``loss`` with respect to every parameter,
    one dict per layer with keys "mf", "weights", "bias"."""
    X, y = _validate_batch(net, X, y)
    return _loss_acc_grads(net, X, y)[2]


def adam_step(params, grads, state: AdamState, lr: float,
              beta1: float = 0.9, beta2: float = 0.999,
              epsilon: float = 1e-8):
    """One bias-corrected Adam update, applied in place.

    MF parameter triples ("mf" arrays) are re-sorted along their last axis
    afterwards so a <= b <= c survives every step.
    """
    state.step += 1
    t = state.step
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for layer_p, layer_g, layer_m, layer_v in zip(params, grads, state.m, state.v):
        for key in layer_p:
            g = layer_g[key]
            m = layer_m[key]
            v = layer_v[key]
            m *= beta1
            m += (1.0 - beta1) * g
            v *= beta2
            v += (1.0 - beta2) * np.square(g)
            layer_p[key] -= lr * (m / c1) / (np.sqrt(v / c2) + epsilon)
        if "mf" in layer_p:
            layer_p["mf"].sort(axis=-1)
    return params, state


def train(net: AuNetwork, X, y, config: TrainConfig):
    """Run every schedule stage in order on the same parameters.

    Optimizer state persists across stages. History holds one record per
    epoch (loss and train accuracy of the parameters entering the epoch);
    its length is the total epoch count.
    """
    X, y = _validate_batch(net, X, y)
    params = net.parameters()
    state = AdamState.zeros_like(params)
    history = []
    rng = np.random.default_rng(config.seed)
    for lr, epochs in config.schedule:
        for _ in range(epochs):
            if config.batch_mode == "full_batch":
                ep_loss, ep_acc, grads = _loss_acc_grads(net, X, y)
                adam_step(params, grads, state, lr,
                          config.beta1, config.beta2, config.epsilon)
            else:
                perm = rng.permutation(len(X))
                loss_sum = 0.0
                correct = 0
                for start in range(0, len(X), config.batch_size):
                    take = perm[start:start + config.batch_size]
                    mb_loss, mb_acc, grads = _loss_acc_grads(net, X[take], y[take])
                    loss_sum += mb_loss * len(take)
                    correct += int(round(mb_acc * len(take)))
                    adam_step(params, grads, state, lr,
                              config.beta1, config.beta2, config.epsilon)
                ep_loss = loss_sum / len(X)
                ep_acc = correct / len(X)
            history.append(EpochStats(ep_loss, ep_acc))
    return net, history


def _loss_with_codes(net: AuNetwork, X, y):
    """Loss plus the piecewise-branch signature of the whole forward pass
    (MF region codes and zero-firing fallbacks for every layer)."""
    codes = []
    cur = X
    for layer in net.layers:
        codes.append(layer.branch_codes(cur))
        cur = layer.forward_batch(cur)
    ce, _ = _softmax_ce_rows(cur, y)
    return float(ce.mean()), codes


def _same_codes(a, b) -> bool:
    return all(
        np.array_equal(ca[0], cb[0]) and np.array_equal(ca[1], cb[1])
        for ca, cb in zip(a, b)
    )


def finite_diff_check(net: AuNetwork, X, y, step: float = 1e-5,
                      corrupt: bool = False) -> float:
    """Max relative discrepancy between analytic gradients and central
    finite differences.

    A parameter is skipped whenever either perturbed evaluation lands on a
    different piece of any membership ramp (or flips a zero-firing
    fallback) than the unperturbed pass: central differences straddling a
    kink say nothing about the one-sided convention used analytically.

    ``corrupt`` is a self-test hook that offsets one analytic gradient so
    the checker must report a large error.
    """
    if step <= 0:
        raise ConfigError(f"step must be > 0, got {step}")
    X, y = _validate_batch(net, X, y)
    analytic = gradients(net, X, y)
    if corrupt:
        analytic[-1]["bias"][..., 0] += 1.0
    _, base_codes = _loss_with_codes(net, X, y)

    max_rel = 0.0
    for layer_p, layer_g in zip(net.parameters(), analytic):
        for key in layer_p:
            arr = layer_p[key]
            g = layer_g[key]
            for idx in np.ndindex(arr.shape):
                orig = arr[idx]
                arr[idx] = orig + step
                lp, cp = _loss_with_codes(net, X, y)
                arr[idx] = orig - step
                lm, cm = _loss_with_codes(net, X, y)
                arr[idx] = orig
                if not (_same_codes(base_codes, cp) and _same_codes(base_codes, cm)):
                    continue
                numeric = (lp - lm) / (2.0 * step)
                denom = max(abs(g[idx]), abs(numeric), 1e-8)
                max_rel = max(max_rel, abs(g[idx] - numeric) / denom)
    return max_rel


def _random_small_net(rng) -> tuple:
    """A random network small enough for exhaustive finite differences:
    up to 3 inputs, 2 layers, 3 units and 3 MFs per layer, batch up to 8."""
    n_inputs = int(rng.integers(1, 4))
    n_layers = int(rng.integers(1, 3))
    layers = []
    width = n_inputs
    for _ in range(n_layers):
        n_units = int(rng.integers(2, 4))
        n_rules = int(rng.integers(1, 4))
        mf = np.sort(rng.uniform(-1.5, 1.5, size=(n_units, width, n_rules, 3)),
                     axis=-1)
        weights = rng.normal(0.0, 0.5, size=(n_units, n_rules, width))
        bias = rng.normal(0.0, 0.5, size=(n_units, n_rules))
        layers.append(Layer(mf, weights, bias))
        width = n_units
    net = AuNetwork(n_inputs, layers)
    batch = int(rng.integers(2, 9))
    X = rng.uniform(-1.2, 1.2, size=(batch, n_inputs))
    y = rng.integers(0, net.n_outputs, size=batch)
    return net, X, y


def gradcheck_sweep(n_seeds: int = 20, step: float = 1e-5,
                    base_seed: int = 0, corrupt: bool = False) -> float:
    """Worst finite-difference error over a sweep of random small networks."""
    worst = 0.0
    for offset in range(n_seeds):
        rng = np.random.default_rng(base_seed + offset)
        net, X, y = _random_small_net(rng)
        worst = max(worst, finite_diff_check(net, X, y, step, corrupt=corrupt))
    return worst
