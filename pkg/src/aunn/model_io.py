"""Text persistence for networks.

Parameters are written as decimal text with 17 significant digits, which
reproduces every float64 bit-exactly on load, so a saved model's forward
outputs are identical to the original's.
"""

import numpy as np

from .errors import DataError
from .fileio import atomic_write_text, fmt_float
from .network import AuNetwork, Layer

__all__ = ["dump_network", "parse_network", "save_network", "load_network"]

FORMAT_NAME = "aunn-model"
FORMAT_VERSION = 1


def _row(values) -> str:
    return " ".join(fmt_float(v) for v in values)


def dump_network(net: AuNetwork) -> str:
    lines = [f"{FORMAT_NAME} {FORMAT_VERSION}", f"input_dim {net.input_dim}",
             f"n_layers {len(net.layers)}"]
    for l, layer in enumerate(net.layers):
        lines.append(f"layer {l} units {layer.n_units} rules {layer.n_rules}")
    for l, layer in enumerate(net.layers):
        for u in range(layer.n_units):
            for i in range(layer.n_inputs):
                lines.append(f"mf {l} {u} {i} " + _row(layer.mf_params[u, i].ravel()))
            for j in range(layer.n_rules):
                lines.append(f"w {l} {u} {j} " + _row(layer.weights[u, j]))
            lines.append(f"b {l} {u} " + _row(layer.bias[u]))
    return "\n".join(lines) + "\n"


def parse_network(text: str) -> AuNetwork:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    try:
        head = lines[0].split()
        if head[0] != FORMAT_NAME or int(head[1]) != FORMAT_VERSION:
            raise DataError(f"not a {FORMAT_NAME} v{FORMAT_VERSION} file")
        input_dim = int(lines[1].split()[1])
        n_layers = int(lines[2].split()[1])

        shapes = []
        width = input_dim
        for l in range(n_layers):
            parts = lines[3 + l].split()
            units, rules = int(parts[3]), int(parts[5])
            shapes.append((units, width, rules))
            width = units

        mf = [np.zeros((u, i, r, 3)) for u, i, r in shapes]
        weights = [np.zeros((u, r, i)) for u, i, r in shapes]
        bias = [np.zeros((u, r)) for u, i, r in shapes]
        for line in lines[3 + n_layers:]:
            parts = line.split()
            kind = parts[0]
            if kind == "mf":
                l, u, i = int(parts[1]), int(parts[2]), int(parts[3])
                vals = np.array([float(p) for p in parts[4:]])
                mf[l][u, i] = vals.reshape(-1, 3)
            elif kind == "w":
                l, u, j = int(parts[1]), int(parts[2]), int(parts[3])
                weights[l][u, j] = [float(p) for p in parts[4:]]
            elif kind == "b":
                l, u = int(parts[1]), int(parts[2])
                bias[l][u] = [float(p) for p in parts[3:]]
            else:
                raise DataError(f"unknown record kind {kind!r}")
    except (IndexError, ValueError) as exc:
        raise DataError(f"malformed model file: {exc}") from None

    layers = [Layer(m, w, b) for m, w, b in zip(mf, weights, bias)]
    return AuNetwork(input_dim, layers)


def save_network(net: AuNetwork, path) -> None:
    atomic_write_text(path, dump_network(net))


def load_network(path) -> AuNetwork:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_network(fh.read())
    except OSError as exc:
        raise DataError(f"cannot read model {path}: {exc}") from None
