"""Triangular membership functions and the single ANFIS unit.

A unit fuzzifies its input vector through a bank of triangular membership
functions, fires one rule per MF column (product t-norm across inputs),
normalizes the firing strengths, and outputs the firing-weighted sum of
first-order Takagi-Sugeno consequents.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

__all__ = [
    "TriangularMF",
    "AnfisUnit",
    "mf_eval",
    "tri_degree",
    "tri_degree_grads",
    "firing_strengths",
    "normalize_firings",
    "consequent_outputs",
    "anfis_forward",
]


@dataclass
class TriangularMF:
    """Triangular membership function with feet ``a``, ``c`` and peak ``b``.

    Requires a <= b <= c. Degenerate collisions are still total functions:
    a == b turns the left ramp into a step at b, b == c mirrors that on the
    right, and a == b == c is a point membership (1 at b, 0 elsewhere).
    """

    a: float
    b: float
    c: float

    def __post_init__(self):
        if not (self.a <= self.b <= self.c):
            raise ValueError(
                f"triangle parameters must satisfy a <= b <= c, "
                f"got ({self.a}, {self.b}, {self.c})"
            )

    def degree(self, x: float) -> float:
        return float(tri_degree(x, self.a, self.b, self.c))


def mf_eval(mf: TriangularMF, x: float) -> float:
    """Membership degree of ``x`` in ``mf``; always in [0, 1]."""
    return mf.degree(x)


def tri_degree(x, a, b, c):
    """Vectorized triangular membership degree.

    All arguments broadcast against each other. Degenerate ramps (zero
    width) evaluate as indicator steps so the function stays total.
    """
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    lw = b - a
    rw = c - b
    left = np.where(lw > 0, (x - a) / np.where(lw > 0, lw, 1.0), (x >= b) * 1.0)
    right = np.where(rw > 0, (c - x) / np.where(rw > 0, rw, 1.0), (x <= b) * 1.0)
    return np.clip(np.minimum(left, right), 0.0, 1.0)


def tri_degree_grads(x, a, b, c):
    """Partial derivatives of the triangular degree: (d/dx, d/da, d/db, d/dc).

    Kink convention: right-hand derivative at x == a, zero at the peak
    x == b, left-hand derivative at x == c. Degenerate ramps contribute
    zero gradient (flat almost everywhere).
    """
    x, a, b, c = np.broadcast_arrays(
        np.asarray(x, dtype=float), a, b, c, subok=False
    )
    lw = b - a
    rw = c - b
    safe_lw = np.where(lw > 0, lw, 1.0)
    safe_rw = np.where(rw > 0, rw, 1.0)

    on_left = (lw > 0) & (x >= a) & (x < b)
    on_right = (rw > 0) & (x > b) & (x <= c)

    d_dx = np.where(on_left, 1.0 / safe_lw, 0.0)
    d_dx = np.where(on_right, -1.0 / safe_rw, d_dx)

    d_da = np.where(on_left, (x - b) / safe_lw**2, 0.0)
    d_db = np.where(on_left, -(x - a) / safe_lw**2, 0.0)
    d_db = np.where(on_right, (c - x) / safe_rw**2, d_db)
    d_dc = np.where(on_right, (x - b) / safe_rw**2, 0.0)
    return d_dx, d_da, d_db, d_dc


class AnfisUnit:
    """One neuron: a triangular MF bank plus first-order rule consequents.

    Rule j pairs MF column j of every input, so the rule base grows
    linearly with the MF count instead of as a full grid over inputs.

    Parameters are plain float64 arrays (they may be views into a layer's
    stacked storage):

    * ``mf_params`` -- (n_inputs, n_rules, 3), the (a, b, c) triples.
    * ``weights``   -- (n_rules, n_inputs), consequent slopes.
    * ``bias``      -- (n_rules,), consequent intercepts.

    Instances are safe for concurrent read-only evaluation; training
    mutates the arrays and requires exclusive access.
    """

    def __init__(self, mf_params, weights, bias, validate=True):
        self.mf_params = np.asarray(mf_params, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.bias = np.asarray(bias, dtype=float)
        if self.mf_params.ndim != 3 or self.mf_params.shape[2] != 3:
            raise ShapeError(
                f"mf_params must have shape (n_inputs, n_rules, 3), "
                f"got {self.mf_params.shape}"
            )
        n_inputs, n_rules = self.mf_params.shape[:2]
        if self.weights.shape != (n_rules, n_inputs):
            raise ShapeError(
                f"weights must have shape ({n_rules}, {n_inputs}), "
                f"got {self.weights.shape}"
            )
        if self.bias.shape != (n_rules,):
            raise ShapeError(
                f"bias must have shape ({n_rules},), got {self.bias.shape}"
            )
        if validate and not self.mf_triples_sorted():
            raise ValueError("every MF triple must satisfy a <= b <= c")

    @property
    def n_inputs(self) -> int:
        return self.mf_params.shape[0]

    @property
    def n_rules(self) -> int:
        return self.mf_params.shape[1]

    def mf(self, i: int, j: int) -> TriangularMF:
        """The membership function of input i in rule j."""
        a, b, c = self.mf_params[i, j]
        return TriangularMF(float(a), float(b), float(c))

    def mf_triples_sorted(self) -> bool:
        d = np.diff(self.mf_params, axis=2)
        return bool(np.all(d >= 0))

    def _check_input(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_inputs,):
            raise ShapeError(
                f"expected input vector of length {self.n_inputs}, "
                f"got shape {x.shape}"
            )
        return x

    def firing_strengths(self, x) -> np.ndarray:
        """Raw rule firing strengths: per rule, the product over inputs of
        that input's MF degree. Shape (n_rules,), all entries >= 0."""
        x = self._check_input(x)
        a = self.mf_params[:, :, 0]
        b = self.mf_params[:, :, 1]
        c = self.mf_params[:, :, 2]
        degrees = tri_degree(x[:, None], a, b, c)
        return degrees.prod(axis=0)

    def consequent_outputs(self, x) -> np.ndarray:
        """Per-rule affine consequent values: weights[j] . x + bias[j]."""
        x = self._check_input(x)
        return self.weights @ x + self.bias

    def forward(self, x) -> float:
        """Unit output: normalized-firing-weighted sum of consequents."""
        w = normalize_firings(self.firing_strengths(x))
        return float(w @ self.consequent_outputs(x))


def normalize_firings(w) -> np.ndarray:
    """Normalize raw firing strengths to sum to 1.

    An all-zero firing vector falls back to the uniform distribution so
    the forward pass (and its gradients) stay finite.
    """
    w = np.asarray(w, dtype=float)
    total = w.sum()
    if total > 0:
        return w / total
    return np.full(w.shape, 1.0 / w.size)


def firing_strengths(unit: AnfisUnit, x) -> np.ndarray:
    return unit.firing_strengths(x)


def consequent_outputs(unit: AnfisUnit, x) -> np.ndarray:
    return unit.consequent_outputs(x)


def anfis_forward(unit: AnfisUnit, x) -> float:
    return unit.forward(x)
