"""B-spline Kolmogorov-Arnold networks.

Layer ``l`` maps ``y_{l-1}`` (``n_in`` values) to ``y_l`` with
``y_l[i] = sum_j phi_{l,i,j}(y_{l-1}[j])``.  All edges leaving input ``j``
share that input's knot vector, so a layer stores one
:class:`ExtendedKnotVector` per input and a coefficient tensor of shape
``(n_out, n_in, dim)``.  Knots are frozen; only coefficients are trained.
"""

from __future__ import annotations

import copy
import json
import logging
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError
from .spline import (
    ExtendedKnotVector,
    Spline1D,
    basis_local,
    basis_matrix,
    basis_derivative_matrix,
    uniform_knots,
)

log = logging.getLogger(__name__)


@dataclass
class KanLayer:
    knots: list  # one ExtendedKnotVector per input
    coeffs: np.ndarray  # (n_out, n_in, dim)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.ndim != 3 or self.coeffs.shape[1] != len(self.knots):
            raise ValueError("coeffs must have shape (n_out, n_in, dim) with n_in == len(knots)")
        dims = {kv.dim for kv in self.knots}
        orders = {kv.order for kv in self.knots}
        if dims != {self.coeffs.shape[2]} or len(orders) != 1:
            raise ValueError("all input knot vectors must share order and basis dimension")

    @property
    def n_in(self) -> int:
        return self.coeffs.shape[1]

    @property
    def n_out(self) -> int:
        return self.coeffs.shape[0]

    @property
    def order(self) -> int:
        return self.knots[0].order

    def edge(self, i: int, j: int) -> Spline1D:
        """Spline on the edge from input ``j`` to output ``i``."""
        return Spline1D(self.knots[j], self.coeffs[i, j])

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        out = np.zeros((x.shape[0], self.n_out))
        for j, kv in enumerate(self.knots):
            first, vals = basis_local(kv, x[:, j])
            idx = first[:, None] + np.arange(vals.shape[1])
            out += np.einsum("nr,onr->no", vals, self.coeffs[:, j, :][:, idx])
        return out


@dataclass
class KanNetwork:
    layers: list

    def __post_init__(self):
        if not self.layers:
            raise ValueError("a network needs at least one layer")
        for a, b in zip(self.layers, self.layers[1:]):
            if a.n_out != b.n_in:
                raise ValueError(f"layer width mismatch: {a.n_out} outputs feed {b.n_in} inputs")

    @property
    def widths(self) -> list:
        return [self.layers[0].n_in] + [layer.n_out for layer in self.layers]

    @property
    def order(self) -> int:
        return self.layers[0].order

    @property
    def n_coeffs(self) -> int:
        return sum(layer.coeffs.size for layer in self.layers)

    def __call__(self, x) -> np.ndarray:
        return forward(self, x)[0]

    def to_dict(self) -> dict:
        return {
            "widths": self.widths,
            "layers": [
                {
                    "knots": [kv.to_dict() for kv in layer.knots],
                    "coeffs": layer.coeffs.tolist(),
                }
                for layer in self.layers
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KanNetwork":
        layers = [
            KanLayer(
                [ExtendedKnotVector.from_dict(kv) for kv in layer["knots"]],
                np.asarray(layer["coeffs"], dtype=float),
            )
            for layer in d["layers"]
        ]
        net = cls(layers)
        if "widths" in d and list(d["widths"]) != net.widths:
            raise ValueError("stored widths do not match layer shapes")
        return net

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "KanNetwork":
        return cls.from_dict(json.loads(s))


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    learning_rate: float = 1.0
    seed: int = 0
    init_scale: float = 0.1

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")


def _as_batch(net: KanNetwork, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1 and net.layers[0].n_in == 1 and x.shape[0] != 1:
        # a 1-D array for a scalar-input net is a batch of scalars
        x = x[:, None]
    x = np.atleast_2d(x)
    if x.shape[1] != net.layers[0].n_in:
        raise ValueError(f"input dimension {x.shape[1]} != network input width {net.layers[0].n_in}")
    return x


def forward(net: KanNetwork, x):
    """Evaluate the network and record every intermediate layer value.

    ``x`` is a single input vector or an ``(N, n_in)`` batch.  Returns
    ``(output, trace)`` where ``trace[0]`` is the input, ``trace[l]`` the
    output of layer ``l`` and ``trace[-1] is output``; all of shape
    ``(N, width)``.
    """
    y = _as_batch(net, x)
    trace = [y]
    for layer in net.layers:
        y = layer(y)
        trace.append(y)
    return y, trace


def forward_from(net: KanNetwork, y, start: int) -> np.ndarray:
    """Run layers ``start, start + 1, ...`` on an intermediate value."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    for layer in net.layers[start:]:
        y = layer(y)
    return y


def _loss_and_grad(net: KanNetwork, x, y, cache=None):
    # cache holds the first layer's collocation matrices, whose inputs never change
    n = x.shape[0]
    acts = [x]
    bases = []
    for l, layer in enumerate(net.layers):
        if l == 0 and cache is not None:
            b = cache
        else:
            b = [(basis_matrix(kv, acts[-1][:, j]),
                  basis_derivative_matrix(kv, acts[-1][:, j]) if l > 0 else None)
                 for j, kv in enumerate(layer.knots)]
        bases.append(b)
        acts.append(np.stack([bm for bm, _ in b], axis=1).reshape(n, -1)
                    @ layer.coeffs.reshape(layer.n_out, -1).T)
    resid = acts[-1][:, 0] - y if acts[-1].shape[1] == 1 else None
    if resid is None:
        raise ValueError("training expects a scalar-output network")
    loss = float(np.mean(resid**2))
    delta = (2.0 / n) * resid[:, None]  # dL/dy_L
    grads = [None] * len(net.layers)
    for l in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[l]
        g = np.empty_like(layer.coeffs)
        back = np.zeros((n, layer.n_in))
        for j, (bm, dbm) in enumerate(bases[l]):
            g[:, j, :] = delta.T @ bm
            if l > 0:
                back[:, j] = np.einsum("no,no->n", delta, dbm @ layer.coeffs[:, j, :].T)
        grads[l] = g
        delta = back
    return loss, grads, bases[0]


def loss(net: KanNetwork, x, y) -> float:
    x = _as_batch(net, x)
    return float(np.mean((forward(net, x)[0][:, 0] - np.asarray(y, dtype=float)) ** 2))


def gradient(net: KanNetwork, x, y) -> list:
    """Gradient of the mean squared error w.r.t. every layer's coefficients."""
    x = _as_batch(net, x)
    return _loss_and_grad(net, x, np.asarray(y, dtype=float))[1]


def train(net: KanNetwork, x, y, cfg: TrainConfig, frozen=()):
    """Full-batch gradient descent on the mean squared error.

    Returns a trained copy of ``net`` and the loss history: entry ``e`` is
    the loss before update ``e``, the last entry the final loss (so
    ``epochs + 1`` values).  Layers whose index is in ``frozen`` keep
    their coefficients.
    """
    x = _as_batch(net, x)
    y = np.asarray(y, dtype=float).ravel()
    if x.shape[0] == 0:
        raise ValueError("training data is empty")
    if x.shape[0] != y.shape[0]:
        raise ValueError("x and y lengths differ")
    net = copy.deepcopy(net)
    history = []
    cache = None
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):  # divergence is reported below
        for epoch in range(cfg.epochs):
            value, grads, cache = _loss_and_grad(net, x, y, cache)
            if not np.isfinite(value):
                raise DivergenceError(epoch, value)
            history.append(value)
            for l, layer in enumerate(net.layers):
                if l not in frozen:
                    layer.coeffs -= cfg.learning_rate * grads[l]
        final = loss(net, x, y)
    if not np.isfinite(final):
        raise DivergenceError(cfg.epochs, final)
    history.append(final)
    log.debug("trained %d epochs, loss %.3g -> %.3g", cfg.epochs, history[0], final)
    return net, history


def _range_knots(values: np.ndarray, n_knots: int, k: int, margin: float,
                 min_half_width: float) -> ExtendedKnotVector:
    lo, hi = float(np.min(values)), float(np.max(values))
    width = hi - lo
    lo, hi = lo - margin * width, hi + margin * width
    # hidden values grow well past their tiny initial spread during training
    lo, hi = min(lo, -min_half_width), max(hi, min_half_width)
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    return uniform_knots(lo, hi, n_knots, k)


def init_network(widths, first_knots, x, n_knots: int, k: int = 3, seed: int = 0,
                 init_scale: float = 0.1, margin: float = 0.1,
                 min_half_width: float = 1.0) -> KanNetwork:
    """Randomly initialised network.

    ``first_knots`` gives the interior knots of each network input.  Later
    layers get ``n_knots`` uniform knots covering the values the training
    inputs ``x`` produce at initialisation, widened by ``margin`` on each
    side and always containing ``[-min_half_width, min_half_width]``.
    Coefficients are uniform in ``[-init_scale, init_scale]``.
    """
    rng = np.random.default_rng(seed)
    if len(first_knots) != widths[0]:
        raise ValueError("need one knot sequence per network input")
    knots = [ExtendedKnotVector(np.asarray(t, dtype=float), k) for t in first_knots]
    if len({kv.dim for kv in knots}) != 1:
        raise ValueError("all input knot sequences must have the same length")
    layers = []
    y = np.atleast_2d(np.asarray(x, dtype=float))
    if y.shape[1] != widths[0]:
        y = y.reshape(-1, widths[0])
    for l, (n_in, n_out) in enumerate(zip(widths[:-1], widths[1:])):
        if l > 0:
            knots = [_range_knots(y[:, j], n_knots, k, margin, min_half_width) for j in range(n_in)]
        dim = knots[0].dim
        coeffs = rng.uniform(-init_scale, init_scale, size=(n_out, n_in, dim))
        layer = KanLayer(knots, coeffs)
        layers.append(layer)
        y = layer(y)
    return KanNetwork(layers)


def select_knot_indices(x, n_knots: int, seed: int = 0) -> np.ndarray:
    """Seeded draw of ``n_knots`` sample indices without replacement.

    The samples holding the minimum and maximum of every input coordinate
    are always included.  Returned indices are sorted.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if n_knots > n:
        raise ValueError(f"cannot select {n_knots} knots from {n} samples")
    forced = sorted({int(i) for d in range(x.shape[1]) for i in (np.argmin(x[:, d]), np.argmax(x[:, d]))})
    if len(forced) > n_knots:
        raise ValueError(f"{n_knots} knots cannot cover the {len(forced)} extreme samples")
    rest = np.setdiff1d(np.arange(n), forced)
    rng = np.random.default_rng(seed)
    extra = rng.choice(rest, size=n_knots - len(forced), replace=False)
    return np.sort(np.concatenate([forced, extra]).astype(int))
