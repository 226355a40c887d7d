"""Distance-aware worst-case error bounds for spline networks.

Building blocks
    :func:`interp_bound`       interpolation error of an order-k stencil
    :func:`knot_error_bound`   the same plus the interpolated knot error
    :func:`divide_errors`      equal split of a knot error across splines
    :func:`divide_lipschitz`   equal (geometric) split of a constant across layers
    :func:`two_layer_bound` / :func:`multi_layer_bound`   composition

:class:`DarekBounder` strings these together for a trained
:class:`~darek.kan.KanNetwork`.  It is built once from the knot samples
(inputs where the true function value is known) and then answers queries
without touching the training data again.

Knot errors are stored signed (``f(tau) - f_hat(tau)``); magnitudes are
taken only inside the bound formulas.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DegenerateImagesError, InsufficientKnotsError
from .kan import KanNetwork, forward
from .poly import check_knots, divided_differences, locate_segment, locate_segments
from .spline import _local_basis, _spans, basis_matrix

IMAGE_DEDUP_TOL = 1e-9


def _stencil(knots, x, k, counter=None):
    if len(knots) < k + 1:
        raise InsufficientKnotsError(f"order-{k} bound needs {k + 1} knots, got {len(knots)}")
    j = locate_segment(knots, x, k, counter)
    return j, knots[j : j + k + 1]


def interp_bound(knots, x: float, k: int, Lk1: float) -> float:
    """``Lk1 / (k+1)! * |prod_i (x - tau_i)|`` over the stencil containing ``x``."""
    if Lk1 < 0:
        raise ValueError("Lipschitz constant must be non-negative")
    knots = check_knots(knots) if len(knots) >= 2 else np.asarray(knots, dtype=float)
    _, st = _stencil(knots, x, k)
    return Lk1 / math.factorial(k + 1) * abs(float(np.prod(x - st)))


def knot_error_bound(knots, knot_errors, x: float, k: int, Lk1: float) -> float:
    """:func:`interp_bound` plus ``|P(x)|`` where ``P`` interpolates the
    stencil's knot errors."""
    knots = np.asarray(knots, dtype=float)
    knot_errors = np.asarray(knot_errors, dtype=float)
    if knot_errors.shape != knots.shape:
        raise ValueError("knot_errors must align with knots")
    if len(knots) >= 2:
        check_knots(knots)
    j, st = _stencil(knots, x, k)
    coeffs = divided_differences(st, knot_errors[j : j + k + 1])
    p = coeffs[-1]
    for i in range(k - 1, -1, -1):
        p = coeffs[i] + (x - st[i]) * p
    return interp_bound(knots, x, k, Lk1) + abs(float(p))


def divide_errors(e_f: float, n: int, L1_h: float) -> float:
    """Magnitude assigned to each of the ``1 + n`` splines of ``h(sum g_i)``."""
    if n < 1 or L1_h < 0:
        raise ValueError("need n >= 1 and L1_h >= 0")
    return abs(e_f) / (1.0 + n * L1_h)


def divide_lipschitz(L_f: float, n_layers: int) -> float:
    """Per-layer constant whose ``n_layers``-fold product is ``L_f``."""
    if L_f < 0 or n_layers < 1:
        raise ValueError("need L_f >= 0 and n_layers >= 1")
    if n_layers == 1:
        return float(L_f)
    return float(L_f) ** (1.0 / n_layers)


def two_layer_bound(u_h: float, L1_h: float, u_g) -> float:
    return u_h + L1_h * float(np.sum(u_g))


def multi_layer_bound(per_layer_u, per_layer_L1) -> float:
    """``sum(u_L) + sum_{l<L} sum(u_l) * prod_{j>l} L1_j``.

    ``per_layer_u[l]`` is layer ``l``'s error vector (or scalar);
    ``per_layer_L1[l]`` its first-order constant (the first layer's value
    never enters).
    """
    n = len(per_layer_u)
    if len(per_layer_L1) != n or n == 0:
        raise ValueError("per_layer_u and per_layer_L1 must be non-empty and equally long")
    total = float(np.sum(per_layer_u[-1]))
    for l in range(n - 2, -1, -1):
        total = total + float(np.prod(per_layer_L1[l + 1 :])) * float(np.sum(per_layer_u[l]))
    return total


@dataclass(frozen=True)
class LipschitzBudget:
    L1_f: float = 1.0
    Lk1_f: float = 1.0
    k: int = 3
    n_layers: int = 1

    def __post_init__(self):
        if self.L1_f < 0 or self.Lk1_f < 0:
            raise ValueError("Lipschitz constants must be non-negative")
        if self.n_layers < 1:
            raise ValueError("n_layers must be >= 1")

    @property
    def per_layer_L1(self) -> list:
        return [divide_lipschitz(self.L1_f, self.n_layers)] * self.n_layers

    @property
    def per_layer_Lk1(self) -> list:
        return [divide_lipschitz(self.Lk1_f, self.n_layers)] * self.n_layers


@dataclass(frozen=True)
class KnotImages:
    """Abscissae seen by the splines fed from one unit, with paired errors."""

    layer: int
    unit: int
    abscissae: np.ndarray
    errors: np.ndarray
    degenerate: bool


def _merge_images(values, errors, tol=IMAGE_DEDUP_TOL):
    order = np.argsort(values, kind="stable")
    v, e = values[order], errors[order]
    keep_v, keep_e = [v[0]], [e[0]]
    for a, b in zip(v[1:], e[1:]):
        if a - keep_v[-1] <= tol:
            if abs(b) > abs(keep_e[-1]):
                keep_v[-1], keep_e[-1] = a, b
        else:
            keep_v.append(a)
            keep_e.append(b)
    return np.array(keep_v), np.array(keep_e)


def layer_knot_images(net: KanNetwork, knot_x, errors=None, strict: bool = True) -> list:
    """Per-layer, per-unit sorted images of the knots under earlier layers.

    Layer 0 sees the knot coordinates themselves.  Images closer than
    ``1e-9`` are merged, keeping the larger-magnitude error.  With
    ``strict`` a unit left with fewer than ``k + 1`` abscissae raises
    :class:`DegenerateImagesError`; otherwise it is flagged.
    """
    _, trace = forward(net, knot_x)
    m = trace[0].shape[0]
    errors = np.zeros(m) if errors is None else np.asarray(errors, dtype=float)
    k = net.order
    out = []
    for l, layer in enumerate(net.layers):
        units = []
        for j in range(layer.n_in):
            a, e = _merge_images(trace[l][:, j], errors)
            degenerate = a.size < k + 1
            if degenerate and strict:
                raise DegenerateImagesError(
                    f"layer {l} unit {j}: {a.size} distinct knot images, need {k + 1}", l, j
                )
            units.append(KnotImages(l, j, a, e, degenerate))
        out.append(units)
    return out


@dataclass
class LayerTerm:
    interp_term: float
    knot_error_term: float
    lipschitz_multiplier: float
    fanout: float = 1.0


@dataclass
class BoundReport:
    x_star: list
    prediction: float
    total_bound: float
    per_layer: list
    knot_images_used: list
    fallback_units: list = field(default_factory=list)
    comparisons: list = field(default_factory=list)

    @property
    def lo(self) -> float:
        return self.prediction - self.total_bound

    @property
    def hi(self) -> float:
        return self.prediction + self.total_bound

    def composed_total(self) -> float:
        return sum((t.interp_term + t.knot_error_term) * t.lipschitz_multiplier for t in self.per_layer)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lo"], d["hi"] = self.lo, self.hi
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _divided_differences_batch(st: np.ndarray, values: np.ndarray) -> np.ndarray:
    # st (N, k+1); values (..., N, k+1); recursion along the last axis
    c = values.copy()
    k1 = st.shape[-1]
    for order in range(1, k1):
        c[..., order:] = (c[..., order:] - c[..., order - 1 : -1]) / (st[:, order:] - st[:, : k1 - order])
    return c


class _UnitTable:
    """Everything needed to bound the splines fed by one unit.

    All ``n_out`` edges leaving the unit share its knot images and divided
    errors.  In ``"piece"`` mode the error interpolated over a stencil is
    measured against the polynomial piece of each edge spline that contains
    the query (divided error plus ``phi(a) - phi_piece(a)`` at each stencil
    abscissa ``a``), which keeps the bound valid when the stencil straddles
    spline breakpoints.  ``"table"`` mode interpolates the divided errors
    directly, with Newton coefficients cached per segment.
    """

    def __init__(self, images: KnotImages, kv, coeffs: np.ndarray, Lk1: float, mode: str):
        k = kv.order
        self.k = k
        self.kv = kv
        self.coeffs = coeffs  # (n_out, dim)
        self.n_out = coeffs.shape[0]
        self.mode = mode
        self.scale = Lk1 / math.factorial(k + 1)
        self.abscissae = images.abscissae
        self.errors = images.errors
        self.knots_list = images.abscissae.tolist()
        self.degenerate = images.degenerate
        if self.degenerate:
            half = (kv.hi - kv.lo) / 2.0
            self.fallback = float(np.max(np.abs(images.errors))) + self.scale * half ** (k + 1)
            return
        n_seg = images.abscissae.size - k
        self.index = np.arange(n_seg)[:, None] + np.arange(k + 1)
        self.stencils = images.abscissae[self.index]
        if mode == "table":
            self.newton = _divided_differences_batch(self.stencils, images.errors[self.index])
        else:
            self.phi_at_knots = (basis_matrix(kv, images.abscissae) @ coeffs.T).T  # (n_out, m')

    def terms(self, t: np.ndarray):
        """Interpolation and knot-error terms at unit values ``t``, summed over edges."""
        if self.degenerate:
            return np.zeros_like(t), np.full_like(t, self.n_out * self.fallback), np.full(t.shape, -1)
        k = self.k
        seg = locate_segments(self.abscissae, t, k)
        st = self.stencils[seg]
        diff = t[:, None] - st
        interp = self.n_out * self.scale * np.abs(np.prod(diff, axis=1))
        if self.mode == "table":
            c = self.newton[seg]
        else:
            idx = self.index[seg]
            span = _spans(self.kv, t)
            n = t.shape[0]
            vals = _local_basis(self.kv.padded, np.repeat(span, k + 1), st.ravel(), k).reshape(n, k + 1, k + 1)
            window = self.coeffs[:, (span - k)[:, None] + np.arange(k + 1)]  # (n_out, N, k+1)
            piece = np.einsum("nqr,onr->onq", vals, window)
            e = self.errors[idx][None] + self.phi_at_knots[:, idx] - piece
            c = _divided_differences_batch(st, e)
        p = c[..., -1]
        for i in range(k - 1, -1, -1):
            p = c[..., i] + diff[:, i] * p
        kerr = np.abs(p) * self.n_out if self.mode == "table" else np.abs(p).sum(axis=0)
        return interp, kerr, seg


class DarekBounder:
    """Error-bound engine for one trained network and one set of knot samples.

    Parameters
    ----------
    net : KanNetwork
        Trained network; treated as read-only.
    knot_x : array (m, n_in) or (m,)
        Inputs at which the true function is known.
    knot_y : array (m,)
        True function values at ``knot_x``.
    budget : LipschitzBudget
        Network-level constants; ``budget.n_layers`` is overridden by the
        network depth and ``budget.k`` must match the spline order.
    knot_errors : {"piece", "table"}
        How stencil knot errors are formed, see :class:`_UnitTable`.
    strict_inputs : bool
        Raise when a network input has fewer than ``k + 1`` distinct knot
        coordinates.  Otherwise that input gets the coarse fallback bound
        and is listed in :attr:`fallback_units`, like hidden units.
    """

    def __init__(self, net: KanNetwork, knot_x, knot_y, budget: LipschitzBudget,
                 knot_errors: str = "piece", strict_inputs: bool = True):
        if knot_errors not in ("piece", "table"):
            raise ValueError("knot_errors must be 'piece' or 'table'")
        self.net = net
        self.mode = knot_errors
        L = len(net.layers)
        k = net.order
        if budget.k != k:
            raise ValueError(f"budget order {budget.k} != network spline order {k}")
        self.k = k
        self.budget = LipschitzBudget(budget.L1_f, budget.Lk1_f, k, L)
        self.L1 = self.budget.per_layer_L1
        self.Lk1 = self.budget.per_layer_Lk1

        widths = net.widths
        # copies of a layer-l unit error reaching the output through wider later layers
        self.fanout = [float(np.prod(widths[l + 2 : L])) for l in range(L)]
        self.multiplier = [float(np.prod(self.L1[l + 1 :])) for l in range(L)]
        edges = [layer.n_in * layer.n_out for layer in net.layers]
        self.division = sum(e * f * mlt for e, f, mlt in zip(edges, self.fanout, self.multiplier))

        pred, _ = forward(net, knot_x)
        self.knot_x = np.asarray(knot_x, dtype=float)
        self.knot_y = np.asarray(knot_y, dtype=float).ravel()
        if self.knot_y.shape[0] != pred.shape[0]:
            raise ValueError("knot_x and knot_y lengths differ")
        self.knot_errors = self.knot_y - pred[:, 0]
        self.divided_errors = self.knot_errors / self.division

        self.images = layer_knot_images(net, knot_x, self.divided_errors, strict=False)
        self.tables = []
        for l, units in enumerate(self.images):
            layer = net.layers[l]
            row = []
            for im in units:
                if im.degenerate and l == 0 and strict_inputs:
                    raise InsufficientKnotsError(
                        f"input {im.unit}: {im.abscissae.size} distinct knot coordinates, need {k + 1}"
                    )
                row.append(_UnitTable(im, layer.knots[im.unit], layer.coeffs[:, im.unit, :],
                                      self.Lk1[l], knot_errors))
            self.tables.append(row)

    @property
    def fallback_units(self) -> list:
        return [(l, j) for l, row in enumerate(self.tables) for j, t in enumerate(row) if t.degenerate]

    def _layer_terms(self, trace):
        out = []
        for l, row in enumerate(self.tables):
            interp = np.zeros(trace[0].shape[0])
            kerr = np.zeros_like(interp)
            segs = []
            for j, table in enumerate(row):
                a, b, s = table.terms(trace[l][:, j])
                interp += a
                kerr += b
                segs.append(s)
            out.append((self.fanout[l] * interp, self.fanout[l] * kerr, segs))
        return out

    def query_batch(self, x):
        """Predictions and total bounds for a batch of inputs."""
        pred, trace = forward(self.net, x)
        total = np.zeros(pred.shape[0])
        for (interp, kerr, _), mult in zip(self._layer_terms(trace), self.multiplier):
            total += (interp + kerr) * mult
        return pred[:, 0], total

    def query(self, x_star, count_comparisons: bool = False) -> BoundReport:
        pred, trace = forward(self.net, x_star)
        if pred.shape[0] != 1:
            raise ValueError("query takes a single input; use query_batch")
        per_layer = []
        used = []
        for l, (interp, kerr, segs) in enumerate(self._layer_terms(trace)):
            per_layer.append(LayerTerm(float(interp[0]), float(kerr[0]), self.multiplier[l], self.fanout[l]))
            used.append([[] if int(s[0]) < 0 else table.abscissae[int(s[0]) : int(s[0]) + self.k + 1].tolist()
                         for table, s in zip(self.tables[l], segs)])
        total = multi_layer_bound([t.interp_term + t.knot_error_term for t in per_layer], self.L1)
        comparisons = []
        if count_comparisons:
            for l, row in enumerate(self.tables):
                for j, table in enumerate(row):
                    if not table.degenerate:
                        counter = []
                        locate_segment(table.knots_list, float(trace[l][0, j]), self.k, counter)
                        comparisons.append(counter[0])
        return BoundReport(
            x_star=trace[0][0].tolist(),
            prediction=float(pred[0, 0]),
            total_bound=total,
            per_layer=per_layer,
            knot_images_used=used,
            fallback_units=self.fallback_units,
            comparisons=comparisons,
        )


def darek_query(net: KanNetwork, knot_x, knot_y, budget: LipschitzBudget, x_star,
                knot_errors: str = "piece") -> BoundReport:
    """One-shot bound query; build a :class:`DarekBounder` to amortise."""
    return DarekBounder(net, knot_x, knot_y, budget, knot_errors).query(x_star)


def write_bound_csv(path, x, prediction, bound, x_names=None) -> None:
    """Batch results with columns ``x..., prediction, bound, lo, hi``."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    names = x_names or (["x"] if x.shape[1] == 1 else [f"x{i}" for i in range(x.shape[1])])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([*names, "prediction", "bound", "lo", "hi"])
        for xi, p, u in zip(x, prediction, bound):
            w.writerow([*map(repr, map(float, xi)), repr(float(p)), repr(float(u)),
                        repr(float(p - u)), repr(float(p + u))])


def read_bound_csv(path) -> dict:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return {key: np.array([float(r[key]) for r in rows]) for key in rows[0]}
