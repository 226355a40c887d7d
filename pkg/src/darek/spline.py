"""B-spline bases on clamped knot vectors and 1-D spline evaluation.

"Order" ``k`` means polynomial degree here (cubic splines have ``k = 3``),
not the classical de Boor "order = degree + 1".

An :class:`ExtendedKnotVector` pads ``m`` strictly increasing interior
knots with ``k`` extra copies of each end knot, giving ``m + 2k`` padded
knots and ``m + k - 1`` basis functions.  Outside the interior range the
basis of the first/last interval is evaluated as a polynomial, so splines
extend their boundary pieces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .poly import check_knots


@dataclass(frozen=True)
class ExtendedKnotVector:
    interior: np.ndarray
    order: int
    padded: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        interior = check_knots(self.interior)
        if self.order < 0:
            raise ValueError("order must be non-negative")
        padded = np.concatenate(
            [np.full(self.order, interior[0]), interior, np.full(self.order, interior[-1])]
        )
        object.__setattr__(self, "interior", interior)
        object.__setattr__(self, "padded", padded)

    @property
    def dim(self) -> int:
        """Number of basis functions."""
        return len(self.padded) - self.order - 1

    @property
    def lo(self) -> float:
        return float(self.interior[0])

    @property
    def hi(self) -> float:
        return float(self.interior[-1])

    def to_dict(self) -> dict:
        return {"interior": self.interior.tolist(), "order": self.order}

    @classmethod
    def from_dict(cls, d: dict) -> "ExtendedKnotVector":
        return cls(np.asarray(d["interior"], dtype=float), int(d["order"]))


def uniform_knots(lo: float, hi: float, m: int, k: int) -> ExtendedKnotVector:
    return ExtendedKnotVector(np.linspace(lo, hi, m), k)


def _spans(kv: ExtendedKnotVector, x: np.ndarray) -> np.ndarray:
    # index s into padded with padded[s] <= x < padded[s + 1], clamped to valid intervals
    m = len(kv.interior)
    j = np.searchsorted(kv.interior, x, side="right") - 1
    return np.clip(j, 0, m - 2) + kv.order


def _local_basis(t: np.ndarray, s: np.ndarray, x: np.ndarray, p: int) -> np.ndarray:
    """Nonzero degree-``p`` basis values on span ``s``: shape (N, p + 1).

    Column ``r`` is basis function ``s - p + r``.  Triangular Cox-de Boor
    scheme; denominators are positive for every valid span.
    """
    n = x.shape[0]
    vals = np.zeros((n, p + 1))
    vals[:, 0] = 1.0
    left = np.empty((n, p + 1))
    right = np.empty((n, p + 1))
    for d in range(1, p + 1):
        left[:, d] = x - t[s + 1 - d]
        right[:, d] = t[s + d] - x
        saved = np.zeros(n)
        for r in range(d):
            temp = vals[:, r] / (right[:, r + 1] + left[:, d - r])
            vals[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, d - r] * temp
        vals[:, d] = saved
    return vals


def basis_local(kv: ExtendedKnotVector, x):
    """Active basis functions at ``x``.

    Returns ``(first, vals)`` where ``vals[n, r]`` is basis function
    ``first[n] + r`` evaluated at ``x[n]``; only ``k + 1`` are nonzero.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    s = _spans(kv, x)
    return s - kv.order, _local_basis(kv.padded, s, x, kv.order)


def basis_local_derivative(kv: ExtendedKnotVector, x):
    """Like :func:`basis_local` but returns first derivatives."""
    k = kv.order
    if k < 1:
        raise ValueError("basis derivative needs order k >= 1")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    t = kv.padded
    s = _spans(kv, x)
    # degree k-1 functions s-k+1 .. s, padded with zeros on both sides
    low = np.zeros((x.shape[0], k + 2))
    low[:, 1:-1] = _local_basis(t, s, x, k - 1)
    first = s - k
    dvals = np.empty((x.shape[0], k + 1))
    for r in range(k + 1):
        i = first + r
        d1 = t[i + k] - t[i]
        d2 = t[i + k + 1] - t[i + 1]
        a = np.divide(low[:, r], d1, out=np.zeros_like(d1), where=d1 > 0)
        b = np.divide(low[:, r + 1], d2, out=np.zeros_like(d2), where=d2 > 0)
        dvals[:, r] = k * (a - b)
    return first, dvals


def _scatter(first, vals, dim):
    n, w = vals.shape
    out = np.zeros((n, dim))
    rows = np.arange(n)[:, None]
    out[rows, first[:, None] + np.arange(w)] = vals
    return out


def basis_matrix(kv: ExtendedKnotVector, x) -> np.ndarray:
    """Dense ``(N, dim)`` collocation matrix."""
    first, vals = basis_local(kv, x)
    return _scatter(first, vals, kv.dim)


def basis_derivative_matrix(kv: ExtendedKnotVector, x) -> np.ndarray:
    first, vals = basis_local_derivative(kv, x)
    return _scatter(first, vals, kv.dim)


def basis_eval(kv: ExtendedKnotVector, x: float) -> np.ndarray:
    """All ``dim`` basis values at a scalar ``x``."""
    return basis_matrix(kv, [x])[0]


def basis_derivative(kv: ExtendedKnotVector, x: float) -> np.ndarray:
    return basis_derivative_matrix(kv, [x])[0]


@dataclass(frozen=True)
class Spline1D:
    kv: ExtendedKnotVector
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        if coeffs.shape != (self.kv.dim,):
            raise ValueError(f"expected {self.kv.dim} coefficients, got {coeffs.shape}")
        object.__setattr__(self, "coeffs", coeffs)

    def __call__(self, x):
        return spline_eval(self, x)

    def derivative(self, x):
        first, dvals = basis_local_derivative(self.kv, x)
        out = np.einsum("nr,nr->n", dvals, self.coeffs[first[:, None] + np.arange(dvals.shape[1])])
        return out[0] if np.ndim(x) == 0 else out


def spline_eval(s: Spline1D, x):
    """Spline value using only the ``k + 1`` active basis functions."""
    first, vals = basis_local(s.kv, x)
    out = np.einsum("nr,nr->n", vals, s.coeffs[first[:, None] + np.arange(vals.shape[1])])
    return float(out[0]) if np.ndim(x) == 0 else out


def fit_spline(kv: ExtendedKnotVector, x, y) -> Spline1D:
    """Least-squares (minimum-norm) spline through the samples."""
    coeffs, *_ = np.linalg.lstsq(basis_matrix(kv, x), np.asarray(y, dtype=float), rcond=None)
    return Spline1D(kv, coeffs)
