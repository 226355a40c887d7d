"""Independent reference computations used to check the main code paths.

Nothing here shares code with :mod:`darek.poly` or :mod:`darek.bound`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class WorstCaseFn:
    """``L * x**(k+1) / (k+1)!`` plus an optional degree-<=k polynomial.

    Its ``(k+1)``-th derivative is identically ``L``, which makes the
    polynomial interpolation error bound an equality.
    """

    L: float
    k: int
    offset: tuple = ()  # monomial coefficients, lowest degree first

    def __post_init__(self):
        if self.L < 0:
            raise ValueError("L must be non-negative")
        if len(self.offset) > self.k + 1:
            raise ValueError("offset polynomial must have degree <= k")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = self.L * x ** (self.k + 1) / math.factorial(self.k + 1)
        for p, c in enumerate(self.offset):
            out = out + c * x**p
        return out


def worst_case_fn(L: float, k: int, offset=()) -> WorstCaseFn:
    return WorstCaseFn(float(L), int(k), tuple(offset))


def lagrange_eval(xs, ys, x):
    """Interpolant through ``(xs, ys)`` evaluated in Lagrange form."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(set(xs.tolist())) != xs.size:
        raise ValueError("Lagrange interpolation needs distinct abscissae")
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for i in range(xs.size):
        term = np.full_like(x, ys[i])
        for j in range(xs.size):
            if j != i:
                term = term * (x - xs[j]) / (xs[i] - xs[j])
        total = total + term
    return total


def direct_interp_bound(stencil, x, k, L):
    """``L / (k+1)! * |prod(x - stencil)|`` written out literally."""
    prod = 1.0
    for t in stencil:
        prod *= x - t
    return L / math.factorial(k + 1) * abs(prod)


def _central_derivative(f, x, order: int, h: float):
    # half-step central difference, second-order accurate for any order
    if order == 0:
        return f(x)
    total = 0.0
    for i in range(order + 1):
        total = total + (-1) ** i * math.comb(order, i) * f(x + (order / 2 - i) * h)
    return total / h**order


def finite_diff_lipschitz(f, k: int, grid) -> float:
    """Lower estimate of the order-``k`` Lipschitz constant of ``f`` on ``grid``.

    Largest slope of the ``(k-1)``-th derivative between grid points.  Only
    adjacent pairs are checked: the slope across several intervals is an
    average of adjacent slopes, so it can never be larger.  The derivative
    uses central differences with step ``(1e-5 * span) ** (1 / (k-1))``
    scaled to the grid span (``1e-5 * span`` for a first derivative).
    """
    grid = np.sort(np.asarray(grid, dtype=float))
    span = grid[-1] - grid[0]
    r = k - 1
    h = span * 1e-5 ** (1.0 / r) if r > 0 else 0.0
    d = np.asarray(_central_derivative(f, grid, r, h), dtype=float)
    return float(np.max(np.abs(np.diff(d)) / np.diff(grid)))
