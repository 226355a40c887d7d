"""Divided differences, Newton polynomials and segment lookup.

Index convention
----------------
Mathematical write-ups number knots ``tau_1 .. tau_m`` and segments
``j = 1 .. m - k``.  Everything in this package is 0-based: knot ``i`` is
``knots[i]`` and segment ``j`` covers ``[knots[j], knots[j + 1])`` with the
order-``k`` stencil ``knots[j : j + k + 1]``.  A 1-based segment ``j`` is
therefore returned here as ``j - 1``.  This is the only place the mapping
happens.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np

from .errors import DuplicateKnotError, EmptyInputError

DUPLICATE_RTOL = 1e-12


def _as_points(x, y=None):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise ValueError("abscissae must be one-dimensional")
    if x.size == 0:
        raise EmptyInputError("at least one point is required")
    if y is not None:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if y.shape != x.shape:
            raise ValueError(f"x and y lengths differ ({x.size} vs {y.size})")
    return x, y


def check_distinct(x) -> None:
    """Raise :class:`DuplicateKnotError` if any two abscissae coincide.

    Points closer than ``1e-12 * (max - min)`` count as duplicates.  Order
    does not matter.
    """
    x = np.sort(np.asarray(x, dtype=float))
    if x.size < 2:
        return
    gaps = np.diff(x)
    tol = DUPLICATE_RTOL * (x[-1] - x[0])
    if np.any(gaps <= tol):
        i = int(np.argmin(gaps))
        raise DuplicateKnotError(
            f"duplicate abscissae {x[i]!r} and {x[i + 1]!r}; distinct knots required"
        )


def check_knots(knots) -> np.ndarray:
    """Validate a strictly increasing knot sequence with at least 2 entries."""
    knots = np.asarray(knots, dtype=float)
    if knots.ndim != 1 or knots.size < 2:
        raise ValueError("a knot set needs at least two knots")
    if not np.all(np.diff(knots) > 0):
        raise DuplicateKnotError("knots must be strictly increasing")
    return knots


def divided_differences(x, y) -> np.ndarray:
    """Top row of the divided-difference table.

    Returns ``([x0]f, [x0, x1]f, ..., [x0 .. x_{m-1}]f)`` computed by the
    standard recursion, column by column, in place.
    """
    x, y = _as_points(x, y)
    check_distinct(x)
    table = y.copy()
    m = x.size
    for order in range(1, m):
        # table[i] holds [x_{i-order+1} .. x_i]f before the update
        table[order:] = (table[order:] - table[order - 1:-1]) / (x[order:] - x[: m - order])
    return table


@dataclass(frozen=True)
class NewtonPoly:
    """Newton-form polynomial ``c0 + c1 (x - b0) + c2 (x - b0)(x - b1) + ...``."""

    base_points: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        if len(self.base_points) != len(self.coeffs):
            raise ValueError("base_points and coeffs must have equal length")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        return newton_eval(self, x)


def newton_fit(x, y) -> NewtonPoly:
    """Interpolating polynomial through ``(x_i, y_i)`` in Newton form."""
    x, y = _as_points(x, y)
    return NewtonPoly(base_points=x.copy(), coeffs=divided_differences(x, y))


def newton_eval(p: NewtonPoly, x):
    """Evaluate ``p`` at scalar or array ``x`` with nested multiplication."""
    c, b = p.coeffs, p.base_points
    out = c[-1] * np.ones_like(np.asarray(x, dtype=float))
    for i in range(len(c) - 2, -1, -1):
        out = c[i] + (x - b[i]) * out
    if np.ndim(out) == 0:
        return float(out)
    return out


def locate_segment(knots, x: float, k: int, counter: list | None = None) -> int:
    """Index ``j`` of the order-``k`` stencil ``knots[j : j + k + 1]`` for ``x``.

    ``j`` satisfies ``knots[j] <= x < knots[j + 1]`` and is clamped to
    ``0 .. m - k - 1``; points left of the first knot use ``j = 0`` and
    points at or beyond ``knots[m - k - 1]`` use the last stencil.

    Binary search.  Pass a list as ``counter`` to have the number of knot
    comparisons appended to it (at most ``ceil(log2(m)) + 1``); without it
    the C ``bisect`` routine does the work.
    """
    m = len(knots)
    last = m - k - 1
    if last < 0:
        raise ValueError(f"need at least k+1={k + 1} knots, got {m}")
    if counter is None:
        j = bisect.bisect_right(knots, x) - 1
    else:
        lo, hi, n = 0, m, 0
        while lo < hi:
            mid = (lo + hi) // 2
            n += 1
            if x < knots[mid]:
                hi = mid
            else:
                lo = mid + 1
        counter.append(n)
        j = lo - 1
    return min(max(j, 0), last)


def locate_segments(knots, x, k: int) -> np.ndarray:
    """Vectorised :func:`locate_segment` over an array of queries."""
    knots = np.asarray(knots, dtype=float)
    j = np.searchsorted(knots, np.asarray(x, dtype=float), side="right") - 1
    return np.clip(j, 0, len(knots) - k - 1)
