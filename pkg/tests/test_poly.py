import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from darek.errors import DuplicateKnotError, EmptyInputError
from darek.oracle import lagrange_eval
from darek.poly import check_knots, divided_differences, locate_segment, locate_segments, newton_eval, newton_fit


def test_divided_differences_of_square():
    np.testing.assert_allclose(divided_differences([0, 1, 3], [0, 1, 9]), [0, 1, 1], atol=1e-15)


def test_single_point_and_constant():
    assert divided_differences([5.0], [7.0]).tolist() == [7.0]
    np.testing.assert_array_equal(divided_differences([0, 1, 2, 5], [3, 3, 3, 3]), [3, 0, 0, 0])


def test_duplicates_rejected():
    with pytest.raises(DuplicateKnotError):
        divided_differences([0, 1, 1], [0, 1, 2])
    with pytest.raises(DuplicateKnotError):
        newton_fit([0.0, 1.0, 1.0 + 1e-14], [0, 0, 0])


def test_empty_rejected():
    with pytest.raises(EmptyInputError):
        newton_fit([], [])


def test_knot_set_validation():
    with pytest.raises(ValueError):
        check_knots([1.0])
    with pytest.raises(ValueError):
        check_knots([0.0, 2.0, 1.0])


def test_newton_eval_examples():
    p = newton_fit([0, 1, 3], [0, 1, 9])
    assert newton_eval(p, 2.0) == pytest.approx(4.0, abs=1e-15)
    assert newton_eval(p, 0.0) == p.coeffs[0]
    g = np.linspace(-5, 5, 101)
    np.testing.assert_allclose(newton_eval(p, g), g**2, atol=1e-9)
    assert newton_eval(newton_fit([2.0], [5.0]), 123.0) == 5.0


def test_random_cubic_reproduced(rng):
    c = rng.normal(size=4)
    xs = np.sort(rng.uniform(-10, 10, 4))
    p = newton_fit(xs, np.polyval(c, xs))
    g = np.linspace(-10, 10, 200)
    ref = np.polyval(c, g)
    assert np.max(np.abs(newton_eval(p, g) - ref) / np.maximum(1.0, np.abs(ref))) < 1e-9


@settings(max_examples=50, deadline=None)
@given(st.permutations(list(range(5))), st.integers(0, 2**31 - 1))
def test_top_coefficient_symmetric(perm, seed):
    r = np.random.default_rng(seed)
    x = np.sort(r.uniform(-3, 3, 5)) + np.arange(5)  # well separated
    y = r.normal(size=5)
    a = divided_differences(x, y)[-1]
    b = divided_differences(x[list(perm)], y[list(perm)])[-1]
    assert b == pytest.approx(a, rel=1e-9, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_newton_matches_lagrange(n, seed):
    r = np.random.default_rng(seed)
    x = np.cumsum(r.uniform(0.2, 1.0, n))
    y = r.normal(size=n)
    g = np.linspace(x[0], x[-1], 50)
    np.testing.assert_allclose(newton_eval(newton_fit(x, y), g), lagrange_eval(x, y, g), atol=1e-9, rtol=1e-9)


def test_locate_segment_examples():
    # 1-based segments 2, 2, 1
    assert locate_segment([0, 1, 2, 3], 1.5, 1) == 1
    assert locate_segment([0, 1, 2, 3, 4], 3.9, 3) == 1
    assert locate_segment([0, 1, 2, 3], -5.0, 1) == 0
    assert locate_segment([0, 1, 2, 3], 99.0, 1) == 2


def test_locate_segment_needs_stencil():
    with pytest.raises(ValueError):
        locate_segment([0, 1, 2], 0.5, 3)


def _linear_scan(knots, x, k):
    j = 0
    for i, t in enumerate(knots):
        if t <= x:
            j = i
    return min(j, len(knots) - k - 1)


def test_locate_segment_agrees_with_linear_scan(rng):
    knots = np.sort(rng.uniform(-5, 5, 40))
    kl = knots.tolist()
    qs = rng.uniform(-7, 7, 1000)
    for k in (1, 3):
        expect = [_linear_scan(kl, q, k) for q in qs]
        assert [locate_segment(kl, q, k) for q in qs] == expect
        assert [locate_segment(kl, q, k, []) for q in qs] == expect
        assert locate_segments(knots, qs, k).tolist() == expect


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 2000), st.floats(-2, 2))
def test_comparison_count_logarithmic(m, frac):
    knots = np.linspace(0, 1, m).tolist()
    counter = []
    locate_segment(knots, frac, 1, counter)
    assert counter[0] <= int(np.ceil(np.log2(m))) + 1
