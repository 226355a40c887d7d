import numpy as np
import pytest

from darek.kan import init_network
from darek.spline import ExtendedKnotVector, fit_spline

_ACCEPTANCE = {}


def record_acceptance(number: int, passed: bool, detail: str) -> None:
    _ACCEPTANCE[number] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def polynomial_net(widths, first_knots, edge_fns, n_knots=7, k=3, hidden_range=(-3.0, 3.0)):
    """Network whose edge ``(l, i, j)`` reproduces ``edge_fns[l](i, j, x)``.

    Every edge function must be a polynomial of degree <= k so that the
    least-squares spline fit is exact everywhere, extrapolation included.
    """
    net = init_network(widths, first_knots, np.array(first_knots).T, n_knots, k)
    for l, layer in enumerate(net.layers):
        if l > 0:
            layer.knots = [ExtendedKnotVector(np.linspace(*hidden_range, n_knots), k)] * layer.n_in
        for i in range(layer.n_out):
            for j, kv in enumerate(layer.knots):
                xs = np.linspace(kv.lo, kv.hi, 4 * kv.dim)
                layer.coeffs[i, j] = fit_spline(kv, xs, edge_fns[l](i, j, xs)).coeffs
    return net
