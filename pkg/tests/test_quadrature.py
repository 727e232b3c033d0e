import math

import numpy as np
import pytest
from scipy import integrate

from dfrkit._quadrature import gauss_kronrod


@pytest.mark.parametrize(
    "f, a, b",
    [
        (np.exp, 0.0, 1.0),
        (lambda x: np.sin(10 * x) ** 2, 0.0, 3.0),
        (np.sqrt, 0.0, 1.0),
        (lambda x: np.abs(x - 0.3), 0.0, 1.0),
        (lambda x: 1.0 / (1e-3 + x * x), -1.0, 1.0),
    ],
)
def test_agrees_with_quadpack(f, a, b):
    ref, _ = integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-13, limit=500)
    res = gauss_kronrod(f, a, b, tol=1e-10)
    assert res.converged
    assert res.value == pytest.approx(ref, abs=1e-9)


def test_polynomial_exact_in_one_panel():
    # both rules are exact up to degree 13, so the error estimate vanishes
    res = gauss_kronrod(lambda x: x ** 13, 0.0, 1.0, tol=1e-14)
    assert res.value == pytest.approx(1.0 / 14.0, rel=1e-14)
    assert res.intervals == 1
    # Kronrod alone is exact to degree 22 once the range is refined
    res = gauss_kronrod(lambda x: x ** 20, 0.0, 1.0, tol=1e-14)
    assert res.value == pytest.approx(1.0 / 21.0, rel=1e-14)


def test_breakpoints_help_kinks():
    f = lambda x: np.where(x < 0.37, 1.0, 0.0)
    res = gauss_kronrod(f, 0.0, 1.0, tol=1e-12, breakpoints=[0.37])
    assert res.value == pytest.approx(0.37, abs=1e-12)
    assert res.intervals == 2


def test_empty_range():
    assert gauss_kronrod(np.exp, 1.0, 1.0).value == 0.0


def test_reports_nonconvergence():
    res = gauss_kronrod(lambda x: np.sin(1.0 / np.maximum(x, 1e-300)), 0.0, 1.0, tol=1e-14, max_intervals=50)
    assert not res.converged
