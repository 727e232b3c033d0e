"""Adaptive Gauss-Kronrod (7/15) quadrature with a vectorized integrand.

All intervals that still need refinement are evaluated in one call of the
integrand, so ``f`` must accept an array of abscissae and return an array of
the same shape.  Local tolerance is allotted in proportion to interval length.
"""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
# Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7)
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])          # 15 nodes, ascending
_W15 = np.concatenate([_WK[:-1], _WK[::-1]])
_W7 = np.zeros(15)
_W7[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])


class QuadResult(NamedTuple):
    value: float
    error: float
    intervals: int
    converged: bool


def gauss_kronrod(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float = 1e-10,
    breakpoints=(),
    max_intervals: int = 4000,
) -> QuadResult:
    """Integrate ``f`` over ``[a, b]`` to absolute tolerance ``tol``.

    ``breakpoints`` split the range up front, which is how kinks and
    support boundaries of the integrand should be passed in.
    """
    if b == a:
        return QuadResult(0.0, 0.0, 0, True)
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ValueError("only finite ranges are supported")
    cuts = np.unique(np.concatenate([[a, b], [p for p in breakpoints if a < p < b]]))
    lo, hi = cuts[:-1], cuts[1:]
    total_len = b - a
    value = 0.0
    error = 0.0
    done = 0
    while lo.size:
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        x = mid[:, None] + half[:, None] * _NODES[None, :]
        fx = np.asarray(f(x), dtype=float).reshape(x.shape)
        k15 = half * (fx @ _W15)
        g7 = half * (fx @ _W7)
        err = np.abs(k15 - g7)
        ok = err <= tol * (hi - lo) / total_len
        # intervals that cannot shrink further are accepted as they are
        ok |= (hi - lo) <= 1e-14 * max(1.0, abs(a), abs(b))
        value += k15[ok].sum()
        error += err[ok].sum()
        done += int(ok.sum())
        lo, hi = lo[~ok], hi[~ok]
        if done + 2 * lo.size > max_intervals:
            value += k15[~ok].sum()
            error += err[~ok].sum()
            return QuadResult(float(value), float(error), done + lo.size, False)
        m = 0.5 * (lo + hi)
        lo, hi = np.concatenate([lo, m]), np.concatenate([m, hi])
    return QuadResult(float(value), float(error), done, True)
