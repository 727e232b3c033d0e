"""Exact reproductions of the two counterexamples.

* Kijima type II with a uniform(0, 1) new-unit law, degrees ``(1, 0)`` and
  an Exponential(1) stopping time: the log-convexity margin at ``n = 0`` is
  positive but the one at ``n = 1`` is negative, so ``N(T)`` is not
  discrete DFR although the Kijima I analogue is.
* ``X_1 = Y``, ``X_2 = W_1``, ``X_3 = W_2 / Y`` with ``Y = 1 + Bernoulli(p)``:
  ``Cov(X_1, X_3) < 0``, so the vector is not associated.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._quadrature import gauss_kronrod
from .estimate import estimate_sequence_mc, estimate_sequence_quadrature
from .survival import Exponential, Lifetime, Status, UniformZeroTo
from .vamodels import DegreeSequence, KijimaII, VirtualAgeModel

__all__ = [
    "Constant",
    "CounterexampleReport",
    "ConsistencyError",
    "kijima2_counterexample_model",
    "kijima2_counterexample",
    "mixing_sampler",
    "mixing_cov_analytic",
    "mixing_cov_enumerated",
    "association_counterexample",
    "exp_integral_series",
    "kijima2_remark42",
    "association_remark54",
]

TAYLOR_CUTOFF = 1e-4


class ConsistencyError(RuntimeError):
    """Two independent computations of the same constant disagree."""


@dataclass(frozen=True)
class Constant:
    name: str
    value: float
    method: str


@dataclass(frozen=True)
class CounterexampleReport:
    name: str
    constants: tuple
    margins: dict
    claim: str
    verdict: str
    replication: dict = field(default_factory=dict)

    def value(self, name: str) -> float:
        for c in self.constants:
            if c.name == name:
                return c.value
        raise KeyError(name)

    def to_dict(self):
        return {
            "name": self.name,
            "constants": [
                {"name": c.name, "value": c.value, "method": c.method} for c in self.constants
            ],
            "margins": self.margins,
            "claim": self.claim,
            "verdict": self.verdict,
            "replication": self.replication,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def to_text(self) -> str:
        lines = [f"{self.name}: {self.claim}"]
        width = max(len(c.name) for c in self.constants)
        for c in self.constants:
            lines.append(f"  {c.name:<{width}}  {c.value: .10f}  [{c.method}]")
        for key, m in self.margins.items():
            lines.append(f"  {key:<{width}}  {m['value']: .10f}  {m['verdict']}")
        for key, val in self.replication.items():
            lines.append(f"  {key}: {val}")
        lines.append(f"  verdict: {self.verdict}")
        return "\n".join(lines)


def kijima2_counterexample_model() -> VirtualAgeModel:
    return VirtualAgeModel(UniformZeroTo(1.0), KijimaII(), DegreeSequence([1.0, 0.0]))


def exp_integral_series() -> float:
    """``sum_{k>=1} 1/(k k!)``, which equals the integral of ``(e^t - 1)/t`` over ``[0, 1]``."""
    total, term, k = 0.0, 1.0, 1
    while True:
        term /= k  # 1/k!
        inc = term / k
        total += inc
        if inc < 1e-18:
            return total
        k += 1


def _shrink_factor(w):
    """``(1 - e^{-w}) / w`` with a Taylor series near ``w = 0``."""
    w = np.asarray(w, dtype=float)
    small = w < TAYLOR_CUTOFF
    safe = np.where(small, 1.0, w)
    direct = -np.expm1(-safe) / safe
    series = 1.0 - w / 2.0 + w * w / 6.0 - w ** 3 / 24.0
    return np.where(small, series, direct)


def kijima2_counterexample(tol: float = 1e-9, mc_samples: Optional[int] = None, seed: int = 0,
                     threads: Optional[int] = None) -> CounterexampleReport:
    """Constants and log-convexity margins of the Kijima II counterexample.

    ``p_2`` is computed twice, by series and by adaptive quadrature of the
    one-dimensional integrand ``e^{-x} (1 - e^{-(1-x)}) / (1 - x)``; the two
    must agree to ``tol``.  With ``mc_samples`` a Monte Carlo replication of
    the same model is attached.
    """
    if not 0 < tol <= 1e-4:
        raise ValueError("tol must lie in (0, 1e-4]")
    p1 = -math.expm1(-1.0)
    p2_series = math.exp(-1.0) * exp_integral_series()
    res = gauss_kronrod(lambda x: np.exp(-x) * _shrink_factor(1.0 - x), 0.0, 1.0, tol=tol * 1e-2)
    p2_quad = res.value
    if abs(p2_series - p2_quad) > tol:
        raise ConsistencyError(f"series {p2_series!r} and quadrature {p2_quad!r} differ by more than {tol}")
    p2 = p2_series
    p3 = p1 * p2
    m0 = p2 - p1 * p1
    m1 = p1 * p3 - p2 * p2

    def verdict(m):
        return (Status.HOLDS if m >= 0 else Status.VIOLATED).value

    constants = (
        Constant("p1", p1, "closed-form"),
        Constant("p2", p2, "series"),
        Constant("p2_quad", p2_quad, "quadrature"),
        Constant("p3", p3, "closed-form (p1*p2)"),
        Constant("p1^2", p1 * p1, "closed-form"),
    )
    margins = {
        "margin n=0": {"value": m0, "verdict": verdict(m0)},
        "margin n=1": {"value": m1, "verdict": verdict(m1)},
    }
    replication = {}
    if mc_samples:
        est = estimate_sequence_mc(kijima2_counterexample_model(), Exponential(1.0), 3, mc_samples, seed=seed,
                                   threads=threads)
        exact = (1.0, p1, p2, p3)
        within = [bool(abs(est.p[k] - exact[k]) <= 3 * est.se[k]) for k in (1, 2, 3)]
        replication = {
            "mc_p": [float(v) for v in est.p],
            "mc_se": [float(v) for v in est.se],
            "within_3se": within,
            "seed": seed,
            "n_samples": mc_samples,
        }
    claim = "discrete DFR holds at n=0 and fails at n=1"
    holds = m0 >= 0 and m1 < 0
    return CounterexampleReport(
        "kijima2", constants, margins, claim, "VIOLATED" if holds else "NOT REPRODUCED", replication)


def mixing_sampler(p: float, w: Lifetime):
    """Joint sampler of ``(X_1, X_2, X_3) = (Y, W_1, W_2 / Y)``, ``Y = 1 + Bernoulli(p)``."""
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")

    def sample(rng, size):
        y = 1.0 + (rng.random(size) < p)
        w1 = np.asarray(w.sample(rng, size), dtype=float)
        w2 = np.asarray(w.sample(rng, size), dtype=float)
        return np.column_stack([y, w1, w2 / y])

    return sample


def mixing_cov_analytic(p: float, mean_w: float) -> float:
    """``Cov(X_1, X_3) = -E[W] p (1 - p) / 2``."""
    return -mean_w * p * (1.0 - p) / 2.0


def mixing_cov_enumerated(p: float, mean_w: float) -> float:
    """Same covariance by summing over the two values of ``Y``."""
    ys = (1.0, 2.0)
    ps = (1.0 - p, p)
    e_y = sum(q * y for y, q in zip(ys, ps))
    e_inv = sum(q / y for y, q in zip(ys, ps))
    e_x1x3 = sum(q * y * mean_w / y for y, q in zip(ys, ps))
    return e_x1x3 - e_y * mean_w * e_inv


def association_counterexample(p: float = 0.5, w: Optional[Lifetime] = None, n: int = 1_000_000,
                         seed: int = 0) -> CounterexampleReport:
    """Analytic against empirical ``Cov(X_1, X_3)``.

    The verdict is REFUTED when the empirical covariance is significantly
    negative (below ``-3 se``) and within ``3 se`` of the analytic value;
    INCONCLUSIVE when it is not significantly negative.
    """
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    w = Exponential(1.0) if w is None else w
    mean_w = float(w.mean())
    if not (mean_w > 0 and math.isfinite(mean_w)):
        raise ValueError("W must have a finite positive mean")
    analytic = mixing_cov_analytic(p, mean_w)
    X = mixing_sampler(p, w)(np.random.default_rng(seed), n)
    x1, x3 = X[:, 0], X[:, 2]
    prod = (x1 - x1.mean()) * (x3 - x3.mean())
    emp = float(prod.sum() / (n - 1))
    se = float(prod.std(ddof=1) / math.sqrt(n))
    significant = emp < -3.0 * se
    agrees = abs(emp - analytic) <= 3.0 * se
    if significant and agrees and analytic < 0:
        verdict = "REFUTED"
    elif not significant:
        verdict = "INCONCLUSIVE"
    else:
        verdict = "MISMATCH"
    constants = (
        Constant("cov_analytic", analytic, "closed-form"),
        Constant("cov_enumerated", mixing_cov_enumerated(p, mean_w), "two-point enumeration"),
        Constant("cov_empirical", emp, "monte-carlo"),
        Constant("se", se, "monte-carlo"),
    )
    margins = {"cov(X1,X3)": {"value": emp, "verdict": verdict}}
    return CounterexampleReport(
        "association", constants, margins, "(X1, X3) is not associated", verdict,
        {"p": p, "n": n, "seed": seed})


# names used by the external interface
kijima2_remark42 = kijima2_counterexample
association_remark54 = association_counterexample
