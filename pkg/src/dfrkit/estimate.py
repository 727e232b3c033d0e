"""Estimation of ``p_n = P(N(T) >= n)`` and discrete-DFR (log-convexity) checks.

For a random time ``T`` independent of the counting process,
``P(N(T) >= n) = E[sf_T(S_n)]``.  Three routes are provided: Monte Carlo
with common random numbers across ``n``, nested adaptive quadrature for
``n <= 3`` under deterministic repair degrees, and the closed form for a
Poisson process stopped at an exponential time.
"""

from __future__ import annotations

import csv
import enum
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy import stats

from ._errors import UnsupportedError
from ._quadrature import gauss_kronrod
from .survival import ClassVerdict, Lifetime, Status
from .vamodels import VirtualAgeModel, sample_trajectories

__all__ = [
    "RandomTime",
    "Kind",
    "SurvivalSequenceEstimate",
    "LogConvexityReport",
    "estimate_sequence_mc",
    "estimate_sequence_quadrature",
    "closed_form_poisson_exp",
    "check_discrete_dfr",
    "chunk_rng",
]

DEFAULT_CHUNK = 1 << 16
EXACT_TOL = 1e-12
PLAIN_BUDGET = 24


@dataclass(frozen=True)
class RandomTime:
    """The stopping time ``T``; ``dfr_claim`` optionally records a DFR check of its law."""

    law: Lifetime
    dfr_claim: Optional[ClassVerdict] = None

    def sf(self, t):
        return self.law.sf(t)


def _as_random_time(T) -> RandomTime:
    return T if isinstance(T, RandomTime) else RandomTime(T)


class Kind(str, enum.Enum):
    MC = "MC"
    QUADRATURE = "QUADRATURE"
    CLOSED_FORM = "CLOSED_FORM"


@dataclass(frozen=True)
class SurvivalSequenceEstimate:
    """Estimates ``p[0..n_max]`` with ``p[0] = 1``.

    ``cov`` is the covariance matrix of the per-trajectory values
    ``sf_T(S_n)`` (Monte Carlo only); the covariance of ``p`` itself is
    ``cov / meta['n_samples']``.
    """

    p: np.ndarray
    se: np.ndarray
    kind: Kind
    cov: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @property
    def n_max(self) -> int:
        return self.p.size - 1

    @property
    def exact(self) -> bool:
        return self.kind is not Kind.MC

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "p_hat", "se", "kind", "seed"])
        seed = self.meta.get("seed", "")
        for n, (p, se) in enumerate(zip(self.p, self.se)):
            w.writerow([n, repr(float(p)), repr(float(se)), self.kind.value, seed])

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "p": [float(v) for v in self.p],
            "se": [float(v) for v in self.se],
            "cov": None if self.cov is None else self.cov.tolist(),
            "meta": self.meta,
        }


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    """Independent generator for one chunk, a pure function of ``(seed, chunk)``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk,)))


def _no_common_atom(model: VirtualAgeModel, T: RandomTime) -> None:
    if T.law.atom_at_zero > 0 and model.base.atom_at_zero > 0:
        warnings.warn(
            "T and X_1 both put positive mass at 0; P(N(T) >= n) = E[sf_T(S_n)] may not hold",
            RuntimeWarning,
            stacklevel=3,
        )


def estimate_sequence_mc(
    model: VirtualAgeModel,
    T: Union[RandomTime, Lifetime],
    n_max: int,
    n_samples: int,
    seed: int = 0,
    chunk_size: int = DEFAULT_CHUNK,
    threads: Optional[int] = None,
) -> SurvivalSequenceEstimate:
    """Monte Carlo estimate of ``p_0..p_{n_max}`` with common random numbers.

    Every trajectory contributes ``sf_T(S_n)`` for all ``n`` at once.  Work is
    split into chunks of ``chunk_size`` paths, chunk ``i`` drawing from
    ``chunk_rng(seed, i)``; chunk sums are merged in chunk order, so the
    result depends on ``(seed, n_samples, chunk_size)`` and not on ``threads``.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    T = _as_random_time(T)
    _no_common_atom(model, T)
    sizes = [chunk_size] * (n_samples // chunk_size)
    if n_samples % chunk_size:
        sizes.append(n_samples % chunk_size)

    def run(i):
        traj = sample_trajectories(model, n_max, sizes[i], chunk_rng(seed, i))
        vals = np.asarray(T.sf(traj.s), dtype=float)
        vals[:, 0] = 1.0
        return vals.sum(axis=0), vals.T @ vals, int(traj.absorbed.sum())

    workers = threads or os.cpu_count() or 1
    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(i) for i in range(len(sizes))]

    total = np.sum(np.stack([p[0] for p in parts]), axis=0)
    cross = np.sum(np.stack([p[1] for p in parts]), axis=0)
    absorbed = sum(p[2] for p in parts)
    n = float(n_samples)
    p = total / n
    cov = (cross - n * np.outer(p, p)) / (n - 1.0)
    cov[0, :] = cov[:, 0] = 0.0
    se = np.sqrt(np.maximum(np.diag(cov), 0.0) / n)
    p[0] = 1.0
    meta = {
        "seed": seed,
        "n_samples": n_samples,
        "chunk_size": chunk_size,
        "absorbed_paths": absorbed,
    }
    return SurvivalSequenceEstimate(p, se, Kind.MC, cov, meta)


def _smooth_map(w):
    # u = w^4 (35 - 84 w + 70 w^2 - 20 w^3): u' vanishes to third order at both ends,
    # which tames power and square-root endpoint singularities of the level integrands
    return w ** 4 * (35.0 + w * (-84.0 + w * (70.0 - 20.0 * w)))


def _smooth_jac(w):
    return 140.0 * (w * (1.0 - w)) ** 3


def estimate_sequence_quadrature(
    model: VirtualAgeModel,
    T: Union[RandomTime, Lifetime],
    n_max: int,
    tol: float = 1e-9,
) -> SurvivalSequenceEstimate:
    """``p_n`` for ``n <= 3`` by nested adaptive Gauss-Kronrod quadrature.

    Each interarrival is written as the residual quantile at its virtual age
    of a uniform level ``u``, so every level integrates over ``[0, 1]`` and
    support boundaries of the conditional laws never appear as kinks.
    """
    if not model.deterministic:
        raise UnsupportedError("quadrature needs a deterministic repair policy")
    if not 1 <= n_max <= 3:
        raise UnsupportedError("quadrature supports 1 <= n_max <= 3")
    T = _as_random_time(T)
    _no_common_atom(model, T)
    base = model.base
    degrees = model.degrees(n_max)

    def level(k, depth, v, s, tol_k):
        # integral over u_k of the remaining nested expectation
        if not base.logsf(v) > -np.inf:
            # dead unit: every remaining interarrival is 0
            return float(T.sf(s))
        if k == depth:
            def f(u):
                return T.sf(s + base.residual_isf(u, v))
        else:
            def f(u):
                x = base.residual_isf(u, v)
                out = np.empty(u.shape)
                for idx, xi in np.ndenumerate(x):
                    vn = float(model.rule(v, xi, degrees[k - 1]))
                    out[idx] = level(k + 1, depth, vn, s + xi, tol_k)
                return out
        if mapped:
            return gauss_kronrod(lambda w: _smooth_jac(w) * f(_smooth_map(w)), 0.0, 1.0, tol=tol_k).value
        return gauss_kronrod(f, 0.0, 1.0, tol=tol_k).value

    # the variable is chosen once: plain u if the unnested p_1 integrand is
    # cheap in it, otherwise the endpoint-flattening map at every level
    probe = gauss_kronrod(lambda u: T.sf(base.residual_isf(u, 0.0)), 0.0, 1.0,
                         tol=tol / n_max, max_intervals=PLAIN_BUDGET)
    mapped = not probe.converged
    p = np.ones(n_max + 1)
    for depth in range(1, n_max + 1):
        p[depth] = level(1, depth, 0.0, 0.0, tol / depth)
    meta = {"tol": tol, "mapped": mapped}
    return SurvivalSequenceEstimate(p, np.zeros_like(p), Kind.QUADRATURE, None, meta)


def closed_form_poisson_exp(lam: float, mu: float, n_max: int) -> SurvivalSequenceEstimate:
    """``p_n = (lam / (lam + mu))**n``: Poisson(lam) arrivals stopped at Exponential(mu)."""
    if not (lam > 0 and mu > 0):
        raise ValueError("rates must be positive")
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    ratio = lam / (lam + mu)
    p = ratio ** np.arange(n_max + 1, dtype=float)
    meta = {"lambda": lam, "mu": mu}
    return SurvivalSequenceEstimate(p, np.zeros_like(p), Kind.CLOSED_FORM, None, meta)


@dataclass(frozen=True)
class LogConvexityReport:
    """Margins ``m_n = p_n p_{n+2} - p_{n+1}^2`` for ``n = 0..n_max-2``.

    Nonnegative margins are what discrete DFR requires.  Monte Carlo
    verdicts are three-valued: a margin is VIOLATED only below
    ``-z * margin_se`` and HOLDS only above ``+z * margin_se``.
    """

    margins: np.ndarray
    margin_se: np.ndarray
    verdicts: tuple
    alpha: float
    z: float
    kind: Kind
    meta: dict = field(default_factory=dict)

    @property
    def any_violated(self) -> bool:
        return any(v is Status.VIOLATED for v in self.verdicts)

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "margin", "margin_se", "verdict", "kind", "seed"])
        seed = self.meta.get("seed", "")
        for n, (m, se, v) in enumerate(zip(self.margins, self.margin_se, self.verdicts)):
            w.writerow([n, repr(float(m)), repr(float(se)), v.value, self.kind.value, seed])

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "alpha": self.alpha,
            "z": self.z,
            "rows": [
                {"n": n, "margin": float(m), "margin_se": float(se), "verdict": v.value}
                for n, (m, se, v) in enumerate(zip(self.margins, self.margin_se, self.verdicts))
            ],
            "meta": self.meta,
        }


def check_discrete_dfr(est: SurvivalSequenceEstimate, alpha: float = 0.01) -> LogConvexityReport:
    """Log-convexity check of ``p_n`` at every index.

    Margin standard errors come from the first-order delta method on the
    stored covariance.  The critical value ``z`` is the one-sided normal
    quantile at ``alpha / K`` for ``K`` margins, so the chance of any false
    VIOLATED verdict in a report is at most ``alpha``.
    """
    p = np.asarray(est.p, dtype=float)
    if p.size < 3:
        raise ValueError("need p_0..p_2 at least")
    k = p.size - 2
    n = np.arange(k)
    margins = p[n] * p[n + 2] - p[n + 1] ** 2
    if est.exact or est.cov is None:
        se = np.zeros(k)
        verdicts = tuple(Status.HOLDS if m >= -EXACT_TOL else Status.VIOLATED for m in margins)
        return LogConvexityReport(margins, se, verdicts, alpha, 0.0, est.kind, dict(est.meta))
    cov_p = est.cov / float(est.meta["n_samples"])
    se = np.empty(k)
    for i in range(k):
        g = np.array([p[i + 2], -2.0 * p[i + 1], p[i]])
        block = cov_p[i:i + 3, i:i + 3]
        se[i] = np.sqrt(max(float(g @ block @ g), 0.0))
    z = float(stats.norm.isf(alpha / k))
    verdicts = []
    for m, s in zip(margins, se):
        if m < -z * s:
            verdicts.append(Status.VIOLATED)
        elif m > z * s:
            verdicts.append(Status.HOLDS)
        else:
            verdicts.append(Status.INCONCLUSIVE)
    return LogConvexityReport(margins, se, tuple(verdicts), alpha, z, est.kind, dict(est.meta))
