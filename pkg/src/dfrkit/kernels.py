"""History kernels: the law of the next interarrival given the past.

A :class:`HistoryKernel` of arity ``n`` maps a history ``x`` in ``R_+^n``
to a :class:`~dfrkit.survival.Lifetime`.  Two kernels of arities ``n`` and
``n + 1`` compose into a two-step kernel that samples
``(x_{n+1}, x_{n+2})`` sequentially.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import special

from .survival import Lifetime

__all__ = [
    "HistoryKernel",
    "ComposedKernel",
    "Shifted",
    "TestReport",
    "compose",
    "sample_joint",
    "verify_composition",
    "ks_statistic",
]


def _as_histories(histories, arity: int) -> np.ndarray:
    h = np.asarray(histories, dtype=float)
    if h.ndim == 2 and h.shape[1] == arity:
        return h
    if h.ndim == 1 and h.size == arity:
        return h[None, :]
    if arity == 0:
        raise ValueError("cannot infer the number of empty histories")
    return h.reshape(-1, arity)


class Shifted(Lifetime):
    """``law + delta`` for a constant ``delta >= 0``."""

    def __init__(self, law: Lifetime, delta: float):
        if delta < 0:
            raise ValueError("shift must be nonnegative")
        self.law = law
        self.delta = float(delta)
        if law.support_upper is not None:
            self.support_upper = law.support_upper + self.delta

    def __repr__(self):
        return f"Shifted({self.law!r}, {self.delta})"

    def sf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t < self.delta, 1.0, self.law.sf(np.maximum(t - self.delta, 0.0)))

    def isf(self, u):
        return self.law.isf(u) + self.delta

    def sample(self, rng, size=None):
        return self.law.sample(rng, size) + self.delta


class HistoryKernel:
    """Kernel from histories of length ``arity`` to lifetimes.

    Parameters
    ----------
    arity : int
        History length ``n``.
    at : callable
        ``at(x)`` returns the Lifetime of the next interarrival given the
        1-D history ``x``.
    domain : callable, optional
        Vectorized predicate on an ``(m, arity)`` array of histories,
        returning a boolean ``(m,)`` array.  Defaults to every finite
        nonnegative history.
    sampler : callable, optional
        ``sampler(histories, rng)`` drawing one value per row.  Without it
        sampling loops over ``at``.
    """

    def __init__(
        self,
        arity: int,
        at: Callable[[np.ndarray], Lifetime],
        domain: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        sampler: Optional[Callable] = None,
        name: str = "kernel",
    ):
        if arity < 0:
            raise ValueError("arity must be nonnegative")
        self.arity = int(arity)
        self._at = at
        self._domain = domain
        self._sampler = sampler
        self.name = name

    def __repr__(self):
        return f"HistoryKernel({self.name}, arity={self.arity})"

    @classmethod
    def constant(cls, arity: int, law: Lifetime) -> "HistoryKernel":
        """History-independent kernel: every history maps to ``law``."""

        def sampler(h, rng):
            return np.asarray(law.sample(rng, h.shape[0]), dtype=float)

        return cls(arity, lambda x: law, sampler=sampler, name=f"constant {law!r}")

    def in_domain(self, histories) -> np.ndarray:
        h = _as_histories(histories, self.arity)
        ok = np.all(np.isfinite(h) & (h >= 0), axis=1)
        if self._domain is not None:
            ok &= np.asarray(self._domain(h), dtype=bool)
        return ok

    def domain_contains(self, x) -> bool:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.arity:
            return False
        return bool(self.in_domain(x[None, :])[0])

    def at(self, x) -> Lifetime:
        x = np.asarray(x, dtype=float).reshape(-1)
        if not self.domain_contains(x):
            raise ValueError(f"history {x.tolist()} is outside the kernel domain")
        return self._at(x)

    def sample(self, histories, rng: np.random.Generator) -> np.ndarray:
        """One draw of the next interarrival for each history row."""
        h = _as_histories(histories, self.arity)
        if self._sampler is not None:
            return np.asarray(self._sampler(h, rng), dtype=float)
        return np.array([float(self._at(row).sample(rng)) for row in h])

    def shifted(self, delta: float) -> "HistoryKernel":
        """Same kernel with every conditional law moved right by ``delta``."""
        base = self

        def sampler(h, rng):
            return base.sample(h, rng) + delta

        return HistoryKernel(
            self.arity,
            lambda x: Shifted(base._at(x), delta),
            domain=self._domain,
            sampler=sampler,
            name=f"{self.name} + {delta}",
        )


class ComposedKernel:
    """Two-step kernel: ``x_{n+1} ~ first.at(x)``, then ``x_{n+2} ~ second.at((x, x_{n+1}))``.

    Where ``(x, x_{n+1})`` falls outside the second kernel's domain the
    second coordinate is set to 0; :meth:`sample` reports how often that
    zero extension was used.
    """

    def __init__(self, first: HistoryKernel, second: HistoryKernel):
        if second.arity != first.arity + 1:
            raise ValueError(
                f"arity mismatch: second kernel needs arity {first.arity + 1}, got {second.arity}"
            )
        self.first = first
        self.second = second

    @property
    def arity(self) -> int:
        return self.first.arity

    def domain_contains(self, x) -> bool:
        return self.first.domain_contains(x)

    def sample(self, x, rng: np.random.Generator, size: int = 1, return_extended: bool = False):
        x = np.asarray(x, dtype=float).reshape(-1)
        if not self.first.domain_contains(x):
            raise ValueError(f"history {x.tolist()} is outside the kernel domain")
        hist = np.broadcast_to(x, (size, self.arity))
        z1 = self.first.sample(hist, rng)
        hist2 = np.column_stack([hist, z1])
        inside = self.second.in_domain(hist2)
        z2 = np.zeros(size)
        if np.any(inside):
            z2[inside] = self.second.sample(hist2[inside], rng)
        pairs = np.column_stack([z1, z2])
        if return_extended:
            return pairs, int(size - inside.sum())
        return pairs

    def expect(self, x, h: Callable, rng, size: int = 100_000, of: str = "sum"):
        """Monte Carlo ``E[h(Z1)]`` (``of='first'``) or ``E[h(Z1 + Z2)]``; returns ``(mean, se)``."""
        pairs = self.sample(x, rng, size)
        arg = pairs[:, 0] if of == "first" else pairs.sum(axis=1)
        vals = np.asarray(h(arg), dtype=float)
        return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(size))

    def expect_iterated(self, x, h: Callable, rng, n_outer: int = 2000, n_inner: int = 200):
        """``E[h(Z1 + Z2)]`` computed as an outer average of inner conditional averages."""
        x = np.asarray(x, dtype=float).reshape(-1)
        hist = np.broadcast_to(x, (n_outer, self.arity))
        z1 = self.first.sample(hist, rng)
        inner = np.empty(n_outer)
        for i, v in enumerate(z1):
            row = np.append(x, v)
            if self.second.domain_contains(row):
                z2 = self.second.sample(np.broadcast_to(row, (n_inner, row.size)), rng)
            else:
                z2 = np.zeros(n_inner)
            inner[i] = np.mean(h(v + z2))
        return float(inner.mean()), float(inner.std(ddof=1) / np.sqrt(n_outer))


def compose(first: HistoryKernel, second: HistoryKernel) -> ComposedKernel:
    return ComposedKernel(first, second)


def sample_joint(ck: ComposedKernel, x, rng: np.random.Generator) -> tuple:
    """A single draw ``(x_{n+1}, x_{n+2})`` from the composed kernel at ``x``."""
    z1, z2 = ck.sample(x, rng, 1)[0]
    return float(z1), float(z2)


def ks_statistic(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov distance between empirical cdfs."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / a.size
    fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_critical(n: int, m: int, alpha: float) -> float:
    """Asymptotic two-sample KS critical value at level ``alpha``."""
    return float(special.kolmogi(alpha) * np.sqrt((n + m) / (n * m)))


@dataclass(frozen=True)
class TestReport:
    """Equality-of-laws test outcome; PASS iff ``statistic <= critical``."""

    statistic: float
    critical: float
    alpha: float
    n_first: int
    n_second: int
    components: dict
    note: str = ""

    __test__ = False  # not a pytest class

    @property
    def decision(self) -> str:
        return "PASS" if self.statistic <= self.critical else "FAIL"

    @property
    def passed(self) -> bool:
        return self.decision == "PASS"

    def to_dict(self):
        return {
            "statistic": self.statistic,
            "critical": self.critical,
            "alpha": self.alpha,
            "decision": self.decision,
            "n_first": self.n_first,
            "n_second": self.n_second,
            "components": self.components,
            "note": self.note,
        }


def verify_composition(
    ck: ComposedKernel,
    direct: Callable[[np.random.Generator, int], np.ndarray],
    n_samples: int = 100_000,
    alpha: float = 0.01,
    x=(),
    seed: int = 0,
) -> TestReport:
    """Test that the composed kernel and a direct joint sampler agree in law.

    KS tests on the first coordinate, the second coordinate and their sum,
    each at level ``alpha / 3``.  ``direct(rng, size)`` must return a
    ``(size, 2)`` array.
    """
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    rng_a, rng_b = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    pa, extended = ck.sample(x, rng_a, n_samples, return_extended=True)
    pb = np.asarray(direct(rng_b, n_samples), dtype=float).reshape(n_samples, 2)
    comps = {
        "first": ks_statistic(pa[:, 0], pb[:, 0]),
        "second": ks_statistic(pa[:, 1], pb[:, 1]),
        "sum": ks_statistic(pa.sum(axis=1), pb.sum(axis=1)),
    }
    crit = ks_critical(n_samples, n_samples, alpha / 3)
    note = f"{extended} draw(s) used the zero extension" if extended else ""
    return TestReport(max(comps.values()), crit, alpha, n_samples, n_samples, comps, note)
