"""Virtual-age repair models (Kijima type I/II and custom update rules)."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from ._errors import UnsupportedError
from .kernels import HistoryKernel
from .survival import Lifetime, PointMass, Residual

__all__ = [
    "KijimaI",
    "KijimaII",
    "CustomRule",
    "ConstantDegree",
    "DegreeSequence",
    "RandomDegree",
    "VirtualAgeModel",
    "Trajectory",
    "step_virtual_age",
    "next_interarrival_survival",
    "sample_trajectory",
    "sample_trajectories",
    "induced_kernel",
    "virtual_ages",
    "write_trajectories_csv",
]


class KijimaI:
    """``V_n = V_{n-1} + A_n X_n``."""

    name = "kijima1"

    def __call__(self, v, x, a):
        return v + a * x

    def __repr__(self):
        return "KijimaI()"


class KijimaII:
    """``V_n = A_n (V_{n-1} + X_n)``."""

    name = "kijima2"

    def __call__(self, v, x, a):
        return a * (v + x)

    def __repr__(self):
        return "KijimaII()"


class CustomRule:
    """User virtual-age update ``psi(v_prev, x, a)``; must be vectorized."""

    name = "custom"

    def __init__(self, psi: Callable):
        self.psi = psi

    def __call__(self, v, x, a):
        return self.psi(v, x, a)

    def __repr__(self):
        return f"CustomRule({getattr(self.psi, '__name__', 'psi')})"


Rule = Union[KijimaI, KijimaII, CustomRule]


class ConstantDegree:
    deterministic = True

    def __init__(self, q: float):
        if not q >= 0:
            raise ValueError("repair degree must be nonnegative")
        self.q = float(q)

    def __repr__(self):
        return f"ConstantDegree({self.q})"

    def degree(self, n: int) -> float:
        return self.q

    def draw(self, n, rng, size):
        return np.full(size, self.q)


class DegreeSequence:
    """Deterministic degrees ``a_1, a_2, ...``; the last value repeats past the end."""

    deterministic = True

    def __init__(self, values):
        values = np.asarray(values, dtype=float).reshape(-1)
        if values.size == 0 or np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("degrees must be a nonempty sequence of nonnegative numbers")
        self.values = values

    def __repr__(self):
        return f"DegreeSequence({self.values.tolist()})"

    def degree(self, n: int) -> float:
        if n < 1:
            raise ValueError("degrees are indexed from 1")
        return float(self.values[min(n, self.values.size) - 1])

    def draw(self, n, rng, size):
        return np.full(size, self.degree(n))


class RandomDegree:
    """I.i.d. degrees ``A_n ~ law``, drawn independently of all earlier variables."""

    deterministic = False

    def __init__(self, law: Lifetime):
        self.law = law

    def __repr__(self):
        return f"RandomDegree({self.law!r})"

    def degree(self, n):
        raise UnsupportedError("random repair degrees have no fixed value")

    def draw(self, n, rng, size):
        return np.asarray(self.law.sample(rng, size), dtype=float)


@dataclass(frozen=True)
class VirtualAgeModel:
    base: Lifetime
    rule: Rule
    policy: Union[ConstantDegree, DegreeSequence, RandomDegree]

    @property
    def deterministic(self) -> bool:
        return self.policy.deterministic

    def degrees(self, n: int) -> np.ndarray:
        return np.array([self.policy.degree(k) for k in range(1, n + 1)])


def step_virtual_age(rule: Rule, v, x, a):
    """One virtual-age update; all inputs must be nonnegative."""
    if np.any(np.asarray(v) < 0) or np.any(np.asarray(x) < 0) or np.any(np.asarray(a) < 0):
        raise ValueError("virtual age, interarrival and degree must be nonnegative")
    out = rule(v, x, a)
    return float(out) if np.ndim(out) == 0 else out


def virtual_ages(model: VirtualAgeModel, histories) -> np.ndarray:
    """Virtual age after each history row, for a deterministic policy.

    ``histories`` has shape ``(m, n)``; the result has shape ``(m,)``.
    """
    h = np.atleast_2d(np.asarray(histories, dtype=float))
    v = np.zeros(h.shape[0])
    for k in range(h.shape[1]):
        v = model.rule(v, h[:, k], model.policy.degree(k + 1))
    return v


def next_interarrival_survival(model: VirtualAgeModel, v: float) -> Lifetime:
    """Law of the next interarrival for a unit with virtual age ``v``."""
    if v < 0:
        raise ValueError("virtual age must be nonnegative")
    if v == 0:
        return model.base
    if not model.base.logsf(v) > -np.inf:
        return PointMass(0.0)
    return Residual(model.base, v)


@dataclass(frozen=True)
class Trajectory:
    """Sampled paths.

    Arrays are 2-D ``(paths, steps)`` from :func:`sample_trajectories` and
    1-D from :func:`sample_trajectory`.  ``v`` and ``s`` include the initial
    zero column, so they are one longer than ``x`` and ``a``.
    """

    x: np.ndarray
    a: np.ndarray
    v: np.ndarray
    s: np.ndarray
    absorbed: np.ndarray

    @property
    def n_paths(self) -> int:
        return 1 if self.x.ndim == 1 else self.x.shape[0]


def sample_trajectories(
    model: VirtualAgeModel, n_max: int, n_paths: int, rng: np.random.Generator
) -> Trajectory:
    """Simulate ``n_paths`` independent paths of ``n_max`` interarrivals.

    Each step draws the repair degree ``A_n`` first, then ``X_n`` by inverse
    transform on the residual law at ``V_{n-1}``.  Paths whose virtual age
    leaves the support of the base law are absorbed: every later ``X`` is 0.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    base = model.base
    x = np.empty((n_paths, n_max))
    a = np.empty((n_paths, n_max))
    v = np.zeros((n_paths, n_max + 1))
    absorbed = np.zeros(n_paths, dtype=bool)
    for k in range(n_max):
        a[:, k] = model.policy.draw(k + 1, rng, n_paths)
        u = 1.0 - rng.random(n_paths)
        dead = ~(base.logsf(v[:, k]) > -np.inf)
        absorbed |= dead
        x[:, k] = np.where(dead, 0.0, base.residual_isf(u, v[:, k]))
        v[:, k + 1] = model.rule(v[:, k], x[:, k], a[:, k])
    s = np.zeros((n_paths, n_max + 1))
    np.cumsum(x, axis=1, out=s[:, 1:])
    return Trajectory(x, a, v, s, absorbed)


def sample_trajectory(model: VirtualAgeModel, n_max: int, rng: np.random.Generator) -> Trajectory:
    t = sample_trajectories(model, n_max, 1, rng)
    return Trajectory(t.x[0], t.a[0], t.v[0], t.s[0], t.absorbed[0])


def induced_kernel(model: VirtualAgeModel, n: int) -> HistoryKernel:
    """Kernel of ``X_{n+1}`` given ``(X_1, ..., X_n)`` under deterministic degrees.

    The domain holds histories that each step's residual law can produce:
    ``V_{k-1} + x_k`` stays inside the support of the base law.
    """
    if not model.deterministic:
        raise UnsupportedError("induced kernels need a deterministic repair policy")
    base = model.base
    upper = np.inf if base.support_upper is None else base.support_upper
    degrees = model.degrees(n)

    def ages(h):
        v = np.zeros(h.shape[0])
        ok = np.ones(h.shape[0], dtype=bool)
        for k in range(n):
            ok &= (base.logsf(v) > -np.inf) & (v + h[:, k] < upper)
            v = model.rule(v, h[:, k], degrees[k])
        return v, ok

    def domain(h):
        return ages(h)[1]

    def at(x):
        v, _ = ages(np.asarray(x, dtype=float)[None, :])
        return next_interarrival_survival(model, float(v[0]))

    def sampler(h, rng):
        v, _ = ages(h)
        u = 1.0 - rng.random(h.shape[0])
        dead = ~(base.logsf(v) > -np.inf)
        return np.where(dead, 0.0, base.residual_isf(u, v))

    return HistoryKernel(n, at, domain=domain, sampler=sampler, name=f"{model.rule.name} step {n + 1}")


def write_trajectories_csv(traj: Trajectory, fh) -> None:
    """Write rows ``trajectory_id, n, x, a, v, s`` for ``n = 1..n_max``."""
    x = np.atleast_2d(traj.x)
    a = np.atleast_2d(traj.a)
    v = np.atleast_2d(traj.v)
    s = np.atleast_2d(traj.s)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["trajectory_id", "n", "x", "a", "v", "s"])
    for i in range(x.shape[0]):
        for k in range(x.shape[1]):
            w.writerow([i, k + 1, repr(float(x[i, k])), repr(float(a[i, k])),
                        repr(float(v[i, k + 1])), repr(float(s[i, k + 1]))])
