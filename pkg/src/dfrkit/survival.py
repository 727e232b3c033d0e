"""Lifetime distributions, aging classes and the usual stochastic order.

A :class:`Lifetime` is a nonnegative law described by its survival function
``sf(t) = P(X > t)``.  The concrete families below all give closed forms for
``sf``, ``logsf`` and the survival quantile ``isf``; :class:`SurvivalFunction`
wraps an arbitrary callable and inverts it by bisection.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special

__all__ = [
    "Lifetime",
    "Exponential",
    "Weibull",
    "Gamma",
    "UniformZeroTo",
    "Discrete",
    "Empirical",
    "PointMass",
    "SurvivalFunction",
    "Residual",
    "Grid",
    "Status",
    "ClassVerdict",
    "Order",
    "OrderVerdict",
    "conditional_survival",
    "check_aging_class",
    "st_compare",
    "quantile_invert",
]

#: survival values below this are treated as zero in ratio comparisons
SF_FLOOR = 1e-12
#: relative tolerance for the aging-class ratio comparisons
RATIO_RTOL = 1e-9
#: absolute tolerance on survival differences in the stochastic order
ORDER_TOL = 1e-9

_BISECT_ITER = 200
_BISECT_XTOL = 1e-10


class Lifetime:
    """Base class for nonnegative lifetime laws.

    Subclasses implement :meth:`sf` and usually :meth:`isf`.  Every method
    accepts scalars or arrays and returns numpy values of matching shape.
    """

    #: finite right end of the support, or None
    support_upper: Optional[float] = None

    def sf(self, t):
        raise NotImplementedError

    def logsf(self, t):
        with np.errstate(divide="ignore"):
            return np.log(self.sf(t))

    def cdf(self, t):
        return 1.0 - self.sf(t)

    def hazard(self, t):
        """Failure rate; only the smooth parametric families provide it."""
        raise NotImplementedError(f"{type(self).__name__} has no hazard")

    @property
    def atom_at_zero(self) -> float:
        return float(1.0 - self.sf(0.0))

    def isf(self, u):
        """Smallest ``t >= 0`` with ``sf(t) <= u``, for ``u`` in (0, 1]."""
        return _bisect_isf(self, u)

    def sample(self, rng: np.random.Generator, size=None):
        # 1 - U lies in (0, 1], the domain of isf
        u = 1.0 - rng.random(size)
        return self.isf(u)

    def residual_isf(self, u, v):
        """Quantile of the residual life at age ``v``.

        Solves ``sf(v + z) = u * sf(v)`` for ``z``; entries with
        ``sf(v) == 0`` return 0 (the unit is already dead).
        """
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        sv = self.sf(v)
        alive = sv > 0
        level = np.where(alive, u * sv, 1.0)
        z = np.where(alive, self.isf(level) - v, 0.0)
        return np.maximum(z, 0.0)

    def mean(self) -> float:
        from scipy import integrate

        upper = self.support_upper if self.support_upper is not None else np.inf
        value, _ = integrate.quad(lambda t: float(self.sf(t)), 0.0, upper, limit=200)
        return value


def _bisect_isf(law: Lifetime, u):
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0) | (u > 1)):
        raise ValueError("survival level must lie in (0, 1]")
    flat = u.ravel()
    out = np.empty_like(flat)
    for i, level in enumerate(flat):
        out[i] = _bisect_one(law, float(level))
    return out.reshape(u.shape) if u.ndim else float(out[0])


def _bisect_one(law: Lifetime, level: float) -> float:
    if law.sf(0.0) <= level:
        return 0.0
    lo = 0.0
    if law.support_upper is not None:
        hi = float(law.support_upper)
    else:
        hi = 1.0
        while law.sf(hi) > level:
            lo, hi = hi, 2.0 * hi
            if hi > 1e300:
                return math.inf
    for _ in range(_BISECT_ITER):
        mid = 0.5 * (lo + hi)
        if law.sf(mid) <= level:
            hi = mid
        else:
            lo = mid
        if hi - lo <= _BISECT_XTOL * max(1.0, hi):
            break
    return hi


def _check_level(u):
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0) | (u > 1)) or np.any(np.isnan(u)):
        raise ValueError("survival level must lie in (0, 1]")
    return u


def _positive(**params):
    for name, value in params.items():
        if not value > 0 or not math.isfinite(value):
            raise ValueError(f"{name} must be a positive finite number, got {value!r}")


class Exponential(Lifetime):
    def __init__(self, rate: float = 1.0):
        _positive(rate=rate)
        self.rate = float(rate)

    def __repr__(self):
        return f"Exponential(rate={self.rate})"

    def sf(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-self.rate * np.maximum(t, 0.0))

    def logsf(self, t):
        return -self.rate * np.maximum(np.asarray(t, dtype=float), 0.0)

    def hazard(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.rate)

    def isf(self, u):
        return -np.log(_check_level(u)) / self.rate

    def residual_isf(self, u, v):
        # memoryless: no dependence on v
        return -np.log(np.asarray(u, dtype=float)) / self.rate + 0.0 * np.asarray(v)

    def mean(self):
        return 1.0 / self.rate


class Weibull(Lifetime):
    def __init__(self, shape: float, scale: float = 1.0):
        _positive(shape=shape, scale=scale)
        self.shape = float(shape)
        self.scale = float(scale)

    def __repr__(self):
        return f"Weibull(shape={self.shape}, scale={self.scale})"

    def chf(self, t):
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        return (t / self.scale) ** self.shape

    def sf(self, t):
        return np.exp(-self.chf(t))

    def logsf(self, t):
        return -self.chf(t)

    def hazard(self, t):
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        with np.errstate(divide="ignore"):
            return self.shape / self.scale * (t / self.scale) ** (self.shape - 1.0)

    def isf(self, u):
        return self.scale * (-np.log(_check_level(u))) ** (1.0 / self.shape)

    def residual_isf(self, u, v):
        # cumulative-hazard form avoids underflow of sf(v) at large ages
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return np.maximum(self.scale * (self.chf(v) - np.log(u)) ** (1.0 / self.shape) - v, 0.0)

    def mean(self):
        return self.scale * math.gamma(1.0 + 1.0 / self.shape)


class Gamma(Lifetime):
    def __init__(self, shape: float, rate: float = 1.0):
        _positive(shape=shape, rate=rate)
        self.shape = float(shape)
        self.rate = float(rate)

    def __repr__(self):
        return f"Gamma(shape={self.shape}, rate={self.rate})"

    def sf(self, t):
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        if self.shape == 0.5:
            # exact identity, and far cheaper than the general incomplete gamma
            return special.erfc(np.sqrt(self.rate * t))
        return special.gammaincc(self.shape, self.rate * t)

    def hazard(self, t):
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        x = self.rate * t
        with np.errstate(divide="ignore", invalid="ignore"):
            logpdf = (self.shape - 1.0) * np.log(x) - x - special.gammaln(self.shape)
            return self.rate * np.exp(logpdf) / special.gammaincc(self.shape, x)

    def isf(self, u):
        return special.gammainccinv(self.shape, _check_level(u)) / self.rate

    def mean(self):
        return self.shape / self.rate


class UniformZeroTo(Lifetime):
    def __init__(self, b: float = 1.0):
        _positive(b=b)
        self.b = float(b)
        self.support_upper = self.b

    def __repr__(self):
        return f"UniformZeroTo({self.b})"

    def sf(self, t):
        t = np.asarray(t, dtype=float)
        return np.clip(1.0 - t / self.b, 0.0, 1.0)

    def hazard(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(t < self.b, 1.0 / (self.b - t), np.inf)

    def isf(self, u):
        return self.b * (1.0 - _check_level(u))

    def residual_isf(self, u, v):
        # residual of U(0, b) at age v < b is U(0, b - v)
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return np.where(v < self.b, u * np.maximum(self.b - v, 0.0), 0.0)

    def mean(self):
        return 0.5 * self.b


class Discrete(Lifetime):
    """Finitely supported law on nonnegative atoms."""

    def __init__(self, values, weights=None):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("values must be a nonempty 1-D array")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("values must be finite and nonnegative")
        if weights is None:
            weights = np.full(values.size, 1.0 / values.size)
        weights = np.asarray(weights, dtype=float)
        if weights.shape != values.shape or np.any(weights < 0):
            raise ValueError("weights must be nonnegative and match values")
        order = np.argsort(values, kind="stable")
        self.values = values[order]
        self.weights = weights[order] / weights.sum()
        # tail[k] = P(X > values[k]) computed right-to-left to keep it exact at the top
        tail = np.concatenate([np.cumsum(self.weights[::-1])[::-1][1:], [0.0]])
        self._tail = tail
        self.support_upper = float(np.nextafter(self.values[-1], np.inf))

    def __repr__(self):
        return f"Discrete(values={self.values.tolist()}, weights={self.weights.tolist()})"

    def sf(self, t):
        t = np.asarray(t, dtype=float)
        k = np.searchsorted(self.values, t, side="right")
        head = np.concatenate([[1.0], self._tail])
        return head[k]

    def isf(self, u):
        u = _check_level(u)
        # first atom whose tail mass is <= u
        idx = np.searchsorted(-self._tail, -u, side="left")
        out = self.values[np.minimum(idx, self.values.size - 1)]
        return np.where(u >= 1.0, 0.0, out)

    def mean(self):
        return float(np.dot(self.values, self.weights))


class Empirical(Discrete):
    """Right-continuous empirical law of a sorted nonnegative sample."""

    def __init__(self, sample):
        sample = np.asarray(sample, dtype=float)
        if sample.ndim != 1 or sample.size == 0:
            raise ValueError("sample must be a nonempty 1-D array")
        if np.any(sample < 0):
            raise ValueError("sample values must be nonnegative")
        if np.any(np.diff(sample) < 0):
            raise ValueError("sample must be sorted")
        self.sample_values = sample
        super().__init__(sample)

    def __repr__(self):
        return f"Empirical(n={self.sample_values.size})"

    def sf(self, t):
        t = np.asarray(t, dtype=float)
        n = self.sample_values.size
        return (n - np.searchsorted(self.sample_values, t, side="right")) / n

    def isf(self, u):
        u = _check_level(u)
        n = self.sample_values.size
        k = np.ceil(n * (1.0 - u) - 1e-12).astype(int)
        out = self.sample_values[np.clip(k - 1, 0, n - 1)]
        return np.where(k <= 0, 0.0, out)


class PointMass(Discrete):
    def __init__(self, value: float):
        super().__init__([value])
        self.value = float(value)

    def __repr__(self):
        return f"PointMass({self.value})"


class SurvivalFunction(Lifetime):
    """Lifetime from a user-supplied survival callable.

    The quantile is obtained by bisection on ``[0, support_upper]`` or on an
    expanding bracket when the support is unbounded.
    """

    def __init__(self, sf: Callable, support_upper: Optional[float] = None, name: str = "custom"):
        self._sf = sf
        self.support_upper = support_upper
        self.name = name

    def __repr__(self):
        return f"SurvivalFunction({self.name})"

    def sf(self, t):
        t = np.asarray(t, dtype=float)
        out = np.vectorize(lambda s: float(self._sf(s)), otypes=[float])(t)
        if self.support_upper is not None:
            out = np.where(t >= self.support_upper, 0.0, out)
        return out if out.ndim else float(out)


class Residual(Lifetime):
    """Residual life of ``base`` at age ``age``: survival ``sf(age+z)/sf(age)``."""

    def __init__(self, base: Lifetime, age: float):
        if age < 0:
            raise ValueError("age must be nonnegative")
        self.base = base
        self.age = float(age)
        self._log0 = float(base.logsf(self.age))
        if base.support_upper is not None:
            self.support_upper = max(base.support_upper - self.age, 0.0)

    def __repr__(self):
        return f"Residual({self.base!r}, age={self.age})"

    def sf(self, t):
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        with np.errstate(invalid="ignore"):
            return np.minimum(np.exp(self.base.logsf(self.age + t) - self._log0), 1.0)

    def logsf(self, t):
        return self.base.logsf(self.age + np.maximum(np.asarray(t, dtype=float), 0.0)) - self._log0

    def hazard(self, t):
        return self.base.hazard(self.age + np.asarray(t, dtype=float))

    def isf(self, u):
        return self.base.residual_isf(_check_level(u), self.age)

    def residual_isf(self, u, v):
        return self.base.residual_isf(u, self.age + np.asarray(v, dtype=float))


def conditional_survival(base: Lifetime, v, z):
    """Survival at ``z`` of a unit with virtual age ``v``.

    Returns ``sf(v+z)/sf(v)`` where ``sf(v) > 0`` and 0 otherwise.
    """
    v = np.asarray(v, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(v < 0) or np.any(z < 0):
        raise ValueError("age and time must be nonnegative")
    lv = base.logsf(v)
    alive = lv > -np.inf
    with np.errstate(invalid="ignore"):
        ratio = np.exp(base.logsf(v + z) - np.where(alive, lv, 0.0))
    out = np.where(alive, np.clip(ratio, 0.0, 1.0), 0.0)
    return out if out.ndim else float(out)


def quantile_invert(x: Lifetime, u):
    """Smallest time ``t`` with ``x.sf(t) <= u``.

    Closed forms are used for the catalogue families; anything else falls
    back to bisection with tolerance 1e-10.
    """
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0) | (u > 1)) or np.any(np.isnan(u)):
        raise ValueError(f"quantile level must lie in (0, 1], got {u}")
    out = x.isf(u)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class Grid:
    """Strictly increasing, nonnegative evaluation points."""

    points: np.ndarray
    policy: str = "explicit"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1:
            raise ValueError("grid points must be one-dimensional")
        if pts.size < 2:
            raise ValueError("grid too small")
        if np.any(pts < 0) or np.any(np.diff(pts) <= 0):
            raise ValueError("grid points must be nonnegative and strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, lo: float, hi: float, count: int) -> "Grid":
        return cls(np.linspace(lo, hi, count), "uniform")

    @classmethod
    def log_spaced(cls, lo: float, hi: float, count: int) -> "Grid":
        if lo <= 0:
            raise ValueError("log-spaced grids need lo > 0")
        return cls(np.geomspace(lo, hi, count), "log")

    @classmethod
    def quantiles(cls, law: Lifetime, count: int, upper_level: float = 1e-3) -> "Grid":
        """Points at survival levels evenly spread over ``[upper_level, 1]``."""
        levels = np.linspace(1.0, upper_level, count)
        pts = np.unique(np.asarray(law.isf(levels), dtype=float))
        return cls(pts[np.isfinite(pts)], "quantile")

    def __len__(self):
        return self.points.size

    def __iter__(self):
        return iter(self.points)


class Status(str, enum.Enum):
    HOLDS = "HOLDS"
    VIOLATED = "VIOLATED"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class ClassVerdict:
    """Outcome of a grid check.

    ``HOLDS`` only means no violation was found on the grid.  A ``VIOLATED``
    verdict always carries a witness ``(z, t1, t2, margin)``.
    """

    status: Status
    witness: Optional[tuple] = None
    note: str = ""

    def __bool__(self):
        return self.status is Status.HOLDS

    def to_dict(self):
        return {
            "status": self.status.value,
            "witness": None if self.witness is None else [float(w) for w in self.witness],
            "note": self.note,
        }


def _grid_points(grid) -> np.ndarray:
    pts = grid.points if isinstance(grid, Grid) else np.asarray(grid, dtype=float)
    if pts.size < 2:
        raise ValueError("grid too small")
    return pts


def check_aging_class(x: Lifetime, mode: str, grid) -> ClassVerdict:
    """Check DFR, IFR or NWU on every combination of grid points.

    DFR: ``sf(z+t)/sf(t)`` nondecreasing in ``t`` for each ``z``; IFR reverses
    the direction; NWU: ``sf(z) sf(t) <= sf(z+t)``.  Pairs whose denominator
    is below ``SF_FLOOR`` are skipped.
    """
    mode = mode.upper()
    pts = _grid_points(grid)
    if mode == "NWU":
        z = pts[:, None]
        t = pts[None, :]
        lhs = x.sf(z) * x.sf(t)
        rhs = x.sf(z + t)
        excess = lhs - rhs
        bad = excess > RATIO_RTOL * np.maximum(np.abs(lhs), np.abs(rhs)) + 1e-15
        if np.any(bad):
            i, j = np.argwhere(bad)[0]
            return ClassVerdict(
                Status.VIOLATED,
                (pts[i], pts[j], pts[j], float(excess[i, j])),
                "sf(z)*sf(t) > sf(z+t)",
            )
        return ClassVerdict(Status.HOLDS, note="no NWU violation on grid")
    if mode not in ("DFR", "IFR"):
        raise ValueError(f"unknown aging class {mode!r}")

    sf_t = x.sf(pts)
    usable = sf_t >= SF_FLOOR
    # ratio[z, t] = sf(z + t) / sf(t)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        log_ratio = x.logsf(pts[:, None] + pts[None, :]) - x.logsf(pts)[None, :]
        ratio = np.exp(log_ratio)
    ratio = np.where(np.isnan(ratio), 0.0, ratio)
    n = pts.size
    i1, i2 = np.triu_indices(n, k=1)
    keep = usable[i1] & usable[i2]
    i1, i2 = i1[keep], i2[keep]
    r1 = ratio[:, i1]
    r2 = ratio[:, i2]
    # DFR wants r1 <= r2, IFR wants r1 >= r2
    diff = r1 - r2 if mode == "DFR" else r2 - r1
    bad = diff > RATIO_RTOL * np.maximum(r1, r2) + 1e-300
    if np.any(bad):
        zi, k = np.argwhere(bad)[0]
        return ClassVerdict(
            Status.VIOLATED,
            (pts[zi], pts[i1[k]], pts[i2[k]], float(diff[zi, k])),
            f"{mode} ratio comparison fails",
        )
    skipped = int((~usable).sum())
    note = f"no {mode} violation on grid"
    if skipped:
        note += f"; {skipped} point(s) with sf < {SF_FLOOR:g} skipped"
    return ClassVerdict(Status.HOLDS, note=note)


class Order(str, enum.Enum):
    LE = "LE"
    GE = "GE"
    EQ = "EQ"
    INCOMPARABLE = "INCOMPARABLE"

    def swapped(self) -> "Order":
        return {Order.LE: Order.GE, Order.GE: Order.LE}.get(self, self)


@dataclass(frozen=True)
class OrderVerdict:
    """Result of comparing two laws in the usual stochastic order.

    ``le_witness`` is a time where ``sf_x > sf_y`` (refuting X <= Y) and
    ``ge_witness`` one where ``sf_x < sf_y``; each is ``(t, sf_x, sf_y)``.
    """

    relation: Order
    le_witness: Optional[tuple] = None
    ge_witness: Optional[tuple] = None

    @property
    def is_le(self) -> bool:
        return self.relation in (Order.LE, Order.EQ)

    def swapped(self) -> "OrderVerdict":
        return OrderVerdict(self.relation.swapped(), self.ge_witness, self.le_witness)

    def to_dict(self):
        def conv(w):
            return None if w is None else [float(v) for v in w]

        return {
            "relation": self.relation.value,
            "le_witness": conv(self.le_witness),
            "ge_witness": conv(self.ge_witness),
        }


def st_compare(x: Lifetime, y: Lifetime, grid, tol: float = ORDER_TOL) -> OrderVerdict:
    """Compare ``x`` and ``y`` pointwise on ``grid`` in the usual stochastic order."""
    pts = grid.points if isinstance(grid, Grid) else np.atleast_1d(np.asarray(grid, dtype=float))
    sx = np.asarray(x.sf(pts), dtype=float)
    sy = np.asarray(y.sf(pts), dtype=float)
    return _order_from_values(pts, sx, sy, tol)


def _order_from_values(pts, sx, sy, tol) -> OrderVerdict:
    over = sx > sy + tol
    under = sx < sy - tol
    le_w = ge_w = None
    if np.any(over):
        k = int(np.argmax(sx - sy))
        le_w = (pts[k], sx[k], sy[k])
    if np.any(under):
        k = int(np.argmax(sy - sx))
        ge_w = (pts[k], sx[k], sy[k])
    if le_w is None and ge_w is None:
        rel = Order.EQ
    elif le_w is None:
        rel = Order.LE
    elif ge_w is None:
        rel = Order.GE
    else:
        rel = Order.INCOMPARABLE
    return OrderVerdict(rel, le_w, ge_w)
