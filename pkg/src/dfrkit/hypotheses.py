"""Checkers for the hypotheses behind discrete-DFR preservation results.

Every checker returns a :class:`HypothesisReport`: a labelled set of
conditions, each HOLDS / VIOLATED / INCONCLUSIVE with a witness attached to
every violation.  Grid checks can only refute; association checks can only
refute (a nonnegative covariance for a few increasing pairs proves nothing),
which is why association-based reports are at best PARTIAL.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import stats

from ._errors import UnsupportedError
from .estimate import RandomTime
from .kernels import ComposedKernel, HistoryKernel
from .survival import (
    ORDER_TOL,
    Grid,
    Lifetime,
    Status,
    check_aging_class,
    conditional_survival,
    st_compare,
)
from .vamodels import KijimaI, RandomDegree, VirtualAgeModel, induced_kernel, sample_trajectories, virtual_ages

__all__ = [
    "Condition",
    "HypothesisReport",
    "WrongModelError",
    "check_prcon_hypothesis",
    "check_t2star_conditions",
    "check_kijima1_conditions",
    "empirical_association",
    "default_battery",
    "check_cassoc_conditions",
]


class WrongModelError(ValueError):
    pass


@dataclass(frozen=True)
class Condition:
    label: str
    status: Status
    witnesses: tuple = ()
    note: str = ""

    def to_dict(self):
        return {
            "label": self.label,
            "status": self.status.value,
            "witnesses": [_jsonable(w) for w in self.witnesses],
            "note": self.note,
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)) and not isinstance(obj, bool):
        return int(obj)
    return obj


@dataclass(frozen=True)
class HypothesisReport:
    conditions: tuple
    note: str = ""

    @property
    def overall(self) -> str:
        states = [c.status for c in self.conditions]
        if any(s is Status.VIOLATED for s in states):
            return "FAIL"
        if all(s is Status.HOLDS for s in states):
            return "PASS"
        return "PARTIAL"

    def __getitem__(self, label: str) -> Condition:
        for c in self.conditions:
            if c.label == label:
                return c
        raise KeyError(label)

    @property
    def labels(self) -> tuple:
        return tuple(c.label for c in self.conditions)

    @property
    def failed(self) -> tuple:
        return tuple(c for c in self.conditions if c.status is Status.VIOLATED)

    def to_dict(self):
        return {
            "overall": self.overall,
            "conditions": [c.to_dict() for c in self.conditions],
            "note": self.note,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _points(grid) -> np.ndarray:
    return grid.points if isinstance(grid, Grid) else np.asarray(grid, dtype=float)


def _default_upper(law: Lifetime, level: float = 1e-3) -> float:
    if law.support_upper is not None:
        return float(law.support_upper)
    return float(law.isf(level))


def check_prcon_hypothesis(x1: Lifetime, k: HistoryKernel, x1_grid, t_grid,
                           label: str = "ST(Z2,X1)") -> HypothesisReport:
    """Check ``Z_2^{x1} <=_ST X_1`` for every grid ``x1`` in the kernel domain."""
    if k.arity != 1:
        raise ValueError("the kernel must have arity 1")
    witnesses = []
    checked = 0
    for v in _points(x1_grid):
        if not k.domain_contains([v]):
            continue
        checked += 1
        verdict = st_compare(k.at([v]), x1, t_grid)
        if not verdict.is_le:
            t, s_z, s_x = verdict.le_witness
            witnesses.append({"x1": v, "t": t, "sf_Z2": s_z, "sf_X1": s_x})
    status = Status.VIOLATED if witnesses else Status.HOLDS
    cond = Condition(label, status, tuple(witnesses), f"{checked} history point(s) checked")
    return HypothesisReport((cond,))


def _level_grids(history_grid, depth: int, base: Lifetime):
    if history_grid is None:
        g = np.linspace(0.0, _default_upper(base), 9)[:-1]
        return [g] * depth
    if isinstance(history_grid, (Grid, np.ndarray)) or (
        isinstance(history_grid, Sequence) and np.isscalar(history_grid[0])
    ):
        return [_points(history_grid)] * depth
    grids = [_points(g) for g in history_grid]
    if len(grids) < depth:
        grids += [grids[-1]] * (depth - len(grids))
    return grids


def check_t2star_conditions(
    model: VirtualAgeModel,
    depth: int = 3,
    history_grid=None,
    t_grid=None,
    tol: float = ORDER_TOL,
) -> HypothesisReport:
    """Conditions c.1 and c.2 for the induced kernels of a virtual-age model.

    c.1 compares ``Z_2^{x1}`` with ``X_1``; c.2 at level ``n`` compares
    ``Z_{n+2}^{(x, x_{n+1})}`` with ``Z_{n+1}^x`` for all grid histories of
    length ``n + 1`` in the domain, for ``n = 1 .. depth-1``.  Histories
    of length ``n + 1`` whose prefix lies outside the level-``n`` domain
    violate the nesting requirement ``N_{n+1} ⊆ N_n × R+``.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if not model.deterministic:
        raise UnsupportedError("c.1/c.2 need a deterministic repair policy")
    base = model.base
    grids = _level_grids(history_grid, depth, base)
    if t_grid is None:
        t_grid = Grid.uniform(0.0, _default_upper(base, 1e-4), 60)
    t = _points(t_grid)

    c1 = check_prcon_hypothesis(base, induced_kernel(model, 1), grids[0], t, label="c.1").conditions[0]
    conds = [c1]
    for n in range(1, depth):
        k_prev = induced_kernel(model, n)
        k_next = induced_kernel(model, n + 1)
        hist = np.array(list(itertools.product(*grids[: n + 1])), dtype=float)
        in_next = k_next.in_domain(hist)
        in_prev = k_prev.in_domain(hist[:, :-1])
        nesting = in_next & ~in_prev
        h = hist[in_next & in_prev]
        v_next = virtual_ages(model, h)
        v_prev = virtual_ages(model, h[:, :-1])
        s_next = conditional_survival(base, v_next[:, None], t[None, :])
        s_prev = conditional_survival(base, v_prev[:, None], t[None, :])
        excess = s_next - s_prev
        bad_rows = np.where(np.any(excess > tol, axis=1))[0]
        witnesses = []
        for r in bad_rows[:10]:
            j = int(np.argmax(excess[r]))
            witnesses.append({
                "history": h[r].tolist(),
                "t": t[j],
                "sf_next": s_next[r, j],
                "sf_prev": s_prev[r, j],
            })
        for row in hist[nesting][:10]:
            witnesses.append({"history": row.tolist(), "reason": "prefix outside domain"})
        violated = bad_rows.size > 0 or bool(nesting.any())
        outside = int((in_prev & ~in_next).sum())
        note = f"{h.shape[0]} histories checked, {bad_rows.size} violating"
        if outside:
            note += f"; {outside} zero-extended histories skipped"
        conds.append(Condition(
            f"c.2 (n={n})", Status.VIOLATED if violated else Status.HOLDS, tuple(witnesses), note))
    return HypothesisReport(tuple(conds))


def check_kijima1_conditions(
    model: VirtualAgeModel,
    T: Union[RandomTime, Lifetime],
    grid,
) -> HypothesisReport:
    """DFR ``T``, IFR base with no atom at 0, independent repair degrees."""
    if not isinstance(model.rule, KijimaI):
        raise WrongModelError("this check applies to Kijima type I models only")
    law = T.law if isinstance(T, RandomTime) else T
    conds = []
    v = check_aging_class(law, "DFR", grid)
    conds.append(Condition("T-DFR", v.status, () if v.witness is None else (v.witness,), v.note))
    v = check_aging_class(model.base, "IFR", grid)
    conds.append(Condition("X1-IFR", v.status, () if v.witness is None else (v.witness,), v.note))
    atom = model.base.atom_at_zero
    conds.append(Condition(
        "X1-no-atom-0",
        Status.HOLDS if atom <= 0 else Status.VIOLATED,
        () if atom <= 0 else ({"atom": atom},),
    ))
    note = "degrees drawn independently of the past by construction"
    big = False
    if isinstance(model.policy, RandomDegree):
        big = model.policy.law.support_upper is None or model.policy.law.support_upper > 1
    else:
        big = any(model.policy.degree(k) > 1 for k in range(1, 33))
    if big:
        note += "; degrees above 1 (worse-than-minimal repair) are possible"
    conds.append(Condition("A-independent", Status.HOLDS, (), note))
    return HypothesisReport(tuple(conds))


def empirical_association(
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    f: Callable,
    g: Callable,
    n: int = 100_000,
    seed: int = 0,
) -> tuple:
    """Sample covariance of ``f(X)`` and ``g(X)`` and its plug-in standard error.

    ``f`` and ``g`` must be increasing; the caller is trusted on that.  A
    significantly negative covariance refutes association of ``X``; a
    nonnegative one is consistent with it but proves nothing.
    """
    if n < 1000:
        raise ValueError("n must be at least 1000")
    X = np.asarray(sampler(np.random.default_rng(seed), n), dtype=float)
    fx = np.asarray(f(X), dtype=float)
    gx = np.asarray(g(X), dtype=float)
    prod = (fx - fx.mean()) * (gx - gx.mean())
    cov = prod.sum() / (n - 1)
    se = prod.std(ddof=1) / np.sqrt(n)
    return float(cov), float(se)


def default_battery(k: int) -> list:
    """Coordinate projections, pairwise sums and shifted products for a ``k``-vector."""
    def proj(i):
        return lambda X: X[:, i]

    def pair_sum(i, j):
        return lambda X: X[:, i] + X[:, j]

    def pair_prod(i, j):
        # (1 + x_i)(1 + x_j) is increasing on the nonnegative orthant
        return lambda X: (1.0 + X[:, i]) * (1.0 + X[:, j])

    out = []
    for i, j in itertools.combinations(range(k), 2):
        out.append((f"x{i + 1},x{j + 1}", proj(i), proj(j)))
        out.append((f"x{i + 1},x{i + 1}+x{j + 1}", proj(i), pair_sum(i, j)))
        out.append((f"x{j + 1},x{i + 1}*x{j + 1}", proj(j), pair_prod(i, j)))
    return out


def _association_condition(label, X, battery, alpha):
    z = stats.norm.isf(alpha / max(len(battery), 1))
    witnesses = []
    rows = []
    n = X.shape[0]
    for name, f, g in battery:
        fx = np.asarray(f(X), dtype=float)
        gx = np.asarray(g(X), dtype=float)
        prod = (fx - fx.mean()) * (gx - gx.mean())
        cov = prod.sum() / (n - 1)
        se = prod.std(ddof=1) / np.sqrt(n)
        rows.append((name, cov, se))
        if cov < -z * se:
            witnesses.append({"pair": name, "cov": cov, "se": se})
    if witnesses:
        return Condition(label, Status.VIOLATED, tuple(witnesses), "negative covariance found")
    return Condition(label, Status.INCONCLUSIVE, (),
                     f"no refutation over {len(rows)} pair(s); association is not proven")


def _empirical_st(label, small, large, t, alpha):
    """``small <=_ST large`` from samples, allowing a DKW band on each side."""
    eps = np.sqrt(np.log(4.0 / alpha) / (2.0 * small.size)) + np.sqrt(np.log(4.0 / alpha) / (2.0 * large.size))
    ss = 1.0 - np.searchsorted(np.sort(small), t, side="right") / small.size
    sl = 1.0 - np.searchsorted(np.sort(large), t, side="right") / large.size
    excess = ss - sl
    j = int(np.argmax(excess))
    if excess[j] > eps:
        return Condition(label, Status.VIOLATED, ({"t": t[j], "sf_small": ss[j], "sf_large": sl[j]},),
                         f"exceeds band {eps:.3g}")
    return Condition(label, Status.HOLDS, (), f"within band {eps:.3g}")


def check_cassoc_conditions(
    process,
    T: Union[RandomTime, Lifetime],
    battery=None,
    t_grid=None,
    histories=None,
    n: int = 100_000,
    n_kernel: int = 20_000,
    seed: int = 0,
    alpha: float = 0.001,
    n_coords: int = 2,
) -> HypothesisReport:
    """Conditions of the association-based preservation result.

    ``process`` is a :class:`VirtualAgeModel` or a joint sampler
    ``(rng, size) -> (size, k)`` of interarrivals.  Checks: DFR ``T``; no
    common atom at 0; association of the sampled vector over ``battery``
    (refutation only) and ``X_2 <=_ST X_1``; and, for a deterministic
    model with ``histories`` given, association and ordering of the
    two-step conditional pair at each history.
    """
    law = T.law if isinstance(T, RandomTime) else T
    model = process if isinstance(process, VirtualAgeModel) else None
    if model is not None:
        def sampler(rng, size):
            return sample_trajectories(model, n_coords, size, rng).x
    else:
        sampler = process
    X = np.asarray(sampler(np.random.default_rng(seed), n), dtype=float)
    if battery is None:
        battery = default_battery(X.shape[1])
    if t_grid is None:
        t_grid = Grid(np.unique(np.quantile(X[:, :2], np.linspace(0.0, 0.999, 60))))
    t = _points(t_grid)

    conds = []
    if t.size >= 2:
        v = check_aging_class(law, "DFR", t)
        conds.append(Condition("T-DFR", v.status, () if v.witness is None else (v.witness,), v.note))
    x1_atom = float(np.mean(X[:, 0] == 0.0))
    common = law.atom_at_zero > 0 and x1_atom > 0
    conds.append(Condition("no-atom-0", Status.VIOLATED if common else Status.HOLDS,
                           ({"T_atom": law.atom_at_zero, "X1_atom": x1_atom},) if common else ()))
    conds.append(_association_condition("assoc(X)", X, battery, alpha))
    conds.append(_empirical_st("ST(X2,X1)", X[:, 1], X[:, 0], t, alpha))

    if histories is not None:
        if model is None or not model.deterministic:
            raise UnsupportedError("kernel-level conditions need a deterministic virtual-age model")
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))
        pair_battery = [("z1,z2", lambda P: P[:, 0], lambda P: P[:, 1])]
        assoc_w, st_w = [], []
        for x in histories:
            x = np.atleast_1d(np.asarray(x, dtype=float))
            ck = ComposedKernel(induced_kernel(model, x.size), induced_kernel(model, x.size + 1))
            if not ck.domain_contains(x):
                continue
            P = ck.sample(x, rng, n_kernel)
            ca = _association_condition("", P, pair_battery, alpha)
            if ca.status is Status.VIOLATED:
                assoc_w.append({"history": x.tolist(), **ca.witnesses[0]})
            tq = np.unique(np.quantile(P, np.linspace(0.0, 0.999, 40)))
            cs = _empirical_st("", P[:, 1], P[:, 0], tq, alpha)
            if cs.status is Status.VIOLATED:
                st_w.append({"history": x.tolist(), **cs.witnesses[0]})
        conds.append(Condition("d-assoc", Status.VIOLATED if assoc_w else Status.INCONCLUSIVE,
                               tuple(assoc_w), "refutation only"))
        conds.append(Condition("d-ST", Status.VIOLATED if st_w else Status.HOLDS, tuple(st_w)))
    return HypothesisReport(tuple(conds), "association is checked by refutation only; PASS is not attainable")
