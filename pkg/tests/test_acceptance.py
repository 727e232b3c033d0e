"""Acceptance criteria, one test and one printed PASS/FAIL line each.

Every constant compared against is recomputed here from an independent
route (mpmath quadrature, closed forms, exact rational arithmetic).
"""

import json
import subprocess
import sys
import time
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from dfrkit.counterexamples import (
    association_counterexample,
    kijima2_counterexample,
    kijima2_counterexample_model,
    mixing_cov_analytic,
    mixing_cov_enumerated,
)
from dfrkit.estimate import check_discrete_dfr, closed_form_poisson_exp, estimate_sequence_mc, estimate_sequence_quadrature
from dfrkit.hypotheses import check_kijima1_conditions, check_t2star_conditions
from dfrkit.kernels import compose, verify_composition
from dfrkit.survival import Exponential, Gamma, Grid, Status, UniformZeroTo, Weibull, check_aging_class
from dfrkit.vamodels import (
    ConstantDegree,
    DegreeSequence,
    KijimaI,
    RandomDegree,
    VirtualAgeModel,
    induced_kernel,
    sample_trajectories,
)

SEEDS = range(20)


def _kijima2_oracles():
    mpmath.mp.dps = 30
    p1 = 1 - mpmath.e ** -1
    p2 = mpmath.e ** -1 * mpmath.quad(lambda t: (mpmath.e ** t - 1) / t, [0, 1])
    p3 = p1 * p2
    return [float(v) for v in (p1, p2, p3, p2 - p1 ** 2, p1 * p3 - p2 ** 2)]


P1, P2, P3, M0, M1 = _kijima2_oracles()


def test_criterion_1_kijima2_constants(acceptance):
    t0 = time.perf_counter()
    est = estimate_sequence_quadrature(kijima2_counterexample_model(), Exponential(1.0), 3, tol=1e-9)
    rep = check_discrete_dfr(est)
    elapsed = time.perf_counter() - t0
    err_p = np.abs(est.p[1:] - [P1, P2, P3])
    err_m = np.abs(rep.margins - [M0, M1])
    closed = kijima2_counterexample(1e-9)
    ok = (
        np.all(err_p <= 1e-6)
        and np.all(err_m <= 2e-6)
        and rep.verdicts[0] is Status.HOLDS
        and rep.verdicts[1] is Status.VIOLATED
        and closed.verdict == "VIOLATED"
        and elapsed < 1.0
    )
    acceptance(1, ok, (
        f"p=({est.p[1]:.7f}, {est.p[2]:.7f}, {est.p[3]:.7f}) max|dp|={err_p.max():.1e} (tol 1e-6); "
        f"m0={rep.margins[0]:+.7f} {rep.verdicts[0].value}, m1={rep.margins[1]:+.7f} {rep.verdicts[1].value} "
        f"max|dm|={err_m.max():.1e} (tol 2e-6); {elapsed:.3f}s (< 1s)"))
    assert ok


def test_criterion_2_mc_concordance(acceptance):
    exact = np.array([P1, P2, P3])
    hits = 0
    t0 = time.perf_counter()
    for seed in SEEDS:
        est = estimate_sequence_mc(kijima2_counterexample_model(), Exponential(1.0), 3, 1_000_000, seed=seed, threads=4)
        hits += bool(np.all(np.abs(est.p[1:] - exact) <= 3 * est.se[1:]))
    per_seed = (time.perf_counter() - t0) / len(SEEDS)
    ok = hits >= 18 and per_seed < 60.0
    acceptance(2, ok, f"{hits}/20 seeds within 3 SE (need >= 18); {per_seed:.2f}s per 1e6-trajectory run (< 60s)")
    assert ok


def test_criterion_3_geometric_equality(acceptance):
    closed = check_discrete_dfr(closed_form_poisson_exp(1.0, 1.0, 8))
    worst = float(np.max(np.abs(closed.margins)))
    model = VirtualAgeModel(Exponential(1.0), KijimaI(), ConstantDegree(0.0))
    violated = 0
    for seed in SEEDS:
        est = estimate_sequence_mc(model, Exponential(1.0), 8, 1_000_000, seed=seed)
        violated += check_discrete_dfr(est, 0.01).any_violated
    ok = worst < 1e-12 and violated == 0
    acceptance(3, ok, f"closed-form max|m_n|={worst:.1e} (< 1e-12); MC perfect repair: {violated}/20 seeds VIOLATED (need 0)")
    assert ok


def test_criterion_4_kijima1_regression(acceptance):
    model = VirtualAgeModel(Weibull(2.0, 1.0), KijimaI(), RandomDegree(UniformZeroTo(1.0)))
    T = Gamma(0.5, 1.0)
    hyp = check_kijima1_conditions(model, T, Grid.uniform(0.0, 5.0, 50))
    violated = 0
    for seed in SEEDS:
        est = estimate_sequence_mc(model, T, 8, 1_000_000, seed=seed)
        violated += check_discrete_dfr(est, 0.01).any_violated
    ok = hyp.overall == "PASS" and violated == 0
    acceptance(4, ok, f"check_kijima1_conditions {hyp.overall}; {violated}/20 seeds with a VIOLATED margin (need 0)")
    assert ok


def test_criterion_5_t2star_separates_rules(acceptance):
    k2 = check_t2star_conditions(kijima2_counterexample_model(), depth=3)
    k1 = check_t2star_conditions(
        VirtualAgeModel(UniformZeroTo(1.0), KijimaI(), DegreeSequence([1.0, 0.0])), depth=3)
    c2 = k2["c.2 (n=1)"]
    ok = (k2.overall == "FAIL" and c2.status is Status.VIOLATED and len(c2.witnesses) > 0
          and k1.overall == "PASS")
    w = c2.witnesses[0] if c2.witnesses else {}
    acceptance(5, ok, f"Kijima II {k2.overall} at c.2 (witness history={w.get('history')}, t={w.get('t')}); "
                      f"Kijima I {k1.overall}")
    assert ok


def test_criterion_6_composition_law(acceptance):
    model = VirtualAgeModel(UniformZeroTo(1.0), KijimaI(), ConstantDegree(1.0))
    k0, k1 = induced_kernel(model, 0), induced_kernel(model, 1)

    def direct(rng, size):
        return sample_trajectories(model, 2, size, rng).x

    same = verify_composition(compose(k0, k1), direct, 100_000, 0.01)
    shifted = verify_composition(compose(k0, k1.shifted(0.5)), direct, 100_000, 0.01)
    ok = same.decision == "PASS" and shifted.decision == "FAIL"
    acceptance(6, ok, f"composed vs direct D={same.statistic:.4f} <= {same.critical:.4f} {same.decision}; "
                      f"shifted D={shifted.statistic:.4f} {shifted.decision}")
    assert ok


def test_criterion_7_association_counterexample(acceptance):
    hits = 0
    for seed in SEEDS:
        rep = association_counterexample(0.5, Exponential(1.0), 1_000_000, seed=seed)
        hits += abs(rep.value("cov_empirical") - (-0.125)) <= 3 * rep.value("se")
    rng = np.random.default_rng(12345)
    exact_matches = 0
    for p in rng.uniform(0.0, 1.0, 10):
        pf = Fraction(float(p))
        # two-point enumeration in exact rationals against the closed form
        enum = pf * 2 * 1 * Fraction(1, 2) + (1 - pf) - ((1 - pf) + 2 * pf) * ((1 - pf) + pf / 2)
        exact_matches += (enum == -pf * (1 - pf) / 2
                          and mixing_cov_enumerated(p, 1.0) == pytest.approx(mixing_cov_analytic(p, 1.0),
                                                                               rel=1e-13, abs=1e-16))
    ok = hits >= 18 and exact_matches == 10
    acceptance(7, ok, f"{hits}/20 seeds within 3 SE of -0.125 (need >= 18); formula = enumeration for {exact_matches}/10 p")
    assert ok


def test_criterion_8_aging_classes(acceptance):
    grid = Grid.uniform(0.0, 5.0, 50)
    expect = {
        "Gamma(0.5,1)": (Gamma(0.5, 1.0), Status.HOLDS, Status.VIOLATED),
        "Weibull(2,1)": (Weibull(2.0, 1.0), Status.VIOLATED, Status.HOLDS),
        "Exponential(1)": (Exponential(1.0), Status.HOLDS, Status.HOLDS),
    }
    parts, ok = [], True
    for name, (law, dfr, ifr) in expect.items():
        got_d = check_aging_class(law, "DFR", grid).status
        got_i = check_aging_class(law, "IFR", grid).status
        ok &= got_d is dfr and got_i is ifr
        parts.append(f"{name} DFR-{got_d.value}/IFR-{got_i.value}")
    acceptance(8, ok, "; ".join(parts))
    assert ok


KIJIMA2_CONFIG = {
    "model": {"base": {"family": "uniform", "b": 1.0}, "rule": "kijima2",
              "policy": {"kind": "sequence", "values": [1.0, 0.0]}},
    "random_time": {"family": "exponential", "rate": 1.0},
}


def test_criterion_9_cli_determinism(acceptance, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(KIJIMA2_CONFIG))
    runs = {
        "simulate": ["simulate", "--samples", "2000", "--nmax", "4"],
        "estimate": ["estimate", "--samples", "200000", "--nmax", "3", "--threads", "4", "--format", "json"],
        "verify-dfr": ["verify-dfr", "--samples", "200000", "--nmax", "3", "--threads", "4"],
        "hypotheses": ["hypotheses", "--format", "json"],
        "counterexample": ["counterexample", "--name", "association", "--samples", "100000", "--format", "json"],
    }
    same, parts = True, []
    for name, args in runs.items():
        blobs = []
        for rep in range(2):
            out = tmp_path / f"{name}{rep}.out"
            subprocess.run([sys.executable, "-m", "dfrkit", *args, "--config", str(cfg), "--seed", "3",
                            "--out", str(out)], check=False, capture_output=True)
            blobs.append(out.read_bytes() if out.exists() else None)
        identical = blobs[0] is not None and blobs[0] == blobs[1]
        same &= identical
        parts.append(f"{name} {'identical' if identical else 'DIFFERENT'}")
    acceptance(9, same, "; ".join(parts))
    assert same
