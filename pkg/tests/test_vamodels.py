import io

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from dfrkit import UnsupportedError
from dfrkit.survival import Exponential, Gamma, Grid, Order, Status, UniformZeroTo, Weibull, check_aging_class, st_compare
from dfrkit.vamodels import (
    ConstantDegree,
    CustomRule,
    DegreeSequence,
    KijimaI,
    KijimaII,
    RandomDegree,
    VirtualAgeModel,
    induced_kernel,
    next_interarrival_survival,
    sample_trajectories,
    sample_trajectory,
    step_virtual_age,
    write_trajectories_csv,
)


def test_step_kijima1():
    assert step_virtual_age(KijimaI(), 2.0, 1.0, 0.5) == 2.5


def test_step_kijima2_perfect_repair_resets():
    assert step_virtual_age(KijimaII(), 2.0, 1.0, 0.0) == 0.0


@pytest.mark.parametrize("rule", [KijimaI(), KijimaII()])
def test_minimal_repair_rules_coincide(rule):
    assert step_virtual_age(rule, 2.0, 1.0, 1.0) == 3.0


def test_step_custom_and_negative_inputs():
    rule = CustomRule(lambda v, x, a: np.maximum(v, x) * a)
    assert step_virtual_age(rule, 1.0, 3.0, 0.5) == 1.5
    with pytest.raises(ValueError):
        step_virtual_age(KijimaI(), -1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        step_virtual_age(KijimaI(), 1.0, 1.0, -0.1)


def test_degree_sequence_repeats_last_value():
    pol = DegreeSequence([1.0, 0.0])
    assert [pol.degree(k) for k in (1, 2, 3, 10)] == [1.0, 0.0, 0.0, 0.0]
    with pytest.raises(ValueError):
        DegreeSequence([-1.0])
    with pytest.raises(ValueError):
        ConstantDegree(-0.5)


def test_next_interarrival_fresh_unit():
    base = Weibull(2.0, 1.0)
    m = VirtualAgeModel(base, KijimaI(), ConstantDegree(0.5))
    assert next_interarrival_survival(m, 0.0) is base


def test_next_interarrival_uniform_residual():
    m = VirtualAgeModel(UniformZeroTo(1.0), KijimaI(), ConstantDegree(1.0))
    law = next_interarrival_survival(m, 0.3)
    t = np.linspace(0, 1, 101)
    npt.assert_allclose(law.sf(t), UniformZeroTo(0.7).sf(t), atol=1e-14)


def test_next_interarrival_memoryless():
    m = VirtualAgeModel(Exponential(2.0), KijimaI(), ConstantDegree(1.0))
    t = np.linspace(0, 4, 41)
    npt.assert_allclose(next_interarrival_survival(m, 7.3).sf(t), Exponential(2.0).sf(t), rtol=1e-12)


def test_next_interarrival_beyond_support_is_point_mass_at_zero():
    m = VirtualAgeModel(UniformZeroTo(1.0), KijimaI(), ConstantDegree(1.0))
    law = next_interarrival_survival(m, 1.5)
    assert law.sf(0.0) == 0.0 and law.atom_at_zero == 1.0


def test_perfect_repair_is_renewal():
    base = Gamma(2.0, 1.0)
    m = VirtualAgeModel(base, KijimaI(), ConstantDegree(0.0))
    tr = sample_trajectories(m, 3, 100_000, np.random.default_rng(1))
    res = stats.kstest(tr.x[:, 1], lambda t: 1.0 - base.sf(t))
    assert res.pvalue > 0.01


def test_minimal_repair_uniform_stays_in_unit_interval():
    m = VirtualAgeModel(UniformZeroTo(1.0), KijimaI(), ConstantDegree(1.0))
    tr = sample_trajectories(m, 12, 20_000, np.random.default_rng(2))
    assert np.all(tr.s < 1.0)
    npt.assert_allclose(tr.v, tr.s, rtol=0, atol=1e-15)


def test_uniform_mean_of_first_interarrival():
    m = VirtualAgeModel(UniformZeroTo(1.0), KijimaII(), ConstantDegree(0.0))
    x1 = sample_trajectories(m, 1, 1_000_000, np.random.default_rng(3)).x[:, 0]
    se = x1.std(ddof=1) / np.sqrt(x1.size)
    assert abs(x1.mean() - 0.5) <= 3 * se


def test_trajectory_invariants_and_determinism():
    m = VirtualAgeModel(Weibull(1.5, 1.0), KijimaII(), RandomDegree(UniformZeroTo(1.0)))
    a = sample_trajectories(m, 6, 500, np.random.default_rng(9))
    b = sample_trajectories(m, 6, 500, np.random.default_rng(9))
    for f in ("x", "a", "v", "s"):
        npt.assert_array_equal(getattr(a, f), getattr(b, f))
    assert np.all(a.s[:, 0] == 0) and np.all(a.v[:, 0] == 0)
    npt.assert_allclose(a.s[:, 1:], np.cumsum(a.x, axis=1))
    npt.assert_allclose(a.v[:, 1:], a.a * (a.v[:, :-1] + a.x))
    assert np.all(a.x >= 0) and np.all(a.v >= 0)
    one = sample_trajectory(m, 4, np.random.default_rng(0))
    assert one.x.shape == (4,) and one.v.shape == (5,)


def test_kijima2_reset_restarts_as_new():
    base = UniformZeroTo(1.0)
    m = VirtualAgeModel(base, KijimaII(), DegreeSequence([1.0, 0.0]))
    tr = sample_trajectories(m, 3, 100_000, np.random.default_rng(4))
    npt.assert_array_equal(tr.v[:, 2], 0.0)
    assert stats.kstest(tr.x[:, 2], lambda t: 1.0 - base.sf(t)).pvalue > 0.01
    # X3 independent of X1: correlation indistinguishable from 0
    r = np.corrcoef(tr.x[:, 0], tr.x[:, 2])[0, 1]
    assert abs(r) < 3 / np.sqrt(tr.x.shape[0])


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 3.0), st.integers(0, 1000))
def test_kijima1_virtual_age_nondecreasing(q, seed):
    m = VirtualAgeModel(Weibull(2.0, 1.0), KijimaI(), ConstantDegree(q))
    tr = sample_trajectories(m, 8, 50, np.random.default_rng(seed))
    assert np.all(np.diff(tr.v, axis=1) >= 0)


def test_absorbed_paths_flagged():
    # degrees above 1 push the virtual age past the support of U(0, 1)
    m = VirtualAgeModel(UniformZeroTo(1.0), KijimaI(), ConstantDegree(5.0))
    tr = sample_trajectories(m, 6, 2000, np.random.default_rng(5))
    assert tr.absorbed.any()
    dead = tr.v[:, :-1] >= 1.0
    assert np.all(tr.x[dead] == 0.0)


def test_induced_kernel_perfect_repair():
    base = Gamma(2.0, 1.0)
    m = VirtualAgeModel(base, KijimaI(), ConstantDegree(0.0))
    k = induced_kernel(m, 3)
    assert k.at([0.4, 2.0, 1.0]) is base


def test_induced_kernel_kijima1_minimal():
    m = VirtualAgeModel(UniformZeroTo(1.0), KijimaI(), ConstantDegree(1.0))
    law = induced_kernel(m, 2).at([0.3, 0.2])
    z = np.linspace(0, 0.6, 61)
    npt.assert_allclose(law.sf(z), np.clip((0.5 - z) / 0.5, 0, 1), atol=1e-14)


def test_induced_kernel_degree_sequence():
    m = VirtualAgeModel(UniformZeroTo(1.0), KijimaI(), DegreeSequence([1.0, 0.0]))
    law = induced_kernel(m, 2).at([0.3, 0.2])
    z = np.linspace(0, 0.8, 81)
    npt.assert_allclose(law.sf(z), np.clip((0.7 - z) / 0.7, 0, 1), atol=1e-14)


def test_induced_kernel_needs_deterministic_policy():
    m = VirtualAgeModel(UniformZeroTo(1.0), KijimaI(), RandomDegree(UniformZeroTo(1.0)))
    with pytest.raises(UnsupportedError):
        induced_kernel(m, 1)


def test_induced_kernel_domain():
    m = VirtualAgeModel(UniformZeroTo(1.0), KijimaI(), ConstantDegree(1.0))
    k = induced_kernel(m, 2)
    assert k.domain_contains([0.3, 0.2])
    assert not k.domain_contains([0.6, 0.6])
    with pytest.raises(ValueError):
        k.at([0.6, 0.6])


@pytest.mark.parametrize("q", [0.3, 1.0])
def test_ifr_base_induced_kernels_decrease(q):
    base = Weibull(2.0, 1.0)
    assert check_aging_class(base, "IFR", Grid.uniform(0, 3, 30)).status is Status.HOLDS
    m = VirtualAgeModel(base, KijimaI(), ConstantDegree(q))
    k1, k2 = induced_kernel(m, 1), induced_kernel(m, 2)
    grid = Grid.uniform(0, 3, 30)
    for x1 in (0.1, 0.8, 1.5):
        for x2 in (0.0, 0.5, 2.0):
            assert st_compare(k2.at([x1, x2]), k1.at([x1]), grid).relation in (Order.LE, Order.EQ)


def test_trajectory_csv_export():
    m = VirtualAgeModel(Exponential(1.0), KijimaI(), ConstantDegree(0.5))
    tr = sample_trajectories(m, 3, 2, np.random.default_rng(0))
    buf = io.StringIO()
    write_trajectories_csv(tr, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "trajectory_id,n,x,a,v,s"
    assert len(lines) == 1 + 2 * 3
    row = lines[4].split(",")
    assert row[:2] == ["1", "1"]
    assert float(row[2]) == tr.x[1, 0] and float(row[5]) == tr.s[1, 1]
