"""
A Kijima type II model that is not discrete DFR
===============================================

Uniform(0, 1) new-unit law, degrees ``(1, 0)`` and an Exponential(1)
stopping time.  The first margin is positive, the second negative.
"""

from dfrkit import Exponential, check_discrete_dfr, estimate_sequence_mc, estimate_sequence_quadrature
from dfrkit.counterexamples import kijima2_counterexample, kijima2_counterexample_model

###############################################################################
# Series, one-dimensional quadrature and a Monte Carlo replication.

rep = kijima2_counterexample(tol=1e-10, mc_samples=1_000_000, seed=0)
print(rep.to_text())

###############################################################################
# The generic nested quadrature reaches the same numbers without knowing
# anything about the model.

est = estimate_sequence_quadrature(kijima2_counterexample_model(), Exponential(1.0), 3)
print("nested quadrature p:", est.p)
print("verdicts:", [v.value for v in check_discrete_dfr(est).verdicts])

mc = check_discrete_dfr(estimate_sequence_mc(kijima2_counterexample_model(), Exponential(1.0), 3, 1_000_000, seed=1))
print("MC margins:", mc.margins, "verdicts:", [v.value for v in mc.verdicts])
