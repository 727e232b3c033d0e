"""
Estimating P(N(T) >= n) and testing log-convexity
=================================================

Three estimators of the same sequence, then the margin test.
"""

import numpy as np

from dfrkit import (
    ConstantDegree,
    Exponential,
    Gamma,
    KijimaI,
    VirtualAgeModel,
    Weibull,
    check_discrete_dfr,
    closed_form_poisson_exp,
    estimate_sequence_mc,
    estimate_sequence_quadrature,
)

###############################################################################
# Perfect repair of an exponential unit is a Poisson process; stopped at an
# exponential time the sequence is geometric and every margin is zero.

closed = closed_form_poisson_exp(1.0, 1.0, 6)
perfect = VirtualAgeModel(Exponential(1.0), KijimaI(), ConstantDegree(0.0))
quad = estimate_sequence_quadrature(perfect, Exponential(1.0), 3)
mc = estimate_sequence_mc(perfect, Exponential(1.0), 6, 200_000, seed=0)
print("closed form:", np.round(closed.p, 6))
print("quadrature: ", np.round(quad.p, 6))
print("monte carlo:", np.round(mc.p, 4), "+/-", np.round(mc.se, 4))

rep = check_discrete_dfr(mc, alpha=0.01)
print("MC verdicts on the equality case:", [v.value for v in rep.verdicts])

###############################################################################
# An IFR base under Kijima I with a DFR stopping time: every margin is
# positive.

model = VirtualAgeModel(Weibull(2.0), KijimaI(), ConstantDegree(0.5))
rep = check_discrete_dfr(estimate_sequence_mc(model, Gamma(0.5), 8, 500_000, seed=2))
for n, (m, se, v) in enumerate(zip(rep.margins, rep.margin_se, rep.verdicts)):
    print(f"n={n}  margin={m:+.6f}  se={se:.2e}  {v.value}")
