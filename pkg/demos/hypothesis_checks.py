"""
Checking the hypotheses of the preservation results
===================================================

The ordering conditions on induced kernels tell the Kijima I and II
versions of the same model apart.
"""

from dfrkit import DegreeSequence, Gamma, Grid, KijimaI, RandomDegree, UniformZeroTo, VirtualAgeModel, Weibull
from dfrkit.counterexamples import kijima2_counterexample_model
from dfrkit.hypotheses import check_kijima1_conditions, check_t2star_conditions

###############################################################################
# Conditions c.1 and c.2 on grid histories.

for name, model in [
    ("Kijima II", kijima2_counterexample_model()),
    ("Kijima I", VirtualAgeModel(UniformZeroTo(1.0), KijimaI(), DegreeSequence([1.0, 0.0]))),
]:
    rep = check_t2star_conditions(model, depth=3)
    print(f"{name}: {rep.overall}")
    for c in rep.conditions:
        print(f"  {c.label:10} {c.status.value:9} {c.note}")
        if c.witnesses:
            print("    first witness:", c.witnesses[0])

###############################################################################
# Sufficient conditions for Kijima I with random degrees.

model = VirtualAgeModel(Weibull(2.0), KijimaI(), RandomDegree(UniformZeroTo(1.0)))
print(check_kijima1_conditions(model, Gamma(0.5), Grid.uniform(0.0, 5.0, 50)).to_json(indent=1))
