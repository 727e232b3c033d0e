"""
Aging classes and the usual stochastic order
============================================

Grid checks of DFR / IFR for three textbook lifetimes, then a comparison
of a residual law with the new-unit law.
"""

import numpy as np

from dfrkit import Exponential, Gamma, Grid, Weibull, check_aging_class, st_compare
from dfrkit.survival import Residual

grid = Grid.uniform(0.0, 5.0, 50)

###############################################################################
# A verdict is HOLDS when no grid triple violates the ratio condition;
# otherwise the first offending ``(z, t1, t2)`` comes back as a witness.

for law in (Gamma(0.5, 1.0), Weibull(2.0, 1.0), Exponential(1.0)):
    dfr = check_aging_class(law, "DFR", grid)
    ifr = check_aging_class(law, "IFR", grid)
    print(f"{law!r:32} DFR {dfr.status.value:9} IFR {ifr.status.value}")
    if ifr.witness is not None:
        print("    IFR witness (z, t1, t2, margin):", np.round(ifr.witness, 4))

###############################################################################
# A used Weibull(2) unit is stochastically smaller than a new one; a used
# Gamma(0.5) unit is larger.

t = Grid.uniform(0.0, 4.0, 81)
for law in (Weibull(2.0), Gamma(0.5)):
    print(f"{law!r:32} residual at age 1 vs new:", st_compare(Residual(law, 1.0), law, t).relation.value)
