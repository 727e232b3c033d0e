"""
Virtual-age trajectories
========================

Kijima type I and II models with the same base law and repair degrees,
simulated side by side.
"""

import numpy as np

from dfrkit import ConstantDegree, KijimaI, KijimaII, VirtualAgeModel, Weibull, sample_trajectories

rng = np.random.default_rng(1)
base = Weibull(2.0, 1.0)

###############################################################################
# Same seed, same degrees ``q = 0.6``: only the age update differs.

for rule in (KijimaI(), KijimaII()):
    model = VirtualAgeModel(base, rule, ConstantDegree(0.6))
    traj = sample_trajectories(model, 8, 50_000, np.random.default_rng(1))
    print(type(rule).__name__)
    print("  mean interarrival by n:", np.round(traj.x.mean(axis=0), 4))
    print("  mean virtual age by n: ", np.round(traj.v[:, 1:].mean(axis=0), 4))

###############################################################################
# Under type II the virtual age stays bounded, so interarrivals settle;
# under type I it keeps growing and an IFR base makes them shrink.
