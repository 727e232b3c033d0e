"""Discrete-DFR checks for counting processes with dependent interarrivals.

Virtual-age (Kijima) repair models, survival-sequence estimation of
``P(N(T) >= n)`` for an independent random time ``T``, and numerical checks
of the hypotheses and counterexamples around DFR preservation.
"""

from ._errors import UnsupportedError
from .estimate import (
    RandomTime,
    SurvivalSequenceEstimate,
    LogConvexityReport,
    check_discrete_dfr,
    closed_form_poisson_exp,
    estimate_sequence_mc,
    estimate_sequence_quadrature,
)
from .kernels import ComposedKernel, HistoryKernel, compose, sample_joint, verify_composition
from .survival import (
    ClassVerdict,
    Discrete,
    Empirical,
    Exponential,
    Gamma,
    Grid,
    Lifetime,
    Order,
    OrderVerdict,
    PointMass,
    Status,
    SurvivalFunction,
    UniformZeroTo,
    Weibull,
    check_aging_class,
    conditional_survival,
    quantile_invert,
    st_compare,
)
from .vamodels import (
    ConstantDegree,
    CustomRule,
    DegreeSequence,
    KijimaI,
    KijimaII,
    RandomDegree,
    Trajectory,
    VirtualAgeModel,
    induced_kernel,
    next_interarrival_survival,
    sample_trajectories,
    sample_trajectory,
    step_virtual_age,
)

__version__ = "0.1.0"
