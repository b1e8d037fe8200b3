"""Brownian particles with stochastic synchronizing jumps.

Exact event-driven Monte Carlo simulation of N Brownian particles that
synchronize in randomly chosen groups at random epochs, together with the
closed-form spread curve, the three time-scale regimes, and comparison
tooling.  The FastAPI service in ``brownsync.service`` wraps this package;
the ``brownsync`` command line is a thin client of that service.
"""

from .analysis import (
    Coefficient,
    CriticalScale,
    ExplicitScale,
    McSettings,
    PowerScale,
    Regime,
    RegimeParams,
    RegimeReport,
    RegimeTrend,
    SweepPlan,
    alpha_N,
    classify_alphas,
    closed_form_R,
    ode_residual,
    predicted_asymptote,
    regime_classify,
    relaxation_scale,
    renewal_check,
    slowdown_factor,
    stationary_spread,
    sweep,
)
from .engine import (
    EstimateResult,
    InitialCondition,
    LazyParticleState,
    SimulationConfig,
    VarianceEstimate,
    centered_snapshot,
    estimate_R,
    run_replica,
)
from .errors import (
    ConfigurationError,
    DegenerateConfigurationError,
    EpochBudgetError,
)
from .particles import (
    IndexTuple,
    InteractionSignature,
    ParticleConfiguration,
    TupleSampler,
    apply_sync,
    center_of_mass,
    contraction_factor,
    empirical_variance,
    kappa_analytic,
    kappa_enumerate,
    sample_tuple,
)
from .renewal import EpochStream, RenewalSpec, count_at, spent_waiting_time

__version__ = "0.1.0"
