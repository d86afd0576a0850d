"""Good-channel-first-serve (GCFS) downlink scheduling toolkit.

A base station shares one broadcast channel among many users by serving
the best instantaneous channels first each slot. This package provides
the slot-level Monte Carlo simulator of that policy, the mean-field
threshold analysis that predicts its delay for large populations, and
the single-user queue chain whose stationary law describes each buffer.
"""

from .errors import ConfigError, NumericError, UnstableChainError
from .markov import (
    ChainParams,
    StationaryDistribution,
    boundary_chi,
    chain_mean_delay,
    steady_state_closed_form_A1,
    steady_state_roots,
    steady_state_truncated,
    transition_prob,
    ztransform_series,
)
from .meanfield import MeanFieldSolution, Stability, phi, phi_sup, predicted_delay, solve_threshold
from .metrics import DistributionComparison, compare_distributions, little_delay, tv_distance
from .models import (
    ChannelModel,
    RayleighChannel,
    SystemParams,
    TabulatedChannel,
    TrafficModel,
    UniformChannel,
    mean_arrival_bits,
    rate_bits_per_symbol,
    sample_arrivals,
)
from .sim import (
    GcfsPolicy,
    SimState,
    SimSummary,
    SlotPlan,
    ThresholdPolicy,
    gcfs_plan,
    simulate,
    step,
    threshold_plan,
)

__version__ = "0.1.0"

__all__ = [
    "ChainParams",
    "ChannelModel",
    "ConfigError",
    "DistributionComparison",
    "GcfsPolicy",
    "MeanFieldSolution",
    "NumericError",
    "RayleighChannel",
    "SimState",
    "SimSummary",
    "SlotPlan",
    "Stability",
    "StationaryDistribution",
    "SystemParams",
    "TabulatedChannel",
    "ThresholdPolicy",
    "TrafficModel",
    "UniformChannel",
    "UnstableChainError",
    "boundary_chi",
    "chain_mean_delay",
    "compare_distributions",
    "gcfs_plan",
    "little_delay",
    "mean_arrival_bits",
    "phi",
    "phi_sup",
    "predicted_delay",
    "rate_bits_per_symbol",
    "sample_arrivals",
    "simulate",
    "solve_threshold",
    "steady_state_closed_form_A1",
    "steady_state_roots",
    "steady_state_truncated",
    "step",
    "threshold_plan",
    "transition_prob",
    "tv_distance",
    "ztransform_series",
]
