"""Local differential privacy frequency estimation.

One-shot frequency oracles, longitudinal memoizing protocols, multidimensional
collection strategies, continuous-noise mechanisms and a simulation harness.
"""

__version__ = "0.1.0"

from ldpfreq.aggregator import HistogramAccumulator, UnionDayPlan, estimate_all, mse_avg, route_union_days
from ldpfreq.datasets import Dataset, load_csv, synth_uniform
from ldpfreq.errors import (
    DecodeError,
    DomainError,
    EmptyInputError,
    InfeasibleBudgetError,
    InvalidInputError,
    InvalidParameterError,
    LDPError,
    LoadError,
)
from ldpfreq.longitudinal import TwoRoundParams, longitudinal_estimate, longitudinal_params
from ldpfreq.noise import GeoBudget, PlanarPoint, lambert_w_minus1, planar_laplace
from ldpfreq.oracles import FrequencyEstimate, OneRoundParams, estimate_freq, grr_params, oue_params, sue_params
from ldpfreq.strategies import make_strategy

__all__ = [
    "Dataset", "DecodeError", "DomainError", "EmptyInputError", "FrequencyEstimate", "GeoBudget",
    "HistogramAccumulator", "InfeasibleBudgetError", "InvalidInputError", "InvalidParameterError",
    "LDPError", "LoadError", "OneRoundParams", "PlanarPoint", "TwoRoundParams", "UnionDayPlan",
    "estimate_all", "estimate_freq", "grr_params", "lambert_w_minus1", "load_csv",
    "longitudinal_estimate", "longitudinal_params", "make_strategy", "mse_avg", "oue_params",
    "planar_laplace", "route_union_days", "sue_params", "synth_uniform",
]
