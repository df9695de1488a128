"""Branching random walks with regularly varying displacements and their extremal limits."""
from .brw import BrwModel, BrwRunResult, ConditioningError, simulate, simulate_conditioned
from .gw import (MartingaleLimitSampler, OffspringLaw, PopulationCapError, extinction_probability,
                 extinction_profile)
from .limit import SscdpppSpec, VTLaw, kappa_lambda, laplace_exponent, sample_N_star
from .pointproc import PointMeasure, TestFunction
from .tails import AngularMeasure, DisplacementModel, RectQuery, ScalingSequence

__version__ = "0.1.0"

__all__ = [
    "BrwModel", "BrwRunResult", "ConditioningError", "simulate", "simulate_conditioned",
    "MartingaleLimitSampler", "OffspringLaw", "PopulationCapError", "extinction_probability",
    "extinction_profile", "SscdpppSpec", "VTLaw", "kappa_lambda", "laplace_exponent",
    "sample_N_star", "PointMeasure", "TestFunction", "AngularMeasure", "DisplacementModel",
    "RectQuery", "ScalingSequence",
]
