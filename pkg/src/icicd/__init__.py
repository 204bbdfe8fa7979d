"""Coverage of Poisson cellular downlinks under K-BS coordination and M-RB selection combining.

Thresholds are linear SIR values throughout the library; dB appears only at
the command line.
"""
from .analytic import (CoverageCurve, coverage_baseline, coverage_combined, coverage_curve,
                       coverage_icd, coverage_icic, joint_coverage_combined, joint_coverage_icd)
from .errors import DomainError, InfeasibleError, InsufficientRangeError, QuadratureError
from .model import NetworkModel, PlpsSample, Scheme, ShadowingSpec, sample_plps
from .specfun import Delta, c_kappa

__version__ = "0.1.0"

__all__ = [
    "CoverageCurve",
    "Delta",
    "DomainError",
    "InfeasibleError",
    "InsufficientRangeError",
    "NetworkModel",
    "PlpsSample",
    "QuadratureError",
    "Scheme",
    "ShadowingSpec",
    "c_kappa",
    "coverage_baseline",
    "coverage_combined",
    "coverage_curve",
    "coverage_icd",
    "coverage_icic",
    "joint_coverage_combined",
    "joint_coverage_icd",
    "sample_plps",
]
