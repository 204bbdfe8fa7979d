"""Monte Carlo validation: PLPS coverage simulation and 2-D deployment scheduling."""
from .plps import (CHUNK_RUNS, SimEstimate, dump_plps_realizations, empirical_xi_statistics,
                   simulate_coverage, simulate_coverage_curve, simulate_coverage_grid)

__all__ = [
    "CHUNK_RUNS",
    "SimEstimate",
    "dump_plps_realizations",
    "empirical_xi_statistics",
    "simulate_coverage",
    "simulate_coverage_curve",
    "simulate_coverage_grid",
]
