"""Throughput-optimal choice of coordination size K and diversity order M.

The per-user throughput at a fixed rate is proportional to
coverage(K, M) / (kappa(K) M), with kappa(K) = max(1, eta0 + eta1 K) from an
affine fit to simulated effective loads. The search is exhaustive over
[1, bound]^2, optionally restricted to cells with coverage >= 1 - epsilon.
Ties go to the smaller load kappa M, then to the smaller K.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from typing import Mapping, Optional

import numpy as np

from .analytic import coverage_combined_all_M, linear_to_db
from .errors import DomainError, InfeasibleError
from .specfun import as_delta

DEFAULT_SEARCH_BOUND = 20
SWEEP_COLUMNS = ("theta_db", "K_star", "M_star", "objective", "kappa", "feasible")

__all__ = [
    "OptimizationResult",
    "fit_affine_load",
    "kappa_from_fit",
    "coverage_table",
    "optimize_throughput",
    "optimize_sweep",
    "sweep_to_csv",
]


def _kappa_table(table):
    """Accept {K: kappa} or {K: entry with .kappa_hat}."""
    out = {}
    for K, v in dict(table).items():
        out[int(K)] = float(getattr(v, "kappa_hat", v))
    return out


def fit_affine_load(table) -> tuple[float, float]:
    """Least-squares (eta0, eta1) for kappa = eta0 + eta1 K."""
    pts = _kappa_table(table)
    if len(pts) < 2:
        raise DomainError("affine fit needs at least two distinct K values")
    K = np.array(sorted(pts), dtype=float)
    kappa = np.array([pts[int(k)] for k in K])
    eta1, eta0 = np.polyfit(K, kappa, 1)
    return float(eta0), float(eta1)


def kappa_from_fit(K, load_fit) -> float:
    eta0, eta1 = load_fit
    return max(1.0, eta0 + eta1 * K)


@dataclass(frozen=True)
class OptimizationResult:
    theta: float
    k_star: int
    m_star: int
    objective: float
    kappa_used: float
    coverage: float
    constrained: bool
    epsilon: Optional[float] = None

    def to_dict(self):
        return asdict(self)


def coverage_table(theta, delta, load_fit, search_bound=DEFAULT_SEARCH_BOUND):
    """Coverage for every (K, M) in [1, bound]^2 as an array indexed [K-1, M-1].

    Each K takes a single vector quadrature that yields all M at once.
    """
    bound = int(search_bound)
    if bound < 1:
        raise DomainError("search_bound must be a positive integer")
    delta = as_delta(delta)
    return np.stack([coverage_combined_all_M(theta, K, bound, kappa_from_fit(K, load_fit), delta)
                     for K in range(1, bound + 1)])


def _argmax(objective, load, feasible):
    """Index of the best feasible cell under (objective desc, load asc, K asc)."""
    best = None
    for K in range(objective.shape[0]):
        for M in range(objective.shape[1]):
            if not feasible[K, M]:
                continue
            key = (-objective[K, M], load[K, M], K)
            if best is None or key < best[0]:
                best = (key, K, M)
    return None if best is None else best[1:]


def optimize_throughput(theta, delta, load_fit, search_bound=DEFAULT_SEARCH_BOUND,
                        epsilon=None, table=None) -> OptimizationResult:
    """Exhaustive argmax of coverage / (kappa M), optionally with coverage >= 1 - epsilon.

    Raises InfeasibleError if no cell meets the constraint.
    """
    theta = float(theta)
    if not theta > 0:
        raise DomainError("theta must be positive")
    if epsilon is not None and not 0 < epsilon < 1:
        raise DomainError("epsilon must lie in (0, 1)")
    cov = coverage_table(theta, delta, load_fit, search_bound) if table is None else table
    bound = cov.shape[0]
    kappa = np.array([kappa_from_fit(K, load_fit) for K in range(1, bound + 1)])
    M = np.arange(1, cov.shape[1] + 1)
    load = kappa[:, None] * M[None, :]
    objective = cov / load
    feasible = np.ones_like(cov, dtype=bool) if epsilon is None else cov >= 1.0 - epsilon
    pick = _argmax(objective, load, feasible)
    if pick is None:
        raise InfeasibleError(f"no (K, M) in [1, {bound}]^2 reaches coverage {1 - epsilon:g} "
                              f"at theta={theta:g}")
    K, Mi = pick
    return OptimizationResult(theta, K + 1, Mi + 1, float(objective[K, Mi]), float(kappa[K]),
                              float(cov[K, Mi]), epsilon is not None, epsilon)


def optimize_sweep(theta_grid, delta, load_fit, search_bound=DEFAULT_SEARCH_BOUND,
                   epsilon=None):
    """One result per theta; an infeasible theta yields None."""
    out = []
    for theta in np.atleast_1d(theta_grid):
        try:
            out.append(optimize_throughput(theta, delta, load_fit, search_bound, epsilon))
        except InfeasibleError:
            out.append(None)
    return out


def sweep_to_csv(theta_grid, results) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for theta, res in zip(np.atleast_1d(theta_grid), results):
        db = repr(float(linear_to_db(theta)))
        if res is None:
            writer.writerow([db, "", "", "", "", "false"])
        else:
            writer.writerow([db, res.k_star, res.m_star, repr(res.objective),
                             repr(res.kappa_used), "true"])
    return buf.getvalue()
