"""Coverage simulation on the 1-D path loss process.

Every realization carries one xi sequence and one set of activity marks,
shared by all M resource blocks, with independent Rayleigh fading per RB.
This reproduces the interference correlation across RBs that the joint
coverage formulas account for.

Realizations are drawn in fixed-size chunks, chunk ``c`` from
``stream(seed, c)``. Tallies are integers, so results are bit-identical for
any number of workers.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ..analytic import CoverageCurve
from ..errors import DomainError
from ..model import (DEFAULT_POINTS, NetworkModel, PlpsSample, Scheme, activity_marks,
                     sample_plps_batch)
from ..rng import stream
from ._pool import ordered_map

CHUNK_RUNS = 1000
CI_Z = 1.96

__all__ = [
    "SimEstimate",
    "simulate_coverage",
    "simulate_coverage_grid",
    "simulate_coverage_curve",
    "empirical_xi_statistics",
    "dump_plps_realizations",
    "CHUNK_RUNS",
]


@dataclass(frozen=True)
class SimEstimate:
    """A Monte Carlo estimate of a probability.

    For plain Bernoulli estimators ``stderr = sqrt(value (1 - value) / runs)``.
    """

    value: float
    stderr: float
    runs: int
    seed: int
    discards: int = 0

    @classmethod
    def from_counts(cls, hits: int, runs: int, seed: int, discards: int = 0) -> "SimEstimate":
        if runs <= 0:
            raise DomainError("no runs to estimate from")
        p = hits / runs
        return cls(p, math.sqrt(p * (1.0 - p) / runs), int(runs), int(seed), int(discards))

    def within(self, reference: float, n_sigma: float = 3.0) -> bool:
        return abs(self.value - reference) < n_sigma * self.stderr

    def to_dict(self):
        return asdict(self)


def _chunks(runs):
    runs = int(runs)
    if runs < 1:
        raise DomainError("runs must be a positive integer")
    return [(c, min(CHUNK_RUNS, runs - c * CHUNK_RUNS))
            for c in range(math.ceil(runs / CHUNK_RUNS))]


def _as_tuple(values, cast):
    out = tuple(cast(v) for v in np.atleast_1d(values))
    if not out:
        raise DomainError("empty parameter list")
    return out


def _grid_chunk(task):
    """Integer hit counts of shape (K, M, kappa, theta) for one chunk."""
    model, Ks, Ms, kappas, thetas, n_points, method, seed, chunk, size = task
    k_max, m_max = max(Ks), max(Ms)
    batch = sample_plps_batch(model, Scheme(1, m_max, 1.0), n_points, size,
                              stream(seed, chunk), method)
    power = batch.fading / batch.xi[:, :, None]
    signal = power[:, 0, :]
    thetas = np.asarray(thetas)
    hits = np.zeros((len(Ks), len(Ms), len(kappas), len(thetas)), dtype=np.int64)
    for c, kappa in enumerate(kappas):
        marked = power * activity_marks(batch.uniform, 1, kappa)[:, :, None]
        # interference from points K+1, K+2, ... built up from the far end
        interference = marked[:, k_max:, :].sum(axis=1) + (batch.tail_mean / kappa)[:, None]
        by_K = {k_max: interference}
        for k in range(k_max - 1, 0, -1):
            interference = interference + marked[:, k, :]
            by_K[k] = interference
        for a, K in enumerate(Ks):
            best = np.maximum.accumulate(signal / by_K[K], axis=1)
            for b, M in enumerate(Ms):
                hits[a, b, c] = (best[:, M - 1, None] > thetas[None, :]).sum(axis=0)
    return hits


def simulate_coverage_grid(model: NetworkModel, K_values, M_values, kappa_values, theta_values,
                           runs: int, seed: int, n_points: int = DEFAULT_POINTS,
                           method: str = "inverse", workers: int = 1):
    """Coverage estimates for every (K, M, kappa, theta) from one shared set of realizations.

    Returns a dict keyed by ``(K, M, kappa, theta)``. Estimates at different
    keys are correlated; each is individually unbiased.
    """
    Ks = _as_tuple(K_values, int)
    Ms = _as_tuple(M_values, int)
    kappas = _as_tuple(kappa_values, float)
    thetas = _as_tuple(theta_values, float)
    if min(Ks) < 1 or min(Ms) < 1 or min(kappas) < 1 or min(thetas) <= 0:
        raise DomainError("need K, M >= 1, kappa >= 1 and theta > 0")
    if n_points <= max(Ks):
        raise DomainError("n_points must exceed the coordination size")
    tasks = [(model, Ks, Ms, kappas, thetas, int(n_points), method, int(seed), c, size)
             for c, size in _chunks(runs)]
    hits = sum(ordered_map(_grid_chunk, tasks, workers))
    return {(K, M, kappa, theta): SimEstimate.from_counts(int(hits[a, b, c, d]), runs, seed)
            for a, K in enumerate(Ks) for b, M in enumerate(Ms)
            for c, kappa in enumerate(kappas) for d, theta in enumerate(thetas)}


def simulate_coverage(model: NetworkModel, scheme: Scheme, theta: float, runs: int, seed: int,
                      n_points: int = DEFAULT_POINTS, method: str = "inverse",
                      workers: int = 1) -> SimEstimate:
    """Fraction of realizations where the best of M RB SIRs exceeds ``theta``."""
    grid = simulate_coverage_grid(model, [scheme.K], [scheme.M], [scheme.kappa], [theta],
                                  runs, seed, n_points, method, workers)
    return next(iter(grid.values()))


def simulate_coverage_curve(model: NetworkModel, scheme: Scheme, theta_grid, runs: int,
                            seed: int, n_points: int = DEFAULT_POINTS, method: str = "inverse",
                            workers: int = 1) -> CoverageCurve:
    """Empirical curve with 95% normal-approximation half-widths."""
    theta_grid = np.asarray(theta_grid, dtype=float)
    grid = simulate_coverage_grid(model, [scheme.K], [scheme.M], [scheme.kappa], theta_grid,
                                  runs, seed, n_points, method, workers)
    est = [grid[(scheme.K, scheme.M, float(scheme.kappa), float(t))] for t in theta_grid]
    params = {"K": scheme.K, "M": scheme.M, "kappa": float(scheme.kappa),
              "alpha": model.alpha, "runs": int(runs), "seed": int(seed)}
    return CoverageCurve(theta_grid, [e.value for e in est], "empirical",
                         [CI_Z * e.stderr for e in est], params)


def empirical_xi_statistics(model: NetworkModel, k_list, realizations: int, seed: int,
                            n_points: int = 200):
    """Samples of X_k = xi_1/xi_k and Y_k = xi_k^-1 / I_k.

    I_k is the Rayleigh-faded interference from points k+1, k+2, ... with
    every point active; the truncated tail enters through its conditional
    mean. Returns ``{k: {"X": array, "Y": array}}``.
    """
    ks = _as_tuple(k_list, int)
    if min(ks) < 1 or max(ks) >= n_points:
        raise DomainError("need 1 <= k < n_points")
    X = {k: [] for k in ks}
    Y = {k: [] for k in ks}
    for c, size in _chunks(realizations):
        batch = sample_plps_batch(model, Scheme(), n_points, size, stream(seed, c))
        power = batch.fading[:, :, 0] / batch.xi
        tail_sums = np.cumsum(power[:, ::-1], axis=1)[:, ::-1]
        for k in ks:
            interference = tail_sums[:, k] + batch.tail_mean
            X[k].append(batch.xi[:, 0] / batch.xi[:, k - 1])
            Y[k].append(1.0 / batch.xi[:, k - 1] / interference)
    return {k: {"X": np.concatenate(X[k]), "Y": np.concatenate(Y[k])} for k in ks}


def dump_plps_realizations(model: NetworkModel, scheme: Scheme, count: int, seed: int,
                           n_points: int = DEFAULT_POINTS, method: str = "inverse"):
    """The first ``count`` realizations that a simulation with ``seed`` would use."""
    out = []
    for c, size in _chunks(max(int(count), 1)):
        batch = sample_plps_batch(model, Scheme(1, scheme.M, 1.0), n_points, size,
                                  stream(seed, c), method)
        for i in range(min(size, count - len(out))):
            active = activity_marks(batch.uniform[i], scheme.K, scheme.kappa)
            out.append(PlpsSample(batch.xi[i], batch.fading[i], active))
    return out
