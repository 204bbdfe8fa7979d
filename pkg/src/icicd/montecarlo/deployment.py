"""2-D deployment with users and a random sequential coordination scheduler.

BSs and users are independent PPPs in a square window of side L. Each user
ranks BSs by mean received power S * |x|^-alpha with an iid lognormal mark
per user-BS pair. Users are visited once in uniform random order; a user is
scheduled iff its strongest BS is idle and none of its 2nd..K-th strongest
BSs is serving. On success the strongest BS turns serving and the others
muted.

Statistics are taken from the inner half-window [L/4, 3L/4]^2 only; the
outer ring exists so that inner cells see a complete neighbourhood. With
``wrap=True`` the window is a torus instead and every BS counts.

One realization serves all K: the geometry, shadowing and visiting order are
shared and only the scheduler is rerun.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numba
import numpy as np

from ..errors import DomainError
from ..model import NetworkModel, ShadowingSpec
from ..rng import stream
from ._pool import ordered_map
from .plps import SimEstimate

IDLE, SERVING, MUTED = 0, 1, 2
WINDOW_FACTOR = 30.0
USER_CHUNK = 512

__all__ = [
    "DeploymentSample",
    "LoadEntry",
    "LoadEstimate",
    "default_window_side",
    "schedule",
    "sample_deployment",
    "estimate_effective_load",
    "estimate_load_table",
    "simulate_deployment_coverage",
    "deployment_coverage_grid",
]


def default_window_side(lambda_bs: float) -> float:
    return WINDOW_FACTOR / math.sqrt(lambda_bs)


@numba.njit(cache=True)
def _schedule(order, candidates, K, n_bs):
    status = np.zeros(n_bs, dtype=np.int8)
    served_user = np.full(n_bs, -1, dtype=np.int64)
    for u in order:
        b0 = candidates[u, 0]
        if b0 < 0 or status[b0] != IDLE:
            continue
        ok = True
        for j in range(1, K):
            b = candidates[u, j]
            if b >= 0 and status[b] == SERVING:
                ok = False
                break
        if not ok:
            continue
        status[b0] = SERVING
        served_user[b0] = u
        for j in range(1, K):
            b = candidates[u, j]
            if b >= 0:
                status[b] = MUTED
    return status, served_user


def schedule(order, candidates, K, n_bs=None):
    """Run the sequential policy; returns per-BS status and the served user (or -1).

    ``candidates[u]`` lists user u's BSs by decreasing mean power (-1 pads).
    """
    candidates = np.ascontiguousarray(candidates, dtype=np.int64)
    if n_bs is None:
        n_bs = int(candidates.max()) + 1 if candidates.size else 0
    return _schedule(np.asarray(order, dtype=np.int64), candidates, int(K), int(n_bs))


@dataclass(frozen=True)
class DeploymentSample:
    """One window realization after scheduling for a given K.

    ``candidates`` holds each user's strongest BSs in decreasing mean power;
    column 0 is the serving map. The per-pair shadowing matrix is not
    stored; it is regenerated from the seed when needed.
    """

    window_side: float
    bs_points: np.ndarray
    user_points: np.ndarray
    candidates: np.ndarray
    status: np.ndarray
    K: int

    @property
    def serving_map(self):
        return self.candidates[:, 0]

    def to_dict(self):
        names = {IDLE: "idle", SERVING: "serving", MUTED: "muted"}
        return {"window_side": self.window_side, "K": self.K,
                "bs_points": self.bs_points.tolist(), "user_points": self.user_points.tolist(),
                "serving_map": self.serving_map.tolist(),
                "candidates": self.candidates.tolist(),
                "status": [names[int(s)] for s in self.status]}

    def to_json(self):
        return json.dumps(self.to_dict())


@dataclass
class _Geometry:
    side: float
    bs: np.ndarray
    users: np.ndarray
    candidates: np.ndarray
    inner_bs: np.ndarray
    inner_users: np.ndarray
    inner_log_power: np.ndarray | None   # rows: inner users, columns: all BSs


def _inner(points, side, wrap):
    if wrap:
        return np.ones(len(points), dtype=bool)
    lo, hi = 0.25 * side, 0.75 * side
    return np.all((points >= lo) & (points < hi), axis=1)


def _draw_geometry(model, lambda_u, side, k_max, seed, index, wrap, keep_inner_power):
    rng = stream(seed, index, 0)
    area = side * side
    bs = rng.uniform(0.0, side, (rng.poisson(model.lam * area), 2))
    users = rng.uniform(0.0, side, (rng.poisson(lambda_u * area), 2))
    n_bs, n_u = len(bs), len(users)
    sigma_ln = model.shadowing.sigma_db * math.log(10.0) / 10.0
    width = min(k_max, n_bs)
    candidates = np.full((n_u, k_max), -1, dtype=np.int64)
    inner_users = _inner(users, side, wrap)
    inner_rows = np.flatnonzero(inner_users)
    inner_power = np.empty((len(inner_rows), n_bs)) if keep_inner_power else None
    row_pos = np.full(n_u, -1)
    row_pos[inner_rows] = np.arange(len(inner_rows))
    for start in range(0, n_u, USER_CHUNK):
        stop = min(start + USER_CHUNK, n_u)
        diff = np.abs(users[start:stop, None, :] - bs[None, :, :])
        if wrap:
            diff = np.minimum(diff, side - diff)
        log_power = -0.5 * model.alpha * np.log(np.einsum("ubk,ubk->ub", diff, diff))
        if sigma_ln > 0:
            log_power += sigma_ln * rng.standard_normal(log_power.shape)
        if width:
            top = np.argpartition(-log_power, width - 1, axis=1)[:, :width]
            order = np.argsort(-np.take_along_axis(log_power, top, axis=1), axis=1)
            candidates[start:stop, :width] = np.take_along_axis(top, order, axis=1)
        if keep_inner_power:
            pos = row_pos[start:stop]
            sel = pos >= 0
            inner_power[pos[sel]] = log_power[sel]
    return _Geometry(side, bs, users, candidates, _inner(bs, side, wrap), inner_users,
                     inner_power)


def _realization(task):
    """Per-K tallies for one window realization."""
    (model, lambda_u, side, Ks, M, thetas, seed, index, wrap) = task
    k_max = max(Ks)
    geo = _draw_geometry(model, lambda_u, side, k_max, seed, index, wrap, thetas is not None)
    order = stream(seed, index, 1).permutation(len(geo.users))
    n_bs_inner = int(geo.inner_bs.sum())
    out = {}
    for K in Ks:
        status, served_user = schedule(order, geo.candidates[:, :K], K, len(geo.bs))
        serving = status == SERVING
        entry = {"n_bs": n_bs_inner, "n_serving": int((serving & geo.inner_bs).sum())}
        if thetas is not None:
            entry["hits"], entry["n_eval"] = _coverage_tally(geo, serving, served_user, K, M,
                                                             thetas, seed, index)
        out[K] = entry
    return out


def _coverage_tally(geo, serving, served_user, K, M, thetas, seed, index):
    users = served_user[serving]
    users = users[geo.inner_users[users]]
    n_eval = len(users)
    hits = np.zeros(len(thetas), dtype=np.int64)
    if n_eval == 0:
        return hits, 0
    row_pos = np.cumsum(geo.inner_users) - 1
    log_power = geo.inner_log_power[row_pos[users]]
    own = geo.candidates[users, 0]
    tx = np.flatnonzero(serving)
    shift = log_power[np.arange(n_eval), own]
    rel = np.exp(log_power[:, tx] - shift[:, None])       # relative to own signal
    is_own = tx[None, :] == own[:, None]
    rel[is_own] = 0.0
    rng = stream(seed, index, 2, K)
    best = np.zeros(n_eval)
    for _ in range(M):
        fading = rng.standard_exponential(rel.shape)
        signal = rng.standard_exponential(n_eval)
        best = np.maximum(best, signal / np.einsum("ub,ub->u", rel, fading))
    hits[:] = (best[:, None] > np.asarray(thetas)[None, :]).sum(axis=0)
    return hits, n_eval


def _run(model, lambda_u, Ks, realizations, side, seed, wrap, workers, M=1, thetas=None):
    Ks = tuple(int(k) for k in np.atleast_1d(Ks))
    if not Ks or min(Ks) < 1:
        raise DomainError("K values must be positive integers")
    if not lambda_u > 0:
        raise DomainError("user density must be positive")
    if int(realizations) < 1:
        raise DomainError("realizations must be a positive integer")
    side = default_window_side(model.lam) if side is None else float(side)
    if side * math.sqrt(model.lam) < 4.0:
        raise DomainError("window too small: inner region would hold about one BS")
    tasks = [(model, float(lambda_u), side, Ks, int(M),
              None if thetas is None else tuple(float(t) for t in thetas),
              int(seed), r, bool(wrap)) for r in range(int(realizations))]
    return Ks, side, ordered_map(_realization, tasks, workers)


@dataclass(frozen=True)
class LoadEntry:
    kappa_hat: float
    stderr: float
    n_bs: int
    n_scheduled: int
    realizations: int
    discards: int = 0


@dataclass
class LoadEstimate:
    """Per-K effective-load estimates plus the least-squares affine fit."""

    per_K: dict
    affine_fit: tuple | None = None
    params: dict = field(default_factory=dict)

    def table(self):
        return {K: e.kappa_hat for K, e in sorted(self.per_K.items())}

    def to_dict(self):
        return {"params": self.params,
                "per_K": {str(K): vars(e) for K, e in sorted(self.per_K.items())},
                "affine_fit": None if self.affine_fit is None else list(self.affine_fit)}

    @classmethod
    def from_dict(cls, data):
        per_K = {int(K): LoadEntry(**e) for K, e in data["per_K"].items()}
        fit = data.get("affine_fit")
        return cls(per_K, None if fit is None else tuple(fit), dict(data.get("params", {})))


def _load_entry(results, K):
    ratios, n_bs, n_sched, discards = [], 0, 0, 0
    for res in results:
        e = res[K]
        if e["n_serving"] == 0:
            discards += 1
            continue
        ratios.append(e["n_bs"] / e["n_serving"])
        n_bs += e["n_bs"]
        n_sched += e["n_serving"]
    if discards:
        warnings.warn(f"K={K}: {discards} realization(s) with no scheduled user discarded",
                      RuntimeWarning, stacklevel=3)
    if not ratios:
        raise DomainError(f"K={K}: no realization scheduled any user")
    ratios = np.asarray(ratios)
    stderr = float(ratios.std(ddof=1) / math.sqrt(len(ratios))) if len(ratios) > 1 else math.inf
    return LoadEntry(float(ratios.mean()), stderr, n_bs, n_sched, len(ratios), discards)


def estimate_load_table(alpha, lambda_bs, lambda_u, sigma_dB, K_values, realizations,
                        window_side=None, seed=0, workers=1, wrap=False) -> LoadEstimate:
    """kappa_hat for each K, from one shared set of window realizations."""
    from ..optimize import fit_affine_load

    shadowing = ShadowingSpec.lognormal(sigma_dB) if sigma_dB > 0 else ShadowingSpec()
    model = NetworkModel(alpha, lambda_bs, shadowing)
    Ks, side, results = _run(model, lambda_u, K_values, realizations, window_side, seed,
                             wrap, workers)
    per_K = {K: _load_entry(results, K) for K in Ks}
    table = {K: e.kappa_hat for K, e in per_K.items()}
    fit = fit_affine_load(table) if len(Ks) >= 2 else None
    params = {"alpha": float(alpha), "lambda_bs": float(lambda_bs), "lambda_u": float(lambda_u),
              "sigma_dB": float(sigma_dB), "window_side": side, "seed": int(seed),
              "wrap": bool(wrap)}
    return LoadEstimate(per_K, fit, params)


def estimate_effective_load(alpha, lambda_bs, lambda_u, sigma_dB, K, realizations,
                            window_side=None, seed=0, workers=1, wrap=False) -> LoadEntry:
    """kappa_hat = mean over realizations of (#BS) / (#scheduled users), inner window."""
    est = estimate_load_table(alpha, lambda_bs, lambda_u, sigma_dB, [K], realizations,
                              window_side, seed, workers, wrap)
    return est.per_K[int(K)]


def _cluster_estimate(results, K, t, seed):
    hits = np.array([r[K]["hits"][t] for r in results], dtype=float)
    counts = np.array([r[K]["n_eval"] for r in results], dtype=float)
    total = counts.sum()
    discards = int((counts == 0).sum())
    if total == 0:
        raise DomainError(f"K={K}: no scheduled user in the inner window")
    p = hits.sum() / total
    R = len(results)
    # ratio-estimator standard error; users in one window are not independent
    resid = hits - p * counts
    stderr = math.sqrt(R / max(R - 1, 1) * float(resid @ resid)) / total
    return SimEstimate(float(p), stderr, int(total), int(seed), discards)


def deployment_coverage_grid(model: NetworkModel, lambda_u, K_values, M, theta_values,
                             realizations, window_side=None, seed=0, workers=1, wrap=False):
    """Coverage of scheduled inner-window users for every (K, theta).

    Only serving BSs interfere. Fading is Rayleigh, drawn fresh per RB;
    shadowing is the same pair mark used for association. Returns a dict
    keyed by ``(K, theta)``. The stderr accounts for users of one window
    sharing the interferer field.
    """
    thetas = tuple(float(t) for t in np.atleast_1d(theta_values))
    if not thetas or min(thetas) <= 0:
        raise DomainError("theta must be positive")
    if int(M) < 1:
        raise DomainError("M must be a positive integer")
    Ks, _, results = _run(model, lambda_u, K_values, realizations, window_side, seed, wrap,
                          workers, M, thetas)
    return {(K, th): _cluster_estimate(results, K, t, seed)
            for K in Ks for t, th in enumerate(thetas)}


def simulate_deployment_coverage(model: NetworkModel, lambda_u, K, M, theta, realizations,
                                 window_side=None, seed=0, workers=1, wrap=False) -> SimEstimate:
    grid = deployment_coverage_grid(model, lambda_u, [K], M, [theta], realizations,
                                    window_side, seed, workers, wrap)
    return grid[(int(K), float(theta))]


def sample_deployment(model: NetworkModel, lambda_u, K, window_side=None, seed=0, index=0,
                      wrap=False) -> DeploymentSample:
    """Realization ``index`` of a run with ``seed``, scheduled for coordination size K."""
    side = default_window_side(model.lam) if window_side is None else float(window_side)
    geo = _draw_geometry(model, float(lambda_u), side, int(K), seed, index, wrap, False)
    order = stream(seed, index, 1).permutation(len(geo.users))
    status, _ = schedule(order, geo.candidates, K, len(geo.bs))
    return DeploymentSample(side, geo.bs, geo.users, geo.candidates, status, int(K))
