"""Exact coverage probabilities and the Laplace transforms they rest on.

All thresholds are linear SIR values. K = 1 is dispatched explicitly: the
coordination integrals carry a (1 - x^delta)^(K-2) weight that only makes
sense for K >= 2.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

from . import quadrature
from .errors import DomainError
from .model import NetworkModel
from .specfun import as_delta, c_kappa, lower_incomplete_gamma

__all__ = [
    "CoverageCurve",
    "laplace_rho_I",
    "laplace_xi_k_I_k",
    "laplace_general_fading",
    "exponential_expectation",
    "gamma_expectation",
    "degenerate_expectation",
    "coverage_baseline",
    "coverage_icic",
    "joint_coverage_icd",
    "coverage_icd",
    "joint_coverage_combined",
    "coverage_combined",
    "coverage_combined_all_M",
    "coverage_curve",
    "db_to_linear",
    "linear_to_db",
]


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


def _check_theta(theta):
    theta = float(theta)
    if not theta > 0 or not math.isfinite(theta):
        raise DomainError(f"theta must be positive and finite, got {theta}")
    return theta


def _check_int(name, value, minimum):
    if int(value) != value or value < minimum:
        raise DomainError(f"{name} must be an integer >= {minimum}, got {value}")
    return int(value)


def _check_kappa(kappa):
    kappa = float(kappa)
    if not kappa >= 1 or not math.isfinite(kappa):
        raise DomainError(f"kappa must be >= 1, got {kappa}")
    return kappa


# -- Laplace transforms -----------------------------------------------------

def laplace_rho_I(s, rho, model: NetworkModel, kappa=1.0):
    """Laplace transform of rho * I_rho, the scaled interference beyond rho.

    exp(-(lambda/kappa) pi E[S^delta] C(s) rho^delta) with
    C(s) = s delta/(1-delta) 2F1(1, 1-delta; 2-delta; -s) = C_1(s, 1) - 1.
    """
    kappa = _check_kappa(kappa)
    if not rho > 0:
        raise DomainError("rho must be positive")
    delta = model.delta
    excess = c_kappa(s, 1, 1.0, delta) - 1.0
    return np.exp(-model.intensity / kappa * excess * float(rho) ** float(delta))


def laplace_xi_k_I_k(s, k, kappa, delta):
    """L_{xi_k I_k}(s) = C_kappa(s, 1)^(-k)."""
    k = _check_int("k", k, 1)
    return c_kappa(s, 1, _check_kappa(kappa), as_delta(delta)) ** (-k)


def exponential_expectation(g: Callable[[float], float]) -> float:
    """E[g(H)] for H ~ Exp(1)."""
    val, _ = integrate.quad(lambda h: g(h) * math.exp(-h), 0.0, np.inf,
                            epsabs=1e-13, epsrel=1e-12, limit=200)
    return val


def gamma_expectation(shape: float) -> Callable[[Callable[[float], float]], float]:
    """Return a routine computing E[g(H)] for H ~ Gamma(shape, 1)."""
    log_norm = special.gammaln(shape)

    def expect(g):
        def integrand(h):
            if h == 0.0:
                return g(h) if shape == 1 else 0.0
            return g(h) * math.exp((shape - 1) * math.log(h) - h - log_norm)

        val, _ = integrate.quad(integrand, 0.0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=200)
        return val

    return expect


def degenerate_expectation(h0: float) -> Callable[[Callable[[float], float]], float]:
    return lambda g: g(h0)


def laplace_general_fading(s, k, kappa, delta, fading_expectation):
    """Laplace transform of xi_k I^H_k for an arbitrary fading law H.

    ``fading_expectation(g)`` must return E[g(H)]; it is applied to
    g(h) = exp(-s h) + s^delta h^delta gamma(1 - delta, s h).
    """
    k = _check_int("k", k, 1)
    kappa = _check_kappa(kappa)
    delta = float(as_delta(delta))
    s = float(s)
    if s < 0:
        raise DomainError("s must be >= 0")

    def bracket(h):
        if h == 0.0 or s == 0.0:
            return 1.0
        return math.exp(-s * h) + (s * h) ** delta * lower_incomplete_gamma(1.0 - delta, s * h)

    expected = fading_expectation(bracket)
    return (1.0 - 1.0 / kappa + expected / kappa) ** (-k)


# -- coverage ---------------------------------------------------------------

def _vectorize_theta(fn):
    """Let a scalar-threshold function accept array-like ``theta``."""
    def wrapper(theta, *args, **kwargs):
        if np.ndim(theta) == 0:
            return fn(theta, *args, **kwargs)
        return np.array([fn(t, *args, **kwargs) for t in np.asarray(theta, dtype=float).ravel()]
                        ).reshape(np.shape(theta))
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    wrapper.__wrapped__ = fn
    return wrapper


@_vectorize_theta
def coverage_baseline(theta, delta):
    """Coverage without coordination or diversity, 1 / C_1(theta, 1)."""
    return 1.0 / c_kappa(_check_theta(theta), 1, 1.0, as_delta(delta))


@_vectorize_theta
def joint_coverage_icd(theta, M, delta, kappa=1.0):
    """Probability of success on all M resource blocks, 1 / C_kappa(theta, M)."""
    M = _check_int("M", M, 1)
    return 1.0 / c_kappa(_check_theta(theta), M, _check_kappa(kappa), as_delta(delta))


def _binomial_sum(M, joint):
    """sum_m (-1)^(m+1) binom(M, m) joint(m)."""
    return math.fsum((-1) ** (m + 1) * math.comb(M, m) * joint(m) for m in range(1, M + 1))


@_vectorize_theta
def coverage_icd(theta, M, delta, kappa=1.0):
    """Selection combining over M RBs without coordination (inclusion-exclusion)."""
    M = _check_int("M", M, 1)
    theta = _check_theta(theta)
    return _binomial_sum(M, lambda m: joint_coverage_icd(theta, m, delta, kappa))


def _coordination_integral(theta, K, m, kappa, delta, tol):
    """(K-1) int_0^1 (1-u)^(K-2) C_kappa(theta u^(1/delta), m)^(-K) du.

    This is the coordination integral after u = x^delta, which removes the
    x^(delta-1) singularity at the origin.
    """
    inv = 1.0 / float(delta)

    def integrand(u):
        return (K - 1) * (1.0 - u) ** (K - 2) * c_kappa(theta * u**inv, m, kappa, delta) ** (-K)

    return quadrature.integrate(integrand, 0.0, 1.0, tol)


@_vectorize_theta
def joint_coverage_combined(theta, K, M, kappa, delta, tol=quadrature.DEFAULT_TOL):
    """Joint success over M RBs under K-BS coordination."""
    K = _check_int("K", K, 1)
    M = _check_int("M", M, 1)
    theta = _check_theta(theta)
    kappa = _check_kappa(kappa)
    delta = as_delta(delta)
    if K == 1:
        return joint_coverage_icd(theta, M, delta, kappa)
    return _coordination_integral(theta, K, M, kappa, delta, tol)


@_vectorize_theta
def coverage_icic(theta, K, kappa, delta, tol=quadrature.DEFAULT_TOL):
    """Coverage under K-BS coordination with a single RB."""
    K = _check_int("K", K, 1)
    if K == 1:
        return joint_coverage_icd(theta, 1, delta, kappa)
    return joint_coverage_combined(theta, K, 1, kappa, delta, tol)


def _inclusion_exclusion_matrix(M_max):
    """Row M-1 holds (-1)^(m+1) binom(M, m) for m = 1..M."""
    B = np.zeros((M_max, M_max))
    for M in range(1, M_max + 1):
        for m in range(1, M + 1):
            B[M - 1, m - 1] = (-1) ** (m + 1) * math.comb(M, m)
    return B


def coverage_combined_all_M(theta, K, M_max, kappa, delta, tol=quadrature.DEFAULT_TOL):
    """Coverage for M = 1..M_max at once, as an array of length M_max.

    For K >= 2 the inclusion-exclusion sum is taken inside the coordination
    integral and the whole vector is integrated with one adaptive rule. The
    alternating binomial sum would otherwise amplify independent quadrature
    errors of the joint terms by up to 2^M.
    """
    K = _check_int("K", K, 1)
    M_max = _check_int("M", M_max, 1)
    theta = _check_theta(theta)
    kappa = _check_kappa(kappa)
    delta = as_delta(delta)
    if K == 1:
        joint = [joint_coverage_icd(theta, m, delta, kappa) for m in range(1, M_max + 1)]
        return np.array([_binomial_sum(M, lambda m: joint[m - 1]) for M in range(1, M_max + 1)])
    B = _inclusion_exclusion_matrix(M_max)
    inv = 1.0 / float(delta)

    def integrand(u):
        s = theta * u**inv
        joint = np.stack([c_kappa(s, m, kappa, delta) ** (-K) for m in range(1, M_max + 1)],
                         axis=1)
        return ((K - 1) * (1.0 - u) ** (K - 2))[:, None] * (joint @ B.T)

    return np.atleast_1d(quadrature.integrate(integrand, 0.0, 1.0, tol))


@_vectorize_theta
def coverage_combined(theta, K, M, kappa, delta, tol=quadrature.DEFAULT_TOL):
    """Coverage with K-BS coordination and M-RB selection combining.

    Equal to sum_m (-1)^(m+1) binom(M, m) P_joint(K, m).
    """
    M = _check_int("M", M, 1)
    return float(coverage_combined_all_M(theta, K, M, kappa, delta, tol)[M - 1])


def coverage_curve(theta_grid, K=1, M=1, kappa=1.0, delta=0.5, params=None) -> "CoverageCurve":
    theta_grid = np.asarray(theta_grid, dtype=float)
    values = coverage_combined(theta_grid, K, M, kappa, delta)
    meta = {"K": int(K), "M": int(M), "kappa": float(kappa), "delta": float(delta)}
    meta.update(params or {})
    return CoverageCurve(theta_grid, np.asarray(values), "analytic", None, meta)


# -- curves -----------------------------------------------------------------

@dataclass
class CoverageCurve:
    theta_grid: np.ndarray
    values: np.ndarray
    kind: str = "analytic"
    ci_halfwidth: Optional[np.ndarray] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.theta_grid = np.asarray(self.theta_grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.kind not in ("analytic", "empirical"):
            raise DomainError(f"unknown curve kind {self.kind!r}")
        if self.theta_grid.shape != self.values.shape:
            raise DomainError("theta_grid and values differ in shape")
        if np.any(self.theta_grid <= 0) or np.any(np.diff(self.theta_grid) <= 0):
            raise DomainError("theta_grid must be positive and ascending")
        if np.any((self.values < 0) | (self.values > 1)):
            raise DomainError("coverage values must lie in [0, 1]")
        if self.ci_halfwidth is not None:
            self.ci_halfwidth = np.asarray(self.ci_halfwidth, dtype=float)
            if self.ci_halfwidth.shape != self.values.shape or np.any(self.ci_halfwidth < 0):
                raise DomainError("ci_halfwidth must be nonnegative and match values")

    @property
    def theta_db(self):
        return linear_to_db(self.theta_grid)

    @property
    def outage(self):
        return 1.0 - self.values

    def to_dict(self):
        out = {
            "kind": self.kind,
            "params": self.params,
            "theta_linear": self.theta_grid.tolist(),
            "value": self.values.tolist(),
        }
        if self.ci_halfwidth is not None:
            out["ci_halfwidth"] = self.ci_halfwidth.tolist()
        return out

    def to_json(self) -> str:
        # repr-based float serialization round-trips bit-exactly
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data) -> "CoverageCurve":
        return cls(np.array(data["theta_linear"], dtype=float),
                   np.array(data["value"], dtype=float),
                   data.get("kind", "analytic"),
                   None if data.get("ci_halfwidth") is None
                   else np.array(data["ci_halfwidth"], dtype=float),
                   dict(data.get("params", {})))

    @classmethod
    def from_json(cls, text: str) -> "CoverageCurve":
        return cls.from_dict(json.loads(text))

    def csv_rows(self, extra: Optional[dict] = None):
        extra = extra or {}
        for i, (theta, value) in enumerate(zip(self.theta_grid, self.values)):
            row = dict(extra)
            row.update(theta_db=repr(float(linear_to_db(theta))), theta_linear=repr(float(theta)),
                       value=repr(float(value)))
            if self.ci_halfwidth is not None:
                row["ci_halfwidth"] = repr(float(self.ci_halfwidth[i]))
            yield row

    def csv_header(self, extra=()):
        cols = list(extra) + ["theta_db", "theta_linear", "value"]
        if self.ci_halfwidth is not None:
            cols.append("ci_halfwidth")
        return cols

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=self.csv_header(), lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.csv_rows())
        return buf.getvalue()
