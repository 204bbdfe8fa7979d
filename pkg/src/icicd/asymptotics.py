"""Asymptotic coefficients of coverage and outage.

High reliability (theta -> 0):   outage ~ a * theta^order
High spectral efficiency (theta -> inf):  coverage ~ b * theta^(-delta)

For M-RB selection combining the reliability coefficient a_M is the M-th
derivative at 0 of 1 / 1F1(-delta; 1-delta; x). Three independent routes are
provided: partial Bell polynomials, the explicit partition (Faa di Bruno) sum,
and high-precision central differences with Richardson extrapolation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np
from scipy import special

from . import quadrature
from .analytic import CoverageCurve, coverage_combined
from .errors import DomainError, InsufficientRangeError
from .specfun import as_delta, c_kappa, integer_partitions, partial_bell, rising_factorial

MAX_PARTITION_ORDER = 12
NUMERICAL_FLOOR = 1e-15

__all__ = [
    "AsymptoticCoefficient",
    "coeff_a_K",
    "coeff_b_K",
    "coeff_a_M",
    "coeff_b_M",
    "faa_di_bruno_coeff",
    "pochhammer_identity",
    "diversity_order_estimate",
    "empirical_reliability_coefficient",
    "coefficient_table",
]


@dataclass(frozen=True)
class AsymptoticCoefficient:
    regime: str          # "high_reliability" | "high_spectral_efficiency"
    scheme_axis: str     # "K" | "M" | "combined"
    K: int
    M: int
    kappa: float
    delta: float
    value: float
    order: float
    numerical: bool = False

    def __post_init__(self):
        if self.regime not in ("high_reliability", "high_spectral_efficiency"):
            raise DomainError(f"unknown regime {self.regime!r}")
        if not self.value > 0:
            raise DomainError("asymptotic coefficients are positive")


def _check_int(name, value, minimum):
    if int(value) != value or value < minimum:
        raise DomainError(f"{name} must be an integer >= {minimum}, got {value}")
    return int(value)


def _check_kappa(kappa):
    kappa = float(kappa)
    if not kappa >= 1:
        raise DomainError(f"kappa must be >= 1, got {kappa}")
    return kappa


# -- coordination ------------------------------------------------------------

def coeff_a_K(K, kappa, delta):
    """(1/kappa) * K! / (1 + 1/delta)_{K-1} * delta / (1 - delta)."""
    K = _check_int("K", K, 1)
    kappa = _check_kappa(kappa)
    d = float(as_delta(delta))
    return math.factorial(K) / rising_factorial(1.0 + 1.0 / d, K - 1) * d / (1.0 - d) / kappa


def coeff_b_K(K, kappa, delta, tol=quadrature.DEFAULT_TOL):
    """(K-1) * int_0^inf delta x^(delta-1) C_kappa(x, 1)^(-K) dx, for K >= 2.

    With u = x^delta the integrand becomes C_kappa(u^(1/delta), 1)^(-K) on
    (0, inf). The part on (0, 1] is integrated directly; the tail is mapped by
    v = 1/u onto (0, 1], where C_kappa grows like u and the transformed
    integrand v^-2 C_kappa(v^(-1/delta), 1)^(-K) stays bounded for K >= 2.
    """
    K = _check_int("K", K, 2)
    kappa = _check_kappa(kappa)
    delta = as_delta(delta)
    inv = 1.0 / float(delta)

    def head(u):
        return c_kappa(u**inv, 1, kappa, delta) ** (-K)

    def tail(v):
        out = np.zeros_like(v)
        pos = v > 0
        vp = v[pos]
        out[pos] = vp**-2.0 * c_kappa(vp**-inv, 1, kappa, delta) ** (-K)
        return out

    return (K - 1) * (quadrature.integrate(head, 0.0, 1.0, tol)
                      + quadrature.integrate(tail, 0.0, 1.0, tol))


# -- diversity ---------------------------------------------------------------

def _tau_bar(j, delta):
    """j! tau(j) = (-delta)_j / (1-delta)_j = -delta / (j - delta)."""
    return -delta / (j - delta)


def _a_M_bell(M, delta):
    tau_bar = [_tau_bar(j, delta) for j in range(1, M + 1)]
    return math.fsum((-1) ** i * math.factorial(i) * partial_bell(M, i, tau_bar[: M - i + 1])
                     for i in range(1, M + 1))


def _a_M_partition(M, delta):
    if M > MAX_PARTITION_ORDER:
        raise DomainError(f"partition enumeration limited to M <= {MAX_PARTITION_ORDER}")
    tau = [_tau_bar(i, delta) / math.factorial(i) for i in range(1, M + 1)]
    terms = []
    for b in integer_partitions(M):
        parts = sum(b)
        weight = Fraction(math.factorial(M) * (-1) ** parts * math.factorial(parts),
                          math.prod(math.factorial(bi) for bi in b))
        prod = math.prod(t**bi for t, bi in zip(tau, b) if bi)
        terms.append(float(weight) * prod)
    return math.fsum(terms)


def _a_M_finite_difference(M, delta, step=1e-3, dps=50, rel_tol=1e-7, max_levels=10):
    """Central differences of 1/1F1(-delta; 1-delta; x) at 0, Richardson-extrapolated.

    Carried out in ``dps``-digit arithmetic so that the h^-M amplification of
    rounding error stays far below the truncation error.
    """
    with mpmath.workdps(dps):
        d = mpmath.mpf(delta)

        def f(x):
            return 1 / mpmath.hyp1f1(-d, 1 - d, x)

        def central(h):
            # symmetric M-th difference; error expands in even powers of h
            return sum((-1) ** j * math.comb(M, j) * f((mpmath.mpf(M) / 2 - j) * h)
                       for j in range(M + 1)) / h**M

        h = mpmath.mpf(step)
        table = [[central(h)]]
        for level in range(1, max_levels):
            h /= 2
            row = [central(h)]
            for j in range(1, level + 1):
                factor = mpmath.mpf(4) ** j
                row.append((factor * row[j - 1] - table[level - 1][j - 1]) / (factor - 1))
            table.append(row)
            change = abs(row[-1] - table[level - 1][-1])
            if change <= 1e-12 * abs(row[-1]):
                break
        if change > rel_tol * abs(row[-1]):
            raise ArithmeticError(f"Richardson table not stable: change {float(change):.3e}")
        return float(row[-1])


def coeff_a_M(M, delta, method="bell"):
    """Outage coefficient a_M for M-RB selection combining.

    ``method`` is ``"bell"`` (partial Bell polynomials), ``"partition"``
    (partition sum) or ``"finite_difference"``.
    """
    M = _check_int("M", M, 1)
    d = float(as_delta(delta))
    if method == "bell":
        return _a_M_bell(M, d)
    if method == "partition":
        return _a_M_partition(M, d)
    if method == "finite_difference":
        return _a_M_finite_difference(M, d)
    raise ValueError(f"unknown method {method!r}")


def coeff_b_M(M, delta):
    """sum_m (-1)^(m+1) binom(M, m) Gamma(m) / (Gamma(1-delta) Gamma(m+delta))."""
    M = _check_int("M", M, 1)
    d = float(as_delta(delta))
    terms = []
    for m in range(1, M + 1):
        log_term = special.gammaln(m) - special.gammaln(1.0 - d) - special.gammaln(m + d)
        terms.append((-1) ** (m + 1) * math.comb(M, m) * math.exp(log_term))
    return math.fsum(terms)


def faa_di_bruno_coeff(n, m, delta):
    """n-th derivative at x = 0 of 1 / C_1(x, m).

    C_1(x, m) = sum_i (m)_i tau(i) (-x)^i, so Faa di Bruno's formula with the
    outer function 1/y gives
    sum_b n! (-1)^(n + |b|) |b|! / prod b_i! * prod ((m)_i tau(i))^b_i
    over partitions b of n, |b| = sum b_i.
    """
    n = _check_int("n", n, 1)
    m = _check_int("m", m, 1)
    if n > MAX_PARTITION_ORDER:
        raise DomainError(f"partition enumeration limited to n <= {MAX_PARTITION_ORDER}")
    d = float(as_delta(delta))
    inner = [rising_factorial(m, i) * _tau_bar(i, d) / math.factorial(i) for i in range(1, n + 1)]
    terms = []
    for b in integer_partitions(n):
        parts = sum(b)
        weight = Fraction(math.factorial(n) * (-1) ** (n + parts) * math.factorial(parts),
                          math.prod(math.factorial(bi) for bi in b))
        terms.append(float(weight) * math.prod(t**bi for t, bi in zip(inner, b) if bi))
    return math.fsum(terms)


def pochhammer_identity(M, k: Sequence[int]):
    """sum_{m=1}^M binom(M, m) (-1)^(m + A) prod_i (m)_{k_i}, A = sum k_i.

    Exact integer arithmetic. Equals 0 when A < M and M! when A = M.
    """
    M = _check_int("M", M, 1)
    k = [_check_int("k_i", ki, 0) for ki in k]
    total_order = sum(k)
    if total_order < 1:
        raise DomainError("sum of k must be >= 1")
    return sum(math.comb(M, m) * (-1) ** (m + total_order)
               * math.prod(rising_factorial(m, ki) for ki in k)
               for m in range(1, M + 1))


# -- numerical estimators ----------------------------------------------------

def diversity_order_estimate(curve: CoverageCurve) -> float:
    """Least-squares slope of log(outage) against log(theta) over the smallest decade."""
    theta = curve.theta_grid
    outage = 1.0 - curve.values
    if theta.size < 2:
        raise InsufficientRangeError("need at least two thresholds")
    lo = theta[0]
    sel = theta <= lo * 10.0 * (1 + 1e-12)
    if theta[sel][-1] < lo * 10.0 * (1 - 1e-9):
        raise InsufficientRangeError("curve does not span a decade of small theta")
    if np.any(outage[sel] <= 10.0 * NUMERICAL_FLOOR):
        raise InsufficientRangeError("outage too close to the numerical floor")
    slope, _ = np.polyfit(np.log(theta[sel]), np.log(outage[sel]), 1)
    return float(slope)


def empirical_reliability_coefficient(K, M, kappa, delta, theta=1e-3):
    """(1 - coverage) / theta^M at a small theta; a numerical stand-in for a(K, M)."""
    outage = 1.0 - coverage_combined(theta, K, M, kappa, delta)
    return AsymptoticCoefficient("high_reliability", "combined", int(K), int(M),
                                 float(kappa), float(delta), outage / theta**M, int(M),
                                 numerical=True)


def coefficient_table(alphas, indices=range(1, 6), kappa=1.0, regime="hr"):
    """Rows ``(K_or_M, kappa, delta, regime, value)`` for a_K/a_M or b_K/b_M."""
    rows = []
    for alpha in alphas:
        d = 2.0 / float(alpha)
        for idx in indices:
            if regime in ("hr", "high_reliability"):
                rows.append({"axis": "K", "K_or_M": idx, "kappa": kappa, "delta": d,
                             "regime": "a_K", "value": coeff_a_K(idx, kappa, d)})
                rows.append({"axis": "M", "K_or_M": idx, "kappa": 1.0, "delta": d,
                             "regime": "a_M", "value": coeff_a_M(idx, d)})
            elif regime in ("hse", "high_spectral_efficiency"):
                if idx >= 2:
                    rows.append({"axis": "K", "K_or_M": idx, "kappa": kappa, "delta": d,
                                 "regime": "b_K", "value": coeff_b_K(idx, kappa, d)})
                rows.append({"axis": "M", "K_or_M": idx, "kappa": 1.0, "delta": d,
                             "regime": "b_M", "value": coeff_b_M(idx, d)})
            else:
                raise DomainError(f"unknown regime {regime!r}")
    return rows
