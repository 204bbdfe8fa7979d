"""Special functions behind the coverage formulas.

Everything here is a pure function of its arguments. The central object is

    C_kappa(s, m) = (kappa - 1)/kappa + 2F1(m, -delta; 1 - delta; -s)/kappa

which is evaluated two ways: by hypergeometric series (after a Pfaff
transformation for s <= 1 and a 1/z connection formula for s > 1) and by the
upper incomplete beta representation

    C_1(s, m) = (1 + s)^-m + s^delta * m * B^u_{1/(1+s)}(m + delta, 1 - delta).
"""
from __future__ import annotations

import math
from typing import Iterator, Sequence

import numpy as np
from scipy import integrate, special

from .errors import DomainError

__all__ = [
    "Delta",
    "as_delta",
    "c_kappa",
    "c1_series",
    "c1_beta",
    "upper_incomplete_beta",
    "lower_incomplete_gamma",
    "confluent_1f1",
    "rising_factorial",
    "partial_bell",
    "integer_partitions",
]

DEFAULT_TOL = 1e-12
_SERIES_EPS = 1e-17
_MAX_TERMS = 10_000


class Delta(float):
    """The exponent delta = 2/alpha, restricted to the open interval (0, 1)."""

    def __new__(cls, value):
        value = float(value)
        if not 0.0 < value < 1.0:
            raise DomainError(f"delta must lie in (0, 1), got {value}")
        return super().__new__(cls, value)

    @classmethod
    def from_alpha(cls, alpha: float) -> "Delta":
        alpha = float(alpha)
        if not alpha > 2.0 or not math.isfinite(alpha):
            raise DomainError(f"path-loss exponent must exceed 2, got {alpha}")
        return cls(2.0 / alpha)

    @property
    def alpha(self) -> float:
        return 2.0 / float(self)

    def __repr__(self):
        return f"Delta({float(self)!r})"


def as_delta(delta) -> Delta:
    return delta if isinstance(delta, Delta) else Delta(delta)


def _check_m(m):
    if int(m) != m or m < 1:
        raise DomainError(f"m must be a positive integer, got {m}")
    return int(m)


def _check_kappa(kappa):
    kappa = float(kappa)
    if not kappa >= 1.0:
        raise DomainError(f"kappa must be >= 1, got {kappa}")
    return kappa


def _as_nonneg_array(s, name="s"):
    arr = np.asarray(s, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError(f"{name} must be finite and >= 0")
    return arr


# -- hypergeometric series -------------------------------------------------

def _positive_series(ratio, z, tol):
    """Sum 1 + sum_n t_n with t_n = t_{n-1} * ratio(n-1) * z, all terms >= 0."""
    if z.size == 1:
        # plain floats; numpy reductions dominate the cost for one argument
        zf, total, term = float(z.ravel()[0]), 1.0, 1.0
        for n in range(_MAX_TERMS):
            term *= ratio(n) * zf
            total += term
            if n > 2 and term <= tol * total:
                return np.full_like(z, total)
        raise ArithmeticError("hypergeometric series did not converge")
    total = np.ones_like(z)
    term = np.ones_like(z)
    for n in range(_MAX_TERMS):
        term = term * ratio(n) * z
        total = total + term
        # terms eventually decay geometrically with ratio < z <= 1/2
        if n > 2 and np.all(term <= tol * total):
            return total
    raise ArithmeticError("hypergeometric series did not converge")


def c1_series(s, m, delta, tol=_SERIES_EPS):
    """C_1(s, m) = 2F1(m, -delta; 1 - delta; -s) from convergent power series.

    For s <= 1 the Pfaff transformation gives
    (1+s)^-m 2F1(m, 1; 1-delta; s/(1+s)); for s > 1 the connection formula
    around z = infinity gives
    G_m s^delta + delta/(m+delta) (1+s)^-m 2F1(m, 1; m+delta+1; 1/(1+s))
    with G_m = Gamma(1-delta) Gamma(m+delta) / Gamma(m). Both series have
    nonnegative terms and argument at most 1/2.
    """
    delta = float(as_delta(delta))
    m = _check_m(m)
    s = _as_nonneg_array(s)
    out = np.empty_like(s)
    lo = s <= 1.0
    if np.any(lo):
        sl = s[lo]
        z = sl / (1.0 + sl)
        series = _positive_series(lambda n: (m + n) / (1.0 - delta + n), z, tol)
        out[lo] = series * (1.0 + sl) ** (-m)
    hi = ~lo
    if np.any(hi):
        sh = s[hi]
        w = 1.0 / (1.0 + sh)
        series = _positive_series(lambda n: (m + n) / (m + delta + 1.0 + n), w, tol)
        log_g = special.gammaln(1.0 - delta) + special.gammaln(m + delta) - special.gammaln(m)
        out[hi] = (np.exp(log_g) * sh**delta
                   + delta / (m + delta) * w**m * series)
    return out if out.ndim else float(out)


def c1_beta(s, m, delta):
    """C_1(s, m) from the upper incomplete beta representation."""
    delta = float(as_delta(delta))
    m = _check_m(m)
    s = _as_nonneg_array(s)
    a, b = m + delta, 1.0 - delta
    # B^u_x(a, b) with x = 1/(1+s) equals B(a, b) * I_{1-x}(b, a); 1-x = s/(1+s)
    # is formed directly to keep relative accuracy at small s.
    tail = special.beta(a, b) * special.betainc(b, a, s / (1.0 + s))
    out = (1.0 + s) ** (-m) + s**delta * m * tail
    return out if out.ndim else float(out)


def c_kappa(s, m, kappa, delta, method="auto"):
    """C_kappa(s, m) = (kappa-1)/kappa + C_1(s, m)/kappa.

    ``method="auto"`` uses the series for s <= 1 and the incomplete beta
    representation above; ``"series"`` and ``"beta"`` force one path.
    Accepts scalar or array ``s``; s = 0 maps to exactly 1.
    """
    kappa = _check_kappa(kappa)
    m = _check_m(m)
    delta = as_delta(delta)
    s_arr = _as_nonneg_array(s)
    flat = np.atleast_1d(s_arr).astype(float)
    c1 = np.ones_like(flat)
    pos = flat > 0
    if method == "series":
        c1[pos] = c1_series(flat[pos], m, delta)
    elif method == "beta":
        c1[pos] = c1_beta(flat[pos], m, delta)
    elif method == "auto":
        lo = pos & (flat <= 1.0)
        hi = flat > 1.0
        if np.any(lo):
            c1[lo] = c1_series(flat[lo], m, delta)
        if np.any(hi):
            c1[hi] = c1_beta(flat[hi], m, delta)
    else:
        raise ValueError(f"unknown method {method!r}")
    if kappa == 1.0:
        out = c1
    else:
        out = (kappa - 1.0) / kappa + c1 / kappa
    out = out.reshape(s_arr.shape)
    return out if out.ndim else float(out)


# -- incomplete beta / gamma -----------------------------------------------

def upper_incomplete_beta(x, a, b, method="library"):
    """B^u_x(a, b) = integral of y^(a-1) (1-y)^(b-1) over (x, 1).

    ``method="quad"`` integrates adaptively after the substitution
    u = (1-y)^b, which removes the endpoint singularity at y = 1 when b < 1.
    It is meant as a check for a >= 1; for a < 1 the singularity at y = 0
    remains and accuracy degrades as x approaches 0.
    """
    x = float(x)
    a = float(a)
    b = float(b)
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x}")
    if not (a > 0 and b > 0):
        raise DomainError("a and b must be positive")
    if x == 1.0:
        return 0.0
    if method == "library":
        return float(special.beta(a, b) * special.betainc(b, a, 1.0 - x))
    if method == "quad":
        upper = (1.0 - x) ** b

        def integrand(u):
            return (1.0 - u ** (1.0 / b)) ** (a - 1.0)

        val, _ = integrate.quad(integrand, 0.0, upper, epsabs=0.0, epsrel=1e-13, limit=200)
        return val / b
    raise ValueError(f"unknown method {method!r}")


def lower_incomplete_gamma(a, x):
    """gamma(a, x) = integral of t^(a-1) e^-t over (0, x), for 0 < a < 1."""
    a = float(a)
    if not 0.0 < a < 1.0:
        raise DomainError(f"a must lie in (0, 1), got {a}")
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0) or np.any(np.isnan(x_arr)):
        raise DomainError("x must be >= 0")
    out = special.gamma(a) * special.gammainc(a, x_arr)
    return out if np.ndim(out) else float(out)


def confluent_1f1(delta, x, tol=_SERIES_EPS):
    """1F1(-delta; 1-delta; x) by direct power series."""
    delta = float(as_delta(delta))
    if not math.isfinite(x):
        raise DomainError("x must be finite")
    total = 1.0
    term = 1.0
    for n in range(_MAX_TERMS):
        term *= (-delta + n) / ((1.0 - delta + n) * (n + 1)) * x
        total += term
        if abs(term) <= tol * abs(total) and n > abs(x):
            return total
    raise ArithmeticError("1F1 series did not converge")


# -- combinatorics -----------------------------------------------------------

def rising_factorial(x, n):
    """Pochhammer symbol (x)_n; exact for integer x."""
    if int(n) != n or n < 0:
        raise DomainError(f"n must be a nonnegative integer, got {n}")
    return math.prod((x + i for i in range(int(n))), start=1)


def integer_partitions(n: int, parts: int | None = None) -> Iterator[tuple[int, ...]]:
    """Yield multiplicity vectors (b_1, ..., b_n) with sum_i i*b_i = n.

    If ``parts`` is given only partitions with sum_i b_i == parts are kept.
    """
    if n < 0:
        raise DomainError("n must be nonnegative")

    def rec(remaining, largest):
        if remaining == 0:
            yield {}
            return
        for size in range(min(remaining, largest), 0, -1):
            for count in range(remaining // size, 0, -1):
                for rest in rec(remaining - size * count, size - 1):
                    yield {size: count, **rest}

    for mult in rec(n, n):
        b = tuple(mult.get(i, 0) for i in range(1, n + 1))
        if parts is None or sum(b) == parts:
            yield b


def partial_bell(m: int, i: int, x: Sequence):
    """Partial exponential Bell polynomial Bell_{m,i}(x_1, ..., x_{m-i+1}).

    Summed over partitions of m into exactly i blocks with integer weights
    m! / prod_j (b_j! (j!)^b_j); ``x`` may hold floats, ints or Fractions.
    """
    if int(m) != m or int(i) != i or not 1 <= i <= m:
        raise DomainError(f"need 1 <= i <= m, got m={m}, i={i}")
    x = list(x)
    if len(x) != m - i + 1:
        raise DomainError(f"expected {m - i + 1} arguments, got {len(x)}")
    total = 0
    for b in integer_partitions(m, parts=i):
        weight = math.factorial(m)
        for j, bj in enumerate(b, start=1):
            weight //= math.factorial(bj) * math.factorial(j) ** bj
        term = weight
        for j, bj in enumerate(b, start=1):
            if bj:
                term = term * x[j - 1] ** bj
        total = total + term
    return total
