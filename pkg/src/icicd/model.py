"""Network and scheme parameters, and sampling of the path loss process.

The path loss process with shadowing (PLPS) is the ordered set
xi_i = ||x_i||^alpha / S_i of inverse mean received powers. For a PPP of BSs
with density lambda it is itself a 1-D PPP with intensity measure
Lambda((0, r]) = lambda * pi * E[S^delta] * r^delta, so its points can be
drawn directly in ascending order from unit-rate Poisson arrivals.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import DomainError
from .rng import stream
from .specfun import Delta

DEFAULT_POINTS = 2000
_LN10_OVER_10 = math.log(10.0) / 10.0


@dataclass(frozen=True)
class ShadowingSpec:
    """Shadowing law: ``"none"`` (S = 1) or ``"lognormal"`` in dB.

    Lognormal shadowing is S = 10^(X/10) with X ~ N(0, sigma_db^2), i.e. the
    median of S is 1.
    """

    kind: str = "none"
    sigma_db: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "lognormal"):
            raise DomainError(f"unknown shadowing kind {self.kind!r}")
        if not self.sigma_db >= 0 or not math.isfinite(self.sigma_db):
            raise DomainError("sigma_db must be finite and >= 0")
        if self.kind == "none" and self.sigma_db != 0:
            raise DomainError("degenerate shadowing takes no sigma")

    @classmethod
    def lognormal(cls, sigma_db: float) -> "ShadowingSpec":
        return cls("lognormal", float(sigma_db))

    @property
    def _sigma_ln(self):
        return self.sigma_db * _LN10_OVER_10 if self.kind == "lognormal" else 0.0

    def moment(self, p: float) -> float:
        """E[S^p]."""
        return math.exp(0.5 * (p * self._sigma_ln) ** 2)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self._sigma_ln == 0.0:
            return np.ones(size)
        return np.exp(self._sigma_ln * rng.standard_normal(size))

    def to_dict(self):
        return {"kind": self.kind, "sigma_db": self.sigma_db}


@dataclass(frozen=True)
class NetworkModel:
    alpha: float = 4.0
    lam: float = 1.0
    shadowing: ShadowingSpec = field(default_factory=ShadowingSpec)

    def __post_init__(self):
        Delta.from_alpha(self.alpha)
        if not self.lam > 0 or not math.isfinite(self.lam):
            raise DomainError(f"BS density must be positive, got {self.lam}")

    @property
    def delta(self) -> Delta:
        return Delta.from_alpha(self.alpha)

    @property
    def s_delta_moment(self) -> float:
        return self.shadowing.moment(float(self.delta))

    @property
    def intensity(self) -> float:
        """lambda * pi * E[S^delta], the PLPS intensity constant."""
        return self.lam * math.pi * self.s_delta_moment

    def to_dict(self):
        return {"alpha": self.alpha, "lam": self.lam, "shadowing": self.shadowing.to_dict()}


@dataclass(frozen=True)
class Scheme:
    """Coordination size K, diversity order M and effective load kappa."""

    K: int = 1
    M: int = 1
    kappa: float = 1.0

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise DomainError(f"K must be a positive integer, got {self.K}")
        if int(self.M) != self.M or self.M < 1:
            raise DomainError(f"M must be a positive integer, got {self.M}")
        if not self.kappa >= 1 or not math.isfinite(self.kappa):
            raise DomainError(f"kappa must be >= 1, got {self.kappa}")
        if self.kappa_exceeds_K:
            # possible with empty cells; not an error
            warnings.warn(f"kappa={self.kappa} exceeds K={self.K}", stacklevel=3)

    @property
    def kappa_exceeds_K(self) -> bool:
        return self.kappa > self.K


@dataclass(frozen=True)
class PlpsSample:
    """One marked PLPS realization, truncated to its n smallest points."""

    xi: np.ndarray
    fading: np.ndarray
    active: np.ndarray

    def __post_init__(self):
        for name in ("xi", "fading", "active"):
            arr = np.array(getattr(self, name), copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self):
        return len(self.xi)

    def to_dict(self):
        return {"xi": self.xi.tolist(), "fading": self.fading.tolist(),
                "active": self.active.astype(bool).tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data) -> "PlpsSample":
        xi = np.asarray(data["xi"], dtype=float)
        fading = np.asarray(data["fading"], dtype=float).reshape(len(xi), -1)
        return cls(xi, fading, np.asarray(data["active"], dtype=bool))

    @classmethod
    def from_json(cls, text: str) -> "PlpsSample":
        return cls.from_dict(json.loads(text))


def activity_marks(uniform, K, kappa):
    """chi marks from uniforms: serving point on, points 2..K muted, Bernoulli(1/kappa) beyond."""
    active = uniform < 1.0 / kappa
    n = active.shape[-1]
    active[..., : min(K, n)] = False
    if n:
        active[..., 0] = True
    return active


@dataclass(frozen=True)
class PlpsBatch:
    """Several realizations stacked along axis 0.

    ``tail_mean`` is the conditional mean of the interference dropped by the
    truncation (unit-mean fading, thinning by 1/kappa included), one entry
    per realization. ``uniform`` holds the draws behind ``active`` so the
    same realization can be re-thinned for another (K, kappa).
    """

    xi: np.ndarray
    fading: np.ndarray
    active: np.ndarray
    tail_mean: np.ndarray
    uniform: np.ndarray

    def __len__(self):
        return self.xi.shape[0]

    def sample(self, i: int) -> PlpsSample:
        return PlpsSample(self.xi[i], self.fading[i], self.active[i])


def sample_plps_batch(model: NetworkModel, scheme: Scheme, n_points: int,
                      runs: int, rng: np.random.Generator,
                      method: str = "inverse") -> PlpsBatch:
    """Draw ``runs`` independent marked PLPS realizations.

    ``method="inverse"`` maps unit-rate arrivals E_k through the inverse
    intensity measure, xi_k = (E_k / (lambda pi E[S^delta]))^(1/delta).
    ``method="explicit"`` instead draws the n nearest BSs of a planar PPP,
    attaches shadowing marks and sorts ||x||^alpha / S; it is used to check
    that the inverse construction is faithful.
    """
    n = int(n_points)
    if n < 0 or runs < 0:
        raise DomainError("n_points and runs must be nonnegative")
    delta = float(model.delta)
    arrivals = np.cumsum(rng.standard_exponential((runs, n)), axis=1)
    if method == "inverse":
        xi = (arrivals / model.intensity) ** (1.0 / delta)
        tail = (expected_tail_interference(xi[:, -1], model, scheme.kappa)
                if n else np.zeros(runs))
    elif method == "explicit":
        # pi * lambda * r^2 of the k-th nearest point is the k-th arrival
        r = np.sqrt(arrivals / (math.pi * model.lam))
        shadow = model.shadowing.sample(rng, (runs, n))
        xi = np.sort(r**model.alpha / shadow, axis=1)
        if n:
            # planar tail outside the radius of the n-th nearest BS
            mean_s = model.shadowing.moment(1.0)
            tail = (2.0 * math.pi * model.lam * mean_s / (model.alpha - 2.0)
                    * r[:, -1] ** (2.0 - model.alpha) / scheme.kappa)
        else:
            tail = np.zeros(runs)
    else:
        raise ValueError(f"unknown method {method!r}")
    fading = rng.standard_exponential((runs, n, scheme.M))
    uniform = rng.random((runs, n))
    return PlpsBatch(xi, fading, activity_marks(uniform, scheme.K, scheme.kappa), tail, uniform)


def sample_plps(model: NetworkModel, scheme: Scheme, n_points: int = DEFAULT_POINTS,
                rng_seed: int = 0, index: int = 0, method: str = "inverse") -> PlpsSample:
    """One realization keyed by ``(rng_seed, index)``."""
    batch = sample_plps_batch(model, scheme, n_points, 1, stream(rng_seed, index), method)
    return batch.sample(0)


def xi_ratio_ccdf(k: int, x, delta):
    """P(xi_1 / xi_k > x) = (1 - x^delta)^(k-1) on [0, 1]."""
    delta = float(Delta(delta))
    if int(k) != k or k < 2:
        raise DomainError(f"k must be an integer >= 2, got {k}")
    x_arr = np.asarray(x, dtype=float)
    if np.any((x_arr < 0) | (x_arr > 1)):
        raise DomainError("x must lie in [0, 1]")
    out = (1.0 - x_arr**delta) ** (k - 1)
    return out if out.ndim else float(out)


def expected_tail_interference(xi_n, model: NetworkModel, kappa: float = 1.0):
    """E[sum over points beyond xi_n of chi h / xi | xi_n] for unit-mean fading.

    Equals (lambda pi E[S^delta] / kappa) * delta/(1-delta) * xi_n^(delta-1).
    """
    delta = float(model.delta)
    return model.intensity / kappa * delta / (1.0 - delta) * np.asarray(xi_n) ** (delta - 1.0)


def truncation_error_bound(n_points: int, delta, compensated: bool = True) -> float:
    """Relative size of the interference ignored by keeping n PLPS points.

    Normalized by E[sum_{i >= i0} 1/xi_i], where i0 is the first index with
    a finite mean (i0 > 1/delta); the result does not depend on the density
    or the shadowing. Without compensation this is the expected mass of the
    discarded tail. With compensation (the tail replaced by its conditional
    mean given xi_n) it is the root-mean-square fluctuation of the tail under
    Rayleigh fading.
    """
    delta = float(Delta(delta))
    q = 1.0 / delta
    n = int(n_points)
    i0 = math.floor(q) + 1
    if n < i0 + 2 * q:
        raise DomainError("too few points for a finite bound")
    # sum_{i >= j} Gamma(i-q)/Gamma(i) = Gamma(j-q) / ((q-1) Gamma(j-1))
    lg = special.gammaln
    denom = math.exp(lg(i0 - q) - lg(i0 - 1)) / (q - 1.0)
    if not compensated:
        return math.exp(lg(n + 1 - q) - lg(n)) / (q - 1.0) / denom
    # E[Var(tail | xi_n)] = 2 delta/(2-delta) * E[E_n^(1-2q)] in units of intensity^(2q)
    var = 2.0 * delta / (2.0 - delta) * math.exp(lg(n + 1 - 2 * q) - lg(n))
    return math.sqrt(var) / denom
