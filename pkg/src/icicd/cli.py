"""Command-line front end.

Thresholds are given in dB and converted to linear SIR exactly once, when a
RunConfig is turned into library calls. Output is CSV (with a leading
``# icicd-csv/1`` version line) or JSON following ``schemas/output.schema.json``.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 validation
failure. Failures print one line ``icicd: error=<kind> reason=<text>`` to stderr.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import re
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import asymptotics
from .analytic import coverage_combined, coverage_combined_all_M, db_to_linear, linear_to_db
from .errors import DomainError, InfeasibleError, InsufficientRangeError, QuadratureError
from .model import NetworkModel, Scheme, ShadowingSpec
from .montecarlo import _pool
from .optimize import kappa_from_fit, optimize_sweep

COMMANDS = ("coverage", "asymptote", "simulate", "estimate-load", "optimize", "validate")
FORMAT_VERSION = 1
CACHE_ENV = "ICICD_CACHE_DIR"

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_VALIDATION = 0, 1, 2, 3


class UsageError(Exception):
    pass


# -- parsing helpers ---------------------------------------------------------

def parse_int_range(text: str) -> list[int]:
    """``"3"``, ``"1..5"`` or ``"1,3,5"``."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            values = list(range(int(lo), int(hi) + 1))
        else:
            values = [int(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse integer range {text!r}") from None
    if not values or min(values) < 1:
        raise UsageError(f"range {text!r} must contain positive integers")
    return values


def parse_theta_db(text: str) -> list[float]:
    """``"start:step:stop"`` (inclusive), ``"a,b,c"`` or a single value, all in dB."""
    try:
        if ":" in text:
            start, step, stop = (float(v) for v in text.split(":"))
            if step <= 0 or stop < start:
                raise UsageError(f"bad theta range {text!r}")
            n = int(round((stop - start) / step)) + 1
            return [start + i * step for i in range(n)]
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse theta {text!r}") from None


def parse_kappa(text: str) -> Union[str, list[float]]:
    if text == "auto":
        return "auto"
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse kappa {text!r}") from None
    if min(values) < 1:
        raise UsageError("kappa must be >= 1")
    return values


# -- configuration -----------------------------------------------------------

@dataclass
class RunConfig:
    command: str
    alpha: float = 4.0
    lam: float = 1.0
    sigma_db: float = 0.0
    lambda_u: Optional[float] = None
    K: list = field(default_factory=lambda: [1])
    M: list = field(default_factory=lambda: [1])
    kappa: Union[str, list] = field(default_factory=lambda: [1.0])
    theta_db: list = field(default_factory=lambda: [0.0])
    runs: int = 100_000
    seed: int = 0
    realizations: int = 200
    window_side: Optional[float] = None
    wrap: bool = False
    n_points: int = 2000
    method: str = "inverse"
    regime: str = "hr"
    overlay: bool = False
    epsilon: Optional[float] = None
    search_bound: int = 20
    eta: Optional[list] = None
    output: Optional[str] = None
    format: str = "csv"
    dump_realizations: int = 0
    dump_file: str = "realizations.jsonl"
    workers: int = 1

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.format not in ("csv", "json"):
            raise UsageError(f"unknown format {self.format!r}")
        if self.regime not in ("hr", "hse"):
            raise UsageError(f"unknown regime {self.regime!r}")
        if self.method not in ("inverse", "explicit", "deployment"):
            raise UsageError(f"unknown method {self.method!r}")
        if self.method == "deployment" and self.command != "simulate":
            raise UsageError("method 'deployment' applies to simulate only")

    @property
    def theta_linear(self) -> np.ndarray:
        return db_to_linear(self.theta_db)

    @property
    def user_density(self) -> float:
        return 10.0 * self.lam if self.lambda_u is None else self.lambda_u

    @property
    def shadowing(self) -> ShadowingSpec:
        return ShadowingSpec.lognormal(self.sigma_db) if self.sigma_db > 0 else ShadowingSpec()

    @property
    def model(self) -> NetworkModel:
        return NetworkModel(self.alpha, self.lam, self.shadowing)

    def to_dict(self):
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise UsageError(f"unknown config keys {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="icicd", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON RunConfig; command-line flags override it")
    parser.add_argument("--save-config", help="write the effective RunConfig JSON here")
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--lambda", dest="lam", type=float, help="BS density")
    parser.add_argument("--sigma-db", type=float, help="lognormal shadowing std in dB")
    parser.add_argument("--lambda-u", type=float, help="user density (default 10 x BS density)")
    parser.add_argument("--K", type=parse_int_range, help="e.g. 3, 1..5 or 1,3,5")
    parser.add_argument("--M", type=parse_int_range)
    parser.add_argument("--kappa", type=parse_kappa, help="value(s) or 'auto'")
    parser.add_argument("--theta", dest="theta_db", type=parse_theta_db,
                        help="dB; start:step:stop, list, or value")
    parser.add_argument("--runs", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--realizations", type=int, help="deployment windows")
    parser.add_argument("--window-side", type=float)
    parser.add_argument("--wrap", action="store_const", const=True, help="toroidal window")
    parser.add_argument("--n-points", type=int, help="PLPS truncation")
    parser.add_argument("--method", choices=("inverse", "explicit", "deployment"),
                        help="PLPS sampler, or a 2-D deployment with the scheduler")
    parser.add_argument("--regime", choices=("hr", "hse"))
    parser.add_argument("--overlay", action="store_const", const=True,
                        help="asymptote: exact vs asymptotic curves instead of coefficients")
    parser.add_argument("--epsilon", type=float)
    parser.add_argument("--search-bound", type=int)
    parser.add_argument("--eta", type=lambda t: [float(v) for v in t.split(",")],
                        help="affine load fit eta0,eta1")
    parser.add_argument("--output", "-o")
    parser.add_argument("--format", choices=("csv", "json"))
    parser.add_argument("--dump-realizations", type=int)
    parser.add_argument("--dump-file")
    parser.add_argument("--workers", type=int, help="default: CPU count")
    return parser


def _glue_negative_values(argv):
    """Turn ``--theta -10:1:0`` into ``--theta=-10:1:0`` so argparse does not see a flag."""
    out, argv = [], list(argv)
    i = 0
    while i < len(argv):
        a = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else ""
        if a.startswith("--") and "=" not in a and re.match(r"-\d", nxt):
            out.append(f"{a}={nxt}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def config_from_args(argv) -> tuple[RunConfig, argparse.Namespace]:
    ns = build_parser().parse_args(_glue_negative_values(argv))
    base = {}
    if ns.config:
        base = json.loads(Path(ns.config).read_text())
    base["command"] = ns.command
    for f in fields(RunConfig):
        value = getattr(ns, f.name, None)
        if f.name != "command" and value is not None:
            base[f.name] = value
    base.setdefault("workers", _pool.default_workers())
    if ns.command == "asymptote":
        base.setdefault("K", [1, 2, 3, 4, 5])
        base.setdefault("M", [1, 2, 3, 4, 5])
    return RunConfig.from_dict(base), ns


# -- load fit with cache -------------------------------------------------------

def cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV, Path.home() / ".cache" / "icicd"))


def load_fit(cfg: RunConfig):
    """(eta0, eta1): explicit, or estimated by deployment simulation and cached."""
    if cfg.eta is not None:
        if len(cfg.eta) != 2:
            raise UsageError("--eta takes two values")
        return tuple(cfg.eta)
    from .montecarlo.deployment import LoadEstimate, estimate_load_table

    Ks = list(range(1, max(max(cfg.K), 5) + 1))
    key = {"alpha": cfg.alpha, "sigma_db": cfg.sigma_db, "lambda": cfg.lam,
           "lambda_u": cfg.user_density, "K": Ks, "seed": cfg.seed,
           "realizations": cfg.realizations, "window_side": cfg.window_side, "wrap": cfg.wrap}
    digest = hashlib.sha256(json.dumps(key, sort_keys=True).encode()).hexdigest()[:16]
    path = cache_dir() / f"load-{digest}.json"
    if path.exists():
        return tuple(LoadEstimate.from_dict(json.loads(path.read_text())).affine_fit)
    est = estimate_load_table(cfg.alpha, cfg.lam, cfg.user_density, cfg.sigma_db, Ks,
                              cfg.realizations, cfg.window_side, cfg.seed, cfg.workers, cfg.wrap)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(est.to_dict(), sort_keys=True))
    return tuple(est.affine_fit)


def _kappas(cfg: RunConfig, K):
    if cfg.kappa == "auto":
        return [kappa_from_fit(K, load_fit(cfg))]
    return [float(k) for k in cfg.kappa]


# -- commands ----------------------------------------------------------------

def _delta(cfg):
    return float(cfg.model.delta)


def cmd_coverage(cfg: RunConfig):
    columns = ["K", "M", "kappa", "theta_db", "theta_linear", "value"]
    rows = []
    m_max = max(cfg.M)
    for K in cfg.K:
        for kappa in _kappas(cfg, K):
            per_theta = [coverage_combined_all_M(t, K, m_max, kappa, _delta(cfg))
                         for t in cfg.theta_linear]
            for M in cfg.M:
                for db, t, vals in zip(cfg.theta_db, cfg.theta_linear, per_theta):
                    rows.append([K, M, kappa, db, float(t), float(vals[M - 1])])
    return columns, rows


def cmd_asymptote(cfg: RunConfig):
    d = _delta(cfg)
    kappas = [1.0] if cfg.kappa == "auto" else cfg.kappa
    indices = sorted(set(cfg.K) | set(cfg.M))
    if not cfg.overlay:
        columns = ["K_or_M", "kappa", "delta", "regime", "value"]
        rows = []
        for kappa in kappas:
            for r in asymptotics.coefficient_table([cfg.alpha], indices, kappa, cfg.regime):
                if r["axis"] == "M" and kappa != kappas[0]:
                    continue
                rows.append([r[c] for c in columns])
        return columns, rows
    columns = ["axis", "index", "kappa", "theta_db", "theta_linear", "exact", "asymptote"]
    rows = []
    for kappa in kappas:
        for axis, idx_list in (("K", cfg.K), ("M", cfg.M)):
            for idx in idx_list:
                K, M, kap = (idx, 1, kappa) if axis == "K" else (1, idx, 1.0)
                if axis == "M" and kappa != kappas[0]:
                    continue
                if cfg.regime == "hr":
                    coef = (asymptotics.coeff_a_K(K, kap, d) if axis == "K"
                            else asymptotics.coeff_a_M(M, d))
                    order = 1 if axis == "K" else M
                else:
                    if axis == "K" and K < 2:
                        continue
                    coef = (asymptotics.coeff_b_K(K, kap, d) if axis == "K"
                            else asymptotics.coeff_b_M(M, d))
                    order = -d
                for db, t in zip(cfg.theta_db, cfg.theta_linear):
                    cov = coverage_combined(t, K, M, kap, d)
                    exact = 1.0 - cov if cfg.regime == "hr" else cov
                    rows.append([axis, idx, kap, db, float(t), exact, coef * float(t) ** order])
    return columns, rows


def _dump_plps(cfg, K, M, kappa):
    from .montecarlo.plps import dump_plps_realizations

    samples = dump_plps_realizations(cfg.model, Scheme(K, M, kappa), cfg.dump_realizations,
                                     cfg.seed, cfg.n_points, cfg.method)
    with open(cfg.dump_file, "w") as fh:
        for s in samples:
            fh.write(s.to_json() + "\n")


def _simulate_deployment(cfg: RunConfig, columns):
    """Coverage of scheduled users in 2-D windows; kappa is not an input here."""
    from .montecarlo.deployment import deployment_coverage_grid

    rows = []
    for M in cfg.M:
        grid = deployment_coverage_grid(cfg.model, cfg.user_density, cfg.K, M, cfg.theta_linear,
                                        cfg.realizations, cfg.window_side, cfg.seed,
                                        cfg.workers, cfg.wrap)
        for K in cfg.K:
            for db, t in zip(cfg.theta_db, cfg.theta_linear):
                e = grid[(K, float(t))]
                rows.append([K, M, None, db, float(t), e.value, e.stderr, e.runs, e.discards])
    return columns, rows


def cmd_simulate(cfg: RunConfig):
    from .montecarlo.plps import simulate_coverage_grid

    columns = ["K", "M", "kappa", "theta_db", "theta_linear", "estimate", "stderr", "runs",
               "discards"]
    if cfg.method == "deployment":
        return _simulate_deployment(cfg, columns)
    rows = []
    kappa_sets = {K: _kappas(cfg, K) for K in cfg.K}
    for K in cfg.K:
        grid = simulate_coverage_grid(cfg.model, [K], cfg.M, kappa_sets[K], cfg.theta_linear,
                                      cfg.runs, cfg.seed, cfg.n_points, cfg.method, cfg.workers)
        for M in cfg.M:
            for kappa in kappa_sets[K]:
                for db, t in zip(cfg.theta_db, cfg.theta_linear):
                    e = grid[(K, M, kappa, float(t))]
                    rows.append([K, M, kappa, db, float(t), e.value, e.stderr, e.runs, e.discards])
    if cfg.dump_realizations:
        _dump_plps(cfg, cfg.K[0], cfg.M[0], kappa_sets[cfg.K[0]][0])
    return columns, rows


def cmd_estimate_load(cfg: RunConfig):
    from .montecarlo.deployment import estimate_load_table, sample_deployment

    est = estimate_load_table(cfg.alpha, cfg.lam, cfg.user_density, cfg.sigma_db, cfg.K,
                              cfg.realizations, cfg.window_side, cfg.seed, cfg.workers, cfg.wrap)
    eta0, eta1 = est.affine_fit if est.affine_fit else (float("nan"), float("nan"))
    columns = ["alpha", "sigma_db", "lambda_u", "K", "estimate", "stderr", "n_bs",
               "n_scheduled", "realizations", "discards", "eta0", "eta1"]
    rows = [[cfg.alpha, cfg.sigma_db, cfg.user_density, K, e.kappa_hat, e.stderr, e.n_bs,
             e.n_scheduled, e.realizations, e.discards, eta0, eta1]
            for K, e in sorted(est.per_K.items())]
    if cfg.dump_realizations:
        with open(cfg.dump_file, "w") as fh:
            for i in range(cfg.dump_realizations):
                s = sample_deployment(cfg.model, cfg.user_density, max(cfg.K), cfg.window_side,
                                      cfg.seed, i, cfg.wrap)
                fh.write(s.to_json() + "\n")
    return columns, rows


def cmd_optimize(cfg: RunConfig):
    fit = load_fit(cfg)
    results = optimize_sweep(cfg.theta_linear, _delta(cfg), fit, cfg.search_bound, cfg.epsilon)
    columns = ["theta_db", "K_star", "M_star", "objective", "kappa", "feasible"]
    rows = []
    for db, res in zip(cfg.theta_db, results):
        if res is None:
            rows.append([db, None, None, None, None, False])
        else:
            rows.append([db, res.k_star, res.m_star, res.objective, res.kappa_used, True])
    return columns, rows


VALIDATION_GRID = {"K": (1, 2, 3), "M": (1, 2), "kappa": (1.0, 2.0), "theta": (0.1, 1.0, 10.0)}


def cmd_validate(cfg: RunConfig):
    """Paired analytic-vs-simulation suite on the fixed 36-point grid at alpha from cfg."""
    from .montecarlo.plps import simulate_coverage_grid

    g = VALIDATION_GRID
    grid = simulate_coverage_grid(cfg.model, g["K"], g["M"], g["kappa"], g["theta"], cfg.runs,
                                  cfg.seed, cfg.n_points, cfg.method, cfg.workers)
    columns = ["K", "M", "kappa", "theta_db", "analytic", "estimate", "stderr", "z", "pass"]
    rows = []
    for (K, M, kappa, theta), e in grid.items():
        exact = coverage_combined(theta, K, M, kappa, _delta(cfg))
        z = (e.value - exact) / e.stderr if e.stderr > 0 else 0.0
        rows.append([K, M, kappa, float(linear_to_db(theta)), exact, e.value, e.stderr, z,
                     bool(abs(z) < 3.0)])
    return columns, rows


HANDLERS = {
    "coverage": cmd_coverage,
    "asymptote": cmd_asymptote,
    "simulate": cmd_simulate,
    "estimate-load": cmd_estimate_load,
    "optimize": cmd_optimize,
    "validate": cmd_validate,
}


# -- output ------------------------------------------------------------------

def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(cfg: RunConfig, columns, rows) -> str:
    if cfg.format == "json":
        doc = {"format_version": FORMAT_VERSION, "command": cfg.command,
               "config": cfg.to_dict(), "columns": list(columns),
               "rows": [dict(zip(columns, r)) for r in rows]}
        return json.dumps(doc, sort_keys=True) + "\n"
    buf = io.StringIO()
    buf.write(f"# icicd-csv/{FORMAT_VERSION} command={cfg.command}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows([_cell(v) for v in r] for r in rows)
    return buf.getvalue()


def run(cfg: RunConfig) -> tuple[int, str]:
    """Execute a configuration; returns (exit status, rendered output)."""
    columns, rows = HANDLERS[cfg.command](cfg)
    text = render(cfg, columns, rows)
    if cfg.command == "validate":
        failed = [r for r in rows if not r[-1]]
        summary = "\n".join(
            f"{'PASS' if r[-1] else 'FAIL'} K={r[0]} M={r[1]} kappa={r[2]:g} "
            f"theta_db={r[3]:+.1f} z={r[7]:+.2f}" for r in rows)
        print(summary, file=sys.stderr)
        if failed:
            return EXIT_VALIDATION, text
    return EXIT_OK, text


def _fail(kind, reason, code):
    print(f"icicd: error={kind} reason={' '.join(str(reason).split())}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        cfg, ns = config_from_args(sys.argv[1:] if argv is None else argv)
        if ns.save_config:
            Path(ns.save_config).write_text(cfg.to_json() + "\n")
        status, text = run(cfg)
    except (UsageError, DomainError, ValueError, OSError) as exc:
        if isinstance(exc, (QuadratureError, InsufficientRangeError, InfeasibleError)):
            return _fail("numerical", exc, EXIT_NUMERICAL)
        return _fail("usage", exc, EXIT_USAGE)
    except (QuadratureError, ArithmeticError, FloatingPointError) as exc:
        return _fail("numerical", exc, EXIT_NUMERICAL)
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)
    if status == EXIT_VALIDATION:
        return _fail("validation", "analytic and simulated coverage differ by 3 stderr or more",
                     status)
    return status


if __name__ == "__main__":
    sys.exit(main())
