"""Seeded, replicated Monte Carlo experiments over estimator risk and tests.

Determinism contract: every random draw comes from a stream keyed by
(master seed, data-generating cell coordinates, replicate index, role).  The
estimator identity is deliberately excluded from the stream key, so sweeping
the ``estimator`` axis compares variants on identical noise (paired design)
while distinct data cells get provably distinct streams.  Reports are
assembled in fixed cell/replicate order regardless of worker count, so
repeated runs are byte-identical.
"""

from __future__ import annotations

import dataclasses
import hashlib
import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._version import __version__
from .estimators import (
    EstimationInput,
    adaptive_estimate,
    collier_estimate,
    default_zeta,
    family_estimate,
    linear_test,
    mom_sigma,
    nonsymmetric_estimate,
    oracle_estimate,
    plugin_estimate,
    unknown_sigma_estimate,
    VARIANTS,
)
from .loading import LoadingSpec, LoadingVector, make_loading
from .lowerbound import build_prior, draw_prior
from .noise import NoiseModel, sample_with
from .rates import RateCalculator
from .streams import generator

__all__ = [
    "ThetaSpec",
    "EstimatorSpec",
    "SimConfig",
    "SimulationReport",
    "MomCoverageReport",
    "SimulationError",
    "run_risk",
    "risk_grid",
    "run_mom_coverage",
    "run_test_power",
    "calibrate_test_threshold",
    "GRID_AXES",
]

GRID_AXES = ("alpha", "d", "estimator", "rho", "s", "sigma")
RESULT_COLUMNS = ["estimator", "n_rep", "mse", "mse_se", "rate_kind", "rate_value", "ratio"]


class SimulationError(RuntimeError):
    """Estimator failure inside a replicate, annotated for reproduction."""


@dataclass(frozen=True)
class ThetaSpec:
    """Signal configurations.

    ``zero``       -- theta = 0;
    ``fixed``      -- explicit support (original-order indices) and values;
    ``spike_grid`` -- n_spikes coordinates at magnitude
                      rho * sigma * tau * lambda_o(n_spikes) / eta_j, placed on
                      the smallest ("tail") or largest ("head") loadings;
    ``prior``      -- random draw from the least-favorable prior per replicate.
    """

    kind: str
    support: tuple[int, ...] | None = None
    values: tuple[float, ...] | None = None
    rho: float | None = None
    n_spikes: int | None = None
    placement: str = "tail"
    s: int | None = None
    c1: float | None = None
    c_alpha2: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("zero", "fixed", "spike_grid", "prior"):
            raise ValueError(f"unknown theta kind {self.kind!r}")
        if self.kind == "fixed":
            if self.support is None or self.values is None:
                raise ValueError("fixed theta needs support and values")
            if len(self.support) != len(self.values):
                raise ValueError("support and values must have equal length")
        if self.kind == "spike_grid":
            if self.rho is None or self.n_spikes is None:
                raise ValueError("spike_grid theta needs rho and n_spikes")
            if self.placement not in ("tail", "head"):
                raise ValueError("placement must be 'tail' or 'head'")
        if self.kind == "prior" and (self.s is None or self.c1 is None):
            raise ValueError("prior theta needs s and c1")

    @property
    def s_true(self) -> int:
        if self.kind == "zero":
            return 0
        if self.kind == "fixed":
            return sum(1 for v in self.values if v != 0.0)
        if self.kind == "spike_grid":
            return int(self.n_spikes)
        return int(self.s)

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        for name in ("support", "values", "rho", "n_spikes", "s", "c1"):
            v = getattr(self, name)
            if v is not None:
                out[name] = list(v) if isinstance(v, tuple) else v
        if self.kind == "spike_grid":
            out["placement"] = self.placement
        if self.kind == "prior":
            out["c_alpha2"] = self.c_alpha2
        return out


@dataclass(frozen=True)
class EstimatorSpec:
    """Which estimator to run and its knobs; None means use defaults."""

    variant: str
    s: int | None = None
    kappa: float = 1.0
    zeta: float | None = None
    gamma_split: float = 0.5
    c_h: float | None = None

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown estimator variant {self.variant!r}")

    def to_dict(self) -> dict:
        out: dict = {"variant": self.variant, "kappa": self.kappa,
                     "gamma_split": self.gamma_split}
        for name in ("s", "zeta", "c_h"):
            v = getattr(self, name)
            if v is not None:
                out[name] = v
        return out


@dataclass(frozen=True)
class SimConfig:
    loading: LoadingSpec
    noise: NoiseModel
    sigma: float
    theta: ThetaSpec
    estimator: EstimatorSpec
    replicates: int
    seed: int
    s_assumed: int

    def __post_init__(self) -> None:
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.s_assumed < 1:
            raise ValueError("s_assumed must be >= 1")

    def to_dict(self) -> dict:
        return {
            "loading": self.loading.to_dict(),
            "noise": self.noise.to_dict(),
            "sigma": self.sigma,
            "theta": self.theta.to_dict(),
            "estimator": self.estimator.to_dict(),
            "replicates": self.replicates,
            "seed": self.seed,
            "s_assumed": self.s_assumed,
        }

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass
class SimulationReport:
    kind: str
    columns: list[str]
    rows: list[dict]
    config_hash: str
    seed: int
    tool_version: str = __version__

    def _meta_line(self) -> str:
        return f"# sparsefn {self.tool_version} config_hash={self.config_hash} seed={self.seed}"

    def to_csv(self) -> str:
        def fmt(v) -> str:
            if isinstance(v, float):
                return repr(v)
            return "" if v is None else str(v)

        lines = [self._meta_line(), ",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(fmt(row.get(c)) for c in self.columns))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(
            {
                "tool_version": self.tool_version,
                "config_hash": self.config_hash,
                "seed": self.seed,
                "kind": self.kind,
                "columns": self.columns,
                "rows": self.rows,
            },
            sort_keys=True,
        )


# ---------------------------------------------------------------------------
# theta realization
# ---------------------------------------------------------------------------

def _fixed_theta(config: SimConfig, loading: LoadingVector,
                 calc: RateCalculator) -> np.ndarray | None:
    """The theta vector for replicate-invariant kinds, None for 'prior'."""
    spec = config.theta
    d = loading.d
    if spec.kind == "zero":
        return np.zeros(d)
    if spec.kind == "fixed":
        theta = np.zeros(d)
        support = np.asarray(spec.support, dtype=int)
        if support.size and (support.min() < 0 or support.max() >= d):
            raise ValueError("fixed theta support out of range")
        theta[support] = np.asarray(spec.values, dtype=float)
        return theta
    if spec.kind == "spike_grid":
        k = int(spec.n_spikes)
        if not 1 <= k <= d:
            raise ValueError(f"n_spikes must be in [1, {d}]")
        lam = calc.oracle(k).lambda_o
        mag = spec.rho * config.sigma * config.noise.tau * lam
        positions = np.arange(d - k, d) if spec.placement == "tail" else np.arange(k)
        theta_sorted = np.zeros(d)
        theta_sorted[positions] = mag / loading.values[positions]
        return loading.to_original(theta_sorted)
    return None


# ---------------------------------------------------------------------------
# single-cell risk experiment
# ---------------------------------------------------------------------------

def _resolve_s(config: SimConfig) -> int:
    return config.estimator.s if config.estimator.s is not None else config.s_assumed


def _dispatch(config: SimConfig, inp: EstimationInput, calc: RateCalculator):
    spec = config.estimator
    v = spec.variant
    if v == "oracle":
        return oracle_estimate(inp, _resolve_s(config), calculator=calc)
    if v == "family":
        return family_estimate(inp, _resolve_s(config), calculator=calc)
    if v == "adaptive":
        zeta = spec.zeta if spec.zeta is not None else default_zeta(inp.alpha)
        return adaptive_estimate(inp, zeta, calculator=calc)
    if v == "nonsym":
        return nonsymmetric_estimate(inp, _resolve_s(config), spec.c_h, calculator=calc)
    if v == "unknown-sigma":
        return unknown_sigma_estimate(inp, _resolve_s(config), spec.gamma_split,
                                      calculator=calc)
    if v == "collier":
        return collier_estimate(inp, _resolve_s(config))
    return plugin_estimate(inp)


def _data_tags(cell: dict) -> list:
    return [[k, cell[k]] for k in sorted(cell) if k != "estimator"]


def _run_cell(config: SimConfig, cell: dict) -> dict:
    loading = make_loading(config.loading)
    alpha, tau = config.noise.alpha, config.noise.tau
    calc = RateCalculator(loading, alpha)
    theta_fixed = _fixed_theta(config, loading, calc)
    prior = None
    if config.theta.kind == "prior":
        prior = build_prior(loading, alpha, config.theta.s, config.theta.c1,
                            config.theta.c_alpha2)
    tags = _data_tags(cell)
    eta_orig = loading.original_values

    errors = []
    for r in range(config.replicates):
        try:
            if prior is not None:
                theta = draw_prior(prior, generator(config.seed, "cell", tags, "theta", r))
            else:
                theta = theta_fixed
            xi = sample_with(config.noise, loading.d,
                              generator(config.seed, "cell", tags, "xi", r))
            y = theta + config.sigma * xi
            inp = EstimationInput(y, loading, alpha, tau, sigma=config.sigma,
                                  kappa=config.estimator.kappa)
            est = _dispatch(config, inp, calc)
            target = float(np.dot(eta_orig, theta))
            errors.append((est.value - target) ** 2)
        except (ValueError, RuntimeError) as exc:
            raise SimulationError(
                f"replicate {r} failed (seed={config.seed}, cell={tags}): {exc}"
            ) from exc

    n = len(errors)
    mse = math.fsum(errors) / n
    if n > 1:
        var = math.fsum((e - mse) ** 2 for e in errors) / (n - 1)
        mse_se = math.sqrt(var / n)
    else:
        mse_se = float("nan")
    if config.estimator.variant == "adaptive":
        rate_kind, rate_value = "phi_adp", calc.phi_adp(config.s_assumed)
    else:
        rate_kind, rate_value = "phi_o", calc.phi_o(config.s_assumed)
    denom = config.sigma**2 * rate_value
    ratio = mse / denom if denom > 0 else float("inf") if mse > 0 else 0.0
    row = dict(cell)
    row.update(
        estimator=config.estimator.variant,
        n_rep=n,
        mse=mse,
        mse_se=mse_se,
        rate_kind=rate_kind,
        rate_value=rate_value,
        ratio=ratio,
    )
    return row


def run_risk(config: SimConfig) -> SimulationReport:
    """Replicated risk experiment for a single configuration."""
    row = _run_cell(config, {})
    return SimulationReport("risk", list(RESULT_COLUMNS), [row], config.hash(), config.seed)


def _apply_cell(base: SimConfig, cell: dict) -> SimConfig:
    loading, noise, theta = base.loading, base.noise, base.theta
    estimator, sigma, s_assumed = base.estimator, base.sigma, base.s_assumed
    for axis, value in cell.items():
        if axis == "d":
            if loading.kind == "explicit":
                raise ValueError("cannot sweep d over an explicit loading")
            loading = dataclasses.replace(loading, d=int(value))
        elif axis == "alpha":
            noise = dataclasses.replace(noise, alpha=float(value))
        elif axis == "sigma":
            sigma = float(value)
        elif axis == "rho":
            if theta.kind != "spike_grid":
                raise ValueError("rho axis requires a spike_grid theta")
            theta = dataclasses.replace(theta, rho=float(value))
        elif axis == "s":
            s_assumed = int(value)
            if estimator.s is not None or estimator.variant not in ("adaptive", "plugin"):
                estimator = dataclasses.replace(estimator, s=int(value))
            if theta.kind == "spike_grid":
                theta = dataclasses.replace(theta, n_spikes=int(value))
            elif theta.kind == "prior":
                theta = dataclasses.replace(theta, s=int(value))
        elif axis == "estimator":
            estimator = dataclasses.replace(estimator, variant=str(value))
        else:
            raise ValueError(f"unknown grid axis {axis!r}; supported: {GRID_AXES}")
    return dataclasses.replace(base, loading=loading, noise=noise, sigma=sigma,
                               theta=theta, estimator=estimator, s_assumed=s_assumed)


def risk_grid(base: SimConfig, grid: dict, workers: int = 1) -> SimulationReport:
    """Cartesian sweep; cell streams are keyed by the (sorted) data coordinates
    so axis declaration order and worker count never change the result."""
    axes = sorted(grid)
    for a in axes:
        if a not in GRID_AXES:
            raise ValueError(f"unknown grid axis {a!r}; supported: {GRID_AXES}")
    cells = [dict(zip(axes, combo))
             for combo in itertools.product(*[list(grid[a]) for a in axes])]

    def one(cell: dict) -> dict:
        return _run_cell(_apply_cell(base, cell), cell)

    if workers > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, cells))
    else:
        rows = [one(c) for c in cells]
    cell_cols = [a for a in axes if a not in RESULT_COLUMNS]
    return SimulationReport("risk", cell_cols + list(RESULT_COLUMNS), rows,
                            base.hash(), base.seed)


# ---------------------------------------------------------------------------
# median-of-means coverage
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomCoverageReport:
    coverage: float
    mean_abs_rel_err: float
    n_rep: int


def run_mom_coverage(config: SimConfig) -> MomCoverageReport:
    """Fraction of replicates with sigma_hat^2 / sigma^2 in [1/2, 3/2]."""
    loading = make_loading(config.loading)
    calc = RateCalculator(loading, config.noise.alpha)
    theta = _fixed_theta(config, loading, calc)
    if theta is None:
        raise ValueError("run_mom_coverage needs a replicate-invariant theta")
    hits = 0
    rel_errs = []
    s2 = config.sigma**2
    for r in range(config.replicates):
        xi = sample_with(config.noise, loading.d,
                          generator(config.seed, "cell", [], "xi", r))
        y = theta + config.sigma * xi
        est = mom_sigma(y, config.estimator.gamma_split)
        if 0.5 * s2 <= est <= 1.5 * s2:
            hits += 1
        rel_errs.append(abs(est - s2) / s2)
    n = config.replicates
    return MomCoverageReport(hits / n, math.fsum(rel_errs) / n, n)


# ---------------------------------------------------------------------------
# testing: error rates over a separation grid
# ---------------------------------------------------------------------------

def _null_fixtures(loading: LoadingVector, calc: RateCalculator, s: int,
                   t0: float, sigma: float, tau: float) -> list[tuple[str, np.ndarray, int]]:
    d = loading.d
    eta = loading.values
    base = np.zeros(d)
    support = 0
    if t0 != 0.0:
        base[0] = t0 / eta[0]
        support = 1
    fixtures = [("point", base, support)]
    if d >= support + 2 and s >= support + 2:
        m = sigma * tau * calc.oracle(s).lambda_o
        if m > 0.0:
            pair = base.copy()
            pair[d - 2] += m / eta[d - 2]
            pair[d - 1] -= m / eta[d - 1]
            fixtures.append(("cancelling_pair", pair, support + 2))
    return fixtures


def _alt_fixtures(loading: LoadingVector, s: int, t0: float, rho: float,
                  base: np.ndarray, base_support: int) -> list[tuple[str, np.ndarray]]:
    d = loading.d
    eta = loading.values
    out = []
    single = base.copy()
    single[d - 1] += rho / eta[d - 1]
    out.append(("single+", single))
    single_m = base.copy()
    single_m[d - 1] -= rho / eta[d - 1]
    out.append(("single-", single_m))
    k = min(s - base_support, d - base_support)
    if k >= 2:
        spread = base.copy()
        spread[d - k:] += (rho / k) / eta[d - k:]
        out.append((f"spread{k}", spread))
    return out


def _error_rate(config: SimConfig, loading: LoadingVector, calc: RateCalculator,
                theta_sorted: np.ndarray, t0: float, B: float, reject: bool,
                tags: list) -> float:
    theta = loading.to_original(theta_sorted)
    s = config.s_assumed
    bad = 0
    for r in range(config.replicates):
        xi = sample_with(config.noise, loading.d,
                          generator(config.seed, *tags, r))
        y = theta + config.sigma * xi
        inp = EstimationInput(y, loading, config.noise.alpha, config.noise.tau,
                              sigma=config.sigma, kappa=config.estimator.kappa)
        dec = linear_test(inp, s, t0, B, calculator=calc).decision
        if (dec == 1) != reject:
            bad += 1
    return bad / config.replicates


def run_test_power(config: SimConfig, t0: float, B: float, rho_grid) -> SimulationReport:
    """Type I frequency on null fixtures with L(theta) = t0, and type II
    frequency at each rho on alternatives with |L(theta) - t0| = rho."""
    loading = make_loading(config.loading)
    calc = RateCalculator(loading, config.noise.alpha)
    s = config.s_assumed
    rows = []
    nulls = _null_fixtures(loading, calc, s, t0, config.sigma, config.noise.tau)
    for label, theta_sorted, _support in nulls:
        rate = _error_rate(config, loading, calc, theta_sorted, t0, B, reject=False,
                           tags=["test", "null", label])
        rows.append({"kind": "type1", "fixture": label, "rho": 0.0,
                     "error_rate": rate, "n_rep": config.replicates})
    base, base_support = nulls[0][1], nulls[0][2]
    for rho in rho_grid:
        rho = float(rho)
        for label, theta_sorted in _alt_fixtures(loading, s, t0, rho, base, base_support):
            rate = _error_rate(config, loading, calc, theta_sorted, t0, B, reject=True,
                               tags=["test", "alt", label, rho])
            rows.append({"kind": "type2", "fixture": label, "rho": rho,
                         "error_rate": rate, "n_rep": config.replicates})
    return SimulationReport("test_power",
                            ["kind", "fixture", "rho", "error_rate", "n_rep"],
                            rows, config.hash(), config.seed)


def calibrate_test_threshold(config: SimConfig, t0: float, epsilon: float) -> float:
    """Pick B as the worst per-fixture (1 - epsilon/2) quantile of the null
    statistic |L_hat - t0| / (sigma sqrt(phi_o)), on calibration streams
    disjoint from the evaluation streams."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must be in (0, 1)")
    loading = make_loading(config.loading)
    calc = RateCalculator(loading, config.noise.alpha)
    s = config.s_assumed
    scale = config.sigma * math.sqrt(calc.phi_o(s))
    worst = 0.0
    for label, theta_sorted, _support in _null_fixtures(loading, calc, s, t0,
                                                        config.sigma, config.noise.tau):
        theta = loading.to_original(theta_sorted)
        stats = np.empty(config.replicates)
        for r in range(config.replicates):
            xi = sample_with(config.noise, loading.d,
                              generator(config.seed, "test", "calib", label, r))
            y = theta + config.sigma * xi
            inp = EstimationInput(y, loading, config.noise.alpha, config.noise.tau,
                                  sigma=config.sigma, kappa=config.estimator.kappa)
            est = oracle_estimate(inp, s, calculator=calc)
            stats[r] = abs(est.value - t0) / scale
        worst = max(worst, float(np.quantile(stats, 1.0 - epsilon / 2.0, method="higher")))
    return worst
