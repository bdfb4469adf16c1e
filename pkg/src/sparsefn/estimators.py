"""Estimators of the linear functional and the associated test.

Shared shape: plug-in on the large-loading head (sorted positions up to a
cutoff), hard thresholding on the tail.  The threshold multiplier ``kappa``
is exposed because the displayed thresholds carry an unresolved constant;
risk-bound constants absorb it and the default is 1.  Comparisons at the
threshold use strict ``>``.

Coordinates are processed internally in sorted-|loading| order; kept indices
are reported in the caller's original order.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .loading import LoadingVector
from .rates import RateCalculator, j3_index
from .streams import generator

__all__ = [
    "EstimationInput",
    "EstimateResult",
    "TestResult",
    "LepskiSelection",
    "default_zeta",
    "oracle_estimate",
    "collier_estimate",
    "family_estimate",
    "plugin_estimate",
    "lepski_select",
    "adaptive_estimate",
    "nonsymmetric_estimate",
    "mom_sigma",
    "unknown_sigma_estimate",
    "linear_test",
]

VARIANTS = ("oracle", "family", "adaptive", "nonsym", "unknown-sigma", "collier", "plugin")


def default_zeta(alpha: float) -> float:
    """Lepski band constant: the theory only requires 'sufficiently large'."""
    return 1e3 if alpha >= 2.0 else 1e4


@dataclass(frozen=True)
class EstimationInput:
    """Observations plus everything the estimators need to threshold them.

    ``y`` is in the loading's original coordinate order.  ``sigma`` is the
    known noise level, or ``None`` when unknown (median-of-means route).
    ``sigma = 0`` is admitted for degenerate-noise experiments, where every
    threshold vanishes and recovery is exact.
    """

    y: np.ndarray
    loading: LoadingVector
    alpha: float
    tau: float
    sigma: float | None = 1.0
    kappa: float = 1.0

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=float)
        if y.shape != (self.loading.d,):
            raise ValueError(f"y must have length d={self.loading.d}")
        if not np.all(np.isfinite(y)):
            raise ValueError("y entries must be finite")
        if self.alpha <= 0 or self.tau <= 0:
            raise ValueError("alpha and tau must be positive")
        if self.sigma is not None and self.sigma < 0:
            raise ValueError("sigma must be nonnegative or None (unknown)")
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        y.flags.writeable = False
        object.__setattr__(self, "y", y)

    def require_sigma(self) -> float:
        if self.sigma is None:
            raise ValueError("this estimator requires a known sigma")
        return self.sigma


@dataclass(frozen=True)
class EstimateResult:
    value: float
    s_used: int
    threshold: float
    kept_indices: tuple[int, ...]
    variant: str


@dataclass(frozen=True)
class TestResult:
    decision: int
    statistic: float
    threshold: float


@dataclass(frozen=True)
class LepskiSelection:
    s_hat: int
    s_star: int
    s0: int
    estimates: tuple[float, ...]          # family estimates for s = 1..s0
    deviations: tuple[tuple[int, int, float, float, bool], ...]
    # rows (s, s_prime, |diff|, omega_{s_prime}, within_band)


def _calc(inp: EstimationInput, calculator: RateCalculator | None) -> RateCalculator:
    if calculator is not None:
        return calculator
    return RateCalculator(inp.loading, inp.alpha)


def _threshold_sum(eta: np.ndarray, ys: np.ndarray, cutoff: int, threshold: float):
    """Plug-in below cutoff, strict hard threshold on |eta*y| above it."""
    etay = eta * ys
    keep = np.abs(etay) > threshold
    keep[:cutoff] = True
    return float(etay[keep].sum()), keep


def _result(inp: EstimationInput, keep: np.ndarray, value: float, s: int,
            threshold: float, variant: str) -> EstimateResult:
    orig = inp.loading.order[np.nonzero(keep)[0]]
    return EstimateResult(value, int(s), float(threshold),
                          tuple(sorted(int(i) for i in orig)), variant)


def oracle_estimate(inp: EstimationInput, s: int, *,
                    calculator: RateCalculator | None = None) -> EstimateResult:
    """Thresholding estimator with known sparsity: plug-in up to j1, threshold
    kappa * sigma * tau * lambda_o beyond."""
    sigma = inp.require_sigma()
    prof = _calc(inp, calculator).oracle(s)
    thr = inp.kappa * sigma * inp.tau * prof.lambda_o
    ys = inp.loading.to_sorted(inp.y)
    value, keep = _threshold_sum(inp.loading.values, ys, prof.j1, thr)
    return _result(inp, keep, value, s, thr, "oracle")


def plugin_estimate(inp: EstimationInput) -> EstimateResult:
    """Pure plug-in sum over all coordinates; the no-thresholding baseline."""
    value = float(np.dot(inp.loading.original_values, inp.y))
    keep = np.ones(inp.loading.d, dtype=bool)
    return _result(inp, keep, value, inp.loading.d, 0.0, "plugin")


def collier_estimate(inp: EstimationInput, s: int) -> EstimateResult:
    """Homogeneous-loading reference: threshold sigma*sqrt(2 log(1 + d/s^2))
    for s below sqrt(d), plug-in otherwise."""
    sigma = inp.require_sigma()
    if not np.all(inp.loading.values == 1.0):
        raise ValueError("collier_estimate requires a homogeneous loading (all ones)")
    d = inp.loading.d
    s = int(s)
    if not 1 <= s <= d:
        raise ValueError(f"s must be in [1, {d}]")
    if s >= math.sqrt(d):
        value = float(inp.y.sum())
        keep = np.ones(d, dtype=bool)
        return _result(inp, keep, value, s, 0.0, "collier")
    thr = sigma * math.sqrt(2.0 * math.log1p(d / s**2))
    keep = np.abs(inp.y) > thr
    value = float(inp.y[keep].sum())
    orig = np.nonzero(keep)[0]  # already original order
    return EstimateResult(value, s, thr, tuple(int(i) for i in orig), "collier")


def family_estimate(inp: EstimationInput, s: int, *,
                    calculator: RateCalculator | None = None) -> EstimateResult:
    """Member s of the adaptive family: lambda_star(s) and j2(s) in place of
    the oracle quantities."""
    sigma = inp.require_sigma()
    calc = _calc(inp, calculator)
    lam = calc.lambda_star(s)
    thr = inp.kappa * sigma * inp.tau * lam
    ys = inp.loading.to_sorted(inp.y)
    value, keep = _threshold_sum(inp.loading.values, ys, calc.j2(s), thr)
    return _result(inp, keep, value, s, thr, "family")


def _family_values(inp: EstimationInput, calc: RateCalculator, s_max: int) -> np.ndarray:
    sigma = inp.require_sigma()
    eta = inp.loading.values
    ys = inp.loading.to_sorted(inp.y)
    etay = eta * ys
    abs_etay = np.abs(etay)
    out = np.empty(s_max)
    for s in range(1, s_max + 1):
        thr = inp.kappa * sigma * inp.tau * calc.lambda_star(s)
        keep = abs_etay > thr
        keep[: calc.j2(s)] = True
        out[s - 1] = etay[keep].sum()
    return out


def _lepski_core(inp: EstimationInput, zeta: float,
                 calc: RateCalculator) -> tuple[int, int, int, np.ndarray, np.ndarray]:
    """Shared selection machinery: (s_hat, s_star, comparison cap, values, omega)."""
    if zeta <= 0:
        raise ValueError("zeta must be positive")
    sigma = inp.require_sigma()
    s_star = calc.s_star()
    cap = min(s_star + 1, inp.loading.d)
    values = _family_values(inp, calc, cap)
    omega = np.array([math.sqrt(zeta * sigma**2 * calc.phi_adp(sp))
                      for sp in range(1, cap + 1)])
    s_hat = s_star + 1
    for s in range(1, s_star + 1):
        tail = slice(s, cap)
        if np.all(np.abs(values[s - 1] - values[tail]) <= omega[tail]):
            s_hat = s
            break
    return s_hat, s_star, cap, values, omega


def lepski_select(inp: EstimationInput, zeta: float, *,
                  calculator: RateCalculator | None = None) -> LepskiSelection:
    """Smallest s in [1, s_star] whose estimate agrees with every coarser one
    within omega_{s'} = sqrt(zeta sigma^2 phi_adp(s')); s0 if none qualifies.

    Estimators and bands are constant for s > s0, so the comparison range
    (s, d] collapses to (s, s0] without changing the selection.
    """
    calc = _calc(inp, calculator)
    s_hat, s_star, cap, values, omega = _lepski_core(inp, zeta, calc)
    rows = [(s, sp, float(abs(values[s - 1] - values[sp - 1])), float(omega[sp - 1]),
             bool(abs(values[s - 1] - values[sp - 1]) <= omega[sp - 1]))
            for s in range(1, s_star + 1) for sp in range(s + 1, cap + 1)]
    return LepskiSelection(int(s_hat), int(s_star), int(s_star + 1),
                           tuple(float(v) for v in values), tuple(rows))


def adaptive_estimate(inp: EstimationInput, zeta: float | None = None, *,
                      calculator: RateCalculator | None = None) -> EstimateResult:
    """Lepski-selected member of the adaptive family."""
    if zeta is None:
        zeta = default_zeta(inp.alpha)
    calc = _calc(inp, calculator)
    s_hat, _s_star, cap, _values, _omega = _lepski_core(inp, zeta, calc)
    res = family_estimate(inp, min(s_hat, cap), calculator=calc)
    return EstimateResult(res.value, s_hat, res.threshold, res.kept_indices, "adaptive")


def nonsymmetric_estimate(inp: EstimationInput, s: int, c_h: float | None = None, *,
                          calculator: RateCalculator | None = None) -> EstimateResult:
    """Estimator for non-symmetric noise: plug-in up to j3(s), threshold on
    |y_j| (not |eta_j y_j|) beyond, with level c_h sigma log^(1/alpha)(ed/s).

    Default ``c_h = tau * 4**(1/alpha)``.
    """
    sigma = inp.require_sigma()
    d = inp.loading.d
    s = int(s)
    if not 1 <= s <= d:
        raise ValueError(f"s must be in [1, {d}]")
    if c_h is None:
        c_h = inp.tau * 4.0 ** (1.0 / inp.alpha)
    j3 = j3_index(d, s, inp.alpha)
    thr = c_h * sigma * (1.0 + math.log(d / s)) ** (1.0 / inp.alpha)
    ys = inp.loading.to_sorted(inp.y)
    keep = np.abs(ys) > thr
    keep[:j3] = True
    value = float((inp.loading.values[keep] * ys[keep]).sum())
    return _result(inp, keep, value, s, thr, "nonsym")


def mom_sigma(y, gamma_split: float = 0.5, shuffle_seed: int | None = None) -> float:
    """Median-of-means estimate of sigma^2 from contiguous blocks of y_j^2.

    ``m = floor(gamma_split * d)`` blocks; the first ``d mod m`` blocks get one
    extra element.  Even m takes the lower middle order statistic, so the
    result is deterministic in the input order.  Blocking in input order is
    permutation sensitive; ``shuffle_seed`` applies a seeded permutation first
    for robustness experiments.
    """
    y = np.asarray(y, dtype=float)
    d = y.size
    if d < 2:
        raise ValueError("median-of-means needs d >= 2")
    if not 0.0 < gamma_split <= 0.5:
        raise ValueError("gamma_split must be in (0, 1/2]")
    m = math.floor(gamma_split * d)
    if m < 1:
        raise ValueError("floor(gamma_split * d) must be >= 1")
    if shuffle_seed is not None:
        y = y[generator(shuffle_seed, "mom-shuffle").permutation(d)]
    base, extra = divmod(d, m)
    sizes = np.full(m, base)
    sizes[:extra] += 1
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    sq = y * y
    means = np.add.reduceat(sq, bounds[:-1]) / sizes
    return float(np.sort(means)[(m - 1) // 2])


def unknown_sigma_estimate(inp: EstimationInput, s: int, gamma_split: float = 0.5,
                           shuffle_seed: int | None = None, *,
                           calculator: RateCalculator | None = None) -> EstimateResult:
    """Oracle-shape estimator with sigma replaced by the median-of-means
    estimate and the threshold constant inflated by sqrt(2)."""
    d = inp.loading.d
    s = int(s)
    if not 1 <= s <= d:
        raise ValueError(f"s must be in [1, {d}]")
    m = math.floor(gamma_split * d)
    if not s < m / 4:
        warnings.warn(f"s={s} is not below floor(gamma_split*d)/4={m / 4:g}; "
                      "the variance-estimate guarantee degrades", stacklevel=2)
    sigma_hat = math.sqrt(mom_sigma(inp.y, gamma_split, shuffle_seed))
    prof = _calc(inp, calculator).oracle(s)
    thr = inp.kappa * math.sqrt(2.0) * sigma_hat * inp.tau * prof.lambda_o
    ys = inp.loading.to_sorted(inp.y)
    value, keep = _threshold_sum(inp.loading.values, ys, prof.j1, thr)
    return _result(inp, keep, value, s, thr, "unknown-sigma")


def linear_test(inp: EstimationInput, s: int, t0: float, B: float, *,
                calculator: RateCalculator | None = None) -> TestResult:
    """Reject when |L_hat_s - t0| exceeds B sigma sqrt(phi_o(s))."""
    if B <= 0:
        raise ValueError("B must be positive")
    s = int(s)
    if s < 2:
        warnings.warn("the testing guarantee is stated for s >= 2", stacklevel=2)
    sigma = inp.require_sigma()
    calc = _calc(inp, calculator)
    stat = oracle_estimate(inp, s, calculator=calc).value
    thr = B * sigma * math.sqrt(calc.phi_o(s))
    return TestResult(int(abs(stat - t0) > thr), float(stat), float(thr))
