"""Acceptance suite: one test per criterion, each printing a PASS line with
its observed quantities and elapsed time (run with ``pytest -s`` or ``-rA`` to
see them).  Tolerances are pinned here, not configurable."""

import json
import math
import time

import numpy as np
from scipy.stats import ks_2samp

from sparsefn.cli import main
from sparsefn.estimators import EstimationInput, lepski_select
from sparsefn.loading import LoadingSpec, effective_dimension, make_loading
from sparsefn.lowerbound import build_prior, chi2_mixture_bound, prior_moments, sample_prior
from sparsefn.noise import NoiseModel, sample, sigma_alpha
from sparsefn.rates import RateCalculator, closed_form_rate
from sparsefn.sim import (
    EstimatorSpec,
    SimConfig,
    ThetaSpec,
    calibrate_test_threshold,
    risk_grid,
    run_mom_coverage,
    run_test_power,
)
from sparsefn.threshold import log_phi_objective, solve_beta

GAUSS = NoiseModel("gaussian", 2.0, 2.0, "G")


def _report(criterion: str, started: float, detail: str) -> None:
    print(f"[PASS] {criterion} ({time.time() - started:.1f}s): {detail}")


def _random_loading(rng, dmax=1000, lo=1e-2, hi=1e2):
    d = int(rng.integers(1, dmax + 1))
    mags = np.exp(rng.uniform(math.log(lo), math.log(hi), size=d))
    return make_loading(LoadingSpec("explicit", values=tuple(sorted(mags, reverse=True))))


def test_criterion_1_solver_exactness():
    started = time.time()
    rng = np.random.default_rng(101)
    worst_resid = 0.0
    for _ in range(1000):
        lv = _random_loading(rng)
        alpha = float(rng.choice([0.5, 1.0, 2.0, 4.0]))
        phi0 = math.exp(log_phi_objective(lv, alpha, 0.0))
        target = phi0 * 10.0 ** rng.uniform(-3.0, 3.0)
        sol = solve_beta(lv, alpha, target)
        worst_resid = max(worst_resid, abs(sol.residual) / target)
    assert worst_resid <= 1e-10, worst_resid

    worst_beta_err = 0.0
    for d in (4, 100, 10_000, 1_000_000):
        lv = make_loading(LoadingSpec("homogeneous", d=d))
        for s in (1, max(1, math.isqrt(d)), d):
            sol = solve_beta(lv, 2.0, s / 2.0)
            closed = 2.0 * math.log(2.0 * math.sqrt(d) / s)
            worst_beta_err = max(worst_beta_err, abs(sol.beta - closed))
            assert abs(sol.residual) <= 1e-10 * (s / 2.0)
    assert worst_beta_err <= 1e-8, worst_beta_err
    _report("criterion 1 (solver exactness)", started,
            f"worst relative residual {worst_resid:.2e}, "
            f"worst homogeneous beta error {worst_beta_err:.2e}")


def test_criterion_2_monotonicity_suites():
    started = time.time()
    # strict decrease of phi over 1e4 random ordered pairs
    rng = np.random.default_rng(202)
    checked = 0
    for _ in range(20):
        lv = _random_loading(rng, lo=1e-3, hi=1e3)
        alpha = float(rng.choice([0.5, 1.0, 2.0]))
        b1 = rng.uniform(-50.0, 50.0, size=500)
        b2 = b1 + rng.uniform(1e-3, 10.0, size=500)
        for x, y in zip(b1, b2):
            assert log_phi_objective(lv, alpha, x) > log_phi_objective(lv, alpha, y)
            checked += 1
    assert checked == 10_000

    # lambda_o(s) and lambda_star(s) non-increasing in s
    for spec in (LoadingSpec("homogeneous", d=100),
                 LoadingSpec("two_phase", d=100, gamma_d=0.4, gamma_lambda=0.2)):
        calc = RateCalculator(make_loading(spec), 2.0)
        lo = [calc.oracle(s).lambda_o for s in range(1, 41)]
        ls = [calc.lambda_star(s) for s in range(1, 41)]
        assert all(a >= b - 1e-12 for a, b in zip(lo, lo[1:]))
        assert all(a >= b - 1e-12 for a, b in zip(ls, ls[1:]))

    # almost increasing / almost decreasing ratios on the standard grid
    worst_k = 0.0
    for spec in (LoadingSpec("homogeneous", d=200),
                 LoadingSpec("two_phase", d=500, gamma_d=0.4, gamma_lambda=0.2),
                 LoadingSpec("exp_decay", d=500, c=2.0 / 500.0, gamma=1.0)):
        lv = make_loading(spec)
        for alpha in (1.0, 2.0):
            calc = RateCalculator(lv, alpha)
            smax = min(calc.s0(), 80)
            up = [calc.phi_star(s) / (1.0 + math.log(s)) for s in range(1, smax + 1)]
            dn = [calc.phi_star(s) / (s**2 * (1.0 + math.log(s))) for s in range(1, smax + 1)]
            run_max, run_min = up[0], dn[0]
            for u, v in zip(up[1:], dn[1:]):
                worst_k = max(worst_k, run_max / u, v / run_min)
                run_max, run_min = max(run_max, u), min(run_min, v)
    assert worst_k < 100.0, worst_k
    _report("criterion 2 (monotonicity suites)", started,
            f"10^4 strict-decrease pairs, lambda monotone, worst K {worst_k:.2f} < 100")


def test_criterion_3_rate_closed_form_agreement():
    started = time.time()
    lo_seen, hi_seen = math.inf, 0.0
    for d in (100, 1000, 10_000):
        s_values = sorted({1, int(d**0.25), math.isqrt(d), int(2.0 * math.sqrt(d))})
        hom = make_loading(LoadingSpec("homogeneous", d=d))
        two = make_loading(LoadingSpec("two_phase", d=d, gamma_d=0.4, gamma_lambda=0.2))
        exp = make_loading(LoadingSpec("exp_decay", d=d, c=2.0 / d, gamma=1.0))
        j0 = effective_dimension(exp)
        for alpha in (1.0, 2.0):
            calcs = [
                (RateCalculator(hom, alpha), "homogeneous_oracle", {"d": d, "alpha": alpha}),
                (RateCalculator(two, alpha), "two_phase_oracle",
                 {"d": d, "alpha": alpha, "gamma_d": 0.4, "gamma_lambda": 0.2}),
                (RateCalculator(exp, alpha), "exp_decay_oracle", {"j0": j0, "alpha": alpha}),
            ]
            for calc, kind, params in calcs:
                for s in s_values:
                    ratio = calc.phi_o(s) / closed_form_rate(kind, params, s)
                    lo_seen, hi_seen = min(lo_seen, ratio), max(hi_seen, ratio)
                    assert 0.2 <= ratio <= 10.0, (kind, d, s, alpha, ratio)
    _report("criterion 3 (rate/closed-form agreement)", started,
            f"all ratios in [{lo_seen:.3f}, {hi_seen:.3f}] within [0.2, 10]")


def test_criterion_4_gaussian_identity():
    started = time.time()
    # machine precision: within a couple of ulps of sqrt(2)
    assert abs(sigma_alpha(2.0) - math.sqrt(2.0)) < 1e-15
    x = sample(NoiseModel("symm_weibull", 2.0, 2.0, "G"), 100_000, 404)
    g = sample(GAUSS, 100_000, 405)
    p = ks_2samp(x, g).pvalue
    assert p > 1e-3, p
    _report("criterion 4 (gaussian identity)", started,
            f"sigma_2 = sqrt(2) to machine precision, two-sample KS p = {p:.3f} > 1e-3")


def _base_config(**kw):
    base = dict(
        loading=LoadingSpec("homogeneous", d=100),
        noise=GAUSS,
        sigma=1.0,
        theta=ThetaSpec("spike_grid", rho=1.0, n_spikes=5),
        estimator=EstimatorSpec("oracle", s=5),
        replicates=2000,
        seed=20260808,
        s_assumed=5,
    )
    base.update(kw)
    return SimConfig(**base)


def test_criterion_5_oracle_risk_bound():
    started = time.time()
    rep = risk_grid(_base_config(),
                    {"estimator": ["oracle", "plugin"], "s": [1, 2, 5],
                     "rho": [0.5, 1.0, 2.0]})
    ratio = {(r["estimator"], r["s"], r["rho"]): r["ratio"] for r in rep.rows}
    worst_oracle = max(v for (e, _s, _r), v in ratio.items() if e == "oracle")
    assert worst_oracle <= 20.0, worst_oracle
    # thresholding must beat plug-in in the sparse regime s <= sqrt(d)/4
    sparse = [s for s in (1, 2, 5) if s <= math.sqrt(100) / 4.0]
    assert sparse == [1, 2]
    for s in sparse:
        for rho in (0.5, 1.0, 2.0):
            assert ratio[("plugin", s, rho)] > ratio[("oracle", s, rho)], (s, rho)
    _report("criterion 5 (oracle risk bound)", started,
            f"max oracle MSE/(sigma^2 phi_o) = {worst_oracle:.2f} <= 20; "
            f"plug-in dominated on every s in {sparse} cell")


def test_criterion_6_adaptation_cost():
    started = time.time()
    rep = risk_grid(_base_config(),
                    {"estimator": ["oracle", "adaptive"], "rho": [0.5, 1.0, 2.0]})
    mse = {(r["estimator"], r["rho"]): r["mse"] for r in rep.rows}
    cap = 4.0 * (1.0 + math.log(5.0)) ** 2  # s0 = 44 > s = 5
    worst = 0.0
    for rho in (0.5, 1.0, 2.0):
        factor = mse[("adaptive", rho)] / mse[("oracle", rho)]
        worst = max(worst, factor)
        assert factor <= cap, (rho, factor, cap)
    _report("criterion 6 (adaptation cost)", started,
            f"paired MSE(adaptive)/MSE(oracle) worst {worst:.2f} <= 4 log^2(e s) = {cap:.2f}")


def test_criterion_7_mom_coverage():
    started = time.time()
    cfg = _base_config(
        loading=LoadingSpec("homogeneous", d=1000),
        theta=ThetaSpec("fixed", support=tuple(range(10)), values=(1.0,) * 10),
        estimator=EstimatorSpec("unknown-sigma", s=10, gamma_split=0.5),
        s_assumed=10,
    )
    rep = run_mom_coverage(cfg)
    assert rep.coverage >= 0.99, rep.coverage
    _report("criterion 7 (median-of-means coverage)", started,
            f"coverage {rep.coverage:.4f} >= 0.99, mean |rel err| {rep.mean_abs_rel_err:.3f}")


def test_criterion_8_test_separation():
    started = time.time()
    cfg = _base_config(theta=ThetaSpec("zero"))
    B = calibrate_test_threshold(cfg, t0=0.0, epsilon=0.1)
    calc = RateCalculator(make_loading(cfg.loading), 2.0)
    r_min = math.sqrt(calc.phi_o(5))
    rep = run_test_power(cfg, t0=0.0, B=B, rho_grid=[8.0 * r_min, 0.05 * r_min])
    type1 = max(r["error_rate"] for r in rep.rows if r["kind"] == "type1")
    type2_far = max(r["error_rate"] for r in rep.rows
                    if r["kind"] == "type2" and r["rho"] > r_min)
    type2_near = max(r["error_rate"] for r in rep.rows
                     if r["kind"] == "type2" and r["rho"] < r_min)
    assert type1 + type2_far <= 0.1, (type1, type2_far)
    assert type1 + type2_near >= 0.8, (type1, type2_near)
    _report("criterion 8 (test separation)", started,
            f"calibrated B = {B:.3f}; risk {type1 + type2_far:.3f} <= 0.1 at 8 r_min, "
            f"{type1 + type2_near:.3f} >= 0.8 at 0.05 r_min")


def test_criterion_9_prior_construction():
    started = time.time()
    lv = make_loading(LoadingSpec("homogeneous", d=100))
    prior = build_prior(lv, 2.0, 5, c1=1.0)
    assert prior.lambda_o > 0.0
    assert abs(prior.pi.sum() - 0.5 * 5) <= 5e-8  # solver tolerance scale

    mom = prior_moments(prior)
    n = 100_000
    theta = sample_prior(prior, 909, size=n)
    support = (theta != 0).sum(axis=1)
    grand = theta @ lv.original_values
    assert abs(support.mean() - mom.mean_support) <= 3.0 * math.sqrt(mom.var_support / n)
    assert abs(grand.mean() - mom.mean_L) <= 3.0 * math.sqrt(mom.var_L / n)

    # separation event on the designated large-s fixture
    big = make_loading(LoadingSpec("homogeneous", d=10_000))
    big_prior = build_prior(big, 2.0, 30, c1=0.5)
    scale = big_prior.lambda_o * 30 + big_prior.nu
    assert scale >= 30.0  # |eta_1| = 1
    hits = 0
    draws = 0
    for batch in range(10):
        th = sample_prior(big_prior, 910 + batch, size=1000)
        ok = ((th != 0).sum(axis=1) <= 30) & (th.sum(axis=1) >= (0.5 / 8.0) * scale)
        hits += int(ok.sum())
        draws += 1000
    freq = hits / draws
    assert freq >= 0.7, freq

    bounds = [chi2_mixture_bound(build_prior(lv, 2.0, 5, c1=c), 2.0).bound
              for c in (0.25, 0.5, 1.0, 1.5)]
    assert all(a < b for a, b in zip(bounds, bounds[1:]))
    _report("criterion 9 (prior construction)", started,
            f"sum pi = c1 s/2 to 5e-8; CLT bands hold at N=1e5; "
            f"separation frequency {freq:.3f} >= 0.7; chi2 bound increasing in c1")


def test_criterion_10_determinism(tmp_path):
    started = time.time()
    cfg = {
        "schema_version": 1, "seed": 99, "sigma": 1.0,
        "loading": {"kind": "homogeneous", "d": 50},
        "noise": {"family": "symm_weibull", "alpha": 1.0, "tau": 2.0, "class": "G"},
        "estimator": {"variant": "oracle", "s": 3},
        "theta": {"kind": "spike_grid", "rho": 1.0, "n_spikes": 3},
        "simulation": {"replicates": 100, "s_assumed": 3,
                       "grid": {"rho": [0.5, 2.0], "estimator": ["oracle", "plugin"]}},
    }
    cpath = tmp_path / "c.json"
    cpath.write_text(json.dumps(cfg))
    outs = []
    for i, workers in enumerate((1, 2, 5, 1)):
        opath = tmp_path / f"out{i}.csv"
        assert main(["simulate", "--config", str(cpath), "--out", str(opath),
                     "--workers", str(workers)]) == 0
        outs.append(opath.read_bytes())
    assert all(o == outs[0] for o in outs)
    _report("criterion 10 (determinism)", started,
            f"byte-identical CSV across worker counts (1, 2, 5) and repeat runs; "
            f"{len(outs[0])} bytes")
