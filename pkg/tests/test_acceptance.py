"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s``.  Heavier than the unit
modules (full seeded sweeps and a 10^4-trial Monte-Carlo); expect a couple
of minutes total.
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from chebcon import (
    AdversaryModel,
    ChebProxy,
    GraphSequence,
    Interval,
    NoiseSpec,
    StopParams,
    adaptive_interpolate,
    beta_k,
    cheb_coeffs,
    cheb_eval,
    cheb_nodes,
    empirical_adversary,
    run_dissemination,
    run_prcpoa,
)
from chebcon.privacy import CASE_NO_INFO
from chebcon.runner import ScenarioConfig, short_privacy_run, linear_fit_r2

UNIT = Interval(-1.0, 1.0)
UNIFORM = NoiseSpec("uniform", 0.0, 1.0)

EPSILONS = (1e-4, 1e-6)
SEEDS = tuple(range(20))
SWEEP_EPS = tuple(10.0 ** -k for k in range(2, 11))
FAILURE_RATES = (0.0, 0.1, 0.3, 0.5)
ROBUST_SEEDS = tuple(range(100, 110))


def report(num: int, name: str, ok: bool, detail: str = "") -> None:
    line = f"ACCEPTANCE {num} ({name}): {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f"  [{detail}]"
    print(line)


@pytest.fixture(scope="module")
def epsilon_runs():
    runs = []
    for eps in EPSILONS:
        for seed in SEEDS:
            runs.append(run_prcpoa(ScenarioConfig(n=20, epsilon=eps, seed=seed)))
    return runs


@pytest.fixture(scope="module")
def sweep_runs():
    cfg = ScenarioConfig(n=20, seed=11)
    return [run_prcpoa(replace(cfg, epsilon=e)) for e in SWEEP_EPS]


@pytest.fixture(scope="module")
def robustness_runs():
    """Dissemination-level runs: one per rate for the regression, plus ten
    seeds per rate for the averaged rounds-to-delta comparison."""
    cfg = ScenarioConfig(n=20, epsilon=1e-6, seed=2)
    proxies = [adaptive_interpolate(f, UNIT, cfg.eps1) for f in cfg.objectives()]
    vectors = [p.coeffs for p in proxies]
    m = max(p.degree for p in proxies)
    stop = StopParams(u=cfg.u_rounds, delta=cfg.eps2 / (m + 1))
    regression, averaged = {}, {}
    for rate in FAILURE_RATES:
        seq = GraphSequence(20, "ring_plus_random", seed=cfg.seed, failure_rate=rate)
        regression[rate] = run_dissemination(
            vectors, seq, UNIFORM, cfg.k1, cfg.k2, stop, cfg.seed,
            record_transmissions=False,
        )
        rounds = []
        for seed in ROBUST_SEEDS:
            seq_s = GraphSequence(20, "ring_plus_random", seed=seed, failure_rate=rate)
            res = run_dissemination(
                vectors, seq_s, UNIFORM, cfg.k1, cfg.k2, stop, seed,
                record_transmissions=False,
            )
            first = next(r.round for r in res.trace
                         if r.round > cfg.k2 and r.max_ratio_error <= stop.delta)
            rounds.append(first)
        averaged[rate] = float(np.mean(rounds))
    return stop, regression, averaged


def test_criterion_1_epsilon_optimality(epsilon_runs):
    worst = {eps: 0.0 for eps in EPSILONS}
    for run in epsilon_runs:
        eps = run.config.epsilon
        worst[eps] = max(worst[eps], run.error)
    ok = all(worst[eps] <= eps for eps in EPSILONS)
    report(1, "epsilon-optimality over 20 seeds", ok,
           " ".join(f"eps={eps:.0e} worst={worst[eps]:.2e}" for eps in EPSILONS))
    assert ok


def test_criterion_2_stopping_sufficiency(epsilon_runs, sweep_runs, robustness_runs):
    stop, regression, _ = robustness_runs
    checks = [(run.stop_measured_error, run.delta) for run in epsilon_runs + sweep_runs]
    checks += [(res.final_error(), stop.delta) for res in regression.values()]
    violations = sum(1 for measured, delta in checks if measured > delta)
    ok = violations == 0
    report(2, "stopping-rule sufficiency", ok, f"{len(checks)} stops, {violations} violations")
    assert ok


def test_criterion_3_mass_conservation(epsilon_runs, sweep_runs, robustness_runs):
    _, regression, _ = robustness_runs
    worst_mass, worst_y = 0.0, 0.0
    traces = [run.trace for run in epsilon_runs + sweep_runs]
    traces += [res.trace for res in regression.values()]
    for trace in traces:
        k2 = 20
        for row in trace:
            worst_y = max(worst_y, row.y_residual)
            if row.round >= k2:
                worst_mass = max(worst_mass, row.mass_residual)
    ok = worst_mass <= 1e-9 and worst_y <= 1e-12
    report(3, "mass conservation", ok, f"mass={worst_mass:.2e} y={worst_y:.2e}")
    assert worst_mass <= 1e-9
    assert worst_y <= 1e-12


def test_criterion_4_geometric_consensus(robustness_runs):
    stop, regression, averaged = robustness_runs
    fits = {}
    ok = True
    for rate, res in regression.items():
        pts = [(row.round, math.log(row.max_ratio_error))
               for row in res.trace if row.round > 20 and row.max_ratio_error > 0]
        slope, _, r2 = linear_fit_r2([p[0] for p in pts], [p[1] for p in pts])
        fits[rate] = (slope, r2)
        ok &= slope < 0 and r2 >= 0.95
    means = [averaged[r] for r in FAILURE_RATES]
    monotone = all(b >= a for a, b in zip(means, means[1:]))
    ok &= monotone
    report(4, "geometric consensus under failures", ok,
           " ".join(f"rate={r}: R2={fits[r][1]:.3f}" for r in FAILURE_RATES)
           + f" mean-rounds={means}")
    for rate in FAILURE_RATES:
        assert fits[rate][0] < 0 and fits[rate][1] >= 0.95
    assert monotone


def test_criterion_5_privacy_bound_soundness():
    cfg = ScenarioConfig(n=20, k1=10, k2=20, seed=20260809)
    trials = 10_000
    alphas = (0.1, 0.5, 1.0)
    ps = (0.5, 0.8, 0.95)
    hits = {p: {a: np.zeros(21) for a in alphas} for p in ps}
    for trial in range(trials):
        res = short_privacy_run(cfg, UNIFORM, 20, trial)
        p0 = res.initial_vectors[0]
        for pi, p in enumerate(ps):
            rng = np.random.default_rng([cfg.seed, 555, trial, pi])
            est = empirical_adversary(res, 0, AdversaryModel(p, 1e-5),
                                      np.full(21, 1.0), rng)
            err = np.abs(est.p_hat - p0)
            no_info = est.component_cases == CASE_NO_INFO
            for a in alphas:
                hits[p][a] += np.where(no_info, est.component_hits, err <= a)

    ok = True
    worst_z = -math.inf
    for p in ps:
        for a in alphas:
            bound = beta_k(a, UNIFORM, AdversaryModel(p, 1e-5), cfg.k1, cfg.k2)
            sigma = math.sqrt(bound * (1 - bound) / trials)
            rate = hits[p][a] / trials
            worst_z = max(worst_z, float(np.max((rate - bound) / sigma)))
            ok &= bool(np.all(rate <= bound + 3 * sigma))

    spot = beta_k(0.5, UNIFORM, AdversaryModel(0.8, 1e-5), 10, 20)
    spot_oracle = (1.0 - 0.8 ** 11) * (0.8 * 0.5 + 1e-5) + 0.8 ** 11
    spot_ok = abs(spot - 0.4516) <= 1e-4 and abs(spot - spot_oracle) <= 1e-12
    ok &= spot_ok
    report(5, "privacy bound soundness", ok,
           f"worst z={worst_z:+.2f} (3 sigma allowed), spot beta_k={spot:.6f}")
    assert spot_ok
    assert ok


def test_criterion_6_family_ordering():
    adv = AdversaryModel(0.8, 1e-5)
    alphas = np.linspace(1.5 / 50, 1.5, 50)
    curves = {
        family: np.array([beta_k(a, NoiseSpec.variance_one(family), adv, 10, 20)
                          for a in alphas])
        for family in ("uniform", "normal", "laplace")
    }
    below_normal = bool(np.all(curves["uniform"] < curves["normal"]))
    below_laplace = bool(np.all(curves["uniform"] < curves["laplace"]))
    ok = below_normal and below_laplace
    report(6, "variance-matched family ordering", ok,
           f"min margins: vs normal {np.min(curves['normal'] - curves['uniform']):.2e}, "
           f"vs laplace {np.min(curves['laplace'] - curves['uniform']):.2e}")
    assert ok


def test_criterion_7_chebyshev_engine():
    fixtures_ok = True
    fixtures_ok &= bool(np.allclose(cheb_nodes(2, UNIT), [1.0, 0.0, -1.0], atol=1e-12))
    fixtures_ok &= bool(np.allclose(cheb_coeffs([1.0, 1.0, 1.0]), [1.0, 0.0, 0.0], atol=1e-12))
    fixtures_ok &= bool(np.allclose(cheb_coeffs([1.0, 0.0, -1.0]), [0.0, 1.0, 0.0], atol=1e-12))
    fixtures_ok &= bool(np.allclose(cheb_coeffs([1.0, 0.0, 1.0]), [0.5, 0.0, 0.5], atol=1e-12))
    ident = ChebProxy(UNIT, [0.0, 1.0, 0.0])
    square = ChebProxy(UNIT, [0.5, 0.0, 0.5])
    fixtures_ok &= abs(cheb_eval(ident, 0.5) - 0.5) <= 1e-12
    fixtures_ok &= abs(cheb_eval(square, 0.3) - 0.09) <= 1e-12

    eps1 = 1e-10 / 3.0
    grid = np.linspace(-1.0, 1.0, 100_001)
    degrees, dense_ok = [], True
    for fn in ScenarioConfig(n=20, seed=0).objectives():
        proxy = adaptive_interpolate(fn, UNIT, eps1)
        degrees.append(proxy.degree)
        dense_ok &= bool(np.max(np.abs(fn(grid) - cheb_eval(proxy, grid))) <= 10.0 * eps1)
    band_ok = all(16 <= d <= 64 for d in degrees)
    ok = fixtures_ok and band_ok and dense_ok
    report(7, "chebyshev engine", ok,
           f"degrees in [{min(degrees)}, {max(degrees)}], dense-grid within 10*eps1: {dense_ok}")
    assert fixtures_ok
    assert band_ok
    assert dense_ok


def test_criterion_8_complexity_shape(sweep_runs):
    xs = [math.log10(1.0 / run.config.epsilon) for run in sweep_runs]
    ys = [run.rounds_to_delta for run in sweep_runs]
    slope, _, r2 = linear_fit_r2(xs, ys)
    evals_ok = all(
        ev <= 2 * (2 * deg) + 1
        for run in sweep_runs
        for ev, deg in zip(run.evaluations, run.degrees)
    )
    ok = slope > 0 and r2 >= 0.9 and evals_ok
    report(8, "complexity shape", ok,
           f"rounds~log(1/eps): slope={slope:.2f} R2={r2:.3f}; eval budget held: {evals_ok}")
    assert slope > 0
    assert r2 >= 0.9
    assert evals_ok
