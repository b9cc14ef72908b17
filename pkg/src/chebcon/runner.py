"""End-to-end orchestration, brute-force oracle, and experiment scenarios.

A run is: max/min consensus on the constraint intervals, adaptive
interpolation of each local objective to eps/3, privacy-preserving
dissemination of the coefficient vectors to eps/3 consensus accuracy, and
local minimization of the recovered average proxy to an eps/3 value gap.
Every report carries the centralized brute-force optimum so the end-to-end
error is measured, never assumed.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .cheb import ChebProxy, Interval, ObjectiveFn, adaptive_interpolate, proxy_average
from .consensus import (
    DisseminationResult,
    NoiseSpec,
    StopParams,
    max_consensus_interval,
    run_dissemination,
)
from .errors import NonConvergenceError
from .netsim import GraphSequence
from .polyopt import golden_section, minimize_proxy
from .privacy import AdversaryModel, beta_k, empirical_adversary

# RNG stream salts (objective draws, dissemination, adversary trials).
_OBJ_STREAM = 0x6F626A73
_RUN_STREAM = 0x72756E73
_ADV_STREAM = 0x61647673


def sigmoid_log_objective(a: float, b: float):
    """The benchmark nonconvex objective a/(1+e^-x) + b*log(1+x^2)."""

    def fn(x):
        x = np.asarray(x, dtype=float)
        return a / (1.0 + np.exp(-x)) + b * np.log1p(x * x)

    return fn


def draw_objective_params(n: int, seed: int):
    """Seeded per-agent coefficients: a_i ~ N(10, 2), b_i ~ N(5, 1)."""
    rng = np.random.default_rng([seed, _OBJ_STREAM])
    a = 10.0 + math.sqrt(2.0) * rng.standard_normal(n)
    b = 5.0 + rng.standard_normal(n)
    return a, b


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a run needs; eps1 = eps2 = eps3 = epsilon / 3."""

    n: int = 20
    epsilon: float = 1e-6
    k1: int = 10
    k2: int = 20
    seed: int = 0
    graph_kind: str = "ring_plus_random"
    failure_rate: float = 0.0
    b_window: int = 1
    noise: NoiseSpec = field(default_factory=lambda: NoiseSpec("uniform", 0.0, 1.0))
    adversary: AdversaryModel = field(default_factory=lambda: AdversaryModel(0.8, 1e-5))
    interval_lo: float = -1.0
    interval_hi: float = 1.0
    intervals: tuple | None = None  # optional per-agent (lo, hi) pairs
    a_values: tuple | None = None   # explicit objective coefficients
    b_values: tuple | None = None
    alpha_condition: float = 0.01
    oracle_grid: int = 10 ** 6
    max_rounds: int = 100_000

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.n < 1:
            raise ValueError("need at least one agent")
        if not self.k2 > self.k1 >= 1:
            raise ValueError(f"need K2 > K1 >= 1, got K1={self.k1}, K2={self.k2}")

    @property
    def eps1(self) -> float:
        return self.epsilon / 3.0

    eps2 = eps1
    eps3 = eps1

    @property
    def u_rounds(self) -> int:
        return max(1, (self.n - 1) * self.b_window)

    def graph_sequence(self) -> GraphSequence:
        return GraphSequence(
            n=self.n,
            kind=self.graph_kind,
            seed=self.seed,
            failure_rate=self.failure_rate,
            b_window=self.b_window,
        )

    def local_intervals(self) -> list:
        if self.intervals is not None:
            return [Interval(float(lo), float(hi)) for lo, hi in self.intervals]
        return [Interval(self.interval_lo, self.interval_hi)] * self.n

    def objectives(self) -> list:
        a_vals, b_vals = self.a_values, self.b_values
        if a_vals is None or b_vals is None:
            a, b = draw_objective_params(self.n, self.seed)
            a_vals = a if a_vals is None else np.asarray(a_vals)
            b_vals = b if b_vals is None else np.asarray(b_vals)
        if len(a_vals) != self.n or len(b_vals) != self.n:
            raise ValueError("objective coefficient lists must have one entry per agent")
        return [sigmoid_log_objective(float(ai), float(bi)) for ai, bi in zip(a_vals, b_vals)]

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        data = dict(raw)
        if data.pop("paper_defaults", False):
            base = {
                "n": 20,
                "k1": 10,
                "k2": 20,
                "noise": {"family": "uniform", "location": 0.0, "scale": 1.0},
                "adversary": {"p": 0.8, "gamma": 1e-5},
                "interval_lo": -1.0,
                "interval_hi": 1.0,
            }
            base.update(data)
            data = base
        if isinstance(data.get("noise"), dict):
            data["noise"] = NoiseSpec(**data["noise"])
        if isinstance(data.get("adversary"), dict):
            adv = dict(data["adversary"])
            if "prior" in adv and adv["prior"] is not None:
                adv["prior"] = tuple((int(v), float(w)) for v, w in adv["prior"])
            data["adversary"] = AdversaryModel(**adv)
        for key in ("intervals", "a_values", "b_values"):
            if data.get(key) is not None:
                data[key] = tuple(tuple(v) if isinstance(v, (list, tuple)) else v for v in data[key])
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        path = Path(path)
        text = path.read_bytes()
        if path.suffix.lower() == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:
                import tomli as tomllib
            raw = tomllib.loads(text.decode("utf-8"))
        else:
            raw = json.loads(text.decode("utf-8"))
        return cls.from_dict(raw)


@dataclass
class RunReport:
    """Outcome of one full run, including the oracle comparison."""

    config: ScenarioConfig
    interval: Interval
    degrees: list
    m: int
    f_e_star: np.ndarray
    x_p_star: np.ndarray
    stop_round: int
    rounds_to_delta: int | None
    rounds_interval: int
    delta: float
    stop_measured_error: float
    evaluations: list
    oracle_f: float
    oracle_x: float
    errors: np.ndarray
    error: float
    trace: list
    proxies: list
    p_bar_proxy: ChebProxy
    dissemination: DisseminationResult


def brute_force_optimum(f, interval: Interval, grid_points: int = 10 ** 6):
    """Centralized ground truth: uniform grid plus golden-section refinement.

    ``f`` must accept numpy arrays.  Accuracy is limited by the refinement
    bracket (1e-12 of the cell), far below any tolerance under test.
    """
    if grid_points < 10 ** 4:
        raise ValueError(f"need at least 1e4 grid points, got {grid_points}")
    if not isinstance(interval, Interval):
        interval = Interval(*interval)
    xs = np.linspace(interval.lo, interval.hi, grid_points)
    vals = np.asarray(f(xs), dtype=float)
    k = int(np.argmin(vals))
    lo = xs[max(0, k - 1)]
    hi = xs[min(grid_points - 1, k + 1)]
    x_star, f_star = golden_section(lambda x: float(f(x)), lo, hi, tol=1e-12)
    if vals[k] < f_star:
        x_star, f_star = float(xs[k]), float(vals[k])
    return f_star, x_star


def average_objective(objectives: Sequence) -> callable:
    def avg(x):
        x = np.asarray(x, dtype=float)
        acc = np.zeros_like(x)
        for fn in objectives:
            acc = acc + fn(x)
        return acc / len(objectives)

    return avg


def run_prcpoa(cfg: ScenarioConfig) -> RunReport:
    """Execute the full algorithm for one scenario and audit it end to end."""
    seq = cfg.graph_sequence()
    u = cfg.u_rounds

    agreed = max_consensus_interval(cfg.local_intervals(), seq, u if cfg.n > 1 else 0)
    interval = agreed[0]

    objectives = cfg.objectives()
    counters = [ObjectiveFn(fn, interval) for fn in objectives]
    proxies = [adaptive_interpolate(obj, interval, cfg.eps1) for obj in counters]
    degrees = [p.degree for p in proxies]
    m = max(degrees)
    delta = cfg.eps2 / (m + 1)

    stop = StopParams(u=u, delta=delta)
    result = run_dissemination(
        [p.coeffs for p in proxies],
        seq,
        cfg.noise,
        cfg.k1,
        cfg.k2,
        stop,
        cfg.seed,
        round_offset=u,
        max_rounds=cfg.max_rounds,
        alpha_condition=cfg.alpha_condition,
    )

    opts = [minimize_proxy(ChebProxy(interval, pk), cfg.eps3) for pk in result.p_final]
    f_e = np.array([o.f_e_star for o in opts])
    x_p = np.array([o.x_p_star for o in opts])

    f_star, x_star = brute_force_optimum(average_objective(objectives), interval, cfg.oracle_grid)
    errors = np.abs(f_e - f_star)
    rounds_to_delta = None
    for row in result.trace:
        if row.round > cfg.k2 and row.max_ratio_error <= delta:
            rounds_to_delta = row.round
            break
    return RunReport(
        config=cfg,
        interval=interval,
        degrees=degrees,
        m=m,
        f_e_star=f_e,
        x_p_star=x_p,
        stop_round=result.stop_round,
        rounds_to_delta=rounds_to_delta,
        rounds_interval=u,
        delta=delta,
        stop_measured_error=result.final_error(),
        evaluations=[c.evaluations for c in counters],
        oracle_f=f_star,
        oracle_x=x_star,
        errors=errors,
        error=float(np.max(errors)),
        trace=result.trace,
        proxies=proxies,
        p_bar_proxy=proxy_average(proxies),
        dissemination=result,
    )


def scenario_convergence(cfg: ScenarioConfig, epsilons: Sequence[float], threads: int = 1):
    """One run per epsilon; rows of (epsilon, stopping round, achieved error)."""
    eps = list(epsilons)
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilon list must be strictly decreasing")
    reports = run_many([replace(cfg, epsilon=float(e)) for e in eps], threads)
    return [(float(e), rep.stop_round, rep.error) for e, rep in zip(eps, reports)]


def scenario_privacy(
    cfg: ScenarioConfig,
    alpha_grid: Sequence[float],
    families: Sequence[str],
    trials: int = 0,
    target: int = 0,
    m_fixed: int = 20,
    noise_specs: dict | None = None,
):
    """Analytic beta_k curves per family, plus empirical hit rates if asked.

    Families are compared variance-matched (zero mean, unit variance) unless
    ``noise_specs`` supplies explicit specs.  Empirical rates replay
    ``trials`` short dissemination runs (through round K2+1) of random
    coefficient vectors and report, per alpha, the adversary's average
    per-component hit rate across trials and slots.
    """
    if not families:
        raise ValueError("need at least one noise family")
    alphas = [float(a) for a in alpha_grid]
    rows = []
    for family in families:
        if noise_specs and family in noise_specs:
            noise = noise_specs[family]
        else:
            noise = NoiseSpec.variance_one(family)
        analytic = [beta_k(a, noise, cfg.adversary, cfg.k1, cfg.k2) for a in alphas]
        empirical = [None] * len(alphas)
        if trials > 0:
            hit_sum = np.zeros(len(alphas))
            hit_cnt = np.zeros(len(alphas))
            for trial in range(trials):
                res = short_privacy_run(cfg, noise, m_fixed, trial)
                rng = np.random.default_rng([cfg.seed, _ADV_STREAM, trial])
                draws = rng.random(cfg.k2 + 1)
                u_slots = rng.random(m_fixed + 1)
                for ai, a in enumerate(alphas):
                    est = _replay_adversary(res, target, cfg.adversary, a, draws, u_slots)
                    hit_sum[ai] += float(np.sum(est))
                    hit_cnt[ai] += est.size
            empirical = list(hit_sum / hit_cnt)
        for a, b_ana, b_emp in zip(alphas, analytic, empirical):
            rows.append((family, a, b_ana, b_emp, trials))
    return rows


def short_privacy_run(cfg: ScenarioConfig, noise: NoiseSpec, m_fixed: int, trial: int) -> DisseminationResult:
    """One recorded dissemination of random vectors through round K2+1, the
    horizon adversary replays need.

    The graph sequence is fixed across trials: the disclosure bound
    quantifies over noise, schedules, and knowledge draws, and the adversary
    is handed the weights either way.
    """
    rng = np.random.default_rng([cfg.seed, _RUN_STREAM, trial])
    vectors = [rng.uniform(-1.0, 1.0, m_fixed + 1) for _ in range(cfg.n)]
    return run_dissemination(
        vectors,
        cfg.graph_sequence(),
        noise,
        cfg.k1,
        cfg.k2,
        None,
        seed=cfg.seed + 104729 * trial,
        run_exact_rounds=cfg.k2 + 1,
        alpha_condition=cfg.alpha_condition,
        record_trace=False,
    )


def _replay_adversary(res, target, adv, alpha_k, draws, u_slots) -> np.ndarray:
    """Per-component hits of the literal adversary with shared randomness.

    ``draws`` are the per-round uniforms deciding in-knowledge (so the same
    trial can be scored at several p or alpha values), ``u_slots`` the
    uniforms behind the no-information guesses.
    """

    class _FixedRng:
        def __init__(self, draws, u_slots):
            self._q = [np.asarray(draws, dtype=float), np.asarray(u_slots, dtype=float)]

        def random(self, size=None):
            return self._q.pop(0)

    est = empirical_adversary(
        res, target, adv, np.full(len(res.initial_vectors[target]), alpha_k), _FixedRng(draws, u_slots)
    )
    return est.component_hits


def scenario_robustness(cfg: ScenarioConfig, rates: Sequence[float], threads: int = 1):
    """Per failure rate, the first round at which the dissemination error
    drops below delta; non-convergent runs become failure rows.

    The proxies are built once (link failures only perturb the iterations,
    not the interpolation stage) and each rate reruns the dissemination.
    """
    for rate in rates:
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"failure rate must lie in [0, 1), got {rate}")
    interval = Interval(cfg.interval_lo, cfg.interval_hi)
    proxies = [adaptive_interpolate(fn, interval, cfg.eps1) for fn in cfg.objectives()]
    m = max(p.degree for p in proxies)
    stop = StopParams(u=cfg.u_rounds, delta=cfg.eps2 / (m + 1))
    vectors = [p.coeffs for p in proxies]

    def one(rate: float):
        seq = replace(cfg.graph_sequence(), failure_rate=float(rate))
        try:
            result = run_dissemination(
                vectors, seq, cfg.noise, cfg.k1, cfg.k2, stop, cfg.seed,
                max_rounds=cfg.max_rounds, alpha_condition=cfg.alpha_condition,
                record_transmissions=False,
            )
        except NonConvergenceError:
            return (float(rate), None, None, False)
        reached = None
        for row in result.trace:
            if row.round > cfg.k2 and row.max_ratio_error <= stop.delta:
                reached = row.round
                break
        return (float(rate), reached, result.stop_round, True)

    if threads <= 1 or len(list(rates)) <= 1:
        return [one(r) for r in rates]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, rates))


def complexity_report(reports: Sequence[RunReport]) -> dict:
    """Counter summaries: evaluation constant and rounds-vs-log(m/eps) fit."""
    reports = list(reports)
    if len(reports) < 2:
        raise ValueError("need >= 2 reports at different epsilon")
    eval_ratio = max(
        ev / deg for rep in reports for ev, deg in zip(rep.evaluations, rep.degrees)
    )
    xs = np.array([math.log(rep.m / rep.config.epsilon) for rep in reports])
    # Rounds needed to reach the consensus tolerance; the stopping round
    # itself is quantized to multiples of U by the check cadence.
    ys = np.array(
        [rep.rounds_to_delta if rep.rounds_to_delta is not None else rep.stop_round for rep in reports],
        dtype=float,
    )
    slope, intercept = np.polyfit(xs, ys, 1)
    fitted = slope * xs + intercept
    ss_res = float(np.sum((ys - fitted) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return {
        "eval_constant": float(eval_ratio),
        "rounds_slope": float(slope),
        "rounds_intercept": float(intercept),
        "rounds_r2": float(r2),
        "max_evaluations": max(max(rep.evaluations) for rep in reports),
    }


def run_many(configs: Sequence[ScenarioConfig], threads: int = 1):
    """Run independent scenarios, optionally in parallel; order preserved."""
    configs = list(configs)
    if threads <= 1 or len(configs) <= 1:
        return [run_prcpoa(c) for c in configs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run_prcpoa, configs))


def linear_fit_r2(xs, ys):
    """Least-squares slope and R^2 of y against x."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    slope, intercept = np.polyfit(xs, ys, 1)
    fitted = slope * xs + intercept
    ss_res = float(np.sum((ys - fitted) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(r2)


def write_report_csv(path, report: RunReport) -> None:
    """Per-agent rows plus a summary row of the oracle comparison."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("agent,degree,evaluations,f_e_star,x_p_star,abs_error\n")
        for i in range(report.config.n):
            fh.write(
                f"{i},{report.degrees[i]},{report.evaluations[i]},"
                f"{report.f_e_star[i]!r},{report.x_p_star[i]!r},{report.errors[i]!r}\n"
            )
        fh.write(
            f"summary,{report.m},{sum(report.evaluations)},"
            f"{report.oracle_f!r},{report.oracle_x!r},{report.error!r}\n"
        )


def write_proxies_csv(path, report: RunReport) -> None:
    """Serialized proxies: interval endpoints plus the coefficient list."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("agent,lo,hi,coefficients\n")
        for i, proxy in enumerate(report.proxies):
            coeffs = " ".join(repr(float(c)) for c in proxy.coeffs)
            fh.write(f"{i},{proxy.interval.lo!r},{proxy.interval.hi!r},{coeffs}\n")


def write_convergence_csv(path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epsilon,K,error\n")
        for eps, k, err in rows:
            fh.write(f"{eps!r},{k},{err!r}\n")


def write_robustness_csv(path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("failure_rate,rounds_to_delta,stop_round,converged\n")
        for rate, reached, stop_round, ok in rows:
            fh.write(f"{rate!r},{'' if reached is None else reached},"
                     f"{'' if stop_round is None else stop_round},{int(ok)}\n")
