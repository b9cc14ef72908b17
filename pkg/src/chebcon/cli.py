"""Command-line entry point wrapping the runner scenarios.

Subcommands: run, convergence, privacy, robustness, oracle, selftest.  All
file output is CSV (UTF-8, headers, '.' decimal separator); every emitted
file is listed in a manifest.txt together with the generating seed.

Exit codes: 0 success, 1 scenario failure (e.g. non-convergence, recorded
rather than crashed), 2 configuration or usage error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import cheb, consensus, netsim, polyopt, privacy, runner
from .errors import NonConvergenceError

EXIT_OK = 0
EXIT_SCENARIO = 1
EXIT_CONFIG = 2


def _float_list(text: str):
    return [float(tok) for tok in text.split(",") if tok.strip()]


def build_parser() -> argparse.ArgumentParser:
    verb = argparse.ArgumentParser(add_help=False)
    verb.add_argument("-v", "--verbose", action="count", default=0)
    parser = argparse.ArgumentParser(
        prog="chebcon",
        description="Chebyshev-proxy consensus optimization scenarios",
        parents=[verb],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        p.add_argument("--config", required=needs_config, help="JSON or TOML scenario config")
        p.add_argument("--out", default="results", help="output directory (created if absent)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")

    p_run = sub.add_parser("run", help="one full end-to-end run", parents=[verb])
    common(p_run)

    p_conv = sub.add_parser("convergence", help="stopping round and error across epsilons", parents=[verb])
    common(p_conv)
    p_conv.add_argument("--epsilons", type=_float_list, default=[10.0 ** -k for k in range(2, 11)])

    p_priv = sub.add_parser("privacy", help="disclosure-bound curves per noise family", parents=[verb])
    common(p_priv)
    p_priv.add_argument("--families", default="uniform,normal,laplace")
    p_priv.add_argument("--alphas", type=_float_list, default=[0.03 * k for k in range(1, 51)])
    p_priv.add_argument("--trials", type=int, default=0, help="Monte-Carlo trials per point (0 = analytic only)")

    p_rob = sub.add_parser("robustness", help="rounds to delta under link failures", parents=[verb])
    common(p_rob)
    p_rob.add_argument("--rates", type=_float_list, default=[0.0, 0.1, 0.3, 0.5])

    p_oracle = sub.add_parser("oracle", help="print the brute-force optimum only", parents=[verb])
    common(p_oracle)

    sub.add_parser("selftest", help="quick fixture checks, one line per module", parents=[verb])
    return parser


def parse_args(argv):
    """Validated namespace, or SystemExit(2) with usage text."""
    return build_parser().parse_args(argv)


def _load_config(args) -> runner.ScenarioConfig:
    path = Path(args.config)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    cfg = runner.ScenarioConfig.from_file(path)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _manifest(out_dir: Path, seed: int, files) -> None:
    with open(out_dir / "manifest.txt", "w", encoding="utf-8") as fh:
        for name in files:
            fh.write(f"{name}\tseed={seed}\n")


def _threads() -> int:
    raw = os.environ.get("CHEBCON_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def cmd_run(args) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        report = runner.run_prcpoa(cfg)
    except NonConvergenceError as exc:
        print(f"scenario failed: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    runner.write_report_csv(out / "report.csv", report)
    runner.write_proxies_csv(out / "proxies.csv", report)
    consensus.write_trace_csv(out / "trace.csv", report.trace)
    _manifest(out, cfg.seed, ["report.csv", "proxies.csv", "trace.csv"])
    if args.verbose:
        print(f"agents={cfg.n} m={report.m} K={report.stop_round} "
              f"error={report.error:.3e} oracle_f={report.oracle_f:.12f}")
    print(f"wrote {out / 'report.csv'}")
    return EXIT_OK


def cmd_convergence(args) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    eps = sorted(set(args.epsilons), reverse=True)
    try:
        rows = runner.scenario_convergence(cfg, eps, threads=_threads())
    except NonConvergenceError as exc:
        print(f"scenario failed: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    runner.write_convergence_csv(out / "convergence.csv", rows)
    _manifest(out, cfg.seed, ["convergence.csv"])
    if args.verbose:
        for e, k, err in rows:
            print(f"epsilon={e:.1e} K={k} error={err:.3e}")
    print(f"wrote {out / 'convergence.csv'}")
    return EXIT_OK


def cmd_privacy(args) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    families = [f.strip() for f in args.families.split(",") if f.strip()]
    rows = runner.scenario_privacy(cfg, args.alphas, families, trials=args.trials)
    privacy.write_privacy_csv(out / "privacy.csv", rows)
    _manifest(out, cfg.seed, ["privacy.csv"])
    print(f"wrote {out / 'privacy.csv'}")
    return EXIT_OK


def cmd_robustness(args) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = runner.scenario_robustness(cfg, args.rates, threads=_threads())
    runner.write_robustness_csv(out / "robustness.csv", rows)
    _manifest(out, cfg.seed, ["robustness.csv"])
    if not all(ok for *_, ok in rows):
        print("one or more rates failed to converge (recorded in CSV)", file=sys.stderr)
        return EXIT_SCENARIO
    print(f"wrote {out / 'robustness.csv'}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    cfg = _load_config(args)
    interval = cheb.Interval(cfg.interval_lo, cfg.interval_hi)
    f_star, x_star = runner.brute_force_optimum(
        runner.average_objective(cfg.objectives()), interval, cfg.oracle_grid
    )
    print(f"f_star={f_star!r} x_star={x_star!r}")
    return EXIT_OK


def _selftest_cheb() -> bool:
    iv = cheb.Interval(-1.0, 1.0)
    ok = np.allclose(cheb.cheb_nodes(2, iv), [1.0, 0.0, -1.0], atol=1e-12)
    ok &= np.allclose(cheb.cheb_coeffs([1.0, 1.0, 1.0]), [1.0, 0.0, 0.0], atol=1e-12)
    proxy = cheb.ChebProxy(iv, [0.0, 1.0, 0.0])
    ok &= abs(cheb.cheb_eval(proxy, 0.5) - 0.5) < 1e-12
    two = cheb.proxy_average([cheb.ChebProxy(iv, [1.0, 0.0]), cheb.ChebProxy(iv, [0.0, 0.0, 3.0])])
    ok &= np.allclose(two.coeffs, [0.5, 0.0, 1.5])
    return bool(ok)


def _selftest_netsim() -> bool:
    g = netsim.GraphSequence(3, "static_ring").graph(0)
    ok = g.edges == frozenset({(0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (2, 0)})
    w = netsim.push_weights(g)
    ok &= np.allclose(w.sum(axis=0), 1.0)
    ok &= netsim.union_strongly_connected([g])
    seq = netsim.GraphSequence(5, "ring_plus_random", seed=11)
    ok &= seq.graph(3).edges == seq.graph(3).edges
    return bool(ok)


def _selftest_consensus() -> bool:
    seq = netsim.GraphSequence(3, "static_ring")
    res = consensus.run_dissemination(
        [np.array([1.0]), np.array([0.0]), np.array([0.0])],
        seq,
        consensus.NoiseSpec("uniform", 0.0, 0.0),
        1,
        2,
        consensus.StopParams(u=2, delta=1e-10),
        seed=3,
    )
    return bool(abs(res.p_final[0][0] - 1.0 / 3.0) <= 1e-9)


def _selftest_privacy() -> bool:
    adv = privacy.AdversaryModel(0.8, 1e-5)
    noise = consensus.NoiseSpec("uniform", 0.0, 1.0)
    val = privacy.beta_k(0.5, noise, adv, 10, 20)
    ok = abs(val - 0.4516) <= 1e-4
    ok &= privacy.h_i(0.0, noise, adv) == adv.gamma
    return bool(ok)


def _selftest_polyopt() -> bool:
    iv = cheb.Interval(-1.0, 1.0)
    sq = cheb.ChebProxy(iv, [0.5, 0.0, 0.5])
    d = polyopt.cheb_derivative(sq)
    ok = np.allclose(d.coeffs, [0.0, 2.0], atol=1e-12)
    ok &= np.allclose(polyopt.cheb_roots(cheb.ChebProxy(iv, [0.0, 0.0, 1.0])),
                      [-math.sqrt(2) / 2, math.sqrt(2) / 2], atol=1e-10)
    res = polyopt.minimize_proxy(sq, 1e-10)
    ok &= abs(res.f_e_star) < 1e-12 and abs(res.x_p_star) < 1e-6
    return bool(ok)


def _selftest_runner() -> bool:
    iv = cheb.Interval(-1.0, 1.0)
    f_star, x_star = runner.brute_force_optimum(lambda x: np.asarray(x) ** 2, iv, 10 ** 4)
    return abs(f_star) < 1e-9 and abs(x_star) < 1e-6


def cmd_selftest(_args) -> int:
    checks = {
        "cheb": _selftest_cheb,
        "netsim": _selftest_netsim,
        "consensus": _selftest_consensus,
        "privacy": _selftest_privacy,
        "polyopt": _selftest_polyopt,
        "runner": _selftest_runner,
    }
    failed = False
    for name, fn in checks.items():
        try:
            ok = fn()
        except Exception as exc:  # a crash is a failure, not an abort
            ok = False
            print(f"{name}: FAIL ({exc})")
            failed = True
            continue
        print(f"{name}: {'PASS' if ok else 'FAIL'}")
        failed |= not ok
    return EXIT_SCENARIO if failed else EXIT_OK


def execute(args) -> int:
    handlers = {
        "run": cmd_run,
        "convergence": cmd_convergence,
        "privacy": cmd_privacy,
        "robustness": cmd_robustness,
        "oracle": cmd_oracle,
        "selftest": cmd_selftest,
    }
    try:
        return handlers[args.command](args)
    except FileNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, KeyError, TypeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main(argv=None) -> int:
    args = parse_args(sys.argv[1:] if argv is None else argv)
    if args.verbose >= 2:
        print(f"CHEBCON_THREADS={_threads()}", file=sys.stderr)
    return execute(args)


if __name__ == "__main__":
    sys.exit(main())
