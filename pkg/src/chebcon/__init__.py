"""chebcon: consensus optimization of univariate nonconvex objectives via
Chebyshev proxies, with privacy-preserving push-sum dissemination over
time-varying directed graphs and analytic disclosure-probability bounds.
"""

from .cheb import (
    ChebProxy,
    Interval,
    ObjectiveFn,
    adaptive_interpolate,
    cheb_coeffs,
    cheb_eval,
    cheb_nodes,
    proxy_average,
)
from .consensus import (
    AgentState,
    DisseminationResult,
    NoiseSpec,
    PrivacySchedule,
    StopParams,
    insert_block,
    max_consensus_interval,
    push_sum_round,
    run_dissemination,
    stopping_round,
    subtract_noise,
)
from .errors import (
    DomainError,
    InfeasibleConstraintsError,
    InvalidIntervalError,
    NonConvergenceError,
    ProtocolOrderError,
)
from .netsim import (
    GraphSequence,
    RoundGraph,
    next_graph,
    push_weights,
    union_strongly_connected,
)
from .polyopt import OptResult, cheb_derivative, cheb_roots, golden_section, minimize_proxy
from .privacy import (
    AdversaryModel,
    PrivacyReport,
    beta_k,
    beta_total,
    empirical_adversary,
    h_i,
    max_window_mass,
    privacy_report,
)
from .runner import (
    RunReport,
    ScenarioConfig,
    brute_force_optimum,
    complexity_report,
    run_prcpoa,
    scenario_convergence,
    scenario_privacy,
    scenario_robustness,
)

__version__ = "0.1.0"

__all__ = [
    "AdversaryModel",
    "AgentState",
    "ChebProxy",
    "DisseminationResult",
    "DomainError",
    "GraphSequence",
    "InfeasibleConstraintsError",
    "Interval",
    "InvalidIntervalError",
    "NoiseSpec",
    "NonConvergenceError",
    "ObjectiveFn",
    "OptResult",
    "PrivacyReport",
    "PrivacySchedule",
    "ProtocolOrderError",
    "RoundGraph",
    "RunReport",
    "ScenarioConfig",
    "StopParams",
    "adaptive_interpolate",
    "beta_k",
    "beta_total",
    "brute_force_optimum",
    "cheb_coeffs",
    "cheb_derivative",
    "cheb_eval",
    "cheb_nodes",
    "cheb_roots",
    "complexity_report",
    "empirical_adversary",
    "golden_section",
    "h_i",
    "insert_block",
    "max_consensus_interval",
    "max_window_mass",
    "minimize_proxy",
    "next_graph",
    "privacy_report",
    "proxy_average",
    "push_sum_round",
    "push_weights",
    "run_dissemination",
    "run_prcpoa",
    "scenario_convergence",
    "scenario_privacy",
    "scenario_robustness",
    "stopping_round",
    "subtract_noise",
    "union_strongly_connected",
]
