"""Disclosure-probability bounds and an honest-but-curious adversary.

The analytic side evaluates, per vector component, the probability that any
estimator lands within alpha_k of the true value given the adversary's
information set, and the product bound for the whole vector.  The empirical
side replays recorded transmissions: with full in-knowledge at the right
rounds the adversary reconstructs the inserted perturbed value and every
subtracted noise fraction exactly; with partial knowledge it falls back to
the window-center estimate or to no-information guessing at the gamma
accuracy level.  No stronger inference (e.g. Bayesian filtering across
rounds) is attempted; the analytic bound covers exactly this adversary
class.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .consensus import DisseminationResult, NoiseSpec

# Reconstruction case codes per component.
CASE_NO_INFO = 0
CASE_WINDOW = 1
CASE_EXACT = 2


@dataclass(frozen=True)
class AdversaryModel:
    """Adversary abilities: in-knowledge probability, no-info accuracy bound,
    and a prior over the hidden vector dimension.

    ``p`` is nominally in (0, 1); the closed endpoints are admitted so the
    omniscient and deaf adversaries can be exercised directly.  ``prior`` is
    an optional tuple of (degree, probability) pairs; by default the degree
    is uniform over the powers of two the doubling construction can emit.
    """

    p: float
    gamma: float = 1e-5
    prior: tuple | None = None

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.prior is not None:
            total = sum(w for _, w in self.prior)
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"prior weights must sum to 1, got {total}")

    def prior_cdf(self, j: float, m: int) -> float:
        """Pr{m_i <= j} under the configured (or default doubling) prior."""
        support = self.prior if self.prior is not None else default_degree_prior(m)
        return float(sum(w for v, w in support if v <= j))


def default_degree_prior(m: int) -> tuple:
    """Uniform prior over the doubling degrees {2, 4, 8, ..., m}."""
    degrees = []
    d = 2
    while d <= m:
        degrees.append(d)
        d *= 2
    if not degrees:
        degrees = [m]
    w = 1.0 / len(degrees)
    return tuple((d, w) for d in degrees)


@dataclass(frozen=True)
class PrivacyReport:
    """Per-component (alpha_k, beta_k) pairs and the aggregate (alpha, beta)."""

    family: str
    alpha_split: tuple
    beta_split: tuple
    alpha: float
    beta: float


def max_window_mass(noise: NoiseSpec, alpha: float) -> float:
    """Largest probability mass of the noise in any window of width 2*alpha.

    Closed forms per family (location plays no role; the window slides):
    uniform(-w, w): min(2a, 2w) / (2w); normal(0, s): erf(a / (s sqrt 2));
    laplace(0, b): 1 - exp(-a / b).
    """
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if noise.scale <= 0:
        raise ValueError("analytic bounds need a nondegenerate noise scale")
    if alpha == 0.0:
        return 0.0
    if noise.family == "uniform":
        return min(alpha / noise.scale, 1.0)
    if noise.family == "normal":
        return math.erf(alpha / (noise.scale * math.sqrt(2.0)))
    return 1.0 - math.exp(-alpha / noise.scale)


def h_i(alpha_k: float, noise: NoiseSpec, adv: AdversaryModel) -> float:
    """Disclosure probability of one component at the insertion round:
    p times the best noise-window mass, plus the no-information level
    (capped at 1, where the bound is vacuous anyway)."""
    mass = max_window_mass(noise, alpha_k)
    if mass > 0.0 and adv.gamma > 0.01 * adv.p * mass:
        warnings.warn(
            "gamma is not small against the in-knowledge window mass; "
            "the no-information bound may dominate the component bound",
            stacklevel=2,
        )
    return min(adv.p * mass + adv.gamma, 1.0)


def beta_k(alpha_k: float, noise: NoiseSpec, adv: AdversaryModel, k1: int, k2: int) -> float:
    """Component disclosure bound: the extreme full-knowledge case with
    probability p^(K2-K1+1), else the insertion-round bound h_i."""
    if k2 <= k1:
        raise ValueError(f"need K2 > K1, got K1={k1}, K2={k2}")
    extreme = adv.p ** (k2 - k1 + 1)
    return (1.0 - extreme) * h_i(alpha_k, noise, adv) + extreme


def beta_total(
    alpha: float,
    alpha_split: Sequence[float],
    m_i: int,
    m: int,
    noise: NoiseSpec,
    adv: AdversaryModel,
    k1: int,
    k2: int,
) -> float:
    """Vector disclosure bound: product of the component bounds times the
    probabilities of correctly identifying the null components."""
    split = np.asarray(alpha_split, dtype=float)
    if len(split) != m_i + 1:
        raise ValueError(f"need {m_i + 1} component accuracies, got {len(split)}")
    if np.any(split < 0) or np.any(split > alpha):
        raise ValueError("component accuracies must lie in [0, alpha]")
    if abs(float(np.sum(split)) - alpha) > 1e-9 * max(1.0, abs(alpha)):
        raise ValueError(f"component accuracies must sum to alpha={alpha}, got {float(np.sum(split))}")
    if m_i > m:
        raise ValueError(f"m_i={m_i} exceeds m={m}")
    value = 1.0
    for a_k in split:
        value *= beta_k(float(a_k), noise, adv, k1, k2)
    for k in range(m_i + 2, m + 2):
        value *= adv.prior_cdf(k - 2, m)
    return value


def privacy_report(
    alpha_split: Sequence[float],
    m_i: int,
    m: int,
    noise: NoiseSpec,
    adv: AdversaryModel,
    k1: int,
    k2: int,
) -> PrivacyReport:
    split = tuple(float(a) for a in alpha_split)
    alpha = float(sum(split))
    betas = tuple(beta_k(a, noise, adv, k1, k2) for a in split)
    total = beta_total(alpha, split, m_i, m, noise, adv, k1, k2)
    return PrivacyReport(noise.family, split, betas, alpha, total)


@dataclass
class AdversaryEstimate:
    """Outcome of one adversary replay against one target agent."""

    p_hat: np.ndarray
    component_hits: np.ndarray
    l1_hit: bool
    component_cases: np.ndarray
    know_rounds: np.ndarray
    extreme: np.ndarray


def _padded_transmissions(result: DisseminationResult, width: int) -> np.ndarray:
    rounds = len(result.transmissions)
    n = len(result.initial_vectors)
    out = np.zeros((rounds + 1, n, width))  # index by 1-based round
    for t, per_agent in enumerate(result.transmissions, start=1):
        for i, vec in enumerate(per_agent):
            out[t, i, : len(vec)] = vec
    return out


def empirical_adversary(
    result: DisseminationResult,
    target: int,
    adv: AdversaryModel,
    alpha_split: Sequence[float],
    rng: np.random.Generator,
) -> AdversaryEstimate:
    """Replay one recorded run as an honest-but-curious adversary.

    The adversary always sees the target's transmissions; each round's full
    in-neighbor knowledge is available independently with probability
    adv.p (one seeded draw per round, including the round before the first
    insertion).  Per component, the estimate is: exact reconstruction when
    the insertion round's predecessor and all of (K1, K2] were observed;
    the perturbed value minus the noise-window center when only the
    predecessor was observed; otherwise a no-information guess whose hit
    probability is the gamma accuracy level.
    """
    if result.transmissions is None or result.graphs is None:
        raise ValueError("trace lacks transmission records; rerun with record_transmissions=True")
    k1, k2 = result.k1, result.k2
    if len(result.transmissions) < k2 + 1:
        raise ValueError(f"need transmissions through round K2+1={k2 + 1}, trace has {len(result.transmissions)}")
    p0 = result.initial_vectors[target]
    dim = len(p0)
    split = np.asarray(alpha_split, dtype=float)
    if split.size == 1:
        split = np.full(dim, float(split))
    if len(split) != dim:
        raise ValueError(f"need {dim} component accuracies, got {len(split)}")

    width = max(len(v) for per_round in result.transmissions for v in per_round)
    xmit = _padded_transmissions(result, width)
    know = rng.random(k2 + 1) < adv.p  # know[t]: in-knowledge of round t, t = 0..k2
    no_info_u = rng.random(dim)

    # Weight row of the target for each recorded round.
    weight_rows = {}

    def mix_pred(t: int) -> np.ndarray:
        """Predicted post-mix state of the target at round t from round-t wires."""
        if t not in weight_rows:
            weight_rows[t] = result.graphs[t - 1]._weights[target]
        return weight_rows[t] @ xmit[t]

    tail_known = all(know[t] for t in range(k1 + 1, k2 + 1))
    tau_total = np.zeros(width)
    if tail_known:
        for t in range(k1 + 1, k2 + 1):
            tau_total += mix_pred(t) - xmit[t + 1, target]

    # Center of the highest-mass noise window; the supported families are
    # symmetric and unimodal, so it is the location parameter.
    window_center = result.noise.location
    p_hat = np.empty(dim)
    cases = np.empty(dim, dtype=int)
    extreme = np.zeros(dim, dtype=bool)
    for k in range(dim):
        t_k = result.schedule.insertion_round(target, k)
        if know[t_k - 1]:
            if t_k == 1:
                ptilde_hat = xmit[1, target, k]
            else:
                ptilde_hat = xmit[t_k, target, k] - mix_pred(t_k - 1)[k]
            if tail_known:
                p_hat[k] = ptilde_hat - tau_total[k]
                cases[k] = CASE_EXACT
                extreme[k] = True
            else:
                p_hat[k] = ptilde_hat - window_center
                cases[k] = CASE_WINDOW
        else:
            # No basis for estimation: uniform guess over a domain sized so
            # that the hit probability is exactly the gamma bound.
            offset = (no_info_u[k] - 0.5) * (2.0 * split[k] / adv.gamma) if split[k] > 0 else math.inf
            p_hat[k] = p0[k] + offset
            cases[k] = CASE_NO_INFO
    errors = np.abs(p_hat - p0)
    hits = errors <= split
    l1_hit = bool(np.sum(errors) <= np.sum(split))
    return AdversaryEstimate(p_hat, hits, l1_hit, cases, know, extreme)


def write_privacy_csv(path, rows: Sequence[tuple]) -> None:
    """Emit curve rows: family, alpha_k, beta_k_analytic, beta_k_empirical, trials."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("family,alpha_k,beta_k_analytic,beta_k_empirical,trials\n")
        for family, alpha_k, analytic, empirical, trials in rows:
            emp = "" if empirical is None else repr(float(empirical))
            fh.write(f"{family},{alpha_k!r},{float(analytic)!r},{emp},{trials}\n")
