"""Privacy-preserving dissemination of coefficient vectors over digraphs.

The round loop is: insert a scheduled block of the perturbed initial vector
(rounds 1..K1, before transmitting), mix by push-sum with column-stochastic
weights, then subtract a noise fraction after the mix (scheduled rounds in
(K1, K2]).  After K2 the iterations are plain push-sum plus the max/min
envelope machinery that lets every agent certify proximity to the average
without central coordination.

Round indexing is pinned by the mass identities the correctness argument
needs: the post-round-K1 state carries the full perturbed mass, and the
post-round-K2 state carries exactly the unperturbed mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cheb import Interval, pad_coeffs
from .errors import InfeasibleConstraintsError, NonConvergenceError, ProtocolOrderError
from .netsim import GraphSequence, RoundGraph

NOISE_FAMILIES = ("uniform", "normal", "laplace")

DEFAULT_ROUND_CAP = 100_000

# Salt for the schedule/noise RNG stream.
_SCHED_STREAM = 0x73636864


@dataclass(frozen=True)
class NoiseSpec:
    """Noise family with location and scale.

    uniform: uniform on (location - scale, location + scale)
    normal:  mean location, standard deviation scale
    laplace: mean location, diversity scale

    scale = 0 is admitted as a degenerate no-noise mode for testing the
    plain push-sum reduction; the analytic privacy bounds require scale > 0.
    """

    family: str
    location: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.family not in NOISE_FAMILIES:
            raise ValueError(f"unknown noise family {self.family!r}; expected one of {NOISE_FAMILIES}")
        if self.scale < 0:
            raise ValueError(f"scale must be >= 0, got {self.scale}")

    @classmethod
    def variance_one(cls, family: str) -> "NoiseSpec":
        """Zero-mean, unit-variance member of the family."""
        scale = {"uniform": math.sqrt(3.0), "normal": 1.0, "laplace": 1.0 / math.sqrt(2.0)}[family]
        return cls(family, 0.0, scale)

    @property
    def variance(self) -> float:
        return {
            "uniform": self.scale ** 2 / 3.0,
            "normal": self.scale ** 2,
            "laplace": 2.0 * self.scale ** 2,
        }[self.family]

    def support(self) -> tuple:
        if self.family == "uniform":
            return (self.location - self.scale, self.location + self.scale)
        return (-math.inf, math.inf)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.scale == 0.0:
            return np.full(size, float(self.location))
        if self.family == "uniform":
            return self.location + self.scale * (2.0 * rng.random(size) - 1.0)
        if self.family == "normal":
            return rng.normal(self.location, self.scale, size)
        return rng.laplace(self.location, self.scale, size)


@dataclass(frozen=True)
class StopParams:
    """Distributed-stopping parameters.

    ``u`` is an upper bound on (N-1)B, the worst-case rounds for max/min
    consensus to sweep the network; ``delta`` is the componentwise gap at
    which the envelopes certify convergence (eps2 / (m+1)).
    """

    u: int
    delta: float

    def __post_init__(self):
        if self.u < 1:
            raise ValueError(f"U must be >= 1, got {self.u}")
        if self.delta <= 0:
            raise ValueError(f"delta must be positive, got {self.delta}")


@dataclass(frozen=True)
class PrivacySchedule:
    """Per-agent insertion and subtraction schedules.

    ``blocks[i]`` has K1 entries summing to m_i + 1 (multinomial draw);
    ``l_of[i][t]`` is the cumulative count after round t.  ``sub_rounds[i]``
    are the L_i distinct rounds in (K1, K2] at which agent i removes
    zeta_i = theta_i / L_i.  ``resamples[i]`` counts noise redraws forced by
    the |zeta| > alpha condition.
    """

    k1: int
    k2: int
    blocks: tuple
    l_of: tuple
    big_l: tuple
    sub_rounds: tuple
    resamples: tuple

    def insertion_round(self, agent: int, slot: int) -> int:
        """1-based round at which ``slot`` (0-based) of agent's vector is inserted."""
        bounds = self.l_of[agent]
        for t in range(1, self.k1 + 1):
            if bounds[t - 1] <= slot < bounds[t]:
                return t
        raise ValueError(f"slot {slot} outside agent {agent}'s vector")


@dataclass
class AgentState:
    """One agent's push-sum pair plus privacy bookkeeping.

    ``x`` is kept at full width (m+1); slots the agent has not yet seen are
    exactly zero, which is what the padding rule prescribes.  ``visible_len``
    tracks the length the agent would actually transmit.
    """

    index: int
    x: np.ndarray
    y: float
    ptilde: np.ndarray
    noise: np.ndarray
    zeta: np.ndarray
    block_bounds: tuple
    sub_rounds: frozenset
    k1: int
    k2: int
    big_l: int
    visible_len: int = 0
    next_insert_round: int = 1
    subs_done: int = 0
    r: np.ndarray | None = None
    s: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return len(self.ptilde)

    def ratio(self) -> np.ndarray:
        return self.x / self.y


def _sample_theta(noise: NoiseSpec, dim: int, rng, alpha_condition: float):
    """Draw a noise vector, resampling components until |theta_k/L| > alpha
    is satisfiable (L = 1 suffices once |theta_k| > alpha)."""
    theta = np.asarray(noise.sample(rng, dim), dtype=float)
    resamples = 0
    if noise.scale > 0.0 and alpha_condition > 0.0:
        low = np.abs(theta) <= alpha_condition
        while low.any():
            theta[low] = np.asarray(noise.sample(rng, int(low.sum())), dtype=float)
            resamples += int(low.sum())
            low = np.abs(theta) <= alpha_condition
    return theta, resamples


def sample_privacy_schedule(
    dims: Sequence[int],
    k1: int,
    k2: int,
    noise: NoiseSpec,
    rng: np.random.Generator,
    alpha_condition: float = 0.01,
):
    """Draw per-agent schedules and noise; returns (schedule, thetas).

    L_i is uniform over the subset of {1, .., K2-K1} compatible with the
    |zeta| > alpha condition (equivalent to rejection sampling from the
    discrete uniform).  Subtraction rounds are a uniform L_i-subset of
    (K1, K2].
    """
    if k1 < 1:
        raise ValueError(f"K1 must be >= 1, got {k1}")
    if k2 <= k1:
        raise ValueError(f"need K2 > K1, got K1={k1}, K2={k2}")
    blocks, l_of, big_ls, sub_rounds, resamples, thetas = [], [], [], [], [], []
    span = k2 - k1
    for dim in dims:
        theta, res = _sample_theta(noise, dim, rng, alpha_condition)
        d = rng.multinomial(dim, np.full(k1, 1.0 / k1))
        if noise.scale == 0.0:
            big_l = 1
        else:
            min_abs = float(np.min(np.abs(theta)))
            valid = [ell for ell in range(1, span + 1) if alpha_condition * ell < min_abs]
            if not valid:
                raise RuntimeError("no admissible L; alpha condition unsatisfiable")
            big_l = valid[int(rng.integers(0, len(valid)))]
        subs = tuple(sorted(int(t) for t in rng.choice(np.arange(k1 + 1, k2 + 1), size=big_l, replace=False)))
        blocks.append(tuple(int(v) for v in d))
        l_of.append(tuple(int(v) for v in np.concatenate([[0], np.cumsum(d)])))
        big_ls.append(big_l)
        sub_rounds.append(subs)
        resamples.append(res)
        thetas.append(theta)
    schedule = PrivacySchedule(
        k1=k1,
        k2=k2,
        blocks=tuple(blocks),
        l_of=tuple(l_of),
        big_l=tuple(big_ls),
        sub_rounds=tuple(sub_rounds),
        resamples=tuple(resamples),
    )
    return schedule, thetas


def init_states(
    initial_vectors: Sequence[np.ndarray],
    noise: NoiseSpec,
    k1: int,
    k2: int,
    rng: np.random.Generator,
    alpha_condition: float = 0.01,
    width: int | None = None,
):
    """Perturb initial vectors and build agent states (push-sum init y = 1)."""
    vectors = [np.atleast_1d(np.asarray(v, dtype=float)) for v in initial_vectors]
    dims = [len(v) for v in vectors]
    if width is None:
        width = max(dims)
    schedule, thetas = sample_privacy_schedule(dims, k1, k2, noise, rng, alpha_condition)
    states = []
    for i, v in enumerate(vectors):
        theta = thetas[i]
        states.append(
            AgentState(
                index=i,
                x=np.zeros(width),
                y=1.0,
                ptilde=v + theta,
                noise=theta,
                zeta=theta / schedule.big_l[i],
                block_bounds=schedule.l_of[i],
                sub_rounds=frozenset(schedule.sub_rounds[i]),
                k1=k1,
                k2=k2,
                big_l=schedule.big_l[i],
            )
        )
    return states, schedule


def _ensure_width(state: AgentState, width: int) -> None:
    if len(state.x) < width:
        grown = np.zeros(width)
        grown[: len(state.x)] = state.x
        state.x = grown


def insert_block(state: AgentState, t: int) -> AgentState:
    """Add the round-``t`` block of the perturbed vector into ``state.x``,
    growing the vector as needed (absent slots read as zero).

    Rounds must be presented in order 1..K1; anything else is a protocol
    violation.  An empty block leaves the state unchanged.
    """
    if not 1 <= t <= state.k1 or t != state.next_insert_round:
        raise ProtocolOrderError(
            f"insert_block(t={t}) outside insertion order (expected round "
            f"{state.next_insert_round} of 1..{state.k1})"
        )
    lo, hi = state.block_bounds[t - 1], state.block_bounds[t]
    if hi > lo:
        _ensure_width(state, hi)
        state.x[lo:hi] += state.ptilde[lo:hi]
        state.visible_len = max(state.visible_len, hi)
    state.next_insert_round = t + 1
    return state


def subtract_noise(state: AgentState, t: int) -> AgentState:
    """Remove zeta_i = theta_i / L_i from the post-mix state at round ``t``."""
    if not state.k1 < t <= state.k2:
        raise ProtocolOrderError(f"subtract_noise(t={t}) outside (K1, K2] = ({state.k1}, {state.k2}]")
    if t not in state.sub_rounds:
        raise ProtocolOrderError(f"round {t} is not one of agent {state.index}'s subtraction rounds")
    if state.subs_done >= state.big_l:
        raise ProtocolOrderError(f"agent {state.index} already subtracted {state.big_l} times")
    _ensure_width(state, state.dim)
    state.x[: state.dim] -= state.zeta
    state.subs_done += 1
    return state


def push_sum_round(states: Sequence[AgentState], g: RoundGraph):
    """One synchronous push-sum mix; mutates and returns ``states``.

    Vectors are padded to the widest incoming length (missing slots read 0);
    column stochasticity of the weights preserves the totals of x and y.
    """
    width = max(len(st.x) for st in states)
    if all(len(st.x) == width for st in states):
        x = np.stack([st.x for st in states])
    else:
        x = pad_coeffs([st.x for st in states], width)
    y = np.array([st.y for st in states])
    a = g._weights
    new_x = a @ x
    new_y = a @ y
    vis = np.array([st.visible_len for st in states])
    new_vis = np.max(np.where(a > 0.0, vis[None, :], 0), axis=1)
    for st in states:
        i = st.index
        st.x = new_x[i]
        st.y = float(new_y[i])
        st.visible_len = int(new_vis[i])
    return states


def stopping_round(states: Sequence[AgentState], g: RoundGraph, params: StopParams, t: int, k2: int):
    """Update max/min envelopes; every U rounds, check and reinitialize.

    Returns a per-agent boolean array at check rounds (t = K2 + l*U) and
    None otherwise.  Envelopes must have been initialized to the ratio
    vectors at round K2.
    """
    if t <= k2:
        raise ProtocolOrderError(f"stopping machinery runs after K2={k2}, got round {t}")
    if any(st.r is None or st.s is None for st in states):
        raise ProtocolOrderError("envelopes not initialized; set r = s = x/y at round K2")
    width = max(len(st.r) for st in states)
    r = pad_coeffs([st.r for st in states], width)
    s = pad_coeffs([st.s for st in states], width)
    for st in states:
        nbrs = g.in_neighbors(st.index)
        st.r = r[nbrs].max(axis=0)
        st.s = s[nbrs].min(axis=0)
    if (t - k2) % params.u != 0:
        return None
    converged = np.array([float(np.max(np.abs(st.r - st.s))) <= params.delta for st in states])
    for st in states:
        st.r = st.ratio().copy()
        st.s = st.ratio().copy()
    return converged


def max_consensus_interval(intervals: Sequence, seq: GraphSequence, u_rounds: int):
    """Agree on the intersection [max a_i, min b_i] via max/min consensus.

    Runs ``u_rounds`` rounds over seq.graph(0..u_rounds-1); with u_rounds at
    least (N-1)B every agent lands exactly on the intersection.  Raises if
    the intersection is empty.
    """
    pairs = [(iv.lo, iv.hi) if isinstance(iv, Interval) else (float(iv[0]), float(iv[1])) for iv in intervals]
    a = np.array([p[0] for p in pairs])
    b = np.array([p[1] for p in pairs])
    for t in range(u_rounds):
        g = seq.graph(t)
        a = np.array([a[g.in_neighbors(i)].max() for i in range(seq.n)])
        b = np.array([b[g.in_neighbors(i)].min() for i in range(seq.n)])
    if np.any(a >= b):
        i = int(np.argmax(a >= b))
        raise InfeasibleConstraintsError(
            f"empty constraint intersection: agent {i} holds [a, b] = [{a[i]}, {b[i]}]"
        )
    return [Interval(float(a[i]), float(b[i])) for i in range(seq.n)]


@dataclass(frozen=True)
class TraceRow:
    round: int
    max_ratio_error: float
    mass_residual: float
    stopped: bool
    y_residual: float


@dataclass
class DisseminationResult:
    """Everything a run produced: final ratios, trace, and recorded wire data."""

    p_final: list
    stop_round: int | None
    converged: np.ndarray | None
    trace: list
    p_bar: np.ndarray
    delta: float | None
    k1: int
    k2: int
    noise: NoiseSpec
    initial_vectors: list
    theta: list
    schedule: PrivacySchedule
    transmissions: list | None
    graphs: list | None

    @property
    def rounds(self) -> int:
        return len(self.trace)

    def final_error(self) -> float:
        return self.trace[-1].max_ratio_error if self.trace else math.inf

    def rounds_to_error(self, tol: float) -> int | None:
        """First round whose ratio error is at most ``tol`` (None if never)."""
        for row in self.trace:
            if row.max_ratio_error <= tol:
                return row.round
        return None


def run_dissemination(
    initial_vectors: Sequence[np.ndarray],
    seq: GraphSequence,
    noise: NoiseSpec,
    k1: int,
    k2: int,
    stop: StopParams | None,
    seed: int,
    *,
    round_offset: int = 0,
    max_rounds: int = DEFAULT_ROUND_CAP,
    run_exact_rounds: int | None = None,
    alpha_condition: float = 0.01,
    record_transmissions: bool = True,
    record_trace: bool = True,
) -> DisseminationResult:
    """Execute perturbation, blockwise insertion, subtraction, and stopping.

    ``initial_vectors`` are the agents' coefficient vectors (one 1-D array
    per agent, lengths may differ).  With ``stop`` set, the run ends at the
    first check round where every agent's envelope gap is within delta;
    exceeding ``max_rounds`` raises NonConvergenceError carrying the trace.
    With ``stop=None`` the loop runs exactly ``run_exact_rounds`` rounds
    (stopping machinery disabled), which is how open-loop convergence and
    adversary experiments are driven.

    Graphs are drawn from ``seq.graph(round_offset + t - 1)`` for round t.
    """
    if stop is None and run_exact_rounds is None:
        raise ValueError("need either stop parameters or run_exact_rounds")
    vectors = [np.atleast_1d(np.asarray(v, dtype=float)) for v in initial_vectors]
    if len(vectors) != seq.n:
        raise ValueError(f"{len(vectors)} vectors for {seq.n} agents")
    rng = np.random.default_rng([seed, _SCHED_STREAM])
    width = max(len(v) for v in vectors)
    states, schedule = init_states(vectors, noise, k1, k2, rng, alpha_condition, width=width)
    n = seq.n

    p_bar = pad_coeffs(vectors, width).mean(axis=0)
    expected_mass = np.zeros(width)
    trace: list = []
    transmissions: list | None = [] if record_transmissions else None
    graphs: list | None = [] if record_transmissions else None

    horizon = run_exact_rounds if run_exact_rounds is not None else max_rounds
    stop_round = None
    converged_flags = None
    t = 0
    while t < horizon:
        t += 1
        g = seq.graph(round_offset + t - 1)
        if t <= k1:
            for st in states:
                lo, hi = st.block_bounds[t - 1], st.block_bounds[t]
                insert_block(st, t)
                if hi > lo:
                    expected_mass[lo:hi] += st.ptilde[lo:hi]
        if record_transmissions:
            transmissions.append([st.x[: st.visible_len].copy() for st in states])
            graphs.append(g)
        push_sum_round(states, g)
        if k1 < t <= k2:
            for st in states:
                if t in st.sub_rounds:
                    subtract_noise(st, t)
                    expected_mass[: st.dim] -= st.zeta
        if t == k2:
            for st in states:
                st.r = st.ratio().copy()
                st.s = st.ratio().copy()
        flags = None
        if stop is not None and t > k2:
            flags = stopping_round(states, g, stop, t, k2)
        stopped = flags is not None and bool(np.all(flags))

        if record_trace:
            col_sum = np.sum([st.x for st in states], axis=0)
            mass_residual = float(np.max(np.abs(col_sum - expected_mass) / (1.0 + np.abs(expected_mass))))
            ratios = np.stack([st.ratio() for st in states])
            max_ratio_error = float(np.max(np.abs(ratios - p_bar)))
            y_residual = float(abs(sum(st.y for st in states) - n))
            trace.append(TraceRow(t, max_ratio_error, mass_residual, stopped, y_residual))
        if stopped:
            stop_round = t
            converged_flags = flags
            break

    if stop is not None and stop_round is None:
        raise NonConvergenceError(
            f"dissemination did not stop within {max_rounds} rounds", trace=trace
        )
    return DisseminationResult(
        p_final=[st.ratio().copy() for st in states],
        stop_round=stop_round,
        converged=converged_flags,
        trace=trace,
        p_bar=p_bar,
        delta=stop.delta if stop is not None else None,
        k1=k1,
        k2=k2,
        noise=noise,
        initial_vectors=vectors,
        theta=[st.noise for st in states],
        schedule=schedule,
        transmissions=transmissions,
        graphs=graphs,
    )


def write_trace_csv(path, trace: Sequence[TraceRow]) -> None:
    """Emit the per-round trace: round, max_ratio_error, mass_residual, stopped_flag."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("round,max_ratio_error,mass_residual,stopped_flag\n")
        for row in trace:
            fh.write(f"{row.round},{row.max_ratio_error!r},{row.mass_residual!r},{int(row.stopped)}\n")
