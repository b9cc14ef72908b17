"""Dissemination machinery: mixing, schedules, stopping, mass ledger."""

import math

import numpy as np
import pytest

from chebcon import (
    AgentState,
    GraphSequence,
    InfeasibleConstraintsError,
    Interval,
    NoiseSpec,
    NonConvergenceError,
    ProtocolOrderError,
    RoundGraph,
    StopParams,
    insert_block,
    max_consensus_interval,
    push_sum_round,
    run_dissemination,
    stopping_round,
    subtract_noise,
)
from chebcon.consensus import init_states, sample_privacy_schedule
from chebcon.runner import linear_fit_r2

UNIFORM = NoiseSpec("uniform", 0.0, 1.0)
NO_NOISE = NoiseSpec("uniform", 0.0, 0.0)


def make_state(ptilde, k1=2, k2=4, bounds=None, sub_rounds=(3,), big_l=1, width=None):
    ptilde = np.asarray(ptilde, dtype=float)
    dim = len(ptilde)
    if bounds is None:
        bounds = tuple([0] + [dim] * k1)
    theta = np.zeros(dim)
    return AgentState(
        index=0,
        x=np.zeros(width or dim),
        y=1.0,
        ptilde=ptilde,
        noise=theta,
        zeta=theta / big_l,
        block_bounds=bounds,
        sub_rounds=frozenset(sub_rounds),
        k1=k1,
        k2=k2,
        big_l=big_l,
    )


class TestNoiseSpec:
    def test_families_validated(self):
        with pytest.raises(ValueError):
            NoiseSpec("cauchy")
        with pytest.raises(ValueError):
            NoiseSpec("uniform", scale=-1.0)

    def test_variance_one(self):
        for family in ("uniform", "normal", "laplace"):
            spec = NoiseSpec.variance_one(family)
            assert spec.variance == pytest.approx(1.0)
            rng = np.random.default_rng(0)
            draws = spec.sample(rng, 200_000)
            assert np.var(draws) == pytest.approx(1.0, rel=2e-2)
            assert np.mean(draws) == pytest.approx(0.0, abs=2e-2)

    def test_uniform_support(self):
        assert NoiseSpec("uniform", 0.5, 2.0).support() == (-1.5, 2.5)
        assert NoiseSpec("normal").support() == (-math.inf, math.inf)


class TestStopParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            StopParams(u=0, delta=1.0)
        with pytest.raises(ValueError):
            StopParams(u=1, delta=0.0)


class TestSchedules:
    def test_blocks_sum_to_dimension(self):
        rng = np.random.default_rng(5)
        sched, thetas = sample_privacy_schedule([21, 33, 9], 10, 20, UNIFORM, rng)
        for dim, blocks, bounds in zip([21, 33, 9], sched.blocks, sched.l_of):
            assert sum(blocks) == dim
            assert bounds[0] == 0 and bounds[-1] == dim
        for theta in thetas:
            assert np.all(np.abs(theta) > 0.01)

    def test_subtraction_rounds_in_window(self):
        rng = np.random.default_rng(6)
        sched, _ = sample_privacy_schedule([15] * 5, 10, 20, UNIFORM, rng)
        for big_l, subs in zip(sched.big_l, sched.sub_rounds):
            assert 1 <= big_l <= 10
            assert len(subs) == big_l == len(set(subs))
            assert all(11 <= t <= 20 for t in subs)

    def test_zeta_condition(self):
        rng = np.random.default_rng(7)
        sched, thetas = sample_privacy_schedule([25] * 4, 10, 20, UNIFORM, rng, alpha_condition=0.01)
        for theta, big_l in zip(thetas, sched.big_l):
            assert np.all(np.abs(theta / big_l) > 0.01)

    def test_insertion_round_lookup(self):
        rng = np.random.default_rng(8)
        sched, _ = sample_privacy_schedule([12], 4, 8, UNIFORM, rng)
        counts = [0] * 4
        for slot in range(12):
            counts[sched.insertion_round(0, slot) - 1] += 1
        assert counts == list(sched.blocks[0])


class TestPushSumRound:
    def test_complete_graph_hits_mean_in_one_round(self):
        g = RoundGraph(3, frozenset({(i, j) for i in range(3) for j in range(3)}))
        states = [make_state([float(v)]) for v in (1.0, 2.0, 3.0)]
        for i, st in enumerate(states):
            st.index = i
            st.x = np.array([float(i + 1)])
        push_sum_round(states, g)
        for st in states:
            assert st.x[0] == pytest.approx(2.0)
            assert st.x[0] / st.y == pytest.approx(2.0)

    def test_self_loops_only_is_identity(self):
        g = RoundGraph(2, frozenset({(0, 0), (1, 1)}))
        states = [make_state([5.0]), make_state([7.0])]
        states[1].index = 1
        states[0].x = np.array([5.0])
        states[1].x = np.array([7.0])
        push_sum_round(states, g)
        assert states[0].x[0] == 5.0 and states[1].x[0] == 7.0

    def test_three_ring_long_horizon(self):
        res = run_dissemination(
            [np.array([1.0]), np.array([0.0]), np.array([0.0])],
            GraphSequence(3, "static_ring"),
            NO_NOISE, 1, 2, None, seed=0, run_exact_rounds=200,
        )
        assert max(abs(v[0] - 1.0 / 3.0) for v in res.p_final) <= 1e-10


class TestInsertBlock:
    def test_full_vector_at_round_one(self):
        st = make_state([1.0, 2.0, 3.0], k1=2, bounds=(0, 3, 3))
        insert_block(st, 1)
        np.testing.assert_allclose(st.x, [1.0, 2.0, 3.0])
        insert_block(st, 2)  # empty block leaves state unchanged
        np.testing.assert_allclose(st.x, [1.0, 2.0, 3.0])

    def test_out_of_order_rejected(self):
        st = make_state([1.0, 2.0], k1=2, bounds=(0, 1, 2))
        with pytest.raises(ProtocolOrderError):
            insert_block(st, 2)
        insert_block(st, 1)
        with pytest.raises(ProtocolOrderError):
            insert_block(st, 1)

    def test_outside_phase_rejected(self):
        st = make_state([1.0], k1=1, bounds=(0, 1))
        insert_block(st, 1)
        with pytest.raises(ProtocolOrderError):
            insert_block(st, 2)

    def test_total_inserted_mass_after_k1(self):
        rng = np.random.default_rng(9)
        vectors = [rng.normal(size=7) for _ in range(5)]
        res = run_dissemination(
            vectors, GraphSequence(5, "ring_plus_random", seed=2),
            UNIFORM, 3, 6, None, seed=4, run_exact_rounds=3,
        )
        # after round K1 the per-slot totals equal the perturbed totals
        expect = np.sum([v + th for v, th in zip(vectors, res.theta)], axis=0)
        assert res.trace[-1].mass_residual <= 1e-12
        # and the engine's expectation matches the independent recomputation
        assert res.trace[-1].round == 3
        total = np.zeros(7)
        for v, th in zip(vectors, res.theta):
            total += v + th
        np.testing.assert_allclose(total, expect)


class TestSubtractNoise:
    def test_single_shot_removes_theta(self):
        st = make_state([0.0, 0.0], k1=1, k2=3, bounds=(0, 2), sub_rounds=(2,), big_l=1)
        st.noise = np.array([0.4, -0.2])
        st.zeta = st.noise / 1
        st.x = st.noise.copy()
        subtract_noise(st, 2)
        np.testing.assert_allclose(st.x, [0.0, 0.0], atol=1e-16)

    def test_thirds(self):
        st = make_state([0.0], k1=1, k2=5, bounds=(0, 1), sub_rounds=(2, 3, 4), big_l=3)
        st.noise = np.array([0.6])
        st.zeta = st.noise / 3
        st.x = np.array([0.6])
        for t in (2, 3, 4):
            subtract_noise(st, t)
        assert st.x[0] == pytest.approx(0.0, abs=1e-15)
        with pytest.raises(ProtocolOrderError):
            subtract_noise(st, 4)

    def test_outside_window_rejected(self):
        st = make_state([0.0], k1=2, k2=4, bounds=(0, 1, 1), sub_rounds=(3,))
        with pytest.raises(ProtocolOrderError):
            subtract_noise(st, 2)
        with pytest.raises(ProtocolOrderError):
            subtract_noise(st, 5)

    def test_mass_clean_after_k2(self):
        rng = np.random.default_rng(10)
        vectors = [rng.normal(size=9) for _ in range(6)]
        res = run_dissemination(
            vectors, GraphSequence(6, "ring_plus_random", seed=3),
            UNIFORM, 4, 9, None, seed=5, run_exact_rounds=30,
        )
        clean = np.sum(vectors, axis=0)
        for row in res.trace:
            if row.round >= 9:
                assert row.mass_residual <= 1e-9


class TestStoppingRound:
    def _states_with_envelopes(self, values, width=1):
        states = []
        for i, v in enumerate(values):
            st = make_state([0.0] * width, k1=1, k2=1, bounds=(0, width))
            st.index = i
            st.x = np.full(width, float(v))
            st.r = st.ratio().copy()
            st.s = st.ratio().copy()
            states.append(st)
        return states

    def test_identical_values_converge_first_check(self):
        states = self._states_with_envelopes([2.0, 2.0, 2.0])
        g = GraphSequence(3, "static_ring").graph(0)
        params = StopParams(u=1, delta=1e-12)
        flags = stopping_round(states, g, params, t=2, k2=1)
        assert flags is not None and all(flags)

    def test_gap_of_two_delta_not_converged(self):
        delta = 1e-3
        states = self._states_with_envelopes([0.0, 2 * delta])
        g = RoundGraph(2, frozenset({(0, 0), (1, 1), (0, 1), (1, 0)}))
        flags = stopping_round(states, g, StopParams(u=1, delta=delta), t=2, k2=1)
        assert flags is not None and not any(flags)

    def test_requires_post_k2(self):
        states = self._states_with_envelopes([1.0])
        g = RoundGraph(1, frozenset({(0, 0)}))
        with pytest.raises(ProtocolOrderError):
            stopping_round(states, g, StopParams(u=1, delta=1.0), t=1, k2=1)

    def test_non_check_round_returns_none(self):
        states = self._states_with_envelopes([1.0, 1.0])
        g = RoundGraph(2, frozenset({(0, 0), (1, 1), (0, 1), (1, 0)}))
        assert stopping_round(states, g, StopParams(u=5, delta=1.0), t=3, k2=1) is None


class TestMaxConsensusInterval:
    def test_all_same(self):
        seq = GraphSequence(4, "ring_plus_random", seed=1)
        out = max_consensus_interval([(-1.0, 1.0)] * 4, seq, 3)
        assert all(iv == Interval(-1.0, 1.0) for iv in out)

    def test_two_agent_intersection(self):
        seq = GraphSequence(2, "static_ring")
        out = max_consensus_interval([(-2.0, 1.0), (-1.0, 2.0)], seq, 1)
        assert all(iv == Interval(-1.0, 1.0) for iv in out)

    def test_empty_intersection(self):
        seq = GraphSequence(2, "static_ring")
        with pytest.raises(InfeasibleConstraintsError):
            max_consensus_interval([(0.0, 1.0), (2.0, 3.0)], seq, 2)


class TestRunDissemination:
    def test_zero_noise_reduces_to_push_sum(self):
        rng = np.random.default_rng(12)
        vectors = [rng.normal(size=4) for _ in range(6)]
        stop = StopParams(u=5, delta=1e-9 / 5)
        res = run_dissemination(
            vectors, GraphSequence(6, "ring_plus_random", seed=8),
            NO_NOISE, 1, 2, stop, seed=9,
        )
        assert np.all(res.converged)
        assert res.final_error() <= stop.delta
        for th in res.theta:
            assert np.all(th == 0.0)

    def test_same_seed_identical_traces(self):
        rng = np.random.default_rng(13)
        vectors = [rng.normal(size=6) for _ in range(8)]
        kwargs = dict(noise=UNIFORM, k1=3, k2=7, seed=21)
        stop = StopParams(u=7, delta=1e-8)
        r1 = run_dissemination(vectors, GraphSequence(8, "ring_plus_random", seed=4), stop=stop, **kwargs)
        r2 = run_dissemination(vectors, GraphSequence(8, "ring_plus_random", seed=4), stop=stop, **kwargs)
        assert r1.stop_round == r2.stop_round
        assert [row.max_ratio_error for row in r1.trace] == [row.max_ratio_error for row in r2.trace]
        for a, b in zip(r1.p_final, r2.p_final):
            assert np.array_equal(a, b)

    def test_mass_and_positivity_invariants(self):
        rng = np.random.default_rng(14)
        vectors = [rng.normal(size=11) for _ in range(10)]
        stop = StopParams(u=9, delta=1e-10)
        res = run_dissemination(
            vectors, GraphSequence(10, "ring_plus_random", seed=6),
            UNIFORM, 5, 11, stop, seed=15,
        )
        for row in res.trace:
            assert row.mass_residual <= 1e-9
            assert row.y_residual <= 1e-12
        # y positivity holds throughout by convexity; check the final states
        assert res.stop_round is not None

    def test_monotone_envelope_after_k2(self):
        # per-slot max/min of the ratio vectors tighten monotonically once
        # the noise is out, because post-K2 updates are convex combinations
        rng = np.random.default_rng(15)
        k2 = 6
        vectors = [rng.normal(size=5) for _ in range(7)]
        seq = GraphSequence(7, "ring_plus_random", seed=10)
        states, _ = init_states(vectors, UNIFORM, 3, k2, np.random.default_rng(16))
        top, bottom = None, None
        for t in range(1, 61):
            g = seq.graph(t - 1)
            if t <= 3:
                for st in states:
                    insert_block(st, t)
            push_sum_round(states, g)
            if 3 < t <= k2:
                for st in states:
                    if t in st.sub_rounds:
                        subtract_noise(st, t)
            assert all(st.y > 0.0 for st in states)
            if t >= k2:
                ratios = np.stack([st.ratio() for st in states])
                new_top = ratios.max(axis=0)
                new_bottom = ratios.min(axis=0)
                if t > k2:
                    assert np.all(new_top <= top + 1e-12)
                    assert np.all(new_bottom >= bottom - 1e-12)
                top, bottom = new_top, new_bottom

    def test_geometric_rate_zero_failure(self):
        rng = np.random.default_rng(16)
        vectors = [rng.normal(size=8) for _ in range(12)]
        res = run_dissemination(
            vectors, GraphSequence(12, "ring_plus_random", seed=11),
            UNIFORM, 4, 8, None, seed=17, run_exact_rounds=50,
        )
        pts = [(row.round, math.log(row.max_ratio_error)) for row in res.trace if row.round > 8]
        slope, _, r2 = linear_fit_r2([p[0] for p in pts], [p[1] for p in pts])
        assert slope < 0 and r2 >= 0.95

    def test_round_cap_raises(self):
        rng = np.random.default_rng(17)
        vectors = [rng.normal(size=3) for _ in range(5)]
        with pytest.raises(NonConvergenceError) as err:
            run_dissemination(
                vectors, GraphSequence(5, "ring_plus_random", seed=12),
                UNIFORM, 2, 4, StopParams(u=4, delta=1e-300), seed=18, max_rounds=40,
            )
        assert err.value.trace is not None

    def test_requires_rounds_or_stop(self):
        with pytest.raises(ValueError):
            run_dissemination([np.array([1.0])], GraphSequence(1, "static_ring"),
                              UNIFORM, 1, 2, None, seed=0)
