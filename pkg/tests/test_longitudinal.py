import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ldpfreq.errors import (
    DegenerateParameterError,
    EmptyInputError,
    EnumerationLimitError,
    InfeasibleBudgetError,
    InvalidParameterError,
    MemoizationError,
)
from ldpfreq.longitudinal import (
    L_GRR,
    L_KINDS,
    L_OSUE,
    L_OUE,
    L_SOUE,
    L_SUE,
    BudgetPair,
    MemoClient,
    TwoRoundParams,
    allomfree_client,
    allomfree_params,
    chain_epsilon_grr,
    chain_epsilon_ue,
    effective_single_report_epsilon,
    lgrr_params,
    longitudinal_estimate,
    longitudinal_params,
    longitudinal_variance,
    longitudinal_variance_approx,
    lue_params,
    memoize,
    memoize_many,
    privacy_over_time,
    report,
    report_many,
)
from ldpfreq.oracles import estimate_freq, grr_params

from reference import (
    bit_vectors,
    grr_matrix,
    lue_reference,
    lvar_star,
    matches_printed,
    unary_matrix,
    worst_log_ratio,
)

UE_KINDS = (L_OSUE, L_SUE, L_SOUE, L_OUE)


class TestLGRR:
    def test_example_binary(self):
        p = lgrr_params(1.0, 0.5, 2)
        assert (p.p1, p.q1, p.p2, p.q2) == pytest.approx((0.73106, 0.26894, 0.76500, 0.23500), abs=1e-5)
        assert matches_printed(longitudinal_variance_approx(p, 10000), "0.000392")

    def test_large_domain_example(self):
        p = lgrr_params(4.0, 2.4, 2**10)
        assert matches_printed(longitudinal_variance_approx(p, 10000), "0.25903")

    def test_first_round_is_grr(self):
        p = lgrr_params(2.0, 1.0, 7)
        g = grr_params(2.0, 7)
        assert (p.p1, p.q1) == pytest.approx((g.p, g.q), rel=1e-15)

    def test_binary_chain_hits_eps1(self):
        for ei, e1 in [(0.5, 0.1), (1.0, 0.5), (4.0, 3.9)]:
            p = lgrr_params(ei, e1, 2)
            assert chain_epsilon_grr(p.p1, p.q1, p.p2, p.q2) == pytest.approx(e1, abs=1e-9)
            assert effective_single_report_epsilon(p) == pytest.approx(e1, abs=1e-9)

    @pytest.mark.parametrize("c", [3, 4, 8, 16])
    def test_exact_channel_within_eps1(self, c):
        # the exact channel composes to at most eps_1; the two-value chain formula is reached only at c = 2
        p = lgrr_params(2.0, 1.0, c)
        exact = worst_log_ratio(grr_matrix(c, p.p1, p.q1) @ grr_matrix(c, p.p2, p.q2))
        assert effective_single_report_epsilon(p) == pytest.approx(exact, abs=1e-12)
        assert exact <= 1.0 + 1e-9

    def test_budget_validation(self):
        with pytest.raises(InvalidParameterError):
            lgrr_params(1.0, 1.0, 3)
        with pytest.raises(InvalidParameterError):
            lgrr_params(1.0, 0.0, 3)
        with pytest.raises(InvalidParameterError):
            BudgetPair(1.0, 2.0)

    def test_enumeration_limit(self):
        with pytest.raises(EnumerationLimitError):
            effective_single_report_epsilon(lgrr_params(2.0, 1.0, 5000))


class TestLUE:
    def test_osue_example(self):
        p = lue_params(1.0, 0.5, L_OSUE)
        assert p.p1 == 0.5
        assert p.q1 == pytest.approx(1 / (math.e + 1), rel=1e-14)
        assert (p.p2, p.q2) == pytest.approx((0.76500, 0.23500), abs=1e-5)
        assert matches_printed(longitudinal_variance_approx(p, 10000), "0.001567")

    @pytest.mark.parametrize("kind,printed", [(L_SUE, "0.001592"), (L_OUE, "0.001872"), (L_SOUE, "0.001740")])
    def test_row_examples(self, kind, printed):
        assert matches_printed(longitudinal_variance_approx(lue_params(1.0, 0.5, kind), 10000), printed)

    @pytest.mark.parametrize("kind", UE_KINDS)
    @pytest.mark.parametrize("ei,frac", [(0.5, 0.1), (1.0, 0.3), (2.0, 0.5), (4.0, 0.6)])
    def test_chain_reproduces_eps1(self, kind, ei, frac):
        p = lue_params(ei, frac * ei, kind)
        assert chain_epsilon_ue(p.p1, p.q1, p.p2, p.q2) == pytest.approx(frac * ei, abs=1e-10)
        assert effective_single_report_epsilon(p) == pytest.approx(frac * ei, abs=1e-9)

    @pytest.mark.parametrize("kind", UE_KINDS)
    def test_matches_generic_root_finding(self, kind):
        for ei, e1 in [(0.5, 0.2), (1.0, 0.5), (2.0, 0.4), (4.0, 2.4)]:
            ours = lue_params(ei, e1, kind)
            ref = lue_reference(kind, ei, e1)
            assert (ours.p1, ours.q1, ours.p2, ours.q2) == pytest.approx(ref, rel=1e-9, abs=1e-12)

    def test_symmetric_second_round_tends_to_identity(self):
        for kind in (L_OSUE, L_SUE):
            assert lue_params(4.0, 0.999 * 4.0, kind).p2 > 0.99

    @pytest.mark.parametrize("kind", [L_OUE, L_SOUE])
    def test_half_second_round_infeasible(self, kind):
        with pytest.raises(InfeasibleBudgetError):
            lue_params(1.0, 0.95, kind)

    def test_unknown_kind(self):
        with pytest.raises(InvalidParameterError):
            lue_params(1.0, 0.5, "L-XYZ")
        with pytest.raises(InvalidParameterError):
            longitudinal_params("nope", 1.0, 0.5, 3)

    @pytest.mark.parametrize("kind", UE_KINDS)
    @pytest.mark.parametrize("c", [2, 3, 4])
    def test_exact_two_stage_channel(self, kind, c):
        # enumerate both rounds over all 2^c bit vectors
        ei, e1 = 2.0, 0.8
        p = longitudinal_params(kind, ei, e1, c)
        first = unary_matrix(np.eye(c, dtype=bool), p.p1, p.q1)
        second = unary_matrix(bit_vectors(c), p.p2, p.q2)
        assert worst_log_ratio(first @ second) <= e1 + 1e-9


class TestEstimator:
    @pytest.mark.parametrize("kind", L_KINDS)
    @pytest.mark.parametrize("c", [2, 3, 4])
    def test_exact_unbiasedness(self, kind, c):
        ei, e1, n = 1.5, 0.6, 20
        p = longitudinal_params(kind, ei, e1, c)
        for f0 in (0.0, 0.25, 0.5, 0.75, 1.0):
            f = np.full(c, (1 - f0) / (c - 1))
            f[0] = f0
            if kind == L_GRR:
                chan = grr_matrix(c, p.p1, p.q1) @ grr_matrix(c, p.p2, p.q2)
                expected = n * f @ chan
            else:
                ps = p.p1 * p.p2 + (1 - p.p1) * p.q2
                qs = p.q1 * p.p2 + (1 - p.q1) * p.q2
                expected = n * (f * ps + (1 - f) * qs)
            est = longitudinal_estimate(expected, n, p)
            assert np.max(np.abs(est.freqs - f)) < 1e-12

    def test_zero_fixed_point(self):
        p = lue_params(2.0, 1.0, L_OSUE)
        n = 500
        est = longitudinal_estimate(np.full(4, n * (p.q1 * (p.p2 - p.q2) + p.q2)), n, p)
        assert np.allclose(est.freqs, 0, atol=1e-13)

    def test_identity_second_round_reduces_to_pure(self):
        g = grr_params(1.0, 3)
        p = TwoRoundParams(g.p, g.q, 1.0, 0.0, L_GRR, 3)
        counts = np.array([40, 35, 25])
        assert np.allclose(longitudinal_estimate(counts, 100, p).freqs, estimate_freq(counts, 100, g).freqs)
        assert effective_single_report_epsilon(p) == pytest.approx(1.0, abs=1e-12)

    def test_errors(self):
        p = lue_params(2.0, 1.0, L_OSUE)
        with pytest.raises(EmptyInputError):
            longitudinal_estimate(np.zeros(3), 0, p)
        with pytest.raises(InvalidParameterError):
            TwoRoundParams(0.5, 0.5, 0.7, 0.3, L_OSUE)
        degenerate = TwoRoundParams.__new__(TwoRoundParams)
        object.__setattr__(degenerate, "p1", 0.6)
        object.__setattr__(degenerate, "q1", 0.4)
        object.__setattr__(degenerate, "p2", 0.5)
        object.__setattr__(degenerate, "q2", 0.5)
        with pytest.raises(DegenerateParameterError):
            longitudinal_estimate(np.ones(2), 10, degenerate)

    def test_variance_examples(self):
        assert matches_printed(longitudinal_variance(lgrr_params(0.5, 0.25, 32), 10000, 0.0), "2.088372")
        assert matches_printed(longitudinal_variance(lue_params(2.0, 1.0, L_OUE), 10000, 0.0), "0.000447")

    @pytest.mark.parametrize("kind", L_KINDS)
    def test_variance_equals_bernoulli_sum(self, kind):
        # N_i sums n f Bernoulli(ps) and n (1 - f) Bernoulli(qs)
        p = longitudinal_params(kind, 2.0, 0.8, 5)
        ps, qs = p.chained()
        n, f = 1000, 0.35
        var_counts = n * (f * ps + (1 - f) * qs) - n * (f * ps + (1 - f) * qs) ** 2
        # uniform-rate approximation used by the estimator's variance formula
        denom = (n * (p.p1 - p.q1) * (p.p2 - p.q2)) ** 2
        assert longitudinal_variance(p, n, f) == pytest.approx(var_counts / denom, rel=1e-12)

    def test_approx_is_f_zero(self):
        p = lgrr_params(1.0, 0.5, 4)
        assert longitudinal_variance_approx(p, 77) == longitudinal_variance(p, 77, 0.0)
        assert longitudinal_variance_approx(p, 10000) == pytest.approx(lvar_star(p.p1, p.q1, p.p2, p.q2, 10000))


class TestMemoization:
    def test_first_round_delegation(self):
        p = lgrr_params(2.0, 1.0, 5)
        vals = np.arange(1000) % 5
        a = memoize_many(vals, p, np.random.default_rng(3))
        from ldpfreq.oracles import grr_perturb_many

        b = grr_perturb_many(vals, grr_params(2.0, 5), np.random.default_rng(3))
        assert np.array_equal(a, b)

    def test_first_round_channel(self):
        p = longitudinal_params(L_OSUE, 1.0, 0.5, 3)
        rng = np.random.default_rng(4)
        trials = 1_000_000
        memo = memoize_many(np.zeros(trials, dtype=int), p, rng)
        rate = memo.mean(axis=0)
        expect = np.array([p.p1, p.q1, p.q1])
        assert np.all(np.abs(rate - expect) <= 4 * np.sqrt(expect * (1 - expect) / trials))

    def test_unary_needs_domain(self):
        p = lue_params(1.0, 0.5, L_OSUE)
        with pytest.raises(InvalidParameterError):
            memoize_many(np.array([0, 1]), p, np.random.default_rng(0))

    def test_identity_second_round_returns_memo(self):
        g = grr_params(1.0, 4)
        p = TwoRoundParams(g.p, g.q, 1.0, 0.0, L_GRR, 4)
        rng = np.random.default_rng(5)
        state = memoize(2, p, rng)
        assert all(report(state, p, rng) == state.memoized_report for _ in range(50))

    def test_reports_track_memo_not_truth(self):
        p = longitudinal_params(L_OSUE, 4.0, 1.0, 4)
        rng = np.random.default_rng(6)
        state = memoize(0, p, rng)
        tau = 10_000
        reps = report_many(np.repeat(state.memoized_report[None, :], tau, axis=0), p, rng)
        expect = np.where(state.memoized_report, p.p2, p.q2)
        sd = np.sqrt(expect * (1 - expect) / tau)
        assert np.all(np.abs(reps.mean(axis=0) - expect) <= 4 * sd)

    def test_memo_client_contract(self):
        params = {0: lgrr_params(2.0, 1.0, 3)}
        client = MemoClient(params, np.random.default_rng(7))
        client.report("u1", 0, 2)
        client.report("u1", 0, 2)
        assert len(client) == 1
        with pytest.raises(MemoizationError):
            client.memoize("u1", 0, 2)
        with pytest.raises(MemoizationError):
            client.report("u1", 0, 1)


class TestAllomfree:
    def test_choice_examples(self):
        assert allomfree_params(2, 1.0, 0.5).kind == L_GRR
        assert allomfree_params(2**10, 1.0, 0.5).kind == L_OSUE

    def test_choice_is_argmin(self):
        rng = np.random.default_rng(8)
        for _ in range(30):
            ei = rng.uniform(0.5, 5.0)
            e1 = rng.uniform(0.1, 0.9) * ei
            c = int(rng.integers(2, 200))
            v_grr = longitudinal_variance_approx(lgrr_params(ei, e1, c), 1)
            v_osue = longitudinal_variance_approx(lue_params(ei, e1, L_OSUE), 1)
            assert allomfree_params(c, ei, e1).kind == (L_GRR if v_grr <= v_osue else L_OSUE)

    def test_client_fixed_attribute(self):
        out = allomfree_client((1, 3, 0), (2, 8, 3), 2.0, 1.0, 25, np.random.default_rng(9))
        assert len(out) == 25
        assert len({j for j, _ in out}) == 1

    def test_client_validation(self):
        with pytest.raises(InvalidParameterError):
            allomfree_client((1,), (2,), 2.0, 1.0, 0, np.random.default_rng(0))
        with pytest.raises(InvalidParameterError):
            allomfree_client((1, 2), (2,), 2.0, 1.0, 1, np.random.default_rng(0))


class TestPrivacyOverTime:
    def test_examples(self):
        assert privacy_over_time(2.0, 0.5, 0) == 0.0
        assert privacy_over_time(2.0, 0.1, 1) == pytest.approx(0.0761, abs=5e-5)
        assert abs(privacy_over_time(2.0, 0.1, 10**6) - 2.0) < 1e-6

    def test_direct_formula(self):
        ei, e1, t = 1.5, 0.2, 3
        direct = math.log((math.exp(ei + t * e1) + 1) / (math.exp(ei) + math.exp(t * e1)))
        assert privacy_over_time(ei, e1, t) == pytest.approx(direct, rel=1e-14)

    @settings(max_examples=300)
    @given(st.floats(0.01, 8.0), st.floats(0.001, 0.999), st.integers(0, 10**4))
    def test_bound(self, ei, frac, t):
        e1 = frac * ei
        assert privacy_over_time(ei, e1, t) <= min(ei, t * e1) + 1e-12

    def test_rejects_bad_t(self):
        with pytest.raises(InvalidParameterError):
            privacy_over_time(1.0, 0.5, -1)
