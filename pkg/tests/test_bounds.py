import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import random_pair
from seqbound import (
    Alphabet,
    DensePrior,
    JointDist,
    LmMatrix,
    bound_report,
    build_lm_matrix,
    kl_marginal,
    l1_gap_bound,
    l1_marginal_distance,
    lm_matrix_from_rows,
    make_conditional,
    marginal_x,
    mismatch,
    pinsker_beta,
    position_l1_gap,
    sample_conditional,
    sample_prior,
    table_lp_distances,
    telescope_gap,
)
from seqbound.dists import PositionUnigramPrior
from seqbound.errors import AlphabetMismatch, RankDeficientInput


def dummy_lm(induced_l1, full_rank=True):
    eye = np.eye(3)
    return LmMatrix(
        matrix=eye, singular_values=np.ones(3), sigma_min=1.0, sigma_max=1.0,
        pinv=eye, induced_l1=induced_l1, induced_l2=1.0, full_rank=full_rank,
    )


class TestLmMatrix:
    def test_identity(self):
        lm = lm_matrix_from_rows(np.eye(3))
        assert lm.full_rank
        assert lm.sigma_min == pytest.approx(1.0)
        assert lm.induced_l1 == pytest.approx(1.0)
        assert lm.induced_l2 == pytest.approx(1.0)
        assert np.abs(lm.pinv - np.eye(3)).max() < 1e-12

    def test_repeated_rows_are_rank_one(self):
        row = np.array([0.5, 0.3, 0.2])
        lm = lm_matrix_from_rows(np.tile(row, (3, 1)))
        assert lm.rank == 1
        assert not lm.full_rank

    def test_left_inverse_on_random_full_rank(self):
        a = Alphabet(4, 3, 3)
        checked = 0
        for seed in range(40):
            lm = build_lm_matrix(sample_prior(a, "dense", seed, concentration=0.1))
            if not lm.full_rank:
                continue
            checked += 1
            assert np.abs(lm.pinv @ lm.matrix - np.eye(3)).max() < 1e-8
        assert checked >= 10

    def test_tall_matrix_full_rank(self):
        a = Alphabet(4, 3, 5)
        lm = build_lm_matrix(sample_prior(a, "position_unigram", 3, concentration=0.5))
        assert lm.matrix.shape == (5, 3)
        if lm.full_rank:
            assert np.abs(lm.pinv @ lm.matrix - np.eye(3)).max() < 1e-8

    def test_wide_matrix_never_full_column_rank(self):
        lm = lm_matrix_from_rows(np.full((2, 3), 1.0 / 3))
        assert not lm.full_rank

    def test_induced_l1_is_sup_over_unit_ball(self):
        rng = np.random.default_rng(8)
        lm = build_lm_matrix(
            sample_prior(Alphabet(4, 3, 3), "dense", 17, concentration=0.1)
        )
        vs = rng.normal(size=(10_000, 3))
        vs /= np.abs(vs).sum(axis=1, keepdims=True)
        ratios = np.abs(vs @ lm.pinv.T).sum(axis=1)
        assert ratios.max() <= lm.induced_l1 * (1 + 1e-12)
        basis_max = max(np.abs(lm.pinv @ e).sum() for e in np.eye(3))
        assert basis_max == pytest.approx(lm.induced_l1, abs=0)

    def test_row_sums_from_priors(self):
        lm = build_lm_matrix(sample_prior(Alphabet(4, 3, 3), "bigram", 4))
        assert np.abs(lm.matrix.sum(axis=1) - 1.0).max() < 1e-9


class TestPositionL1Gap:
    def test_identical_is_zero(self):
        d, _ = random_pair(0)
        assert position_l1_gap(d, d) == 0.0

    def test_single_event_disjoint_support_is_two(self):
        a = Alphabet(2, 1, 1)
        prior = PositionUnigramPrior(a, np.array([[1.0]]))
        p = JointDist.from_structured(prior, make_conditional(a, [[1.0], [0.0]]))
        q = JointDist.from_structured(prior, make_conditional(a, [[0.0], [1.0]]))
        assert position_l1_gap(p, q) == pytest.approx(2.0)

    def test_matches_independent_enumeration(self):
        for seed in range(6):
            p, q = random_pair(seed, variant="bigram")
            got = position_l1_gap(p, q)
            expect = oracles.position_l1_gap(
                oracles.position_joint_table(p.prior.to_dense(), p.conds, 4, 3, 3),
                oracles.position_joint_table(q.prior.to_dense(), q.conds, 4, 3, 3),
            )
            assert abs(got - expect) < 1e-12


class TestL1Marginal:
    def test_identical(self):
        p, _ = random_pair(1)
        m = p.marginal_x()
        assert l1_marginal_distance(m, m) == 0.0

    def test_range_and_recompute(self):
        for seed in range(10):
            p, q = random_pair(seed)
            mp, mq = p.marginal_x(), q.marginal_x()
            got = l1_marginal_distance(mp, mq)
            assert 0.0 <= got <= 2.0
            assert got == pytest.approx(
                sum(abs(a - b) for a, b in zip(mp.probs, mq.probs)), abs=1e-12
            )

    def test_alphabet_mismatch(self):
        p, _ = random_pair(2)
        other = Alphabet(5, 3, 3)
        q = JointDist.from_structured(
            sample_prior(other, "dense", 0), sample_conditional(other, 0)
        )
        with pytest.raises(AlphabetMismatch):
            l1_marginal_distance(p.marginal_x(), q.marginal_x())


class TestChainFactors:
    def test_l1_gap_bound_arithmetic(self):
        assert l1_gap_bound(dummy_lm(2.0), 0.1, 3) == pytest.approx(1.8)
        assert l1_gap_bound(dummy_lm(5.0), 0.0, 3) == 0.0

    def test_l1_gap_bound_rejects_rank_deficient(self):
        with pytest.raises(RankDeficientInput):
            l1_gap_bound(dummy_lm(2.0, full_rank=False), 0.1, 3)

    def test_pinsker_beta_arithmetic(self):
        assert pinsker_beta(dummy_lm(1.0), 1) == pytest.approx(2.0)
        assert pinsker_beta(dummy_lm(2.0), 3) == pytest.approx(648.0)

    def test_pinsker_beta_rejects_rank_deficient(self):
        with pytest.raises(RankDeficientInput):
            pinsker_beta(dummy_lm(1.0, full_rank=False), 3)


class TestTableLpDistances:
    def test_identical_tables(self, alphabet433):
        cond = sample_conditional(alphabet433, 0)
        prior = sample_prior(alphabet433, "dense", 0)
        m = marginal_x(prior, cond)
        assert table_lp_distances(cond, cond, m, m, 1) == (0.0, 0.0)
        assert table_lp_distances(cond, cond, m, m, 2) == (0.0, 0.0)

    def test_identity_matrix_prior_gives_equality(self):
        # each position pins a distinct label, so the label matrix is the
        # identity and the contraction is tight for p = 1
        a = Alphabet(4, 3, 3)
        prior = PositionUnigramPrior(a, np.eye(3))
        lm = build_lm_matrix(prior)
        assert lm.induced_l1 == pytest.approx(1.0)
        tc = sample_conditional(a, 1)
        mc = sample_conditional(a, 2)
        d_cond, d_pos = table_lp_distances(
            tc, mc, marginal_x(prior, tc), marginal_x(prior, mc), 1
        )
        assert d_cond == pytest.approx(d_pos, abs=1e-12)

    @pytest.mark.parametrize("p", [1, 2])
    def test_contraction_monte_carlo(self, p):
        a = Alphabet(4, 3, 3)
        checked = 0
        seed = 0
        while checked < 200:
            seed += 1
            rng = np.random.default_rng(seed)
            prior = DensePrior(a, rng.dirichlet(np.full(27, 0.1)))
            lm = build_lm_matrix(prior)
            if not lm.full_rank:
                continue
            tc = sample_conditional(a, rng)
            mc = sample_conditional(a, rng)
            d_cond, d_pos = table_lp_distances(
                tc, mc, marginal_x(prior, tc), marginal_x(prior, mc), p
            )
            norm = lm.induced_l1 if p == 1 else lm.induced_l2
            assert d_cond <= norm * d_pos + 1e-9
            checked += 1


class TestTelescopeGap:
    def test_single_factor_equality(self):
        a = Alphabet(4, 3, 1)
        tc = sample_conditional(a, 0)
        mc = sample_conditional(a, 1)
        lhs, rhs = telescope_gap(tc, mc, [2], [3])
        assert lhs == pytest.approx(rhs, abs=0)

    def test_identical_tables(self, alphabet433):
        tc = sample_conditional(alphabet433, 5)
        lhs, rhs = telescope_gap(tc, tc, [0, 1, 2], [3, 2, 1])
        assert (lhs, rhs) == (0.0, 0.0)

    def test_exhaustive_small(self, alphabet433):
        tc = sample_conditional(alphabet433, 6)
        mc = sample_conditional(alphabet433, 7)
        for cseq in alphabet433.c_sequences():
            for xseq in alphabet433.x_sequences():
                lhs, rhs = telescope_gap(tc, mc, cseq, xseq)
                assert lhs <= rhs + 1e-12

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**31 - 1))
    def test_majorant_property(self, seed):
        a = Alphabet(4, 3, 3)
        rng = np.random.default_rng(seed)
        tc = sample_conditional(a, rng)
        mc = sample_conditional(a, rng)
        cseq = rng.integers(0, 3, size=3)
        xseq = rng.integers(0, 4, size=3)
        lhs, rhs = telescope_gap(tc, mc, cseq, xseq)
        assert lhs <= rhs + 1e-12

    def test_signed_telescoping_identity(self, alphabet433):
        # before taking absolute values the swapped-factor sum telescopes
        # to the product difference exactly
        tc = sample_conditional(alphabet433, 8)
        mc = sample_conditional(alphabet433, 9)
        rng = np.random.default_rng(10)
        for _ in range(50):
            cseq = rng.integers(0, 3, size=3)
            xseq = rng.integers(0, 4, size=3)
            pr = tc.probs[xseq, cseq]
            q = mc.probs[xseq, cseq]
            signed = sum(
                np.prod(pr[:j]) * np.prod(q[j + 1 :]) * (pr[j] - q[j])
                for j in range(3)
            )
            lhs, _ = telescope_gap(tc, mc, cseq, xseq)
            assert abs(abs(signed) - lhs) < 1e-15


class TestKl:
    def test_identical_is_zero(self):
        p, _ = random_pair(3)
        m = p.marginal_x()
        assert kl_marginal(m, m) == 0.0

    def test_infinite_when_support_escapes(self):
        a = Alphabet(2, 1, 1)
        prior = PositionUnigramPrior(a, np.array([[1.0]]))
        p = marginal_x(prior, make_conditional(a, [[1.0], [0.0]]))
        q = marginal_x(prior, make_conditional(a, [[0.0], [1.0]]))
        assert kl_marginal(p, q) == math.inf

    def test_matches_loop_and_pinsker_at_marginal(self):
        for seed in range(10):
            p, q = random_pair(seed)
            mp, mq = p.marginal_x(), q.marginal_x()
            got = kl_marginal(mp, mq)
            assert got == pytest.approx(oracles.kl(mp.probs, mq.probs), abs=1e-12)
            l1 = l1_marginal_distance(mp, mq)
            assert 0.5 * l1**2 <= got + 1e-9

    def test_nonnegative_and_zero_iff_equal(self):
        p, q = random_pair(4)
        mp, mq = p.marginal_x(), q.marginal_x()
        assert kl_marginal(mp, mq) > 0
        assert kl_marginal(mp, mp) == 0.0


class TestRelabelingInvariance:
    def test_bound_quantities_invariant_under_permutations(self, alphabet433):
        rng = np.random.default_rng(20)
        prior_probs = rng.dirichlet(np.full(27, 0.3))
        tc = sample_conditional(alphabet433, rng).probs
        mc = sample_conditional(alphabet433, rng).probs

        def report(pp, t, m):
            prior = DensePrior(alphabet433, pp)
            return bound_report(
                JointDist.from_structured(prior, make_conditional(alphabet433, t)),
                JointDist.from_structured(prior, make_conditional(alphabet433, m)),
            )

        base = report(prior_probs, tc, mc)

        perm_c = np.array([2, 0, 1])
        perm_x = np.array([3, 0, 2, 1])
        # permute the label axis of the prior and both conditionals
        table = prior_probs.reshape(3, 3, 3)
        inv_c = np.argsort(perm_c)
        permuted_prior = table[np.ix_(inv_c, inv_c, inv_c)].reshape(-1)
        t2 = tc[np.ix_(np.argsort(perm_x), inv_c)]
        m2 = mc[np.ix_(np.argsort(perm_x), inv_c)]
        other = report(permuted_prior, t2, m2)

        for attr in (
            "decision_gap",
            "position_l1_gap",
            "l1_marginal",
            "kl",
            "sigma_min",
            "pinv_l1",
            "l1_bound",
        ):
            a = getattr(base, attr)
            b = getattr(other, attr)
            if a is None:
                assert b is None
            else:
                assert a == pytest.approx(b, abs=1e-10)


class TestBoundReport:
    @pytest.mark.parametrize("variant", ["position_unigram", "bigram"])
    def test_chain_holds_on_factorized_priors(self, variant):
        # the simulation only ever draws dense priors; the chain must hold
        # for structured instances over factorized priors just the same
        held = 0
        for seed in range(30):
            p, q = random_pair(seed, variant=variant)
            rep = bound_report(p, q)
            assert rep.decision_gap <= rep.position_l1_gap + 1e-9
            if rep.bound_applicable:
                held += 1
                assert rep.position_l1_gap <= rep.l1_bound + 1e-9
                if math.isfinite(rep.kl):
                    assert (
                        rep.decision_gap**2
                        <= rep.pinsker_factor * rep.kl + 1e-9
                    )
            assert rep.chain_ok
        assert held >= 10

    def test_full_chain_on_structured_instance(self):
        p, q = random_pair(21)
        rep = bound_report(p, q)
        assert rep.decision_gap == pytest.approx(mismatch(p, q).averaged)
        assert rep.position_l1_gap == pytest.approx(position_l1_gap(p, q))
        if rep.bound_applicable:
            assert rep.l1_bound == pytest.approx(9 * rep.pinv_l1 * rep.l1_marginal)
            assert rep.pinsker_factor == pytest.approx(162 * rep.pinv_l1**2)
        assert rep.chain_ok
        assert rep.d_cond_1 is not None and rep.d_pos_1 is not None

    def test_csv_row_shape(self):
        p, q = random_pair(22)
        rep = bound_report(p, q)
        row = rep.csv_row(5, 4, 3, 3)
        assert len(row.split(",")) == len(rep.CSV_HEADER.split(","))
        assert row.startswith("5,4,3,3,")
