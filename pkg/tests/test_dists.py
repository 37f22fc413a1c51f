import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from seqbound import (
    Alphabet,
    BigramPrior,
    DensePrior,
    JointDist,
    PositionUnigramPrior,
    make_conditional,
    marginal_x,
    position_joint,
    sample_conditional,
    sample_prior,
    sequence_dist,
)
from seqbound.errors import (
    EnumerationCapExceeded,
    IndexOutOfRange,
    NegativeEntry,
    NotNormalized,
    ShapeMismatch,
    ZeroColumn,
)


def identity_padded(alphabet):
    """Column c is the unit vector on observation x = c."""
    t = np.zeros((alphabet.x_size, alphabet.c_size))
    for c in range(alphabet.c_size):
        t[c, c] = 1.0
    return t


class TestAlphabet:
    def test_requires_more_observations_than_labels(self):
        with pytest.raises(ShapeMismatch):
            Alphabet(3, 3, 2)
        with pytest.raises(ShapeMismatch):
            Alphabet(2, 3, 2)

    def test_enumeration_cap(self):
        with pytest.raises(EnumerationCapExceeded):
            Alphabet(10, 3, 7)  # 10^7 observation sequences
        Alphabet(10, 3, 6)

    def test_positive_sizes(self):
        with pytest.raises(ShapeMismatch):
            Alphabet(4, 3, 0)

    def test_sequence_enumeration_order(self):
        a = Alphabet(3, 2, 2)
        seqs = a.c_sequences()
        assert seqs.tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]


class TestMakeConditional:
    def test_identity_padded(self, alphabet433):
        cond = make_conditional(alphabet433, identity_padded(alphabet433))
        assert np.array_equal(cond.probs, identity_padded(alphabet433))

    def test_rejects_off_normalization(self, alphabet433):
        t = identity_padded(alphabet433)
        t[0, 0] = 0.5  # column 0 now sums to 0.5
        with pytest.raises(NotNormalized):
            make_conditional(alphabet433, t)
        fixed = make_conditional(alphabet433, t, normalize=True)
        assert np.allclose(fixed.probs.sum(axis=0), 1.0, atol=1e-12)

    def test_rejects_negative(self, alphabet433):
        t = identity_padded(alphabet433)
        t[1, 0] = -0.1
        with pytest.raises(NegativeEntry):
            make_conditional(alphabet433, t)

    def test_rejects_zero_column(self, alphabet433):
        t = identity_padded(alphabet433)
        t[:, 2] = 0.0
        with pytest.raises(ZeroColumn):
            make_conditional(alphabet433, t)

    def test_rejects_bad_shape(self, alphabet433):
        with pytest.raises(ShapeMismatch):
            make_conditional(alphabet433, np.ones((3, 4)) / 3)

    def test_dirichlet_columns_sum_to_one(self, alphabet433):
        rng = np.random.default_rng(5)
        raw = rng.dirichlet(np.ones(4), size=3).T
        cond = make_conditional(alphabet433, raw)
        assert np.abs(cond.probs.sum(axis=0) - 1.0).max() < 1e-10


class TestSampleConditional:
    def test_large_concentration_approaches_uniform(self, alphabet433):
        cond = sample_conditional(alphabet433, 0, concentration=1e6)
        assert np.abs(cond.probs - 0.25).max() < 1e-2

    def test_deterministic(self, alphabet433):
        a = sample_conditional(alphabet433, 123, concentration=0.7)
        b = sample_conditional(alphabet433, 123, concentration=0.7)
        assert np.array_equal(a.probs, b.probs)

    def test_monte_carlo_column_mean(self, alphabet433):
        draws = np.stack(
            [sample_conditional(alphabet433, s).probs for s in range(1000)]
        )
        assert np.abs(draws.mean(axis=0) - 0.25).max() < 0.03

    def test_rejects_bad_concentration(self, alphabet433):
        with pytest.raises(NegativeEntry):
            sample_conditional(alphabet433, 0, concentration=0.0)


class TestPriors:
    def test_dense_normalized(self, alphabet433):
        prior = sample_prior(alphabet433, "dense", 0)
        assert prior.probs.shape == (27,)
        assert abs(prior.probs.sum() - 1.0) < 1e-10

    def test_unigram_dense_expansion(self, alphabet433):
        prior = sample_prior(alphabet433, "position_unigram", 1)
        expect = oracles.dense_from_unigram(prior.tables)
        assert np.abs(prior.to_dense() - expect).max() < 1e-15

    def test_bigram_dense_expansion(self, alphabet433):
        prior = sample_prior(alphabet433, "bigram", 2)
        expect = oracles.dense_from_bigram(prior.init, prior.trans, 3)
        assert np.abs(prior.to_dense() - expect).max() < 1e-15

    @pytest.mark.parametrize("variant", ["dense", "position_unigram", "bigram"])
    def test_sampling_deterministic(self, alphabet433, variant):
        p1 = sample_prior(alphabet433, variant, 7)
        p2 = sample_prior(alphabet433, variant, 7)
        assert np.array_equal(p1.to_dense(), p2.to_dense())
        s1 = p1.sample(11, 50)
        s2 = p2.sample(11, 50)
        assert np.array_equal(s1, s2)

    @pytest.mark.parametrize("variant", ["dense", "position_unigram", "bigram"])
    def test_position_marginals_match_dense_expansion(self, alphabet433, variant):
        prior = sample_prior(alphabet433, variant, 3)
        dense = DensePrior(alphabet433, prior.to_dense())
        assert np.abs(
            prior.position_marginals() - dense.position_marginals()
        ).max() < 1e-12

    def test_unknown_variant(self, alphabet433):
        with pytest.raises(ShapeMismatch):
            sample_prior(alphabet433, "trigram", 0)

    def test_rejects_unnormalized_tables(self, alphabet433):
        with pytest.raises(NotNormalized):
            PositionUnigramPrior(alphabet433, np.full((3, 3), 0.5))
        with pytest.raises(NotNormalized):
            BigramPrior(alphabet433, np.array([0.5, 0.2, 0.3]), np.eye(3) * 0.9)


class TestMarginalX:
    def test_deterministic_cond_pushes_prior_forward(self, alphabet433):
        prior = sample_prior(alphabet433, "bigram", 4)
        cond = make_conditional(alphabet433, identity_padded(alphabet433))
        dist = marginal_x(prior, cond)
        dense = prior.to_dense()
        # x sequences over {0,1,2} mirror label sequences; the rest get 0
        a = alphabet433
        for k, cseq in enumerate(a.c_sequences()):
            m = oracles.seq_to_index(cseq, a.x_size)
            assert abs(dist.probs[m] - dense[k]) < 1e-15
        assert abs(dist.probs.sum() - 1.0) < 1e-12

    def test_uniform_cond_gives_uniform_marginal(self, alphabet433):
        prior = sample_prior(alphabet433, "dense", 5)
        cond = make_conditional(alphabet433, np.full((4, 3), 0.25))
        dist = marginal_x(prior, cond)
        assert np.abs(dist.probs - 1.0 / 64).max() < 1e-14

    @pytest.mark.parametrize("variant", ["dense", "position_unigram", "bigram"])
    def test_matches_bruteforce(self, alphabet433, variant):
        for seed in range(8):
            rng = np.random.default_rng(seed)
            prior = sample_prior(alphabet433, variant, rng)
            cond = sample_conditional(alphabet433, rng)
            got = marginal_x(prior, cond)
            expect = oracles.marginal_x(prior.to_dense(), cond.probs, 4, 3, 3)
            assert np.abs(got.probs - expect).max() < 1e-12

    def test_position_marginals_are_brute_sums(self, alphabet433):
        prior = sample_prior(alphabet433, "dense", 6)
        cond = sample_conditional(alphabet433, 6)
        dist = marginal_x(prior, cond)
        t = dist.probs.reshape(4, 4, 4)
        assert np.abs(dist.position_marginals[0] - t.sum(axis=(1, 2))).max() == 0.0
        assert np.abs(dist.position_marginals[1] - t.sum(axis=(0, 2))).max() == 0.0
        assert np.abs(dist.position_marginals[2] - t.sum(axis=(0, 1))).max() == 0.0


class TestPositionJoint:
    def test_single_position_reduces_to_product(self):
        a = Alphabet(3, 2, 1)
        prior = sample_prior(a, "position_unigram", 0)
        cond = sample_conditional(a, 1)
        for c in range(2):
            for x in range(3):
                got = position_joint(prior, cond, 1, c, [x])
                assert abs(got - prior.tables[0, c] * cond.probs[x, c]) < 1e-15

    @pytest.mark.parametrize("variant", ["dense", "position_unigram", "bigram"])
    def test_sums_to_sequence_marginal(self, alphabet433, variant):
        rng = np.random.default_rng(9)
        prior = sample_prior(alphabet433, variant, rng)
        cond = sample_conditional(alphabet433, rng)
        dist = marginal_x(prior, cond)
        a = alphabet433
        for m, xseq in enumerate(a.x_sequences()[::7]):
            for n in range(1, 4):
                tot = sum(
                    position_joint(prior, cond, n, c, xseq) for c in range(3)
                )
                idx = oracles.seq_to_index(xseq, 4)
                assert abs(tot - dist.probs[idx]) < 1e-12

    @pytest.mark.parametrize("variant", ["dense", "position_unigram", "bigram"])
    def test_matches_bruteforce(self, alphabet433, variant):
        rng = np.random.default_rng(10)
        prior = sample_prior(alphabet433, variant, rng)
        cond = sample_conditional(alphabet433, rng)
        dense = prior.to_dense()
        a = alphabet433
        for xseq in a.x_sequences()[::5]:
            for n in range(3):
                for c in range(3):
                    got = position_joint(prior, cond, n + 1, c, xseq)
                    expect = oracles.position_joint(
                        dense, cond.probs, 4, 3, 3, n, c, xseq
                    )
                    assert abs(got - expect) < 1e-12

    def test_position_out_of_range(self, alphabet433):
        prior = sample_prior(alphabet433, "bigram", 0)
        cond = sample_conditional(alphabet433, 0)
        with pytest.raises(IndexOutOfRange):
            position_joint(prior, cond, 0, 0, [0, 0, 0])
        with pytest.raises(IndexOutOfRange):
            position_joint(prior, cond, 4, 0, [0, 0, 0])
        with pytest.raises(IndexOutOfRange):
            position_joint(prior, cond, 1, 3, [0, 0, 0])


class TestJointDist:
    def test_materialized_joint_matches_factorization(self, alphabet433):
        rng = np.random.default_rng(12)
        prior = sample_prior(alphabet433, "dense", rng)
        cond = sample_conditional(alphabet433, rng)
        joint = JointDist.from_structured(prior, cond)
        table = joint.joint_table()
        a = alphabet433
        dense = prior.to_dense()
        for k, cseq in enumerate(a.c_sequences()):
            for m, xseq in enumerate(a.x_sequences()):
                expect = dense[k]
                for i in range(3):
                    expect *= cond.probs[xseq[i], cseq[i]]
                assert abs(table[k, m] - expect) < 1e-12

    def test_structured_flag(self, alphabet433):
        rng = np.random.default_rng(13)
        cond = sample_conditional(alphabet433, rng)
        prior = sample_prior(alphabet433, "position_unigram", rng)
        same = JointDist.from_position_conds(prior, [cond.probs] * 3)
        assert same.structured
        other = sample_conditional(alphabet433, 99).probs
        mixed = JointDist.from_position_conds(prior, [cond.probs, other, cond.probs])
        assert not mixed.structured
        with pytest.raises(ShapeMismatch):
            mixed.cond

    @pytest.mark.parametrize("variant", ["dense", "position_unigram", "bigram"])
    def test_position_joint_table_matches_bruteforce(self, alphabet433, variant):
        rng = np.random.default_rng(14)
        prior = sample_prior(alphabet433, variant, rng)
        cond = sample_conditional(alphabet433, rng)
        joint = JointDist.from_structured(prior, cond)
        got = joint.position_joint_table()
        expect = oracles.position_joint_table(
            prior.to_dense(), np.broadcast_to(cond.probs, (3, 4, 3)), 4, 3, 3
        )
        assert np.abs(got - expect).max() < 1e-12

    def test_position_dependent_conds_marginal(self, alphabet433):
        rng = np.random.default_rng(15)
        prior = sample_prior(alphabet433, "position_unigram", rng)
        conds = np.stack(
            [sample_conditional(alphabet433, s).probs for s in (21, 22, 23)]
        )
        joint = JointDist.from_position_conds(prior, conds)
        got = joint.position_joint_table()
        expect = oracles.position_joint_table(prior.to_dense(), conds, 4, 3, 3)
        assert np.abs(got - expect).max() < 1e-12
        marg = joint.marginal_x()
        assert np.abs(marg.probs - expect[0].sum(axis=0)).max() < 1e-12

    def test_immutable_arrays(self, alphabet433):
        prior = sample_prior(alphabet433, "dense", 1)
        with pytest.raises(ValueError):
            prior.probs[0] = 0.5

    def test_joint_table_respects_enumeration_cap(self):
        # both spaces fit the cap but their product does not, so the dense
        # joint must refuse to materialize
        a = Alphabet(10, 9, 5, enum_cap=100_000)
        prior = sample_prior(a, "position_unigram", 0)
        cond = sample_conditional(a, 0)
        joint = JointDist.from_structured(prior, cond)
        with pytest.raises(EnumerationCapExceeded):
            joint.joint_table()


class TestSequenceDist:
    def test_rejects_off_mass(self, alphabet433):
        probs = np.full(64, 1.0 / 64)
        sequence_dist(alphabet433, 4, probs)
        with pytest.raises(NotNormalized):
            sequence_dist(alphabet433, 4, probs * 1.5)

    def test_rejects_negative(self, alphabet433):
        probs = np.full(64, 1.0 / 64)
        probs[0] = -probs[0]
        with pytest.raises(NegativeEntry):
            sequence_dist(alphabet433, 4, probs)


@settings(max_examples=25, deadline=None)
@given(variant=st.sampled_from(["dense", "position_unigram", "bigram"]),
       seed=st.integers(0, 2**31 - 1))
def test_prior_expansion_always_normalized(variant, seed):
    a = Alphabet(4, 3, 3)
    prior = sample_prior(a, variant, seed)
    assert abs(prior.to_dense().sum() - 1.0) < 1e-9
    assert np.abs(prior.position_marginals().sum(axis=1) - 1.0).max() < 1e-9
