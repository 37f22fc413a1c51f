import numpy as np
import pytest

from seqbound import Alphabet, DensePrior, JointDist, make_conditional, sample_prior


@pytest.fixture
def alphabet433():
    return Alphabet(4, 3, 3)


def random_cond_array(rng, alphabet, concentration=1.0):
    return rng.dirichlet(
        np.full(alphabet.x_size, concentration), size=alphabet.c_size
    ).T


def random_pair(seed, alphabet=None, variant="dense"):
    """A (true, model) pair of structured joints sharing a random prior."""
    alphabet = alphabet or Alphabet(4, 3, 3)
    rng = np.random.default_rng(seed)
    if variant == "dense":
        prior = DensePrior(alphabet, rng.dirichlet(np.full(alphabet.n_c_seqs, 0.5)))
    else:
        prior = sample_prior(alphabet, variant, rng)
    true_cond = make_conditional(alphabet, random_cond_array(rng, alphabet))
    model_cond = make_conditional(alphabet, random_cond_array(rng, alphabet))
    return (
        JointDist.from_structured(prior, true_cond),
        JointDist.from_structured(prior, model_cond),
    )
