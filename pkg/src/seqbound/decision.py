"""Decision rules and the decision-gap between two distributions.

A decision rule labels each position of an observation sequence with the
argmax over labels of that position's joint probability under some
distribution. Running the rule derived from a model q instead of the true
distribution costs true probability mass; `mismatch` quantifies that cost
exactly by enumerating X^N:

    local[n] = sum_x [ p_n(best_p(n,x), x) - p_n(best_q(n,x), x) ]
    averaged = mean_n local[n]

Both terms are scored under the true distribution's position joints, so
averaged >= 0 and is zero exactly when the two rules agree wherever mass
sits. Ties are broken toward the lowest label id in both rules so a tie
never manufactures a gap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dists import JointDist, seq_index
from .errors import AlphabetMismatch, LengthMismatch


@dataclass(frozen=True)
class DecisionRule:
    """Per-position argmax labeling driven by `source`'s position joints."""

    source: JointDist

    def decide(self, x_seq) -> np.ndarray:
        return decide(self, x_seq)


def decisions_from_table(pos_joint: np.ndarray) -> np.ndarray:
    """Argmax labels, lowest id on ties, from an (N, |C|, M) joint table."""
    return pos_joint.argmax(axis=1)


def decide(rule: DecisionRule, x_seq) -> np.ndarray:
    """Label an observation sequence position by position."""
    a = rule.source.alphabet
    x_seq = np.asarray(x_seq, dtype=np.int64)
    table = rule.source.position_joint_table()  # (N, C, M)
    m = seq_index(x_seq, a.x_size)
    return table[:, :, m].argmax(axis=1)


def hamming_error(c_seq, c_ref) -> float:
    """Fraction of positions where the two label sequences disagree."""
    c_seq = np.asarray(c_seq)
    c_ref = np.asarray(c_ref)
    if c_seq.shape != c_ref.shape:
        raise LengthMismatch(f"lengths {c_seq.shape} vs {c_ref.shape}")
    return float(np.mean(c_seq != c_ref))


@dataclass(frozen=True)
class MismatchReport:
    local: np.ndarray  # (N,) per-position decision gaps
    averaged: float

    def to_json(self) -> dict:
        return {"local": self.local.tolist(), "averaged": self.averaged}


def mismatch(true_dist: JointDist, model_dist: JointDist) -> MismatchReport:
    """Exact decision gap of model_dist's rule against the Bayes rule.

    Enumerates every observation sequence, takes each rule's per-position
    argmax, and accumulates the true-mass difference between the Bayes
    pick and the model pick.
    """
    if true_dist.alphabet != model_dist.alphabet:
        raise AlphabetMismatch(
            f"{true_dist.alphabet} vs {model_dist.alphabet}"
        )
    p_tab = true_dist.position_joint_table()
    q_tab = model_dist.position_joint_table()
    return mismatch_from_tables(p_tab, q_tab)


def mismatch_from_tables(p_tab: np.ndarray, q_tab: np.ndarray) -> MismatchReport:
    """Decision gap from precomputed (N, |C|, M) position-joint tables."""
    n_len, _, m = p_tab.shape
    bayes = decisions_from_table(p_tab)
    model = decisions_from_table(q_tab)
    cols = np.arange(m)
    local = np.empty(n_len)
    for n in range(n_len):
        local[n] = (p_tab[n, bayes[n], cols] - p_tab[n, model[n], cols]).sum()
    return MismatchReport(local, float(local.mean()))
