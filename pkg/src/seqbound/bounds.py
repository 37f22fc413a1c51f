"""Bound quantities linking decision gaps to marginal distances.

The chain verified throughout the package, for a true distribution p and a
model q sharing a label prior:

    decision_gap(p, q)  <=  position_l1_gap(p, q)                  (always)
                        <=  N^2 ||M+||_1 * l1(p_marg, q_marg)      (structured
                                                                    + full rank)
    decision_gap^2      <=  2 N^4 ||M+||_1^2 * KL(p_marg || q_marg)

where M is the N x |C| matrix of the prior's position-unigram label
probabilities ("language-model matrix") and M+ its left-inverse. The
left-inverse exists exactly when M has full column rank, which is the
label-distinguishability condition; rank-deficient matrices are returned
with a flag rather than rejected because deliberate counterexamples need
them.

Supporting pieces: lp distances between conditional tables and between
position marginals (the contraction d_cond <= ||M+||_p d_pos), the
telescoped product inequality behind the structured bound, and exact KL
between dense sequence marginals (+inf when absolute continuity fails,
never smoothed here).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .decision import mismatch
from .dists import ConditionalTable, JointDist, LabelPrior, SequenceDist
from .errors import AlphabetMismatch, RankDeficientInput, ShapeMismatch

# Rank decided by sigma_min > RANK_RTOL * sigma_max; SVD-based pseudoinverse
# avoids squaring the condition number the way normal equations would.
RANK_RTOL = 1e-8

CHAIN_TOL = 1e-9


@dataclass(frozen=True)
class LmMatrix:
    """Position-unigram label matrix with its SVD-derived left-inverse.

    matrix[n, c] is the prior probability of label c at position n, so
    each row sums to 1. `pinv` is the Moore-Penrose pseudoinverse; it is a
    genuine left-inverse only when `full_rank` is set.
    """

    matrix: np.ndarray  # (N, |C|)
    singular_values: np.ndarray  # descending
    sigma_min: float
    sigma_max: float
    pinv: np.ndarray  # (|C|, N)
    induced_l1: float  # max absolute column sum of pinv
    induced_l2: float  # largest singular value of pinv
    full_rank: bool

    @property
    def rank(self) -> int:
        return int((self.singular_values > RANK_RTOL * self.sigma_max).sum())


def lm_matrix_from_rows(matrix: np.ndarray) -> LmMatrix:
    """Build an LmMatrix from raw position-unigram rows."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise ShapeMismatch(f"expected a 2-d matrix, got shape {matrix.shape}")
    u, s, vt = np.linalg.svd(matrix, full_matrices=False)
    sigma_max = float(s[0]) if s.size else 0.0
    sigma_min = float(s[-1]) if s.size else 0.0
    keep = s > RANK_RTOL * sigma_max
    inv_s = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)
    pinv = (vt.T * inv_s) @ u.T
    full_rank = bool(keep.all()) and matrix.shape[0] >= matrix.shape[1]
    induced_l1 = float(np.abs(pinv).sum(axis=0).max())
    induced_l2 = float(inv_s.max()) if s.size else 0.0
    return LmMatrix(
        matrix=matrix,
        singular_values=s,
        sigma_min=sigma_min,
        sigma_max=sigma_max,
        pinv=pinv,
        induced_l1=induced_l1,
        induced_l2=induced_l2,
        full_rank=full_rank,
    )


def build_lm_matrix(prior: LabelPrior) -> LmMatrix:
    return lm_matrix_from_rows(prior.position_marginals())


def position_l1_gap(true_dist: JointDist, model_dist: JointDist) -> float:
    """Average over positions of the full l1 distance between position joints.

    (1/N) sum_n sum_x sum_c |p_n(c, x_1^N) - q_n(c, x_1^N)|, computed by
    exact enumeration. Upper-bounds the decision gap.
    """
    if true_dist.alphabet != model_dist.alphabet:
        raise AlphabetMismatch(f"{true_dist.alphabet} vs {model_dist.alphabet}")
    p_tab = true_dist.position_joint_table()
    q_tab = model_dist.position_joint_table()
    return float(np.abs(p_tab - q_tab).sum() / true_dist.alphabet.seq_len)


def l1_marginal_distance(p: SequenceDist, q: SequenceDist) -> float:
    """Exact l1 distance between two dense sequence marginals."""
    _check_same_space(p, q)
    return float(np.abs(p.probs - q.probs).sum())


def _check_same_space(p: SequenceDist, q: SequenceDist) -> None:
    if p.alphabet != q.alphabet or p.base_size != q.base_size:
        raise AlphabetMismatch(
            f"distributions live on different spaces: "
            f"{p.alphabet}/{p.base_size} vs {q.alphabet}/{q.base_size}"
        )


def l1_gap_bound(lm: LmMatrix, l1_marg: float, n_len: int) -> float:
    """N^2 ||M+||_1 times the sequence-marginal l1 distance.

    Valid as an upper bound on position_l1_gap only for structured true
    distributions with full-column-rank lm.
    """
    if not lm.full_rank:
        raise RankDeficientInput(
            f"left-inverse undefined: sigma_min={lm.sigma_min:.3e}"
        )
    return float(n_len**2 * lm.induced_l1 * l1_marg)


def pinsker_beta(lm: LmMatrix, n_len: int) -> float:
    """Fixed factor 2 N^4 ||M+||_1^2 relating decision_gap^2 to marginal KL."""
    if not lm.full_rank:
        raise RankDeficientInput(
            f"left-inverse undefined: sigma_min={lm.sigma_min:.3e}"
        )
    return float(2.0 * n_len**4 * lm.induced_l1**2)


def table_lp_distances(
    true_cond: ConditionalTable,
    model_cond: ConditionalTable,
    true_posdist: SequenceDist,
    model_posdist: SequenceDist,
    p: int,
) -> tuple[float, float]:
    """lp distance between conditional tables and between position marginals.

    Returns (d_cond, d_pos) with
        d_cond = (sum_x sum_c |pr(x|c) - q(x|c)|^p)^(1/p)
        d_pos  = (sum_n sum_x |pr_n(x) - q_n(x)|^p)^(1/p)
    The contraction d_cond <= ||M+||_p * d_pos holds when both marginals
    come from the same full-rank prior; callers assert it.
    """
    if p not in (1, 2):
        raise ShapeMismatch(f"p must be 1 or 2, got {p}")
    if true_cond.alphabet != model_cond.alphabet:
        raise AlphabetMismatch("conditionals built over different alphabets")
    _check_same_space(true_posdist, model_posdist)
    d_cond = float(
        (np.abs(true_cond.probs - model_cond.probs) ** p).sum() ** (1.0 / p)
    )
    d_pos = float(
        (
            np.abs(true_posdist.position_marginals - model_posdist.position_marginals)
            ** p
        ).sum()
        ** (1.0 / p)
    )
    return d_cond, d_pos


def telescope_gap(
    true_cond: ConditionalTable, model_cond: ConditionalTable, c_seq, x_seq
) -> tuple[float, float]:
    """Product difference and its telescoped majorant for one (c, x) pair.

    lhs = |prod_n pr(x_n|c_n) - prod_n q(x_n|c_n)|
    rhs = sum_j prod_{n<j} pr * prod_{k>j} q * |pr(x_j|c_j) - q(x_j|c_j)|

    Swapping one factor at a time telescopes the product difference, so
    lhs <= rhs always, with equality at length 1.
    """
    c_seq = np.asarray(c_seq, dtype=np.int64)
    x_seq = np.asarray(x_seq, dtype=np.int64)
    if c_seq.shape != x_seq.shape:
        raise ShapeMismatch(f"sequence shapes differ: {c_seq.shape} vs {x_seq.shape}")
    pr = true_cond.probs[x_seq, c_seq]
    q = model_cond.probs[x_seq, c_seq]
    lhs = abs(float(np.prod(pr) - np.prod(q)))
    n = len(pr)
    rhs = 0.0
    for j in range(n):
        rhs += float(np.prod(pr[:j]) * np.prod(q[j + 1 :]) * abs(pr[j] - q[j]))
    return lhs, rhs


def kl_marginal(p: SequenceDist, q: SequenceDist) -> float:
    """KL(p || q) over dense sequence marginals, +inf if q misses p's support.

    0 log(0/q) is taken as 0. No smoothing: a vacuous bound is reported as
    infinite rather than hidden behind an epsilon.
    """
    _check_same_space(p, q)
    pp, qq = p.probs, q.probs
    support = pp > 0
    if (qq[support] == 0).any():
        return math.inf
    return float(np.sum(pp[support] * np.log(pp[support] / qq[support])))


@dataclass(frozen=True)
class BoundReport:
    """All bound quantities for one (true, model) pair.

    `l1_bound` and `pinsker_factor` are None when the prior's matrix is
    rank deficient; `kl` may be +inf. The marginal-distance links are
    guaranteed only for structured true distributions with a full-rank
    matrix; `bound_applicable` records whether that held, and `chain_ok`
    asserts every applicable link within CHAIN_TOL.
    """

    decision_gap: float
    position_l1_gap: float
    l1_marginal: float
    l1_bound: Optional[float]
    kl: float
    pinsker_factor: Optional[float]
    sigma_min: float
    pinv_l1: float
    bound_applicable: bool
    chain_ok: bool
    local_gaps: Optional[np.ndarray] = None
    d_cond_1: Optional[float] = None
    d_pos_1: Optional[float] = None
    d_cond_2: Optional[float] = None
    d_pos_2: Optional[float] = None

    CSV_HEADER = (
        "seed,x_size,c_size,seq_len,sigma_min,pinv_l1,l1_marginal,"
        "position_l1_gap,decision_gap,l1_bound,kl,pinsker_beta,chain_ok"
    )

    def csv_row(self, seed: int, x_size: int, c_size: int, seq_len: int) -> str:
        def num(v):
            return "" if v is None else repr(float(v))

        return ",".join(
            [
                str(seed),
                str(x_size),
                str(c_size),
                str(seq_len),
                num(self.sigma_min),
                num(self.pinv_l1),
                num(self.l1_marginal),
                num(self.position_l1_gap),
                num(self.decision_gap),
                num(self.l1_bound),
                num(self.kl),
                num(self.pinsker_factor),
                "1" if self.chain_ok else "0",
            ]
        )


def chain_holds(report: BoundReport, tol: float = CHAIN_TOL) -> bool:
    ok = report.decision_gap <= report.position_l1_gap + tol
    if report.bound_applicable and report.l1_bound is not None:
        ok = ok and report.position_l1_gap <= report.l1_bound + tol
        if math.isfinite(report.kl) and report.pinsker_factor is not None:
            ok = ok and (
                report.decision_gap**2 <= report.pinsker_factor * report.kl + tol
            )
    return ok


def bound_report(true_dist: JointDist, model_dist: JointDist) -> BoundReport:
    """Evaluate the full bound chain for one pair of joint distributions.

    The language-model matrix is built from the true prior. The lp table
    distances are filled only when both sides are structured (they compare
    single conditional tables).
    """
    if true_dist.alphabet != model_dist.alphabet:
        raise AlphabetMismatch(f"{true_dist.alphabet} vs {model_dist.alphabet}")
    a = true_dist.alphabet
    lm = build_lm_matrix(true_dist.prior)
    rep = mismatch(true_dist, model_dist)
    gap = position_l1_gap(true_dist, model_dist)
    p_marg = true_dist.marginal_x()
    q_marg = model_dist.marginal_x()
    l1 = l1_marginal_distance(p_marg, q_marg)
    kl = kl_marginal(p_marg, q_marg)
    if lm.full_rank:
        rhs = l1_gap_bound(lm, l1, a.seq_len)
        beta = pinsker_beta(lm, a.seq_len)
    else:
        rhs = None
        beta = None
    fields = {}
    if true_dist.structured and model_dist.structured:
        for p in (1, 2):
            d_cond, d_pos = table_lp_distances(
                true_dist.cond, model_dist.cond, p_marg, q_marg, p
            )
            fields[f"d_cond_{p}"] = d_cond
            fields[f"d_pos_{p}"] = d_pos
    report = BoundReport(
        decision_gap=rep.averaged,
        position_l1_gap=gap,
        l1_marginal=l1,
        l1_bound=rhs,
        kl=kl,
        pinsker_factor=beta,
        sigma_min=lm.sigma_min,
        pinv_l1=lm.induced_l1,
        bound_applicable=bool(lm.full_rank and true_dist.structured),
        chain_ok=False,
        local_gaps=rep.local,
        **fields,
    )
    return replace(report, chain_ok=chain_holds(report))
