"""Monte-Carlo verification of the bound chain and necessity witnesses.

`run_bound_simulation` rejection-samples (prior, true conditional, model
conditional) triples, keeps those whose label matrix passes the
conditioning filters (sigma_min floor, left-inverse l1 cap), and evaluates
the full bound chain on each accepted instance. Instances are seeded
individually from (master_seed, draw_index) so output is reproducible and
independent of any batching.

The two `find_*_counterexample` searches construct exact-match witnesses:
pairs with identical observation marginals (l1 <= 1e-9) whose decision gap
is nonetheless > 0.01, each violating exactly one of the two conditions
(full column rank, position-shared conditional). They certify that neither
condition can be dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from itertools import combinations, permutations
from typing import Iterator, Optional

import numpy as np

from ._kernels import instance_chain_stats
from .bounds import (
    BoundReport,
    LmMatrix,
    chain_holds,
    l1_gap_bound,
    l1_marginal_distance,
    lm_matrix_from_rows,
    pinsker_beta,
)
from .decision import mismatch
from .dists import Alphabet, JointDist, PositionUnigramPrior, make_conditional
from .errors import FilterStarvation, NotFound, ShapeMismatch

# Dense priors are drawn from a spiky symmetric Dirichlet: near-uniform
# priors give a nearly rank-one label matrix and essentially never pass the
# left-inverse cap, so flat concentrations starve the filters.
PRIOR_CONCENTRATION = 0.05
COND_CONCENTRATION = 1.0

# Interpolated model draws q = (1-lambda) p + lambda r with log-uniform
# lambda populate the small-distance corner of the scatter that independent
# draws almost never reach.
LAMBDA_LOW = 1e-3
LAMBDA_HIGH = 1.0

STARVATION_WINDOW = 100_000
STARVATION_MIN_RATE = 1e-4

# Counterexample searches accept a witness once its decision gap clears
# this margin; the scan rejects degenerate (zero-perturbation) candidates.
WITNESS_GAP = 0.01
WITNESS_L1_TOL = 1e-9


@dataclass(frozen=True)
class SimConfig:
    alphabet: Alphabet
    samples: int
    sigma_min_floor: float = 0.01
    pinv_l1_cap: float = 2.0
    master_seed: int = 0
    interpolation_fraction: float = 0.5

    def __post_init__(self):
        if self.samples <= 0:
            raise ValueError(f"samples must be positive, got {self.samples}")
        if self.sigma_min_floor < 0:
            raise ValueError("sigma_min_floor must be >= 0")
        if self.pinv_l1_cap <= 0:
            raise ValueError("pinv_l1_cap must be positive")
        if not 0.0 <= self.interpolation_fraction <= 1.0:
            raise ValueError("interpolation_fraction must be in [0, 1]")
        if self.master_seed < 0:
            raise ValueError("master_seed must be >= 0")


@dataclass(frozen=True)
class SimRecord:
    report: BoundReport
    draw_index: int  # index of the accepted draw in the rejection stream
    attempts: int  # draws consumed since the previous acceptance


def _dense_position_marginals(prior_probs: np.ndarray, alphabet: Alphabet) -> np.ndarray:
    t = prior_probs.reshape((alphabet.c_size,) * alphabet.seq_len)
    n = alphabet.seq_len
    return np.array(
        [t.sum(axis=tuple(i for i in range(n) if i != k)) for k in range(n)]
    )


def evaluate_instance(
    prior_probs: np.ndarray,
    true_cond: np.ndarray,
    model_cond: np.ndarray,
    alphabet: Alphabet,
    lm: Optional[LmMatrix] = None,
) -> BoundReport:
    """Bound chain for one dense-prior structured instance (kernel path)."""
    if lm is None:
        lm = lm_matrix_from_rows(_dense_position_marginals(prior_probs, alphabet))
    n_len = alphabet.seq_len
    local, gap, l1, kl = instance_chain_stats(
        np.ascontiguousarray(prior_probs),
        np.ascontiguousarray(true_cond),
        np.ascontiguousarray(model_cond),
        n_len,
    )
    if lm.full_rank:
        rhs = l1_gap_bound(lm, l1, n_len)
        beta = pinsker_beta(lm, n_len)
    else:
        rhs, beta = None, None
    report = BoundReport(
        decision_gap=float(np.mean(local)),
        position_l1_gap=gap,
        l1_marginal=l1,
        l1_bound=rhs,
        kl=kl,
        pinsker_factor=beta,
        sigma_min=lm.sigma_min,
        pinv_l1=lm.induced_l1,
        bound_applicable=lm.full_rank,
        chain_ok=False,
        local_gaps=local,
    )
    return replace(report, chain_ok=chain_holds(report))


def _draw_instance(config: SimConfig, draw_index: int):
    """One rejection-stream draw; None if the conditioning filters reject it.

    Each draw gets its own generator seeded from (master_seed, draw_index)
    so any instance can be replayed in isolation.
    """
    a = config.alphabet
    rng = np.random.default_rng(
        np.random.SeedSequence((config.master_seed, draw_index))
    )
    prior_probs = rng.dirichlet(np.full(a.n_c_seqs, PRIOR_CONCENTRATION))
    lm = lm_matrix_from_rows(_dense_position_marginals(prior_probs, a))
    if not (
        lm.full_rank
        and lm.sigma_min > config.sigma_min_floor
        and lm.induced_l1 <= config.pinv_l1_cap
    ):
        return None
    cond_alpha = np.full(a.x_size, COND_CONCENTRATION)
    true_cond = rng.dirichlet(cond_alpha, size=a.c_size).T
    if rng.random() < config.interpolation_fraction:
        lam = 10.0 ** rng.uniform(math.log10(LAMBDA_LOW), math.log10(LAMBDA_HIGH))
        other = rng.dirichlet(cond_alpha, size=a.c_size).T
        model_cond = (1.0 - lam) * true_cond + lam * other
    else:
        model_cond = rng.dirichlet(cond_alpha, size=a.c_size).T
    return prior_probs, true_cond, model_cond, lm


def replay_instance(config: SimConfig, draw_index: int):
    """Re-derive the sampled tables for one accepted draw (for diagnostics)."""
    drawn = _draw_instance(config, draw_index)
    if drawn is None:
        raise NotFound(f"draw {draw_index} was rejected by the filters")
    return drawn


def run_bound_simulation(config: SimConfig) -> Iterator[SimRecord]:
    """Yield `config.samples` accepted instances with their bound reports.

    Raises FilterStarvation when a full window of STARVATION_WINDOW draws
    accepts at a rate below STARVATION_MIN_RATE.
    """
    accepted = 0
    draw = 0
    window_draws = 0
    window_accepts = 0
    attempts = 0
    while accepted < config.samples:
        drawn = _draw_instance(config, draw)
        draw += 1
        window_draws += 1
        attempts += 1
        if drawn is not None:
            prior_probs, true_cond, model_cond, lm = drawn
            report = evaluate_instance(prior_probs, true_cond, model_cond,
                                       config.alphabet, lm)
            accepted += 1
            window_accepts += 1
            yield SimRecord(report=report, draw_index=draw - 1, attempts=attempts)
            attempts = 0

        if window_draws >= STARVATION_WINDOW:
            if window_accepts < STARVATION_MIN_RATE * window_draws:
                raise FilterStarvation(
                    f"{window_accepts} acceptances in the last {window_draws} "
                    f"draws (rate < {STARVATION_MIN_RATE:g}); filters "
                    f"sigma_min > {config.sigma_min_floor}, "
                    f"pinv_l1 <= {config.pinv_l1_cap} look unsatisfiable"
                )
            window_draws = 0
            window_accepts = 0


@dataclass(frozen=True)
class Counterexample:
    """Exact-match witness: identical marginals, positive decision gap."""

    true_dist: JointDist
    model_dist: JointDist
    l1_marginal: float
    decision_gap: float
    violated_condition: str  # "rank_deficient" or "structure_broken"
    sigma_min: float


def _verified(true_dist, model_dist, violated, sigma_min) -> Optional[Counterexample]:
    l1 = l1_marginal_distance(true_dist.marginal_x(), model_dist.marginal_x())
    gap = mismatch(true_dist, model_dist).averaged
    if l1 <= WITNESS_L1_TOL and gap > WITNESS_GAP:
        return Counterexample(true_dist, model_dist, l1, gap, violated, sigma_min)
    return None


def find_rank_counterexample(
    alphabet: Alphabet, rng_seed, max_tries: int = 200
) -> Counterexample:
    """Witness that a rank-deficient label matrix breaks identifiability.

    All position-unigram rows share one table u, so the label matrix has
    rank 1 and a nontrivial null space. Shifting probability between two
    observation rows along a null vector leaves every position marginal
    of the observations (hence the sequence marginal) untouched while
    moving the model's argmax; the scan over row pairs and magnitudes
    stops at the first shift whose decision gap clears WITNESS_GAP.
    """
    if alphabet.c_size < 2:
        raise ShapeMismatch("need at least two labels")
    rng = np.random.default_rng(rng_seed)
    a = alphabet
    for _ in range(max_tries):
        u = rng.dirichlet(np.ones(a.c_size))
        if u.min() < 0.05:
            continue
        rows = np.tile(u, (a.seq_len, 1))
        lm = lm_matrix_from_rows(rows)
        null_vec = np.linalg.svd(rows)[2][-1]
        null_vec = null_vec / np.abs(null_vec).max()
        prior = PositionUnigramPrior(a, rows)
        pr = rng.dirichlet(np.ones(a.x_size), size=a.c_size).T
        score_p = u[None, :] * pr
        bayes = score_p.argmax(axis=1)
        xs = np.arange(a.x_size)
        for xa, xb in permutations(range(a.x_size), 2):
            for eps in np.geomspace(0.5, 1e-3, 40):
                q = pr.copy()
                q[xa] += eps * null_vec
                q[xb] -= eps * null_vec
                if (q < -1e-15).any():
                    continue
                q = np.clip(q, 0.0, None)
                picks = (u[None, :] * q).argmax(axis=1)
                screen = (score_p[xs, bayes] - score_p[xs, picks]).sum()
                if screen <= WITNESS_GAP:
                    continue
                true_dist = JointDist.from_structured(
                    prior, make_conditional(a, pr)
                )
                model_dist = JointDist.from_structured(
                    prior, make_conditional(a, q)
                )
                cex = _verified(
                    true_dist, model_dist, "rank_deficient", lm.sigma_min
                )
                if cex is not None:
                    return cex
    raise NotFound(
        f"no rank-deficiency witness in {max_tries} tries at {alphabet}"
    )


def find_structure_counterexample(
    alphabet: Alphabet, rng_seed, max_tries: int = 200
) -> Counterexample:
    """Witness that position-dependent true conditionals break the bound.

    The true joint factorizes across positions with conditionals
    p_n = q_hat + eta_n, where each eta_n is chosen so that position
    marginals are unchanged (weighted column combinations vanish under the
    prior row u_n) and columns still normalize. The shared-table model
    q_hat then reproduces the observation marginal exactly although its
    decisions differ; the label matrix is kept well-conditioned so only
    the structure condition is violated.
    """
    if alphabet.seq_len < 2:
        raise ShapeMismatch("need sequence length >= 2")
    if alphabet.c_size < 2:
        raise ShapeMismatch("need at least two labels")
    rng = np.random.default_rng(rng_seed)
    a = alphabet
    xs = np.arange(a.x_size)
    for _ in range(max_tries):
        us = rng.dirichlet(np.ones(a.c_size), size=a.seq_len)
        lm = lm_matrix_from_rows(us)
        if not lm.full_rank or lm.sigma_min < 0.05:
            continue
        qhat = rng.dirichlet(np.ones(a.x_size), size=a.c_size).T
        for c1, c2 in combinations(range(a.c_size), 2):
            for x1, x2 in permutations(range(a.x_size), 2):
                for delta in np.geomspace(1.0, 1e-3, 40):
                    conds = np.empty((a.seq_len, a.x_size, a.c_size))
                    ok = True
                    for n in range(a.seq_len):
                        eta = np.zeros((a.x_size, a.c_size))
                        eta[x1, c1] = +delta * us[n, c2]
                        eta[x1, c2] = -delta * us[n, c1]
                        eta[x2, c1] = -delta * us[n, c2]
                        eta[x2, c2] = +delta * us[n, c1]
                        cand = qhat + eta
                        if (cand < -1e-15).any():
                            ok = False
                            break
                        conds[n] = np.clip(cand, 0.0, None)
                    if not ok:
                        continue
                    screen = 0.0
                    for n in range(a.seq_len):
                        sp = us[n][None, :] * conds[n]
                        sq = us[n][None, :] * qhat
                        screen += (
                            sp[xs, sp.argmax(axis=1)] - sp[xs, sq.argmax(axis=1)]
                        ).sum()
                    screen /= a.seq_len
                    if screen <= WITNESS_GAP:
                        continue
                    prior = PositionUnigramPrior(a, us)
                    true_dist = JointDist.from_position_conds(prior, conds)
                    model_dist = JointDist.from_structured(
                        prior, make_conditional(a, qhat)
                    )
                    if true_dist.structured:
                        continue
                    cex = _verified(
                        true_dist, model_dist, "structure_broken", lm.sigma_min
                    )
                    if cex is not None:
                        return cex
    raise NotFound(
        f"no structure-violation witness in {max_tries} tries at {alphabet}"
    )
