"""Sequence-level cross-entropy training of a column-softmax conditional.

The model is q(x|c) = softmax over x of logits[:, c]; the training loss is
the negative mean log marginal likelihood of the observation sequences,

    L = -(1/S) sum_s log sum_{c_1^N} lm(c_1^N) prod_n q(x_{s,n}|c_n),

with the inner sum computed by a forward recursion over labels for
factorized label priors (enumeration for dense ones). Gradients come from
posterior label counts gathered by a forward-backward pass, so they are
exact; the optimizer is plain gradient descent with halving backtracking,
which makes the recorded loss non-increasing.

A tiny epsilon (default 1e-12) is added to each conditional factor inside
the logs to keep pathological inits finite. It exists only here; bound
evaluation never smooths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .decision import mismatch_from_tables
from .dists import ConditionalTable, JointDist, LabelPrior, BigramPrior, DensePrior, PositionUnigramPrior
from .errors import DivergenceDetected, LengthMismatch, ShapeMismatch

GRAD_TOL = 1e-7
MAX_HALVINGS = 60


def softmax_columns(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=0, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=0, keepdims=True)


@dataclass(frozen=True)
class ModelParams:
    """Unconstrained logits; the conditional table is column-softmax."""

    logits: np.ndarray  # (|X|, |C|)

    def conditional(self) -> np.ndarray:
        return softmax_columns(self.logits)


@dataclass(frozen=True)
class TrainConfig:
    lm: LabelPrior
    dataset: np.ndarray  # (S, N) observation ids
    step_size: float
    max_iters: int = 5000
    smoothing_epsilon: float = 1e-12
    seed: int = 0
    eval_reference: Optional[JointDist] = None

    def __post_init__(self):
        data = np.asarray(self.dataset, dtype=np.int64)
        a = self.lm.alphabet
        if data.ndim != 2 or data.shape[0] == 0:
            raise LengthMismatch("dataset must be a nonempty (S, N) array")
        if data.shape[1] != a.seq_len:
            raise LengthMismatch(
                f"dataset sequences have length {data.shape[1]}, prior expects "
                f"{a.seq_len}"
            )
        if (data < 0).any() or (data >= a.x_size).any():
            raise ShapeMismatch("dataset contains out-of-range observation ids")
        if self.step_size <= 0:
            raise ShapeMismatch("step_size must be positive")
        if self.smoothing_epsilon <= 0:
            raise ShapeMismatch("smoothing_epsilon must be positive")
        if self.eval_reference is not None and self.eval_reference.alphabet != a:
            raise ShapeMismatch("eval_reference alphabet differs from the prior's")
        object.__setattr__(self, "dataset", data)


@dataclass(frozen=True)
class TrainRecord:
    iteration: int
    loss: float
    grad_inf: float
    kl: Optional[float] = None
    decision_gap: Optional[float] = None


@dataclass
class TrainTrajectory:
    records: list[TrainRecord] = field(default_factory=list)

    CSV_HEADER = "iter,loss,grad_inf_norm,kl,decision_gap"

    def to_csv(self) -> str:
        def num(v):
            return "" if v is None else repr(float(v))

        lines = [self.CSV_HEADER]
        for r in self.records:
            lines.append(
                f"{r.iteration},{num(r.loss)},{num(r.grad_inf)},"
                f"{num(r.kl)},{num(r.decision_gap)}"
            )
        return "\n".join(lines) + "\n"

    @property
    def final(self) -> TrainRecord:
        return self.records[-1]


def _unique_weighted(dataset: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    uniq, counts = np.unique(dataset, axis=0, return_counts=True)
    return uniq, counts / dataset.shape[0]


def _batch_posteriors(cond, lm, seqs, eps):
    """Log-likelihoods and label posteriors for a batch of sequences.

    Returns (logprob (U,), gamma (U, N, C)) under smoothed factors
    cond + eps. gamma[u, n, c] is the posterior of label c at position n
    given sequence u.
    """
    n_len = seqs.shape[1]
    em = cond[seqs, :] + eps  # (U, N, C)

    if isinstance(lm, PositionUnigramPrior):
        mix = np.einsum("unc,nc->un", em, lm.tables)
        logprob = np.log(mix).sum(axis=1)
        gamma = lm.tables[None, :, :] * em / mix[:, :, None]
        return logprob, gamma

    if isinstance(lm, BigramPrior):
        logem = np.log(em)
        log_t = np.log(lm.trans)
        u_n, _, c_size = em.shape
        la = np.empty((u_n, n_len, c_size))
        with np.errstate(divide="ignore"):
            la[:, 0] = np.log(lm.init)[None, :] + logem[:, 0]
        for n in range(1, n_len):
            m = la[:, n - 1][:, :, None] + log_t[None]
            mm = m.max(axis=1)
            la[:, n] = mm + np.log(np.exp(m - mm[:, None, :]).sum(axis=1)) + logem[:, n]
        lb = np.zeros((u_n, n_len, c_size))
        for n in range(n_len - 2, -1, -1):
            m = log_t[None] + (logem[:, n + 1] + lb[:, n + 1])[:, None, :]
            mm = m.max(axis=2)
            lb[:, n] = mm + np.log(np.exp(m - mm[:, :, None]).sum(axis=2))
        mm = la[:, n_len - 1].max(axis=1)
        logprob = mm + np.log(np.exp(la[:, n_len - 1] - mm[:, None]).sum(axis=1))
        gamma = np.exp(la + lb - logprob[:, None, None])
        return logprob, gamma

    if isinstance(lm, DensePrior):
        a = lm.alphabet
        cseqs = a.c_sequences()
        w = np.repeat(lm.probs[None, :], seqs.shape[0], axis=0)  # (U, K)
        for n in range(n_len):
            w *= em[:, n, :][:, cseqs[:, n]]
        z = w.sum(axis=1)
        logprob = np.log(z)
        gamma = np.empty((seqs.shape[0], n_len, a.c_size))
        for n in range(n_len):
            for c in range(a.c_size):
                gamma[:, n, c] = w[:, cseqs[:, n] == c].sum(axis=1)
        gamma /= z[:, None, None]
        return logprob, gamma

    raise ShapeMismatch(f"unsupported prior type {type(lm).__name__}")


def forward_logprob(
    params: ModelParams, lm: LabelPrior, x_seq, smoothing_epsilon: float = 1e-12
) -> float:
    """log sum_{c_1^N} lm(c_1^N) prod_n q(x_n|c_n) for one sequence."""
    seqs = np.asarray(x_seq, dtype=np.int64).reshape(1, -1)
    if seqs.shape[1] != lm.alphabet.seq_len:
        raise LengthMismatch(
            f"sequence length {seqs.shape[1]} != N={lm.alphabet.seq_len}"
        )
    logprob, _ = _batch_posteriors(
        params.conditional(), lm, seqs, smoothing_epsilon
    )
    return float(logprob[0])


def _loss_grad(logits, lm, uniq, weights, eps):
    cond = softmax_columns(logits)
    logprob, gamma = _batch_posteriors(cond, lm, uniq, eps)
    loss = -float(weights @ logprob)
    # chain rule through the smoothing: the count weight for (u, n) is
    # gamma * q/(q + eps), which collapses to gamma as eps -> 0
    em = cond[uniq, :]
    wg = weights[:, None, None] * gamma * (em / (em + eps))
    g1 = np.zeros_like(cond)
    for n in range(uniq.shape[1]):
        np.add.at(g1, uniq[:, n], wg[:, n])
    grad = cond * wg.sum(axis=(0, 1))[None, :] - g1
    return loss, grad


def ce_loss(params: ModelParams, config: TrainConfig) -> float:
    """Mean negative log-likelihood of the dataset (sequence-level CE)."""
    uniq, weights = _unique_weighted(config.dataset)
    logprob, _ = _batch_posteriors(
        params.conditional(), config.lm, uniq, config.smoothing_epsilon
    )
    return -float(weights @ logprob)


def ce_gradient(params: ModelParams, config: TrainConfig) -> np.ndarray:
    """Exact gradient of ce_loss with respect to the logits."""
    uniq, weights = _unique_weighted(config.dataset)
    _, grad = _loss_grad(
        params.logits, config.lm, uniq, weights, config.smoothing_epsilon
    )
    return grad


def _make_eval(config: TrainConfig):
    ref = config.eval_reference
    if ref is None:
        return None
    ref_tab = ref.position_joint_table()
    ref_marg = ref_tab[0].sum(axis=0)
    support = ref_marg > 0

    def evaluate(cond: np.ndarray) -> tuple[float, float]:
        model = JointDist.from_structured(
            config.lm, ConditionalTable(config.lm.alphabet, cond)
        )
        tab = model.position_joint_table()
        marg = tab[0].sum(axis=0)
        if (marg[support] == 0).any():
            kl = math.inf
        else:
            kl = float(
                np.sum(ref_marg[support] * np.log(ref_marg[support] / marg[support]))
            )
        gap = mismatch_from_tables(ref_tab, tab).averaged
        return kl, gap

    return evaluate


def train(
    config: TrainConfig, init: "ModelParams | int"
) -> tuple[ModelParams, TrainTrajectory]:
    """Gradient descent with halving backtracking on the CE loss.

    Stops when the gradient sup-norm falls below GRAD_TOL, the step
    underflows MAX_HALVINGS halvings, or max_iters is reached. The last
    trajectory record always reflects the returned parameters.
    """
    a = config.lm.alphabet
    if isinstance(init, ModelParams):
        logits = np.array(init.logits, dtype=np.float64)
        if logits.shape != (a.x_size, a.c_size):
            raise ShapeMismatch(
                f"logits shape {logits.shape} != {(a.x_size, a.c_size)}"
            )
    else:
        rng = np.random.default_rng(init)
        logits = rng.normal(0.0, 0.5, (a.x_size, a.c_size))

    uniq, weights = _unique_weighted(config.dataset)
    eps = config.smoothing_epsilon
    evaluate = _make_eval(config)

    loss, grad = _loss_grad(logits, config.lm, uniq, weights, eps)
    if not math.isfinite(loss):
        raise DivergenceDetected(f"initial loss is {loss}")

    traj = TrainTrajectory()
    it = 0
    while True:
        grad_inf = float(np.abs(grad).max())
        kl, gap = evaluate(softmax_columns(logits)) if evaluate else (None, None)
        traj.records.append(TrainRecord(it, loss, grad_inf, kl, gap))
        if grad_inf < GRAD_TOL or it >= config.max_iters:
            break
        step = config.step_size
        accepted = False
        for _ in range(MAX_HALVINGS):
            cand = logits - step * grad
            cand_loss, cand_grad = _loss_grad(cand, config.lm, uniq, weights, eps)
            if math.isfinite(cand_loss) and cand_loss <= loss:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        logits, loss, grad = cand, cand_loss, cand_grad
        it += 1

    return ModelParams(logits), traj


def generate_dataset(true_dist: JointDist, s_count: int, seed) -> np.ndarray:
    """Ancestral samples: labels from the prior, observations per position."""
    if not true_dist.structured:
        raise ShapeMismatch("dataset generation needs a structured joint")
    a = true_dist.alphabet
    rng = np.random.default_rng(seed)
    cs = true_dist.prior.sample(rng, s_count)
    cum = np.cumsum(true_dist.conds[0], axis=0)  # (X, C)
    u = rng.random((s_count, a.seq_len))
    xs = np.empty_like(cs)
    for n in range(a.seq_len):
        xs[:, n] = (u[:, n][:, None] > cum[:, cs[:, n]].T).sum(axis=1)
    return xs


def save_dataset(path, dataset: np.ndarray) -> None:
    """One sequence per line, space-separated integer observation ids."""
    dataset = np.asarray(dataset, dtype=np.int64)
    lines = [" ".join(str(x) for x in row) for row in dataset]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_dataset(path) -> np.ndarray:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append([int(tok) for tok in line.split()])
    if not rows:
        raise LengthMismatch(f"no sequences in {path}")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise LengthMismatch(f"ragged sequence lengths {sorted(widths)} in {path}")
    return np.asarray(rows, dtype=np.int64)
