"""Dense probability objects over short discrete sequences.

Everything here is a dense table: observation sequences live in X^N,
label sequences in C^N, and both spaces are small enough to enumerate
(guarded by Alphabet.enum_cap). The module provides

* Alphabet          problem sizes |X|, |C|, N and the enumeration cap
* ConditionalTable  a column-stochastic |X| x |C| table q(x|c)
* label priors      dense, position-unigram, or bigram p(c_1..c_N)
* SequenceDist      a dense distribution over B^N with position marginals
* JointDist         prior x per-position conditionals, with position joints

Factorized priors are marginalized by dynamic programming; dense priors by
enumeration. All objects are immutable after construction (arrays are
frozen), and all sampling takes an explicit seed.

Positions are reported 1-based in errors and documentation; arrays are
0-based internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .errors import (
    EnumerationCapExceeded,
    IndexOutOfRange,
    NegativeEntry,
    NotNormalized,
    ShapeMismatch,
    ZeroColumn,
)

DEFAULT_ENUM_CAP = 1_000_000

# Construction-time normalization tolerance; derived quantities get a looser
# 1e-9 because they accumulate rounding over up to ~1e6 summands.
NORM_TOL = 1e-10
MASS_TOL = 1e-9

# make_conditional silently renormalizes column sums within this distance of
# 1 and rejects anything further off unless normalize=True.
COLSUM_REJECT_TOL = 1e-6


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


def all_sequences(base: int, length: int) -> np.ndarray:
    """All sequences over {0..base-1}^length as an int array.

    Row i holds the digits of i in base `base`, most significant digit at
    position 0, so row order matches the flat index used throughout.
    """
    idx = np.arange(base**length)
    return np.stack(np.unravel_index(idx, (base,) * length), axis=1).astype(np.int64)


def seq_index(seq: np.ndarray, base: int) -> int:
    """Flat index of a sequence under the row-major encoding."""
    idx = 0
    for s in np.asarray(seq, dtype=np.int64):
        idx = idx * base + int(s)
    return idx


@dataclass(frozen=True)
class Alphabet:
    """Problem sizes: observations X, labels C, and sequence length N.

    Requires |X| > |C| (observations are finer than labels) and keeps both
    X^N and C^N under `enum_cap` so dense enumeration stays feasible.
    """

    x_size: int
    c_size: int
    seq_len: int
    enum_cap: int = DEFAULT_ENUM_CAP

    def __post_init__(self):
        if self.x_size <= 0 or self.c_size <= 0 or self.seq_len <= 0:
            raise ShapeMismatch(
                f"sizes must be positive, got x={self.x_size} c={self.c_size} "
                f"N={self.seq_len}"
            )
        if self.x_size <= self.c_size:
            raise ShapeMismatch(
                f"need more observations than labels, got |X|={self.x_size} "
                f"<= |C|={self.c_size}"
            )
        for name, base in (("x", self.x_size), ("c", self.c_size)):
            if base**self.seq_len > self.enum_cap:
                raise EnumerationCapExceeded(
                    f"{name}_size^seq_len = {base}^{self.seq_len} exceeds the "
                    f"enumeration cap {self.enum_cap}"
                )

    @property
    def n_x_seqs(self) -> int:
        return self.x_size**self.seq_len

    @property
    def n_c_seqs(self) -> int:
        return self.c_size**self.seq_len

    def x_sequences(self) -> np.ndarray:
        return all_sequences(self.x_size, self.seq_len)

    def c_sequences(self) -> np.ndarray:
        return all_sequences(self.c_size, self.seq_len)

    def check_position(self, n: int) -> int:
        """Validate a 1-based position and return its 0-based index."""
        if not 1 <= n <= self.seq_len:
            raise IndexOutOfRange(
                f"position {n} out of range 1..{self.seq_len}"
            )
        return n - 1


@dataclass(frozen=True)
class ConditionalTable:
    """Column-stochastic table: probs[x, c] = q(x|c), columns sum to 1."""

    alphabet: Alphabet
    probs: np.ndarray

    def column(self, c: int) -> np.ndarray:
        return self.probs[:, c]


def make_conditional(
    alphabet: Alphabet, raw: np.ndarray, normalize: bool = False
) -> ConditionalTable:
    """Validate a raw |X| x |C| table and wrap it as a ConditionalTable.

    Column sums within COLSUM_REJECT_TOL of 1 are silently renormalized;
    anything further off is rejected unless normalize=True.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.shape != (alphabet.x_size, alphabet.c_size):
        raise ShapeMismatch(
            f"expected shape {(alphabet.x_size, alphabet.c_size)}, got {raw.shape}"
        )
    if (raw < 0).any():
        raise NegativeEntry("conditional table has a negative entry")
    sums = raw.sum(axis=0)
    if (sums == 0).any():
        raise ZeroColumn(f"column(s) {np.flatnonzero(sums == 0).tolist()} sum to 0")
    if not normalize and (np.abs(sums - 1.0) > COLSUM_REJECT_TOL).any():
        worst = int(np.abs(sums - 1.0).argmax())
        raise NotNormalized(
            f"column {worst} sums to {sums[worst]:.6g}; pass normalize=True "
            "to renormalize"
        )
    return ConditionalTable(alphabet, _freeze(raw / sums))


def sample_conditional(
    alphabet: Alphabet, rng_seed, concentration: float = 1.0
) -> ConditionalTable:
    """Draw each column independently from a symmetric Dirichlet."""
    if concentration <= 0:
        raise NegativeEntry(f"concentration must be positive, got {concentration}")
    rng = _rng(rng_seed)
    cols = rng.dirichlet(np.full(alphabet.x_size, concentration), size=alphabet.c_size)
    return ConditionalTable(alphabet, _freeze(cols.T))


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _check_distribution(name: str, table: np.ndarray, axis=None) -> np.ndarray:
    table = np.asarray(table, dtype=np.float64)
    if (table < 0).any():
        raise NegativeEntry(f"{name} has a negative entry")
    sums = table.sum(axis=axis)
    if np.any(np.abs(sums - 1.0) > NORM_TOL):
        raise NotNormalized(f"{name} is not normalized (sum={sums})")
    return table


class LabelPrior:
    """Base class for label-sequence priors p(c_1..c_N).

    Subclasses provide position marginals, dense expansion (under the
    enumeration cap) and ancestral sampling.
    """

    alphabet: Alphabet
    variant: str

    def position_marginals(self) -> np.ndarray:
        """(N, |C|) array of per-position label probabilities."""
        raise NotImplementedError

    def to_dense(self) -> np.ndarray:
        """(|C|^N,) flat table over label sequences."""
        raise NotImplementedError

    def sample(self, rng_seed, count: int) -> np.ndarray:
        """(count, N) int array of label sequences."""
        raise NotImplementedError


@dataclass(frozen=True)
class DensePrior(LabelPrior):
    alphabet: Alphabet
    probs: np.ndarray  # (|C|^N,)
    variant: str = field(default="dense", init=False)

    def __post_init__(self):
        probs = _check_distribution("dense prior", self.probs)
        if probs.shape != (self.alphabet.n_c_seqs,):
            raise ShapeMismatch(
                f"dense prior needs {self.alphabet.n_c_seqs} entries, got {probs.shape}"
            )
        object.__setattr__(self, "probs", _freeze(probs))

    def position_marginals(self) -> np.ndarray:
        a = self.alphabet
        t = self.probs.reshape((a.c_size,) * a.seq_len)
        rows = []
        for n in range(a.seq_len):
            axes = tuple(i for i in range(a.seq_len) if i != n)
            rows.append(t.sum(axis=axes))
        return np.array(rows)

    def to_dense(self) -> np.ndarray:
        return self.probs

    def sample(self, rng_seed, count: int) -> np.ndarray:
        rng = _rng(rng_seed)
        a = self.alphabet
        flat = rng.choice(a.n_c_seqs, size=count, p=self.probs)
        return np.stack(
            np.unravel_index(flat, (a.c_size,) * a.seq_len), axis=1
        ).astype(np.int64)


@dataclass(frozen=True)
class PositionUnigramPrior(LabelPrior):
    alphabet: Alphabet
    tables: np.ndarray  # (N, |C|), row n is the position-n label distribution
    variant: str = field(default="position_unigram", init=False)

    def __post_init__(self):
        tables = _check_distribution("position-unigram prior", self.tables, axis=1)
        if tables.shape != (self.alphabet.seq_len, self.alphabet.c_size):
            raise ShapeMismatch(
                f"expected shape {(self.alphabet.seq_len, self.alphabet.c_size)}, "
                f"got {tables.shape}"
            )
        object.__setattr__(self, "tables", _freeze(tables))

    def position_marginals(self) -> np.ndarray:
        return np.array(self.tables)

    def to_dense(self) -> np.ndarray:
        return reduce(np.multiply.outer, self.tables).reshape(-1)

    def sample(self, rng_seed, count: int) -> np.ndarray:
        rng = _rng(rng_seed)
        a = self.alphabet
        out = np.empty((count, a.seq_len), dtype=np.int64)
        for n in range(a.seq_len):
            out[:, n] = rng.choice(a.c_size, size=count, p=self.tables[n])
        return out


@dataclass(frozen=True)
class BigramPrior(LabelPrior):
    alphabet: Alphabet
    init: np.ndarray  # (|C|,)
    trans: np.ndarray  # (|C|, |C|), trans[i, j] = p(c_{n+1}=j | c_n=i)
    variant: str = field(default="bigram", init=False)

    def __post_init__(self):
        init = _check_distribution("bigram initial table", self.init)
        trans = _check_distribution("bigram transition table", self.trans, axis=1)
        c = self.alphabet.c_size
        if init.shape != (c,) or trans.shape != (c, c):
            raise ShapeMismatch(
                f"expected shapes ({c},) and ({c}, {c}), got "
                f"{init.shape} and {trans.shape}"
            )
        object.__setattr__(self, "init", _freeze(init))
        object.__setattr__(self, "trans", _freeze(trans))

    def position_marginals(self) -> np.ndarray:
        rows = [self.init]
        for _ in range(1, self.alphabet.seq_len):
            rows.append(rows[-1] @ self.trans)
        return np.array(rows)

    def to_dense(self) -> np.ndarray:
        a = self.alphabet
        cseqs = a.c_sequences()
        probs = self.init[cseqs[:, 0]].copy()
        for n in range(1, a.seq_len):
            probs *= self.trans[cseqs[:, n - 1], cseqs[:, n]]
        return probs

    def sample(self, rng_seed, count: int) -> np.ndarray:
        rng = _rng(rng_seed)
        a = self.alphabet
        out = np.empty((count, a.seq_len), dtype=np.int64)
        out[:, 0] = rng.choice(a.c_size, size=count, p=self.init)
        cum = np.cumsum(self.trans, axis=1)
        for n in range(1, a.seq_len):
            u = rng.random(count)
            out[:, n] = (u[:, None] > cum[out[:, n - 1]]).sum(axis=1)
        return out


PRIOR_VARIANTS = ("dense", "position_unigram", "bigram")


def sample_prior(
    alphabet: Alphabet, variant: str, rng_seed, concentration: float = 1.0
) -> LabelPrior:
    """Draw a random prior of the requested variant (Dirichlet tables)."""
    rng = _rng(rng_seed)
    if variant == "dense":
        return DensePrior(
            alphabet, rng.dirichlet(np.full(alphabet.n_c_seqs, concentration))
        )
    if variant == "position_unigram":
        tables = rng.dirichlet(
            np.full(alphabet.c_size, concentration), size=alphabet.seq_len
        )
        return PositionUnigramPrior(alphabet, tables)
    if variant == "bigram":
        init = rng.dirichlet(np.full(alphabet.c_size, concentration))
        trans = rng.dirichlet(
            np.full(alphabet.c_size, concentration), size=alphabet.c_size
        )
        return BigramPrior(alphabet, init, trans)
    raise ShapeMismatch(f"unknown prior variant {variant!r}; use one of {PRIOR_VARIANTS}")


@dataclass(frozen=True)
class SequenceDist:
    """Dense distribution over B^N plus its N position marginals.

    `base_size` is |X| or |C| depending on which space the distribution
    lives in. Position marginals are exact sums of `probs` over sequences
    fixing one position.
    """

    alphabet: Alphabet
    base_size: int
    probs: np.ndarray  # (base_size**N,)
    position_marginals: np.ndarray  # (N, base_size)


def sequence_dist(alphabet: Alphabet, base_size: int, probs: np.ndarray) -> SequenceDist:
    probs = np.asarray(probs, dtype=np.float64)
    n = alphabet.seq_len
    if probs.shape != (base_size**n,):
        raise ShapeMismatch(
            f"expected {base_size**n} entries, got shape {probs.shape}"
        )
    if (probs < 0).any():
        raise NegativeEntry("sequence distribution has a negative entry")
    if abs(probs.sum() - 1.0) > MASS_TOL:
        raise NotNormalized(f"sequence distribution mass is {probs.sum()!r}")
    t = probs.reshape((base_size,) * n)
    marg = np.array(
        [t.sum(axis=tuple(i for i in range(n) if i != k)) for k in range(n)]
    )
    return SequenceDist(alphabet, base_size, _freeze(probs), _freeze(marg))


def _cond_stack(alphabet: Alphabet, conds: np.ndarray) -> np.ndarray:
    conds = np.asarray(conds, dtype=np.float64)
    shape = (alphabet.seq_len, alphabet.x_size, alphabet.c_size)
    if conds.shape != shape:
        raise ShapeMismatch(f"expected conditional stack {shape}, got {conds.shape}")
    return conds


@dataclass(frozen=True)
class JointDist:
    """Joint distribution p(c_1^N, x_1^N) = prior(c_1^N) * prod_n cond_n(x_n|c_n).

    `structured` is True when every position shares one conditional table,
    which is the factorization the model family assumes; position-dependent
    stacks exist to build distributions that break it on purpose.
    """

    alphabet: Alphabet
    prior: LabelPrior
    conds: np.ndarray  # (N, |X|, |C|)
    structured: bool

    @classmethod
    def from_structured(cls, prior: LabelPrior, cond: ConditionalTable) -> "JointDist":
        a = prior.alphabet
        if cond.probs.shape != (a.x_size, a.c_size):
            raise ShapeMismatch(
                f"conditional shape {cond.probs.shape} does not match alphabet "
                f"({a.x_size}, {a.c_size})"
            )
        stack = np.broadcast_to(cond.probs, (a.seq_len, a.x_size, a.c_size))
        return cls(a, prior, _freeze(stack.copy()), True)

    @classmethod
    def from_position_conds(cls, prior: LabelPrior, conds) -> "JointDist":
        a = prior.alphabet
        if isinstance(conds, (list, tuple)):
            conds = np.stack([c.probs if isinstance(c, ConditionalTable) else c for c in conds])
        stack = _cond_stack(a, conds)
        structured = bool(np.ptp(stack, axis=0).max() == 0.0)
        return cls(a, prior, _freeze(stack), structured)

    @property
    def cond(self) -> ConditionalTable:
        if not self.structured:
            raise ShapeMismatch("joint has position-dependent conditionals")
        return ConditionalTable(self.alphabet, self.conds[0])

    def joint_table(self) -> np.ndarray:
        """Dense (|C|^N, |X|^N) joint, guarded by the enumeration cap."""
        a = self.alphabet
        if a.n_c_seqs * a.n_x_seqs > a.enum_cap:
            raise EnumerationCapExceeded(
                f"dense joint needs {a.n_c_seqs * a.n_x_seqs} cells, cap is "
                f"{a.enum_cap}"
            )
        cseqs, xseqs = a.c_sequences(), a.x_sequences()
        w = np.ones((a.n_c_seqs, a.n_x_seqs))
        for n in range(a.seq_len):
            w *= self.conds[n][xseqs[:, n][None, :], cseqs[:, n][:, None]]
        return self.prior.to_dense()[:, None] * w

    def marginal_x(self) -> SequenceDist:
        a = self.alphabet
        if self.structured:
            return marginal_x(self.prior, self.cond)
        if isinstance(self.prior, PositionUnigramPrior):
            # per-position mixtures, then an outer product over positions
            mixes = [self.conds[n] @ self.prior.tables[n] for n in range(a.seq_len)]
            return sequence_dist(a, a.x_size, reduce(np.multiply.outer, mixes).reshape(-1))
        return sequence_dist(a, a.x_size, self.joint_table().sum(axis=0))

    def position_joint_table(self) -> np.ndarray:
        """(N, |C|, |X|^N) array of p_n(c, x_1^N) for every x sequence.

        p_n(c, x_1^N) sums the joint over label sequences with c at
        position n. Factorized priors use forward-backward recursions;
        dense priors group rows of the materialized joint.
        """
        a = self.alphabet
        n_len, c_size = a.seq_len, a.c_size
        xseqs = a.x_sequences()
        em = self.conds[np.arange(n_len)[:, None], xseqs.T]  # (N, M, C)

        if isinstance(self.prior, PositionUnigramPrior):
            u = self.prior.tables  # (N, C)
            s = np.einsum("nmc,nc->nm", em, u)  # position mixtures per sequence
            left = np.ones_like(s)
            right = np.ones_like(s)
            for n in range(1, n_len):
                left[n] = left[n - 1] * s[n - 1]
                right[n_len - 1 - n] = right[n_len - n] * s[n_len - n]
            out = u[:, :, None] * em.transpose(0, 2, 1) * (left * right)[:, None, :]
            return out

        if isinstance(self.prior, BigramPrior):
            init, trans = self.prior.init, self.prior.trans
            m = em.shape[1]
            fwd = np.empty((n_len, m, c_size))
            fwd[0] = init[None, :] * em[0]
            for n in range(1, n_len):
                fwd[n] = (fwd[n - 1] @ trans) * em[n]
            bwd = np.ones((n_len, m, c_size))
            for n in range(n_len - 2, -1, -1):
                bwd[n] = (em[n + 1] * bwd[n + 1]) @ trans.T
            return (fwd * bwd).transpose(0, 2, 1)

        joint = self.joint_table()
        cseqs = a.c_sequences()
        out = np.zeros((n_len, c_size, a.n_x_seqs))
        for n in range(n_len):
            for c in range(c_size):
                out[n, c] = joint[cseqs[:, n] == c].sum(axis=0)
        return out


def marginal_x(prior: LabelPrior, cond: ConditionalTable) -> SequenceDist:
    """Observation-sequence marginal sum_c prior(c_1^N) prod_n cond(x_n|c_n).

    Factorized priors are marginalized position by position (O(N |C|^2)
    work per output cell); dense priors are summed over C^N directly.
    """
    a = prior.alphabet
    p = cond.probs

    if isinstance(prior, PositionUnigramPrior):
        mixes = [p @ prior.tables[n] for n in range(a.seq_len)]
        return sequence_dist(a, a.x_size, reduce(np.multiply.outer, mixes).reshape(-1))

    if isinstance(prior, BigramPrior):
        f = prior.init[None, :] * p  # (X, C) after the first position
        for _ in range(1, a.seq_len):
            f = (f @ prior.trans).reshape(-1, 1, a.c_size) * p[None, :, :]
            f = f.reshape(-1, a.c_size)
        return sequence_dist(a, a.x_size, f.sum(axis=1))

    dense = prior.to_dense()
    xseqs, cseqs = a.x_sequences(), a.c_sequences()
    out = np.zeros(a.n_x_seqs)
    chunk = max(1, a.enum_cap // max(1, a.n_x_seqs))
    for lo in range(0, a.n_c_seqs, chunk):
        hi = min(lo + chunk, a.n_c_seqs)
        w = np.ones((hi - lo, a.n_x_seqs))
        for n in range(a.seq_len):
            w *= p[xseqs[:, n][None, :], cseqs[lo:hi, n][:, None]]
        out += dense[lo:hi] @ w
    return sequence_dist(a, a.x_size, out)


def position_joint(
    prior: LabelPrior, cond: ConditionalTable, n: int, c: int, x_seq
) -> float:
    """p_n(c, x_1^N): joint of label c at position n with the full x sequence.

    `n` is 1-based. Uses the prior's factorization (forward-backward for
    bigram, closed form for position-unigram, enumeration for dense).
    """
    a = prior.alphabet
    k = a.check_position(n)
    if not 0 <= c < a.c_size:
        raise IndexOutOfRange(f"label {c} out of range 0..{a.c_size - 1}")
    x_seq = np.asarray(x_seq, dtype=np.int64)
    if x_seq.shape != (a.seq_len,):
        raise ShapeMismatch(f"expected x sequence of length {a.seq_len}")
    if (x_seq < 0).any() or (x_seq >= a.x_size).any():
        raise IndexOutOfRange("observation id out of range")
    p = cond.probs

    if isinstance(prior, PositionUnigramPrior):
        others = [float(p[x_seq[j]] @ prior.tables[j]) for j in range(a.seq_len) if j != k]
        return float(prior.tables[k, c] * p[x_seq[k], c] * math.prod(others))

    if isinstance(prior, BigramPrior):
        f = prior.init * p[x_seq[0]]
        for j in range(1, k + 1):
            f = (f @ prior.trans) * p[x_seq[j]]
        b = np.ones(a.c_size)
        for j in range(a.seq_len - 2, k - 1, -1):
            b = prior.trans @ (p[x_seq[j + 1]] * b)
        return float(f[c] * b[c])

    dense = prior.to_dense()
    cseqs = a.c_sequences()
    sel = cseqs[:, k] == c
    w = dense[sel].copy()
    for j in range(a.seq_len):
        w *= p[x_seq[j], cseqs[sel, j]]
    return float(w.sum())
