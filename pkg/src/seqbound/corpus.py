"""Label-corpus ingestion and conditioning of the position-unigram matrix.

Reads whitespace-tokenized label sequences (one per line), maps tokens to
dense ids in first-appearance order, fixes the length to `seq_len` with an
explicit truncate/discard policy, and reports the empirical N x |vocab|
position-unigram matrix together with its smallest singular value and
left-inverse l1 norm. A growth curve of sigma_min over corpus prefixes
shows how conditioning changes with data volume; it is reported, never
asserted, because monotone growth is typical rather than guaranteed.

A bundled synthetic corpus (seqbound/data/toy_corpus.txt) provides a
deterministic desk-scale fixture.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .bounds import LmMatrix, lm_matrix_from_rows
from .errors import EmptyCorpus, ShapeMismatch, VocabTooLarge

PREFIX_FRACTIONS = (0.1, 0.25, 0.5, 1.0)
DEFAULT_VOCAB_CAP = 4096
POLICIES = ("truncate", "discard")


@dataclass(frozen=True)
class CorpusStats:
    vocab: dict  # token -> label id, first-appearance order
    seq_len: int
    sequence_count: int
    policy: str
    lm_matrix: LmMatrix
    sigma_min_by_prefix: tuple  # ((fraction, sigma_min), ...)

    def to_report(self) -> dict:
        lm = self.lm_matrix
        return {
            "vocab_size": len(self.vocab),
            "seq_len": self.seq_len,
            "sequence_count": self.sequence_count,
            "policy": self.policy,
            "sigma_min": lm.sigma_min,
            "pinv_l1": lm.induced_l1,
            "rank": lm.rank,
            "full_rank": lm.full_rank,
            "growth_curve": [[f, s] for f, s in self.sigma_min_by_prefix],
        }


def toy_corpus_path() -> Path:
    return Path(str(resources.files("seqbound.data") / "toy_corpus.txt"))


def _row_matrix(ids: np.ndarray, vocab_size: int) -> np.ndarray:
    """Empirical (N, vocab) position-unigram frequencies from id rows."""
    n_seqs, seq_len = ids.shape
    counts = np.zeros((seq_len, vocab_size))
    for n in range(seq_len):
        counts[n] = np.bincount(ids[:, n], minlength=vocab_size)
    return counts / n_seqs


def ingest(
    path,
    seq_len: int,
    policy: str = "truncate",
    vocab_cap: int = DEFAULT_VOCAB_CAP,
) -> CorpusStats:
    """Read a token corpus and compute its conditioning report.

    Sequences shorter than seq_len are always dropped; longer ones are cut
    to seq_len under policy="truncate" and dropped under policy="discard".
    The vocabulary is built from the tokens actually used after length
    handling, in order of first appearance.
    """
    if policy not in POLICIES:
        raise ShapeMismatch(f"policy must be one of {POLICIES}, got {policy!r}")
    if seq_len <= 0:
        raise ShapeMismatch(f"seq_len must be positive, got {seq_len}")

    vocab: dict = {}
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            tokens = line.split()
            if len(tokens) < seq_len:
                continue
            if len(tokens) > seq_len:
                if policy == "discard":
                    continue
                tokens = tokens[:seq_len]
            ids = np.empty(seq_len, dtype=np.int64)
            for i, tok in enumerate(tokens):
                if tok not in vocab:
                    vocab[tok] = len(vocab)
                    if len(vocab) > vocab_cap:
                        raise VocabTooLarge(
                            f"vocabulary exceeded cap {vocab_cap} at token {tok!r}"
                        )
                ids[i] = vocab[tok]
            rows.append(ids)

    if not rows:
        raise EmptyCorpus(f"no usable sequences of length >= {seq_len} in {path}")
    ids = np.stack(rows)

    lm = lm_matrix_from_rows(_row_matrix(ids, len(vocab)))
    curve = []
    for frac in PREFIX_FRACTIONS:
        k = max(1, int(round(frac * len(rows))))
        prefix_lm = lm_matrix_from_rows(_row_matrix(ids[:k], len(vocab)))
        curve.append((frac, prefix_lm.sigma_min))

    return CorpusStats(
        vocab=vocab,
        seq_len=seq_len,
        sequence_count=len(rows),
        policy=policy,
        lm_matrix=lm,
        sigma_min_by_prefix=tuple(curve),
    )
