#!/usr/bin/env python3
"""Regenerate the bundled toy corpus (seqbound/data/toy_corpus.txt).

12,000 lines of letter tokens from a seeded first-order chain over eight
symbols. The start distribution is deliberately far from the chain's
stationary distribution so early positions carry distinct unigram
statistics and the position-unigram matrix stays comfortably full rank.
The file is committed; this script only exists to document its provenance
and must reproduce it byte for byte.
"""

from pathlib import Path

import numpy as np

SEED = 416
LINES = 12_000
MIN_LEN, MAX_LEN = 12, 18
TOKENS = ["ka", "re", "mo", "si", "tu", "ne", "lo", "da"]


def main() -> None:
    rng = np.random.default_rng(SEED)
    k = len(TOKENS)
    init = rng.dirichlet(np.full(k, 0.3))
    trans = rng.dirichlet(np.full(k, 0.8), size=k)
    out = []
    for _ in range(LINES):
        length = int(rng.integers(MIN_LEN, MAX_LEN + 1))
        seq = [int(rng.choice(k, p=init))]
        for _ in range(length - 1):
            seq.append(int(rng.choice(k, p=trans[seq[-1]])))
        out.append(" ".join(TOKENS[s] for s in seq))
    target = Path(__file__).resolve().parent.parent / "src" / "seqbound" / "data"
    target.mkdir(parents=True, exist_ok=True)
    (target / "toy_corpus.txt").write_text("\n".join(out) + "\n", encoding="utf-8")
    print(f"wrote {LINES} lines to {target / 'toy_corpus.txt'}")


if __name__ == "__main__":
    main()
