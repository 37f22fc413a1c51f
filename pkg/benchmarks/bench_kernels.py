#!/usr/bin/env python3
"""Benchmark the compiled chain-stats kernel against the numpy fallback.

Times instance_chain_stats over a batch of simulation-shaped instances and
reports per-instance cost and speedup, plus the end-to-end effect on a
small bound simulation. Run from a checkout where the extension was built
(pip install -e . --no-build-isolation); if it was not, only the python
backend is timed.
"""

import time

import numpy as np

from seqbound import Alphabet, SimConfig, run_bound_simulation
from seqbound._kernels import BACKEND
from seqbound._kernels._ref import instance_chain_stats as stats_python

try:
    from seqbound._kernels._fast import instance_chain_stats as stats_compiled
except ImportError:
    stats_compiled = None


def make_instances(alphabet: Alphabet, count: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    k = alphabet.n_c_seqs
    out = []
    for _ in range(count):
        prior = rng.dirichlet(np.full(k, 0.2))
        tc = rng.dirichlet(np.ones(alphabet.x_size), size=alphabet.c_size).T
        mc = rng.dirichlet(np.ones(alphabet.x_size), size=alphabet.c_size).T
        out.append((prior, tc, mc))
    return out


def time_backend(fn, instances, n_len: int) -> float:
    t0 = time.perf_counter()
    for prior, tc, mc in instances:
        fn(prior, tc, mc, n_len)
    return time.perf_counter() - t0


def main() -> None:
    print(f"active backend at import: {BACKEND}")
    for x, c, n, count in [(4, 3, 3, 3000), (6, 3, 4, 1500), (5, 4, 4, 800)]:
        alphabet = Alphabet(x, c, n)
        instances = make_instances(alphabet, count)
        t_py = time_backend(stats_python, instances, n)
        line = (
            f"|X|={x} |C|={c} N={n}  {count} instances  "
            f"python {1e6 * t_py / count:8.1f} us/inst"
        )
        if stats_compiled is not None:
            t_c = time_backend(stats_compiled, instances, n)
            line += (
                f"   compiled {1e6 * t_c / count:7.1f} us/inst"
                f"   speedup {t_py / t_c:5.1f}x"
            )
        print(line)

    # end to end: rejection filtering (numpy SVD) dominates, so the overall
    # speedup is smaller than the kernel-only one
    cfg = SimConfig(alphabet=Alphabet(4, 3, 3), samples=1000, master_seed=0)
    t0 = time.perf_counter()
    for _ in run_bound_simulation(cfg):
        pass
    print(
        f"bound simulation, 1000 accepted instances, backend={BACKEND}: "
        f"{time.perf_counter() - t0:.2f}s"
    )


if __name__ == "__main__":
    main()
