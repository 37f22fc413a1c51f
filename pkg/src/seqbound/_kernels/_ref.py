"""Pure-numpy kernel: per-instance chain statistics by full enumeration.

Mirrors the compiled kernel in _fast.pyx; the selector in __init__ prefers
the compiled module when it is importable. Both assume a dense label prior
and a structured pair (one conditional table each for true and model,
shared prior), which is exactly the shape of a simulation instance.
"""

from __future__ import annotations

import math

import numpy as np


def instance_chain_stats(
    prior: np.ndarray,
    true_cond: np.ndarray,
    model_cond: np.ndarray,
    n_len: int,
) -> tuple[np.ndarray, float, float, float]:
    """Decision gap, position l1 gap, marginal l1 and KL for one instance.

    prior: (|C|^N,) dense label-sequence prior (row-major digit encoding)
    true_cond, model_cond: (|X|, |C|) column-stochastic tables

    Returns (local_gaps (N,), position_l1_gap, l1_marginal, kl) where kl is
    +inf if the model marginal misses the true support.
    """
    x_size, c_size = true_cond.shape
    n_c = c_size**n_len
    n_x = x_size**n_len
    cseqs = np.stack(
        np.unravel_index(np.arange(n_c), (c_size,) * n_len), axis=1
    )
    xseqs = np.stack(
        np.unravel_index(np.arange(n_x), (x_size,) * n_len), axis=1
    )

    w_p = np.repeat(prior[:, None], n_x, axis=1)
    w_q = w_p.copy()
    for n in range(n_len):
        w_p *= true_cond[xseqs[:, n][None, :], cseqs[:, n][:, None]]
        w_q *= model_cond[xseqs[:, n][None, :], cseqs[:, n][:, None]]

    p_tab = np.zeros((n_len, c_size, n_x))
    q_tab = np.zeros((n_len, c_size, n_x))
    for n in range(n_len):
        for c in range(c_size):
            sel = cseqs[:, n] == c
            p_tab[n, c] = w_p[sel].sum(axis=0)
            q_tab[n, c] = w_q[sel].sum(axis=0)

    p_marg = p_tab[0].sum(axis=0)
    q_marg = q_tab[0].sum(axis=0)
    l1 = float(np.abs(p_marg - q_marg).sum())
    support = p_marg > 0
    if (q_marg[support] == 0).any():
        kl = math.inf
    else:
        kl = float(
            np.sum(p_marg[support] * np.log(p_marg[support] / q_marg[support]))
        )

    bayes = p_tab.argmax(axis=1)
    model = q_tab.argmax(axis=1)
    cols = np.arange(n_x)
    local = np.empty(n_len)
    for n in range(n_len):
        local[n] = (p_tab[n, bayes[n], cols] - p_tab[n, model[n], cols]).sum()

    gap = float(np.abs(p_tab - q_tab).sum() / n_len)
    return local, gap, l1, kl
