# cython: language_level=3
"""Compiled kernel: per-instance chain statistics by full enumeration.

Semantics match seqbound._kernels._ref.instance_chain_stats; this version
exists because the simulation evaluates hundreds of thousands of tiny
instances where interpreter and dispatch overhead dominates.
"""

from libc.math cimport INFINITY, fabs, log
from libc.stdlib cimport free, malloc

import numpy as np

cimport numpy as cnp

cnp.import_array()


def instance_chain_stats(prior, true_cond, model_cond, int n_len):
    """See seqbound._kernels._ref.instance_chain_stats."""
    cdef const double[::1] pr = np.ascontiguousarray(prior, dtype=np.float64)
    cdef const double[:, ::1] tc = np.ascontiguousarray(true_cond, dtype=np.float64)
    cdef const double[:, ::1] mc = np.ascontiguousarray(model_cond, dtype=np.float64)

    cdef int x_size = tc.shape[0]
    cdef int c_size = tc.shape[1]
    cdef long n_c = 1, n_x = 1
    cdef int n
    for n in range(n_len):
        n_c *= c_size
        n_x *= x_size

    out_local = np.zeros(n_len, dtype=np.float64)
    cdef double[::1] local = out_local

    # per-x-sequence accumulators: position joints for both distributions
    cdef double *p_tab = <double *> malloc(n_len * c_size * sizeof(double))
    cdef double *q_tab = <double *> malloc(n_len * c_size * sizeof(double))
    cdef int *x_dig = <int *> malloc(n_len * sizeof(int))
    # label-sequence digits decoded once, not per observation sequence
    cdef int *c_dig = <int *> malloc(n_c * n_len * sizeof(int))
    if p_tab == NULL or q_tab == NULL or c_dig == NULL or x_dig == NULL:
        free(p_tab); free(q_tab); free(c_dig); free(x_dig)
        raise MemoryError()

    cdef long m, k, rem, base
    cdef int c, j, best_p, best_q
    cdef double wp, wq, pm, qm, best, val, gap = 0.0, l1 = 0.0, kl = 0.0
    cdef bint kl_inf = False

    try:
        for k in range(n_c):
            rem = k
            for n in range(n_len - 1, -1, -1):
                c_dig[k * n_len + n] = <int> (rem % c_size)
                rem //= c_size

        for m in range(n_x):
            rem = m
            for n in range(n_len - 1, -1, -1):
                x_dig[n] = <int> (rem % x_size)
                rem //= x_size
            for j in range(n_len * c_size):
                p_tab[j] = 0.0
                q_tab[j] = 0.0

            for k in range(n_c):
                base = k * n_len
                wp = pr[k]
                wq = pr[k]
                for n in range(n_len):
                    wp *= tc[x_dig[n], c_dig[base + n]]
                    wq *= mc[x_dig[n], c_dig[base + n]]
                for n in range(n_len):
                    p_tab[n * c_size + c_dig[base + n]] += wp
                    q_tab[n * c_size + c_dig[base + n]] += wq

            pm = 0.0
            qm = 0.0
            for c in range(c_size):
                pm += p_tab[c]
                qm += q_tab[c]
            l1 += fabs(pm - qm)
            if pm > 0.0:
                if qm == 0.0:
                    kl_inf = True
                elif not kl_inf:
                    kl += pm * log(pm / qm)

            for n in range(n_len):
                best_p = 0
                best = p_tab[n * c_size]
                for c in range(1, c_size):
                    val = p_tab[n * c_size + c]
                    if val > best:
                        best = val
                        best_p = c
                best_q = 0
                best = q_tab[n * c_size]
                for c in range(1, c_size):
                    val = q_tab[n * c_size + c]
                    if val > best:
                        best = val
                        best_q = c
                local[n] += p_tab[n * c_size + best_p] - p_tab[n * c_size + best_q]
                for c in range(c_size):
                    gap += fabs(p_tab[n * c_size + c] - q_tab[n * c_size + c])
    finally:
        free(p_tab)
        free(q_tab)
        free(c_dig)
        free(x_dig)

    if kl_inf:
        kl = INFINITY
    return out_local, gap / n_len, l1, kl
