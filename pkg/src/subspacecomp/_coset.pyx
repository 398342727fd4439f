# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled maximum-likelihood coset search.

Mirrors ``subspacecomp._coset_py.coset_search``; see there for the contract.
Binary fields use bit masks stepped in Gray-code order; other fields use an
odometer over the nullspace coefficients with incremental symbol counts.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t
from libc.math cimport INFINITY

cnp.import_array()


cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil
    int __builtin_ctzll(unsigned long long) nogil


cdef inline double _word_cost(const int64_t[:, ::1] counts, const double[:, ::1] cost) noexcept nogil:
    cdef Py_ssize_t c, a
    cdef double total = 0.0
    cdef int64_t k
    for c in range(counts.shape[0]):
        for a in range(counts.shape[1]):
            k = counts[c, a]
            if k:
                total += k * cost[c, a]
    return total


cdef inline bint _mask_less(const uint64_t[::1] a, const uint64_t[::1] b, Py_ssize_t s) noexcept nogil:
    # lexicographic on (row, position) with position 0 most significant
    cdef Py_ssize_t j
    cdef uint64_t x
    for j in range(s):
        x = a[j] ^ b[j]
        if x:
            return (a[j] & (x & (~x + 1))) == 0
    return False


cdef inline bint _word_less(const int64_t[:, ::1] a, const int64_t[:, ::1] b) noexcept nogil:
    cdef Py_ssize_t j, t
    for j in range(a.shape[0]):
        for t in range(a.shape[1]):
            if a[j, t] != b[j, t]:
                return a[j, t] < b[j, t]
    return False


def coset_search(base, null, int q, ctx, cost, double tol):
    base = np.ascontiguousarray(base, dtype=np.int64)
    null = np.ascontiguousarray(null, dtype=np.int64).reshape(-1, base.shape[1])
    ctx = np.ascontiguousarray(ctx, dtype=np.int64)
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    if q == 2 and base.shape[1] <= 64:
        return _binary(base, null, ctx, cost, tol)
    return _generic(base, null, q, ctx, cost, tol)


cdef object _binary(cnp.ndarray base_a, cnp.ndarray null_a, cnp.ndarray ctx_a, cnp.ndarray cost_a, double tol):
    cdef const int64_t[:, ::1] base = base_a
    cdef const int64_t[:, ::1] null = null_a
    cdef const int64_t[::1] ctx = ctx_a
    cdef const double[:, ::1] cost = cost_a
    cdef Py_ssize_t s = base.shape[0], n = base.shape[1], d = null.shape[0]
    cdef Py_ssize_t n_ctx = cost.shape[0], n_sym = cost.shape[1]
    cdef Py_ssize_t j, i, t, c, a, L = d * s
    cdef uint64_t full = (<uint64_t>1 << n) - 1 if n < 64 else <uint64_t>0xFFFFFFFFFFFFFFFF
    cdef uint64_t pat, step, total
    cdef int bit
    cdef double val, best = INFINITY
    cdef int64_t n_best = 0

    w_a = np.zeros(s, dtype=np.uint64)
    best_w_a = np.zeros(s, dtype=np.uint64)
    nm_a = np.zeros(max(d, 1), dtype=np.uint64)
    cm_a = np.zeros(n_ctx, dtype=np.uint64)
    counts_a = np.zeros((n_ctx, n_sym), dtype=np.int64)
    cdef uint64_t[::1] w = w_a
    cdef uint64_t[::1] best_w = best_w_a
    cdef uint64_t[::1] nm = nm_a
    cdef uint64_t[::1] cm = cm_a
    cdef int64_t[:, ::1] counts = counts_a

    for j in range(s):
        for t in range(n):
            if base[j, t] & 1:
                w[j] |= (<uint64_t>1) << t
    for i in range(d):
        for t in range(n):
            if null[i, t] & 1:
                nm[i] |= (<uint64_t>1) << t
    for t in range(n):
        cm[ctx[t]] |= (<uint64_t>1) << t

    total = (<uint64_t>1) << L
    with nogil:
        step = 0
        while True:
            for a in range(n_sym):
                pat = full
                for j in range(s):
                    if (a >> (s - 1 - j)) & 1:
                        pat &= w[j]
                    else:
                        pat &= ~w[j]
                for c in range(n_ctx):
                    counts[c, a] = __builtin_popcountll(pat & cm[c])
            val = _word_cost(counts, cost)
            if n_best == 0 or val < best - tol:
                best = val
                n_best = 1
                for j in range(s):
                    best_w[j] = w[j]
            elif val <= best + tol:
                n_best += 1
                if _mask_less(w, best_w, s):
                    for j in range(s):
                        best_w[j] = w[j]
            step += 1
            if step == total:
                break
            bit = __builtin_ctzll(step)
            w[bit // d] ^= nm[bit % d]

    out = np.zeros((s, n), dtype=np.int64)
    for j in range(s):
        for t in range(n):
            out[j, t] = (best_w[j] >> t) & 1
    return out, best, int(n_best)


cdef object _generic(cnp.ndarray base_a, cnp.ndarray null_a, int q, cnp.ndarray ctx_a, cnp.ndarray cost_a, double tol):
    cdef const int64_t[:, ::1] null = null_a
    cdef const int64_t[::1] ctx = ctx_a
    cdef const double[:, ::1] cost = cost_a
    cdef Py_ssize_t s = base_a.shape[0], n = base_a.shape[1], d = null.shape[0]
    cdef Py_ssize_t n_ctx = cost.shape[0], n_sym = cost.shape[1]
    cdef Py_ssize_t j, i, t, e, L = d * s
    cdef int64_t old, new, v, c
    cdef double val, best = INFINITY
    cdef int64_t n_best = 0

    sym_a = base_a.copy()
    best_a = base_a.copy()
    pw_a = np.array([q ** (s - 1 - j) for j in range(s)], dtype=np.int64)
    idx_a = (sym_a * pw_a[:, None]).sum(axis=0).astype(np.int64)
    counts_a = np.zeros((n_ctx, n_sym), dtype=np.int64)
    digits_a = np.zeros(max(L, 1), dtype=np.int64)
    cdef int64_t[:, ::1] sym = sym_a
    cdef int64_t[:, ::1] best_sym = best_a
    cdef int64_t[::1] pw = pw_a
    cdef int64_t[::1] idx = idx_a
    cdef int64_t[:, ::1] counts = counts_a
    cdef int64_t[::1] digits = digits_a

    for t in range(n):
        counts[ctx[t], idx[t]] += 1

    with nogil:
        while True:
            val = _word_cost(counts, cost)
            if n_best == 0 or val < best - tol:
                best = val
                n_best = 1
                for j in range(s):
                    for t in range(n):
                        best_sym[j, t] = sym[j, t]
            elif val <= best + tol:
                n_best += 1
                if _word_less(sym, best_sym):
                    for j in range(s):
                        for t in range(n):
                            best_sym[j, t] = sym[j, t]
            e = 0
            while e < L:
                j = e // d
                i = e % d
                for t in range(n):
                    v = null[i, t]
                    if v:
                        old = sym[j, t]
                        new = (old + v) % q
                        sym[j, t] = new
                        c = ctx[t]
                        counts[c, idx[t]] -= 1
                        idx[t] += (new - old) * pw[j]
                        counts[c, idx[t]] += 1
                digits[e] += 1
                if digits[e] == q:
                    digits[e] = 0
                    e += 1
                else:
                    break
            if e == L:
                break
    return best_a, best, int(n_best)
