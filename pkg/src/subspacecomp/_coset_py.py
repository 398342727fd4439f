"""Pure numpy maximum-likelihood coset search (fallback for the compiled kernel).

``coset_search(base, null, q, ctx, cost, tol)`` scans every word

    base[j] + sum_i c[j, i] * null[i]   (mod q),   c in F_q^(s x d)

of an affine coset, where ``base`` is (s, n) and ``null`` is (d, n).  Position
t of a word carries the symbol tuple (w_1[t], ..., w_s[t]) with index
``sum_j w_j[t] q^(s-1-j)``; its cost is ``cost[ctx[t], index]``.  Word cost is
the sum over positions.

Returns ``(best_word, best_cost, n_best)`` where ``n_best`` counts the words
whose cost lies within ``tol`` of the minimum.  Among tied words the
lexicographically smallest (row by row, position 0 first) is returned.  Costs are computed from symbol
counts per context, never accumulated incrementally, so both backends agree
on ties.
"""

from __future__ import annotations

import itertools

import numpy as np

CHUNK = 1 << 15


def _costs_from_counts(counts: np.ndarray, cost: np.ndarray) -> np.ndarray:
    # counts: (N, n_ctx * n_sym); infinite costs only matter where counted
    flat = cost.ravel()
    inf = ~np.isfinite(flat)
    vals = counts @ np.where(inf, 0.0, flat)
    if inf.any():
        vals[(counts[:, inf] > 0).any(axis=1)] = np.inf
    return vals


def _lexmin(words: np.ndarray) -> np.ndarray:
    """Lexicographically smallest of a (T, s, n) stack."""
    flat = words.reshape(len(words), -1)
    return words[np.lexsort(flat.T[::-1])[0]]


def _mask_bits(masks: np.ndarray, n: int) -> np.ndarray:
    # (T, s) uint64 -> (T, s, n) bits
    return ((masks[..., None] >> np.arange(n, dtype=np.uint64)) & np.uint64(1)).astype(np.int64)


def _binary_words(base: np.ndarray, null: np.ndarray) -> np.ndarray:
    """All coset words as a (2^(ds), s) array of uint64 bit masks."""
    n = base.shape[1]
    weights = np.uint64(1) << np.arange(n, dtype=np.uint64)
    bmask = (base.astype(np.uint64) & np.uint64(1)) @ weights
    nmask = (null.astype(np.uint64) & np.uint64(1)) @ weights if len(null) else np.zeros(0, np.uint64)
    span_ = np.zeros(1, dtype=np.uint64)
    for v in nmask:
        span_ = np.concatenate([span_, span_ ^ v])
    cols = [span_ ^ b for b in bmask]
    grids = np.meshgrid(*cols, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _search_binary(base, null, ctx, cost, tol):
    s, n = base.shape
    n_ctx, n_sym = cost.shape
    words = _binary_words(base, null)
    full = np.uint64((1 << n) - 1) if n < 64 else np.uint64(0xFFFFFFFFFFFFFFFF)
    weights = np.uint64(1) << np.arange(n, dtype=np.uint64)
    cmask = [np.uint64(((ctx == c).astype(np.uint64) @ weights)) for c in range(n_ctx)]
    vals = np.empty(len(words))
    for lo in range(0, len(words), CHUNK):
        w = words[lo:lo + CHUNK]
        counts = np.zeros((len(w), n_ctx, n_sym), dtype=np.int64)
        for a in range(n_sym):
            pat = np.full(len(w), full, dtype=np.uint64)
            for j in range(s):
                pat &= w[:, j] if (a >> (s - 1 - j)) & 1 else ~w[:, j]
            for c in range(n_ctx):
                counts[:, c, a] = np.bitwise_count(pat & cmask[c])
        vals[lo:lo + CHUNK] = _costs_from_counts(counts.reshape(len(w), -1), cost)
    best = vals.min()
    tied = np.flatnonzero(vals <= best + tol)
    cands = [_lexmin(_mask_bits(words[tied[lo:lo + CHUNK]], n)) for lo in range(0, len(tied), CHUNK)]
    return _lexmin(np.stack(cands)), float(best), len(tied)


def _generic_chunks(base, null, q):
    s, n = base.shape
    d = null.shape[0]
    coeff_iter = itertools.product(range(q), repeat=d * s)
    while True:
        block = np.array(list(itertools.islice(coeff_iter, CHUNK)), dtype=np.int64)
        if len(block) == 0:
            return
        block = block.reshape(len(block), s, d)
        yield (base[None] + np.einsum("bjd,dn->bjn", block, null)) % q


def _search_generic(base, null, q, ctx, cost, tol):
    s = base.shape[0]
    n_ctx, n_sym = cost.shape
    pw = q ** np.arange(s - 1, -1, -1, dtype=np.int64)
    vals = []
    for words in _generic_chunks(base, null, q):
        flat = ctx[None, :] * n_sym + np.einsum("bjn,j->bn", words, pw)
        counts = np.zeros((len(words), n_ctx * n_sym), dtype=np.int64)
        np.add.at(counts, (np.arange(len(words))[:, None], flat), 1)
        vals.append(_costs_from_counts(counts, cost))
    best = min(v.min() for v in vals)
    n_best = sum(int(np.count_nonzero(v <= best + tol)) for v in vals)
    # second pass: regenerate only the chunks holding tied words
    cands = [
        _lexmin(words[v <= best + tol])
        for words, v in zip(_generic_chunks(base, null, q), vals)
        if (v <= best + tol).any()
    ]
    return _lexmin(np.stack(cands)), float(best), n_best


def coset_search(base, null, q: int, ctx, cost, tol: float):
    base = np.asarray(base, dtype=np.int64)
    null = np.asarray(null, dtype=np.int64).reshape(-1, base.shape[1])
    ctx = np.asarray(ctx, dtype=np.int64)
    cost = np.asarray(cost, dtype=np.float64)
    if q == 2 and base.shape[1] <= 64:
        return _search_binary(base, null, ctx, cost, tol)
    return _search_generic(base, null, q, ctx, cost, tol)
