import itertools

import numpy as np
import pytest

from subspacecomp import falg, kernels
from subspacecomp.kernels import BACKENDS, get_coset_search


def brute_force(base, null, q, ctx, cost, tol):
    """Every coefficient choice, costs summed position by position."""
    s, n = base.shape
    d = len(null)
    words = []
    for coeffs in itertools.product(range(q), repeat=s * d):
        c = np.array(coeffs, dtype=np.int64).reshape(s, d)
        w = (base + (c @ null if d else 0)) % q
        sym = [sum(int(w[j, t]) * q ** (s - 1 - j) for j in range(s)) for t in range(n)]
        words.append((sum(cost[ctx[t], sym[t]] for t in range(n)), w))
    best = min(v for v, _ in words)
    tied = [w for v, w in words if v <= best + tol]
    canon = min(tied, key=lambda w: tuple(w.ravel()))
    return canon, best, len(tied)


def instance(q, n, k, s, n_ctx, rng, zero_prob=0.0):
    a = rng.integers(0, q, size=(k, n))
    null = falg.nullspace(a, q)
    base = rng.integers(0, q, size=(s, n))
    ctx = rng.integers(0, n_ctx, size=n)
    cost = rng.exponential(size=(n_ctx, q**s))
    cost[rng.random(cost.shape) < zero_prob] = np.inf
    return base, null, ctx, cost


def test_backend_registry():
    assert "python" in BACKENDS
    assert kernels.BACKEND in BACKENDS
    assert get_coset_search() is BACKENDS[kernels.BACKEND]
    with pytest.raises(Exception):
        get_coset_search("fortran")


def test_compiled_backend_is_built():
    # the package is expected to be installed with its extension
    assert "cython" in BACKENDS


CASES = [
    # q, n, k, s, n_ctx
    (2, 8, 4, 1, 1), (2, 10, 6, 1, 2), (2, 7, 4, 2, 3), (2, 6, 0, 1, 1),
    (3, 6, 3, 1, 2), (3, 5, 3, 2, 1), (5, 4, 2, 1, 3), (7, 3, 1, 1, 1), (2, 6, 6, 1, 1),
]


@pytest.mark.parametrize("backend", sorted(BACKENDS))
@pytest.mark.parametrize("case", CASES)
@pytest.mark.parametrize("seed", range(4))
def test_backends_match_brute_force(backend, case, seed):
    q, n, k, s, n_ctx = case
    rng = np.random.default_rng([seed, q, n, k, s])
    base, null, ctx, cost = instance(q, n, k, s, n_ctx, rng, zero_prob=0.15 if seed % 2 else 0.0)
    want_w, want_c, want_n = brute_force(base, null, q, ctx, cost, 1e-9)
    got_w, got_c, got_n = BACKENDS[backend](base, null, q, ctx, cost, 1e-9)
    assert got_n == want_n
    assert got_c == pytest.approx(want_c) if np.isfinite(want_c) else got_c == want_c
    assert np.array_equal(got_w, want_w)


@pytest.mark.parametrize("backend", sorted(BACKENDS))
def test_ties_are_counted(backend):
    # cost depends only on weight, so every word of equal weight ties
    base = np.zeros((1, 4), dtype=np.int64)
    null = np.array([[1, 1, 0, 0], [0, 0, 1, 1]])
    cost = np.array([[0.0, 1.0]])
    w, c, nb = BACKENDS[backend](base, null, 2, np.zeros(4, dtype=np.int64), cost, 1e-9)
    assert c == 0 and nb == 1 and not w.any()
    base = np.array([[1, 0, 0, 0]])
    w, c, nb = BACKENDS[backend](base, null, 2, np.zeros(4, dtype=np.int64), cost, 1e-9)
    # 1000 and 0100 have weight 1; 1011 and 0111 weight 3
    assert c == 1 and nb == 2
    assert w.tolist() == [[0, 1, 0, 0]]


def test_binary_width_limit_falls_back_to_generic():
    rng = np.random.default_rng(0)
    n = 70
    a = rng.integers(0, 2, size=(n - 3, n))
    null = falg.nullspace(a, 2)
    base = rng.integers(0, 2, size=(1, n))
    cost = rng.exponential(size=(1, 2))
    ctx = np.zeros(n, dtype=np.int64)
    outs = [BACKENDS[b](base, null, 2, ctx, cost, 1e-9) for b in sorted(BACKENDS)]
    for o in outs[1:]:
        assert np.array_equal(o[0], outs[0][0]) and o[2] == outs[0][2]


@pytest.mark.slow
def test_backends_agree_on_larger_instances():
    rng = np.random.default_rng(1)
    for q, n, k, s, n_ctx in [(2, 24, 10, 1, 1), (2, 14, 7, 2, 4), (3, 9, 4, 1, 3)]:
        base, null, ctx, cost = instance(q, n, k, s, n_ctx, rng)
        outs = [BACKENDS[b](base, null, q, ctx, cost, 1e-9) for b in sorted(BACKENDS)]
        for o in outs[1:]:
            assert np.array_equal(o[0], outs[0][0]) and o[2] == outs[0][2]
            assert o[1] == pytest.approx(outs[0][1])
