"""The normalized-entropy subspace chain of a joint distribution.

Starting from ``{0}``, each link is the largest subspace that minimizes the
normalized conditional entropy given the previous link.  The chain always ends
at the whole space F_q^m and its per-link rates strictly increase.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import falg
from .errors import ConsistencyError, InputError
from .falg import Subspace
from .source import JointDist, check_nondegenerate, norm_cond_entropy

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class ChainLink:
    subspace: Subspace
    rate: float  # normalized entropy of this link given the previous one


@dataclass(frozen=True)
class SubspaceChain:
    q: int
    m: int
    links: tuple[ChainLink, ...]

    @property
    def r(self) -> int:
        return len(self.links)

    @property
    def subspaces(self) -> list[Subspace]:
        return [link.subspace for link in self.links]

    @property
    def rates(self) -> list[float]:
        return [link.rate for link in self.links]

    def level(self, j: int) -> Subspace:
        """W^(j), with W^(0) the zero subspace."""
        return falg.zero(self.q, self.m) if j == 0 else self.links[j - 1].subspace

    def locate(self, w: Subspace) -> int:
        """Smallest j >= 1 with ``w`` contained in W^(j)."""
        for j, link in enumerate(self.links, start=1):
            if link.subspace.contains(w):
                return j
        raise ConsistencyError("chain does not end at the full space")

    def records(self) -> list[dict]:
        return [
            {
                "j": j,
                "dim": link.subspace.dim,
                "basis": [falg.format_vector(r, self.q) for r in link.subspace.basis],
                "H_N": link.rate,
            }
            for j, link in enumerate(self.links, start=1)
        ]

    def same_subspaces(self, other: SubspaceChain) -> bool:
        return self.subspaces == other.subspaces


def min_entropy_set(
    d: JointDist,
    w0: Subspace,
    tol: float = DEFAULT_TOL,
    shuffle: np.random.Generator | None = None,
) -> list[Subspace]:
    """All U strictly containing ``w0`` whose H_N(U | w0) is minimal within ``tol``."""
    if w0.dim == d.m:
        raise InputError("w0 must be a proper subspace")
    cands = [u for u in falg.enumerate_subspaces(d.q, d.m, lo=w0) if u.dim > w0.dim]
    if shuffle is not None:
        cands = [cands[i] for i in shuffle.permutation(len(cands))]
    vals = [norm_cond_entropy(d, u, w0) for u in cands]
    best = min(vals)
    return [u for u, v in zip(cands, vals) if v <= best + tol]


def next_link(
    d: JointDist,
    w0: Subspace,
    tol: float = DEFAULT_TOL,
    shuffle: np.random.Generator | None = None,
) -> Subspace:
    """Sum of the minimizing set; checked to be a minimizer itself."""
    s = min_entropy_set(d, w0, tol, shuffle)
    top = w0
    for u in s:
        top = top + u
    best = min(norm_cond_entropy(d, u, w0) for u in s)
    if top.dim <= w0.dim or norm_cond_entropy(d, top, w0) > best + tol:
        raise ConsistencyError(
            f"minimizing set above {w0} is not closed under addition at tolerance {tol:g}"
        )
    return top


def decompose(
    d: JointDist,
    tol: float = DEFAULT_TOL,
    shuffle: np.random.Generator | None = None,
    verify: bool = True,
) -> SubspaceChain:
    bad = check_nondegenerate(d)
    if bad is not None:
        raise InputError(f"distribution is linearly degenerate along direction {bad}")
    full_dim = d.m
    links = []
    cur = falg.zero(d.q, d.m)
    while cur.dim < full_dim:
        nxt = next_link(d, cur, tol, shuffle)
        links.append(ChainLink(nxt, norm_cond_entropy(d, nxt, cur)))
        cur = nxt
    chain = SubspaceChain(d.q, d.m, tuple(links))
    for a, b in zip(chain.rates, chain.rates[1:]):
        if not b > a + tol:
            raise ConsistencyError(f"chain rates not strictly increasing: {a!r} then {b!r}")
    if verify and d.q**d.m <= 256:
        _verify_conditions(d, chain, tol)
    return chain


def _verify_conditions(d: JointDist, chain: SubspaceChain, tol: float) -> None:
    # exhaustive re-check over the filtered (non-quotient) enumeration path
    for j, link in enumerate(chain.links, start=1):
        prev = chain.level(j - 1)
        for u in falg.enumerate_subspaces(d.q, d.m, lo=prev, quotient=False):
            if u.dim == prev.dim:
                continue
            v = norm_cond_entropy(d, u, prev)
            if v < link.rate - tol:
                raise ConsistencyError(f"{u} beats link {j} ({v!r} < {link.rate!r})")
            if v <= link.rate + tol and not link.subspace.contains(u):
                raise ConsistencyError(f"minimizer {u} escapes link {j}")


def decompose_independent(
    mixing,
    entropies: Sequence[float],
    q: int = 2,
    tol: float = DEFAULT_TOL,
) -> SubspaceChain:
    """Chain for X = Y G with independent Y_i of the given entropies.

    Y_i corresponds to column i of G^-1; the links are spans of the Y_i grouped
    by equal entropy in ascending order.  No enumeration is involved.
    """
    q = falg.check_field(q)
    G = np.asarray(mixing, dtype=np.int64) % q
    m = G.shape[0]
    if G.shape != (m, m) or len(entropies) != m:
        raise InputError("need a square mixing matrix and one entropy per row")
    sol = falg.solve_affine(G, np.eye(m, dtype=np.int64), q)
    if sol is None or falg.rank(G, q) != m:
        raise InputError("mixing matrix is singular")
    inv = sol[0]
    ent = [float(h) for h in entropies]
    if min(ent) <= tol:
        raise InputError("every independent component needs positive entropy")
    order = sorted(range(m), key=lambda i: ent[i])
    groups: list[list[int]] = []
    for i in order:
        if groups and ent[i] <= ent[groups[-1][0]] + tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    links = []
    cols: list[list[int]] = []
    for g in groups:
        cols.extend(inv[:, i].tolist() for i in g)
        links.append(ChainLink(falg.span(q, m, cols), float(np.mean([ent[i] for i in g]))))
    return SubspaceChain(q, m, tuple(links))
