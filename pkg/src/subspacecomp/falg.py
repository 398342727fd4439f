"""Exact linear algebra over prime fields and the lattice of subspaces of F_q^m.

Vectors are plain integer sequences with residues in ``[0, q)``.  A
:class:`Subspace` stores its reduced row echelon basis, which makes equality,
hashing and ordering canonical.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import BudgetError, InputError

MAX_Q = 251
MAX_POINTS = 2**20
MAX_SUBSPACES = 10**7


def check_field(q: int) -> int:
    """Validate a field order: a prime between 2 and ``MAX_Q``."""
    q = int(q)
    if q < 2 or q > MAX_Q or any(q % d == 0 for d in range(2, math.isqrt(q) + 1)):
        raise InputError(f"field order must be a prime in [2, {MAX_Q}], got {q}")
    return q


def _rref_rows(rows: list[list[int]], ncols: int, q: int) -> tuple[list[list[int]], list[int]]:
    rows = [[x % q for x in r] for r in rows]
    pivots: list[int] = []
    top = 0
    for col in range(ncols):
        if top == len(rows):
            break
        pr = next((r for r in range(top, len(rows)) if rows[r][col]), None)
        if pr is None:
            continue
        rows[top], rows[pr] = rows[pr], rows[top]
        inv = pow(rows[top][col], -1, q)
        piv = [(x * inv) % q for x in rows[top]]
        rows[top] = piv
        for r in range(len(rows)):
            f = rows[r][col]
            if r != top and f:
                rows[r] = [(a - f * b) % q for a, b in zip(rows[r], piv)]
        pivots.append(col)
        top += 1
    return rows[:top], pivots


def rref(M, q: int) -> tuple[np.ndarray, int]:
    """Reduced row echelon form of ``M`` over F_q with zero rows dropped.

    Returns ``(R, rank)`` where ``R`` has exactly ``rank`` rows.
    """
    M = np.asarray(M, dtype=np.int64)
    if M.ndim != 2:
        raise InputError("rref expects a 2-D matrix")
    rows, _ = _rref_rows(M.tolist(), M.shape[1], q)
    return np.array(rows, dtype=np.int64).reshape(len(rows), M.shape[1]), len(rows)


def rank(M, q: int) -> int:
    return rref(M, q)[1]


def nullspace(M, q: int) -> np.ndarray:
    """Basis (as rows) of ``{x : M x = 0}`` over F_q."""
    M = np.asarray(M, dtype=np.int64)
    ncols = M.shape[1]
    rows, pivots = _rref_rows(M.tolist(), ncols, q)
    free = [c for c in range(ncols) if c not in pivots]
    out = []
    for f in free:
        v = [0] * ncols
        v[f] = 1
        for r, p in enumerate(pivots):
            v[p] = (-rows[r][f]) % q
        out.append(v)
    return np.array(out, dtype=np.int64).reshape(len(out), ncols)


def solve_affine(M, rhs, q: int) -> tuple[np.ndarray, np.ndarray] | None:
    """Solve ``M x = rhs`` over F_q.

    Returns ``(particular, null_basis)`` or ``None`` when inconsistent.  ``rhs``
    may be a matrix, in which case each column is solved independently and
    ``particular`` has one column per right-hand side.
    """
    M = np.asarray(M, dtype=np.int64) % q
    rhs = np.asarray(rhs, dtype=np.int64) % q
    vec = rhs.ndim == 1
    R = rhs.reshape(M.shape[0], -1)
    ncols = M.shape[1]
    aug = np.concatenate([M, R], axis=1).tolist()
    rows, pivots = _rref_rows(aug, ncols + R.shape[1], q)
    if any(p >= ncols for p in pivots):
        return None
    x = np.zeros((ncols, R.shape[1]), dtype=np.int64)
    for r, p in enumerate(pivots):
        x[p] = rows[r][ncols:]
    return (x[:, 0] if vec else x), nullspace(M, q)


@dataclass(frozen=True)
class Subspace:
    """A subspace of F_q^m held as its canonical RREF basis.

    Build instances with :func:`span`; the constructor trusts its input.
    """

    q: int
    m: int
    basis: tuple[tuple[int, ...], ...]

    @property
    def dim(self) -> int:
        return len(self.basis)

    @cached_property
    def pivots(self) -> tuple[int, ...]:
        return tuple(next(i for i, x in enumerate(row) if x) for row in self.basis)

    @cached_property
    def matrix(self) -> np.ndarray:
        return np.array(self.basis, dtype=np.int64).reshape(self.dim, self.m)

    @cached_property
    def key(self) -> tuple:
        """Sort key realising the canonical enumeration order."""
        return (self.dim, self.pivots, tuple(x for row in self.basis for x in row))

    def __lt__(self, other: Subspace) -> bool:
        return self.key < other.key

    def member(self, v: Sequence[int]) -> bool:
        return member(self, v)

    def contains(self, other: Subspace) -> bool:
        return contains(self, other)

    def __add__(self, other: Subspace) -> Subspace:
        return subspace_sum(self, other)

    def __and__(self, other: Subspace) -> Subspace:
        return subspace_intersect(self, other)

    def vectors(self) -> Iterator[tuple[int, ...]]:
        """All q^dim members, in coefficient-lexicographic order."""
        for coeffs in itertools.product(range(self.q), repeat=self.dim):
            v = [0] * self.m
            for c, row in zip(coeffs, self.basis):
                if c:
                    v = [(a + c * b) % self.q for a, b in zip(v, row)]
            yield tuple(v)

    def __str__(self) -> str:
        if not self.basis:
            return "<0>"
        return "<" + ", ".join(format_vector(r, self.q) for r in self.basis) + ">"


def _check_vec(v: Sequence[int], q: int, m: int) -> list[int]:
    v = [int(x) for x in v]
    if len(v) != m:
        raise InputError(f"vector of length {len(v)} in F_{q}^{m}")
    if any(x < 0 or x >= q for x in v):
        raise InputError(f"entries must be residues mod {q}: {v}")
    return v


def span(q: int, m: int, vectors: Iterable[Sequence[int]]) -> Subspace:
    rows = [_check_vec(v, q, m) for v in vectors]
    red, _ = _rref_rows(rows, m, q)
    return Subspace(q, m, tuple(tuple(r) for r in red))


def zero(q: int, m: int) -> Subspace:
    return Subspace(q, m, ())


def full(q: int, m: int) -> Subspace:
    return span(q, m, np.eye(m, dtype=np.int64))


def coordinate_subspace(q: int, m: int, indices: Iterable[int]) -> Subspace:
    """Span of the unit vectors e_i, i in ``indices`` (0-based)."""
    eye = np.eye(m, dtype=np.int64)
    return span(q, m, [eye[i] for i in indices])


def _same_ambient(a: Subspace, b: Subspace) -> None:
    if a.q != b.q or a.m != b.m:
        raise InputError(f"ambient mismatch: F_{a.q}^{a.m} vs F_{b.q}^{b.m}")


def subspace_sum(u1: Subspace, u2: Subspace) -> Subspace:
    _same_ambient(u1, u2)
    if not u2.basis or u1.dim == u1.m:
        return u1
    if not u1.basis:
        return u2
    return span(u1.q, u1.m, u1.basis + u2.basis)


def annihilator(u: Subspace) -> np.ndarray:
    """Rows spanning ``{h : h . x = 0 for all x in u}``."""
    if not u.basis:
        return np.eye(u.m, dtype=np.int64)
    return nullspace(u.matrix, u.q)


def subspace_intersect(u1: Subspace, u2: Subspace) -> Subspace:
    _same_ambient(u1, u2)
    if contains(u2, u1):
        return u1
    if contains(u1, u2):
        return u2
    h = np.concatenate([annihilator(u1), annihilator(u2)])
    return span(u1.q, u1.m, nullspace(h, u1.q))


def member(u: Subspace, v: Sequence[int]) -> bool:
    v = _check_vec(v, u.q, u.m)
    for row, p in zip(u.basis, u.pivots):
        f = v[p]
        if f:
            v = [(a - f * b) % u.q for a, b in zip(v, row)]
    return not any(v)


def contains(u: Subspace, w: Subspace) -> bool:
    """True iff ``w`` is a subspace of ``u``."""
    _same_ambient(u, w)
    if w.dim > u.dim:
        return False
    return all(member(u, row) for row in w.basis)


def gaussian_binomial(n: int, k: int, q: int) -> int:
    """Number of k-dimensional subspaces of F_q^n."""
    if k < 0 or k > n:
        return 0
    num = den = 1
    for i in range(k):
        num *= q ** (n - i) - 1
        den *= q ** (i + 1) - 1
    return num // den


def galois_number(n: int, q: int) -> int:
    return sum(gaussian_binomial(n, k, q) for k in range(n + 1))


def _all_of_dim(q: int, m: int, k: int) -> Iterator[Subspace]:
    for pivots in itertools.combinations(range(m), k):
        pset = set(pivots)
        free = [(r, c) for r, p in enumerate(pivots) for c in range(p + 1, m) if c not in pset]
        for fill in itertools.product(range(q), repeat=len(free)):
            rows = [[0] * m for _ in range(k)]
            for r, p in enumerate(pivots):
                rows[r][p] = 1
            for (r, c), x in zip(free, fill):
                rows[r][c] = x
            yield Subspace(q, m, tuple(tuple(r) for r in rows))


@lru_cache(maxsize=64)
def _all_subspaces(q: int, m: int, dim: int | None) -> tuple[Subspace, ...]:
    dims = range(m + 1) if dim is None else [dim]
    return tuple(s for k in dims for s in _all_of_dim(q, m, k))


def enumerate_subspaces(
    q: int,
    m: int,
    lo: Subspace | None = None,
    hi: Subspace | None = None,
    dim: int | None = None,
    *,
    quotient: bool = True,
    max_points: int = MAX_POINTS,
    max_count: int = MAX_SUBSPACES,
) -> Iterator[Subspace]:
    """Yield every subspace U with ``lo <= U <= hi`` (and ``dim U == dim``).

    Output follows the canonical order of :attr:`Subspace.key`.  With
    ``quotient=True`` the interval is generated as the subspace lattice of a
    complement of ``lo`` in ``hi`` and lifted; otherwise the full lattice is
    filtered.  Both paths produce identical sequences.
    """
    q = check_field(q)
    if q**m > max_points:
        raise BudgetError(f"q^m = {q}^{m} exceeds the enumeration budget of {max_points} points")
    lo = zero(q, m) if lo is None else lo
    hi = full(q, m) if hi is None else hi
    _same_ambient(lo, hi)
    if lo.q != q or lo.m != m:
        raise InputError("interval bounds live in a different ambient space")
    if not contains(hi, lo):
        return
    c = hi.dim - lo.dim
    if dim is None:
        projected = galois_number(c, q)
    else:
        projected = gaussian_binomial(c, dim - lo.dim, q)
    if projected > max_count:
        raise BudgetError(
            f"interval holds {projected} subspaces, above the budget of {max_count}"
        )
    if dim is not None and not lo.dim <= dim <= hi.dim:
        return
    if not quotient or (lo.dim == 0 and hi.dim == m):
        for s in _all_subspaces(q, m, dim):
            if contains(s, lo) and contains(hi, s):
                yield s
        return
    yield from _interval(lo, hi, dim)


@lru_cache(maxsize=4096)
def _interval(lo: Subspace, hi: Subspace, dim: int | None) -> tuple[Subspace, ...]:
    comp = complement_basis(lo, hi).matrix
    c = comp.shape[0]
    sub_dim = None if dim is None else dim - lo.dim
    out = []
    for s in _all_subspaces(lo.q, c, sub_dim):
        lifted = (s.matrix @ comp) % lo.q
        out.append(span(lo.q, lo.m, list(lo.basis) + lifted.tolist()))
    out.sort(key=lambda s: s.key)
    return tuple(out)


def complement_basis(s: Subspace, w: Subspace) -> Subspace:
    """A complement T of ``s`` inside ``w`` (``s + T = w``, ``s & T = 0``).

    Built greedily from the RREF rows of ``w`` in order, so the result is
    deterministic.
    """
    _same_ambient(s, w)
    if not contains(w, s):
        raise InputError(f"{s} is not contained in {w}")
    cur = s
    chosen = []
    for row in w.basis:
        if not member(cur, row):
            chosen.append(row)
            cur = span(s.q, s.m, list(cur.basis) + [row])
    return span(s.q, s.m, chosen)


def coordinate_extension_indices(s: Subspace) -> tuple[int, ...]:
    """0-based coordinates i, chosen in ascending order, whose unit vectors complete ``s`` to F_q^m."""
    eye = np.eye(s.m, dtype=np.int64).tolist()
    cur = s
    chosen = []
    for i in range(s.m):
        if cur.dim == s.m:
            break
        if not member(cur, eye[i]):
            chosen.append(i)
            cur = span(s.q, s.m, list(cur.basis) + [eye[i]])
    return tuple(chosen)


def parse_vector(text: str, q: int, m: int | None = None) -> list[int]:
    """Parse ``"1101"`` (single digits) or ``"2,0,10"`` (comma separated)."""
    text = text.strip()
    try:
        v = [int(x) for x in text.split(",")] if "," in text else [int(ch) for ch in text]
    except ValueError:
        raise InputError(f"cannot parse vector {text!r}") from None
    if m is not None and len(v) != m:
        raise InputError(f"vector {text!r} has length {len(v)}, expected {m}")
    if any(x < 0 or x >= q for x in v):
        raise InputError(f"vector {text!r} has entries outside [0, {q})")
    return v


def format_vector(v: Sequence[int], q: int) -> str:
    if q < 10:
        return "".join(str(int(x)) for x in v)
    return ",".join(str(int(x)) for x in v)
