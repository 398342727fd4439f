"""Joint source distributions over F_q^m and the entropy of subspaces.

All entropies are in bits.  A pmf is a dense array of length q^m indexed by
``x = sum_i x_i q^(m-i)`` so that ``x_1`` is the most significant digit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy.special import entr

from . import falg
from .errors import InputError
from .falg import Subspace

LN2 = math.log(2.0)
PMF_TOL = 1e-9


def index_digits(q: int, m: int) -> np.ndarray:
    """All points of F_q^m as a (q^m, m) array in pmf index order."""
    idx = np.arange(q**m, dtype=np.int64)
    powers = q ** np.arange(m - 1, -1, -1, dtype=np.int64)
    return (idx[:, None] // powers[None, :]) % q


def digits_to_index(points: np.ndarray, q: int) -> np.ndarray:
    points = np.asarray(points, dtype=np.int64)
    k = points.shape[-1]
    powers = q ** np.arange(k - 1, -1, -1, dtype=np.int64)
    return points @ powers


def _entropy_bits(p: np.ndarray) -> float:
    return float(entr(p).sum() / LN2)


@dataclass(frozen=True, eq=False)
class JointDist:
    """Dense pmf of (X_1, ..., X_m) over F_q^m.

    Entropies of subspaces are memoised per instance, keyed by the canonical
    subspace, so repeated lattice sweeps stay cheap.
    """

    q: int
    m: int
    pmf: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        falg.check_field(self.q)
        if self.m < 1:
            raise InputError("need at least one source")
        if self.q**self.m > falg.MAX_POINTS:
            raise InputError(f"q^m = {self.q**self.m} exceeds the dense pmf budget {falg.MAX_POINTS}")
        p = np.array(self.pmf, dtype=np.float64).ravel()
        if p.size != self.q**self.m:
            raise InputError(f"pmf has {p.size} entries, expected q^m = {self.q**self.m}")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise InputError("pmf entries must be finite and non-negative")
        total = p.sum()
        if abs(total - 1.0) > PMF_TOL:
            raise InputError(f"pmf is not normalized: entries sum to {total:.12g}")
        if abs(total - 1.0) > 1e-12:
            p = p / total
        p.setflags(write=False)
        object.__setattr__(self, "pmf", p)

    @cached_property
    def points(self) -> np.ndarray:
        return index_digits(self.q, self.m)

    def prob(self, x: Sequence[int]) -> float:
        return float(self.pmf[int(digits_to_index(np.asarray(x), self.q))])

    def project(self, basis) -> np.ndarray:
        """pmf of the tuple (b_1 . X, ..., b_k . X) for the rows b_i of ``basis``."""
        B = np.asarray(basis, dtype=np.int64).reshape(-1, self.m)
        if B.shape[0] == 0:
            return np.ones(1)
        codes = digits_to_index((self.points @ B.T) % self.q, self.q)
        return np.bincount(codes, weights=self.pmf, minlength=self.q ** B.shape[0])

    def entropy(self, u: Subspace) -> float:
        return subspace_entropy(self, u)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """n i.i.d. draws as an (n, m) array of field elements."""
        idx = rng.choice(self.pmf.size, size=n, p=self.pmf)
        return self.points[idx]


def _check_ambient(d: JointDist, *us: Subspace) -> None:
    for u in us:
        if u.q != d.q or u.m != d.m:
            raise InputError(f"subspace of F_{u.q}^{u.m} used with a distribution on F_{d.q}^{d.m}")


def pushforward(d: JointDist, gamma) -> JointDist:
    """Law of ``Z = X gamma`` for a full-column-rank (m x k) matrix ``gamma``."""
    G = np.asarray(gamma, dtype=np.int64) % d.q
    if G.ndim != 2 or G.shape[0] != d.m:
        raise InputError(f"map must be {d.m} x k, got shape {G.shape}")
    if falg.rank(G, d.q) != G.shape[1]:
        raise InputError("map is rank deficient")
    return JointDist(d.q, G.shape[1], d.project(G.T))


def subspace_entropy(d: JointDist, u: Subspace) -> float:
    _check_ambient(d, u)
    key = ("H", u)
    h = d._cache.get(key)
    if h is None:
        h = _entropy_bits(d.project(u.matrix)) if u.dim else 0.0
        d._cache[key] = h
    return h


def cond_entropy(d: JointDist, u2: Subspace, u1: Subspace) -> float:
    """H(U2 | U1) = H(U1 + U2) - H(U1), clipped at zero against round-off."""
    _check_ambient(d, u1, u2)
    return max(0.0, subspace_entropy(d, u1 + u2) - subspace_entropy(d, u1))


def norm_cond_entropy(d: JointDist, u2: Subspace, u1: Subspace | None = None) -> float:
    """Conditional entropy of U2 given U1 per dimension added to U1."""
    if u1 is None:
        u1 = falg.zero(d.q, d.m)
    _check_ambient(d, u1, u2)
    s = u1 + u2
    extra = s.dim - u1.dim
    if extra == 0:
        raise InputError(f"normalized conditional entropy undefined: {u2} lies inside {u1}")
    return cond_entropy(d, u2, u1) / extra


def check_nondegenerate(d: JointDist, atol: float = 1e-12) -> tuple[int, ...] | None:
    """Return ``None`` if no nonzero a has P(a . X = 0) = 1, else the first such a.

    Directions are scanned in canonical projective order (leading entry 1).
    """
    dirs = [s.basis[0] for s in falg.enumerate_subspaces(d.q, d.m, dim=1)]
    for start in range(0, len(dirs), 256):
        block = np.array(dirs[start:start + 256], dtype=np.int64)
        vanish = ((d.points @ block.T) % d.q) == 0
        mass = d.pmf @ vanish
        bad = np.flatnonzero(mass >= 1.0 - atol)
        if bad.size:
            return tuple(int(x) for x in block[bad[0]])
    return None


def is_nondegenerate(d: JointDist) -> bool:
    return check_nondegenerate(d) is None


# -- named families ----------------------------------------------------------


def bernoulli(p: float) -> np.ndarray:
    return np.array([1.0 - p, p])


def binary_entropy(p: float) -> float:
    return _entropy_bits(bernoulli(p))


def example1_mixing() -> np.ndarray:
    """Row-convention mixing matrix G (X = Y G) with X_i = Y_i + ... + Y_4."""
    return np.tril(np.ones((4, 4), dtype=np.int64))


def opt_ss_mixing(m: int) -> np.ndarray:
    """Row-convention mixing matrix with X_i = Y_1 + ... + Y_i."""
    return np.triu(np.ones((m, m), dtype=np.int64))


def product_law(q: int, marginals: Sequence[Sequence[float]], mixing) -> JointDist:
    """Distribution of X = Y G for independent Y_i with the given marginals."""
    G = np.asarray(mixing, dtype=np.int64) % q
    m = G.shape[0]
    if G.shape != (m, m) or len(marginals) != m:
        raise InputError("mixing matrix must be m x m with one marginal per row")
    if falg.rank(G, q) != m:
        raise InputError("mixing matrix is singular")
    margs = []
    for i, mg in enumerate(marginals):
        mg = np.asarray(mg, dtype=np.float64)
        if mg.shape != (q,) or np.any(mg < 0) or abs(mg.sum() - 1) > PMF_TOL:
            raise InputError(f"marginal {i + 1} is not a pmf on F_{q}")
        margs.append(mg)
    ys = index_digits(q, m)
    prob = np.ones(len(ys))
    for i, mg in enumerate(margs):
        prob *= mg[ys[:, i]]
    xs = digits_to_index((ys @ G) % q, q)
    return JointDist(q, m, np.bincount(xs, weights=prob, minlength=q**m))


@dataclass(frozen=True)
class FamilySpec:
    """Tagged description of a named distribution family.

    ``kind`` is one of ``example1``, ``opt_ss``, ``independent_mix``,
    ``uniform`` or ``random``; ``params`` holds the keyword parameters.
    """

    kind: str
    params: dict

    @classmethod
    def parse(cls, text: str) -> FamilySpec:
        """Parse the CLI form ``kind:key=value,key=value``."""
        kind, _, rest = text.partition(":")
        params: dict[str, Any] = {}
        for item in filter(None, rest.split(",")):
            key, eq, val = item.partition("=")
            if not eq:
                raise InputError(f"family parameter {item!r} is not key=value")
            try:
                params[key.strip()] = int(val) if val.strip().lstrip("-").isdigit() else float(val)
            except ValueError:
                raise InputError(f"family parameter {key!r} has non-numeric value {val!r}") from None
        return cls(kind.strip(), params)

    def to_document(self) -> dict:
        out = {"kind": self.kind}
        for k, v in self.params.items():
            out[k] = v.tolist() if isinstance(v, np.ndarray) else v
        return out


def _need(params: dict, *names: str) -> list:
    missing = [n for n in names if n not in params]
    if missing:
        raise InputError(f"family is missing parameter(s): {', '.join(missing)}")
    return [params[n] for n in names]


def make_family(spec: FamilySpec) -> JointDist:
    p = spec.params
    if spec.kind == "example1":
        p1, p2 = (float(x) for x in _need(p, "p1", "p2"))
        if not 0 < p1 < p2 < 0.5:
            raise InputError(f"example1 needs 0 < p1 < p2 < 1/2, got p1={p1}, p2={p2}")
        margs = [bernoulli(p1), bernoulli(p1), bernoulli(p2), bernoulli(0.5)]
        return product_law(2, margs, example1_mixing())
    if spec.kind == "opt_ss":
        m, pr = _need(p, "m", "p")
        m, pr = int(m), float(pr)
        if m < 2 or m % 2:
            raise InputError(f"opt_ss needs an even m >= 2, got {m}")
        if not 0 < pr < 0.5:
            raise InputError(f"opt_ss needs 0 < p < 1/2, got {pr}")
        margs = [bernoulli(0.5) if i % 2 == 0 else bernoulli(pr) for i in range(m)]
        return product_law(2, margs, opt_ss_mixing(m))
    if spec.kind == "independent_mix":
        G, margs = _need(p, "G", "marginals")
        q = int(p.get("q", 2))
        return product_law(falg.check_field(q), margs, G)
    if spec.kind == "uniform":
        q, m = (int(x) for x in _need(p, "q", "m"))
        q = falg.check_field(q)
        return JointDist(q, m, np.full(q**m, 1.0 / q**m))
    if spec.kind == "random":
        q, m, seed = (int(x) for x in _need(p, "q", "m", "seed"))
        eps = float(p.get("smoothing", 1e-6))
        alpha = float(p.get("alpha", 1.0))
        q = falg.check_field(q)
        rng = np.random.default_rng(seed)
        w = rng.dirichlet(np.full(q**m, alpha)) + eps
        return JointDist(q, m, w / w.sum())
    raise InputError(f"unknown family {spec.kind!r}")


# -- distribution documents ------------------------------------------------------


def dist_from_document(doc: dict) -> JointDist:
    if not isinstance(doc, dict):
        raise InputError("distribution document must be an object")
    if "family" in doc:
        fam = doc["family"]
        if not isinstance(fam, dict) or "kind" not in fam:
            raise InputError("field 'family' must be an object with a 'kind' tag")
        params = {k: v for k, v in fam.items() if k != "kind"}
        if fam["kind"] in ("uniform", "random", "independent_mix"):
            params.setdefault("q", doc.get("q", 2))
            params.setdefault("m", doc.get("m"))
        d = make_family(FamilySpec(fam["kind"], params))
        for name in ("q", "m"):
            if name in doc and int(doc[name]) != getattr(d, name):
                raise InputError(f"field '{name}' = {doc[name]} disagrees with the family ({getattr(d, name)})")
        return d
    for name in ("q", "m", "pmf"):
        if name not in doc:
            raise InputError(f"distribution document lacks field '{name}'")
    try:
        q, m = int(doc["q"]), int(doc["m"])
        pmf = np.asarray(doc["pmf"], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad field type in distribution document: {exc}") from None
    return JointDist(q, m, pmf)


def dist_to_document(d: JointDist) -> dict:
    return {"q": d.q, "m": d.m, "pmf": [float(x) for x in d.pmf]}


def load_distribution(path: str | Path) -> JointDist:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return dist_from_document(doc)


def save_distribution(d: JointDist, path: str | Path) -> None:
    Path(path).write_text(json.dumps(dist_to_document(d)) + "\n")
