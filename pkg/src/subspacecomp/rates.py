"""Per-encoder and sum rates of the linear-encoding schemes, plus cut-set lower bounds.

Schemes:

* ``cc``  -- one common matrix for all sources, decode W directly;
* ``ss``  -- common matrix applied to the best superspace of W;
* ``nc``  -- staged decoding along the chain with nested matrices;
* ``sw``  -- recover every source, then compute W.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from more_itertools import set_partitions

from . import falg
from .chain import DEFAULT_TOL, SubspaceChain, decompose
from .errors import ConsistencyError, InputError
from .falg import Subspace
from .source import JointDist, cond_entropy, norm_cond_entropy, subspace_entropy

OPTIMALITY_TOL = 1e-9
MAX_PARTITION_M = 6


@dataclass(frozen=True)
class TargetSpec:
    """Target linear combinations Z = X gamma, gamma an (m x s) full-rank matrix."""

    q: int
    gamma: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=np.int64)
        if g.ndim != 2 or g.shape[1] < 1:
            raise InputError("target matrix needs at least one column")
        if np.any(g < 0) or np.any(g >= self.q):
            raise InputError(f"target entries must be residues mod {self.q}")
        if falg.rank(g, self.q) != g.shape[1]:
            raise InputError("target columns are linearly dependent")
        object.__setattr__(self, "gamma", g)

    @classmethod
    def from_columns(cls, q: int, m: int, columns: Sequence[str]) -> TargetSpec:
        cols = [falg.parse_vector(c, q, m) for c in columns]
        return cls(q, np.array(cols, dtype=np.int64).T.reshape(m, len(cols)))

    @property
    def s(self) -> int:
        return self.gamma.shape[1]

    @property
    def subspace(self) -> Subspace:
        return falg.span(self.q, self.gamma.shape[0], self.gamma.T)


def _nonzero(w: Subspace) -> None:
    if w.dim == 0:
        raise InputError("target subspace must be nonzero")


def rate_cc(d: JointDist, w: Subspace) -> float:
    """Minimum symmetric rate of a common code decoding ``w``: max over W1 < W of H_N(W | W1)."""
    _nonzero(w)
    key = ("cc", w)
    if key not in d._cache:
        d._cache[key] = max(
            norm_cond_entropy(d, w, w1)
            for w1 in falg.enumerate_subspaces(d.q, d.m, hi=w)
            if w1.dim < w.dim
        )
    return d._cache[key]


@dataclass(frozen=True)
class SideInfoRate:
    sym: float
    sum: float
    encoded: tuple[int, ...]  # 0-based source indices


def rate_cc_side_info(d: JointDist, w: Subspace, s: Subspace, tol: float = DEFAULT_TOL) -> SideInfoRate:
    """Common-code rate for ``w`` when the receiver already knows ``s``.

    Only the sources returned by :func:`falg.coordinate_extension_indices` are
    encoded.  The maximum is evaluated both over intermediate spaces
    ``s <= W1 < w`` and over proper subspaces of a complement ``T``; the two
    must agree.
    """
    _nonzero(w)
    if not w.contains(s) or s == w:
        raise InputError(f"side information {s} must be a proper subspace of {w}")
    over_w1 = max(
        norm_cond_entropy(d, w, w1)
        for w1 in falg.enumerate_subspaces(d.q, d.m, lo=s, hi=w)
        if w1.dim < w.dim
    )
    t = falg.complement_basis(s, w)
    over_t1 = max(
        norm_cond_entropy(d, t, t1 + s)
        for t1 in falg.enumerate_subspaces(d.q, d.m, hi=t)
        if t1.dim < t.dim
    )
    if abs(over_w1 - over_t1) > tol:
        raise ConsistencyError(f"side-information rate forms disagree: {over_w1!r} vs {over_t1!r}")
    encoded = falg.coordinate_extension_indices(s)
    return SideInfoRate(over_w1, len(encoded) * over_w1, encoded)


def rate_ss(
    d: JointDist,
    w: Subspace,
    chain: SubspaceChain | None = None,
    method: str = "chain",
) -> tuple[float, Subspace]:
    """Selected-subspace rate and the superspace that attains it.

    ``method="chain"`` reads the answer off the chain; ``method="brute"``
    minimizes the common-code rate over every superspace of ``w``.
    """
    _nonzero(w)
    if method == "brute":
        best = None
        for u in falg.enumerate_subspaces(d.q, d.m, lo=w):
            r = rate_cc(d, u)
            if best is None or r < best[0]:
                best = (r, u)
        return best
    if method != "chain":
        raise InputError(f"unknown method {method!r}")
    chain = chain or decompose(d)
    j0 = chain.locate(w)
    return chain.rates[j0 - 1], chain.subspaces[j0 - 1]


@dataclass(frozen=True)
class Stage:
    stage: int
    encoded: tuple[int, ...]  # 0-based indices of the sources active in this stage
    rate: float  # per-encoder rate of this stage


def rate_nc(
    d: JointDist, w: Subspace, chain: SubspaceChain | None = None
) -> tuple[float, list[Stage]]:
    """Sum rate of the nested-code scheme: decode W^(1), ..., W^(j0) in turn."""
    _nonzero(w)
    chain = chain or decompose(d)
    j0 = chain.locate(w)
    plan = [
        Stage(l, falg.coordinate_extension_indices(chain.level(l - 1)), chain.rates[l - 1])
        for l in range(1, j0 + 1)
    ]
    prev = chain.level(j0 - 1)
    total = subspace_entropy(d, prev) + (d.m - prev.dim) * chain.rates[j0 - 1]
    # each source pays the rate of the last stage it takes part in
    per_source = [0.0] * d.m
    for st in plan:
        for i in st.encoded:
            per_source[i] = st.rate
    if abs(sum(per_source) - total) > 1e-9 * max(1.0, total):
        raise ConsistencyError(f"stage plan sums to {sum(per_source)!r}, expected {total!r}")
    return total, plan


def rate_sw(d: JointDist) -> float:
    return subspace_entropy(d, falg.full(d.q, d.m))


def converse_partition_bound(
    d: JointDist, w: Subspace, max_m: int = MAX_PARTITION_M
) -> tuple[float, list[list[int]]]:
    """Best cut-set lower bound on the sum rate over partitions of the sources.

    For each block B, the sources outside B are handed to the receiver, giving
    ``sum_{i in B} R_i >= H(W | X_j, j not in B)``.  Returns the bound and the
    maximizing partition (0-based).  Above ``max_m`` sources only the singleton
    and whole-set partitions are tried.
    """
    _nonzero(w)
    m = d.m
    if m <= max_m:
        parts = set_partitions(range(m))
    else:
        parts = [[[i] for i in range(m)], [list(range(m))]]
    best, arg = -1.0, None
    for part in parts:
        val = 0.0
        for block in part:
            rest = [i for i in range(m) if i not in block]
            val += cond_entropy(d, w, falg.coordinate_subspace(d.q, m, rest))
        if val > best + 1e-12:
            best, arg = val, [list(b) for b in part]
    return best, arg


@dataclass
class RateReport:
    m: int
    target: Subspace
    r_cc_sym: float
    r_cc_sum: float
    r_ss_sym: float
    r_ss_sum: float
    r_nc_sum: float
    r_sw_sum: float
    ss_optimal_subspace: Subspace
    nc_stage_plan: list[Stage]
    converse_sum_lower: float
    converse_partition: list[list[int]]
    j0: int
    chain: SubspaceChain
    verdicts: list[str] = field(default_factory=list)

    def sums(self) -> dict[str, float]:
        return {"CC": self.r_cc_sum, "SS": self.r_ss_sum, "NC": self.r_nc_sum, "SW": self.r_sw_sum}

    def to_record(self) -> dict[str, str]:
        """Flat record; reals at 12 significant digits."""
        q = self.target.q

        def num(x: float) -> str:
            return f"{x:.12g}"

        return {
            "target": ";".join(falg.format_vector(r, q) for r in self.target.basis),
            "r_cc_sym": num(self.r_cc_sym),
            "r_cc_sum": num(self.r_cc_sum),
            "r_ss_sym": num(self.r_ss_sym),
            "r_ss_sum": num(self.r_ss_sum),
            "r_nc_sum": num(self.r_nc_sum),
            "r_sw_sum": num(self.r_sw_sum),
            "converse_sum_lower": num(self.converse_sum_lower),
            "ss_optimal_subspace": ";".join(
                falg.format_vector(r, q) for r in self.ss_optimal_subspace.basis
            ),
            "nc_stage_plan": ";".join(
                f"{st.stage}:{'.'.join(str(i + 1) for i in st.encoded)}@{num(st.rate)}"
                for st in self.nc_stage_plan
            ),
            "j0": str(self.j0),
            "verdicts": "|".join(self.verdicts),
        }


def rate_report(
    d: JointDist,
    target: TargetSpec | Subspace,
    tol: float = DEFAULT_TOL,
    chain: SubspaceChain | None = None,
    optimality_tol: float = OPTIMALITY_TOL,
) -> RateReport:
    w = target.subspace if isinstance(target, TargetSpec) else target
    if w.q != d.q or w.m != d.m:
        raise InputError("target does not live in the source space")
    chain = chain or decompose(d, tol)
    cc = rate_cc(d, w)
    ss, u = rate_ss(d, w, chain)
    nc, plan = rate_nc(d, w, chain)
    sw = rate_sw(d)
    lower, part = converse_partition_bound(d, w)
    rep = RateReport(
        m=d.m, target=w, r_cc_sym=cc, r_cc_sum=d.m * cc, r_ss_sym=ss, r_ss_sum=d.m * ss,
        r_nc_sum=nc, r_sw_sum=sw, ss_optimal_subspace=u, nc_stage_plan=plan,
        converse_sum_lower=lower, converse_partition=part, j0=chain.locate(w), chain=chain,
    )
    checks = [
        (rep.r_ss_sym <= rep.r_cc_sym + tol, "SS rate exceeds CC rate"),
        (rep.r_nc_sum <= rep.r_ss_sum + tol, "NC sum exceeds SS sum"),
        (rep.r_nc_sum <= rep.r_sw_sum + tol, "NC sum exceeds SW sum"),
        (lower <= min(rep.sums().values()) + tol, "converse bound exceeds an achievable sum"),
    ]
    for ok, msg in checks:
        if not ok:
            raise ConsistencyError(msg)
    rep.verdicts = [
        f"{name} sum-rate optimal"
        for name, val in rep.sums().items()
        if abs(val - lower) <= optimality_tol
    ]
    return rep
