"""Finite-blocklength Monte Carlo of random linear encoders with ML coset decoding.

Every trial draws n i.i.d. source tuples and uniform encoding matrices,
forms the receiver's syndromes exactly as the scheme prescribes, and decodes
by exhaustive maximum-likelihood search over the syndrome coset.  A trial
succeeds only when the likelihood maximizer is unique and equals the truth.

Randomness is derived per trial from ``(seed, 1 + trial, stream)`` so trials
are order independent; stream 0 draws the sources and stream l >= 1 draws the
l-th matrix block.  Fixed-per-run matrices use ``(seed, 0, l)``.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy.stats import binomtest

from . import falg, kernels
from .chain import SubspaceChain, decompose
from .errors import BudgetError, ConsistencyError, InputError
from .falg import Subspace
from .rates import rate_cc
from .source import JointDist, digits_to_index

DEFAULT_BUDGET = 2**22
CSV_HEADER = ["scheme", "n", "k", "rate_bits", "trials", "failures", "pe", "ci_lo", "ci_hi"]


@dataclass(frozen=True)
class SimConfig:
    n: int
    rate_bits: float | None = None
    k: int | None = None
    trials: int = 1000
    seed: int = 0
    matrix_mode: str = "redraw"  # or "fixed": one matrix per run
    decoder_budget: int = DEFAULT_BUDGET
    fixed_matrix: Any = field(default=None, compare=False, repr=False)
    tie_tol: float = 1e-9

    def __post_init__(self):
        if self.n < 1 or self.trials < 1:
            raise InputError("need n >= 1 and trials >= 1")
        if self.matrix_mode not in ("redraw", "fixed"):
            raise InputError(f"matrix_mode must be 'redraw' or 'fixed', not {self.matrix_mode!r}")
        if self.k is not None and not 0 <= self.k <= self.n:
            raise InputError(f"k = {self.k} outside [0, n = {self.n}]")
        if self.seed < 0:
            raise InputError("seed must be non-negative")

    def k_for(self, q: int, rate_bits: float | None = None) -> int:
        """Rows of the encoding matrix: ceil(n * rate / log2 q), clamped to [0, n]."""
        rate = self.rate_bits if rate_bits is None else rate_bits
        if rate is None:
            if self.k is None:
                raise InputError("SimConfig needs either k or rate_bits")
            return self.k
        if rate < 0:
            raise InputError("rate must be non-negative")
        k = math.ceil(self.n * rate / math.log2(q) - 1e-9)
        if k > self.n:
            warnings.warn(f"rate {rate:g} exceeds log2(q) = {math.log2(q):g}; clamping k to n", stacklevel=3)
            k = self.n
        return max(k, 0)


@dataclass(frozen=True)
class SimResult:
    trials: int
    failures: int
    n: int
    k: int
    coset_log_q: tuple[float, float, float]  # min / mean / max of log_q(coset size)

    @property
    def pe(self) -> float:
        return self.failures / self.trials

    @property
    def rate_bits(self) -> float:
        return self.k / self.n

    @property
    def wilson_ci_95(self) -> tuple[float, float]:
        ci = binomtest(self.failures, self.trials).proportion_ci(0.95, method="wilson")
        return float(ci.low), float(ci.high)


def _summary(sizes: list[int], trials: int, failures: int, n: int, k: int) -> SimResult:
    arr = np.asarray(sizes, dtype=np.float64)
    return SimResult(trials, failures, n, k, (float(arr.min()), float(arr.mean()), float(arr.max())))


def _rng(cfg: SimConfig, trial: int | None, stream: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, 0 if trial is None else trial + 1, stream])


def conditional_cost(d: JointDist, side_basis: np.ndarray, t_basis: np.ndarray) -> np.ndarray:
    """-log2 P(T = a | S = c) as a (q^dim S, q^dim T) table.

    Rows for side values of probability zero are left at 0 (no preference).
    """
    q = d.q
    joint = d.project(np.vstack([side_basis, t_basis])).reshape(q ** len(side_basis), q ** len(t_basis))
    marg = joint.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        cost = np.where(marg > 0, -np.log2(joint / np.where(marg > 0, marg, 1.0)), 0.0)
    return cost


@dataclass(frozen=True)
class _Stage:
    sources: tuple[int, ...]  # encoded source indices
    t_basis: np.ndarray  # rows supported on ``sources``
    side_basis: np.ndarray
    cost: np.ndarray


def _stage(d: JointDist, s: Subspace, w: Subspace, side_basis: np.ndarray) -> _Stage:
    idx = falg.coordinate_extension_indices(s)
    t = w & falg.coordinate_subspace(d.q, d.m, idx)
    if t.dim != w.dim - s.dim:
        raise ConsistencyError(f"complement of {s} in {w} on sources {idx} has wrong dimension")
    return _Stage(idx, t.matrix, side_basis, conditional_cost(d, side_basis, t.matrix))


def _check_budget(q: int, n: int, k: int, dim_t: int, budget: int) -> None:
    size = q ** ((n - k) * dim_t)
    if size > budget:
        raise BudgetError(
            f"decoding coset has q^((n-k)*s) = {q}^{(n - k) * dim_t} words, above the budget {budget}; "
            "reduce n - k or the target dimension"
        )


def decode_stage(
    a: np.ndarray,
    x: np.ndarray,
    stage: _Stage,
    side_vals: np.ndarray,
    q: int,
    budget: int,
    tol: float,
    kernel: Callable,
) -> tuple[np.ndarray, bool, int]:
    """Decode one common-code stage.

    ``a`` is the (k, n) encoding matrix, ``x`` the (n, m) source block and
    ``side_vals`` the (n, dim S) side information held by the receiver.
    Returns ``(decoded (dim T, n), success, log_q coset size)``.
    """
    n = x.shape[0]
    truth = (x @ stage.t_basis.T % q).T  # (dim T, n)
    # receiver: combine per-source syndromes A x_i with the coefficients of T
    per_source = {i: a @ x[:, i] % q for i in stage.sources}
    syn = np.zeros((a.shape[0], len(stage.t_basis)), dtype=np.int64)
    for j, row in enumerate(stage.t_basis):
        for i in stage.sources:
            if row[i]:
                syn[:, j] += row[i] * per_source[i]
    syn %= q
    if a.shape[0]:
        sol = falg.solve_affine(a, syn, q)
        if sol is None:
            raise ConsistencyError("syndromes are inconsistent with the encoding matrix")
        base, null = sol[0].T, sol[1]
    else:
        base, null = np.zeros_like(truth), np.eye(n, dtype=np.int64)
    if a.shape[0] and np.any(a @ (truth - base).T % q):
        raise ConsistencyError("true block is not in the decoding coset")
    size = null.shape[0] * len(stage.t_basis)
    if q**size > budget * q ** (2 * len(stage.t_basis)):
        raise BudgetError(f"rank-deficient matrix produced a coset of {q}^{size} words")
    ctx = digits_to_index(side_vals, q) if side_vals.shape[1] else np.zeros(n, dtype=np.int64)
    best, _, n_best = kernel(base, null, q, ctx, stage.cost, tol)
    return best, bool(n_best == 1 and np.array_equal(best, truth)), size


def _draw(rng: np.random.Generator, q: int, rows: int, n: int) -> np.ndarray:
    return rng.integers(0, q, size=(rows, n), dtype=np.int64)


def simulate_cc_side_info(
    d: JointDist,
    w: Subspace,
    s: Subspace,
    cfg: SimConfig,
    backend: str | None = None,
) -> SimResult:
    """Common code for ``w`` with ``s`` known at the receiver (genie side information).

    Only the sources completing ``s`` to a basis are encoded; failure is
    judged on the complementary block.
    """
    if not w.contains(s) or s == w:
        raise InputError(f"side information {s} must be a proper subspace of {w}")
    kernel = kernels.get_coset_search(backend)
    q, n = d.q, cfg.n
    stage = _stage(d, s, w, s.matrix)
    k = cfg.k_for(q)
    _check_budget(q, n, k, len(stage.t_basis), cfg.decoder_budget)
    fixed = None
    if cfg.fixed_matrix is not None:
        fixed = np.asarray(cfg.fixed_matrix, dtype=np.int64) % q
        if fixed.shape != (k, n):
            raise InputError(f"fixed matrix must be {k} x {n}")
    elif cfg.matrix_mode == "fixed":
        fixed = _draw(_rng(cfg, None, 1), q, k, n)
    failures, sizes = 0, []
    for trial in range(cfg.trials):
        x = d.sample(n, _rng(cfg, trial, 0))
        a = fixed if fixed is not None else _draw(_rng(cfg, trial, 1), q, k, n)
        _, ok, size = decode_stage(a, x, stage, x @ s.matrix.T % q, q, cfg.decoder_budget, cfg.tie_tol, kernel)
        failures += not ok
        sizes.append(size)
    return _summary(sizes, cfg.trials, failures, n, k)


def simulate_cc(d: JointDist, w: Subspace, cfg: SimConfig, backend: str | None = None) -> SimResult:
    """Common code decoding ``w`` directly; every source is encoded."""
    if w.dim == 0:
        raise InputError("target subspace must be nonzero")
    return simulate_cc_side_info(d, w, falg.zero(d.q, d.m), cfg, backend)


@dataclass(frozen=True)
class NestedEncoderSet:
    """Stage blocks B_1, ..., B_j; stage l uses the stacked matrix [B_1; ...; B_l]."""

    blocks: tuple[np.ndarray, ...]

    @property
    def ks(self) -> list[int]:
        return list(np.cumsum([b.shape[0] for b in self.blocks]))

    def stacked(self, l: int) -> np.ndarray:
        return np.vstack(self.blocks[:l])

    @classmethod
    def draw(cls, q: int, n: int, ks: Sequence[int], rng_for: Callable[[int], np.random.Generator]):
        prev, blocks = 0, []
        for l, k in enumerate(ks, start=1):
            if k < prev:
                raise InputError("stage row counts must be non-decreasing")
            blocks.append(_draw(rng_for(l), q, k - prev, n))
            prev = k
        return cls(tuple(blocks))


@dataclass(frozen=True)
class NestedResult:
    stages: list[SimResult]  # genie: each stage handed the true earlier values
    end_to_end: SimResult  # pipeline: each stage consumes decoded earlier values

    @property
    def union_bound_holds(self) -> bool:
        return self.end_to_end.failures <= sum(s.failures for s in self.stages)


def simulate_nested(
    d: JointDist,
    w: Subspace,
    cfg: SimConfig,
    stage_rates: Sequence[float] | None = None,
    margin: float = 1.2,
    chain: SubspaceChain | None = None,
    backend: str | None = None,
) -> NestedResult:
    """Staged nested-code decoding of the chain link containing ``w``.

    Stage l decodes a complement of W^(l-1) in W^(l) from the sources that
    complete W^(l-1), using the first k_l rows of the nested matrix.  Default
    stage rates are ``margin`` times the chain rates.
    """
    if w.dim == 0:
        raise InputError("target subspace must be nonzero")
    kernel = kernels.get_coset_search(backend)
    chain = chain or decompose(d)
    j0 = chain.locate(w)
    rates = [margin * r for r in chain.rates[:j0]] if stage_rates is None else list(stage_rates)
    if len(rates) != j0:
        raise InputError(f"need {j0} stage rates, got {len(rates)}")
    q, n = d.q, cfg.n
    ks = list(np.maximum.accumulate([cfg.k_for(q, r) for r in rates]))
    stages: list[_Stage] = []
    side = np.zeros((0, d.m), dtype=np.int64)
    for l in range(1, j0 + 1):
        st = _stage(d, chain.level(l - 1), chain.level(l), side)
        _check_budget(q, n, ks[l - 1], len(st.t_basis), cfg.decoder_budget)
        stages.append(st)
        side = np.vstack([side, st.t_basis])
    fixed = None
    if cfg.matrix_mode == "fixed":
        fixed = NestedEncoderSet.draw(q, n, ks, lambda l: _rng(cfg, None, l))
    stage_fail = [0] * j0
    stage_sizes: list[list[int]] = [[] for _ in range(j0)]
    pipe_fail = 0
    for trial in range(cfg.trials):
        x = d.sample(n, _rng(cfg, trial, 0))
        enc = fixed or NestedEncoderSet.draw(q, n, ks, lambda l, t=trial: _rng(cfg, t, l))
        true_blocks, dec_blocks = [], []
        pipe_ok = True
        for l, st in enumerate(stages, start=1):
            a = enc.stacked(l)
            true_side = np.hstack(true_blocks) if true_blocks else np.zeros((n, 0), dtype=np.int64)
            est, ok, size = decode_stage(a, x, st, true_side, q, cfg.decoder_budget, cfg.tie_tol, kernel)
            stage_fail[l - 1] += not ok
            stage_sizes[l - 1].append(size)
            true_blocks.append((x @ st.t_basis.T % q))
            if pipe_ok:
                dec_side = np.hstack(dec_blocks) if dec_blocks else np.zeros((n, 0), dtype=np.int64)
                if not np.array_equal(dec_side, true_side):
                    est, ok, _ = decode_stage(a, x, st, dec_side, q, cfg.decoder_budget, cfg.tie_tol, kernel)
                    ok = False
                dec_blocks.append(est.T)
                pipe_ok = ok
        pipe_fail += not pipe_ok
    per_stage = [
        _summary(stage_sizes[l], cfg.trials, stage_fail[l], n, ks[l]) for l in range(j0)
    ]
    total_sizes = [sum(col) for col in zip(*stage_sizes)]
    return NestedResult(per_stage, _summary(total_sizes, cfg.trials, pipe_fail, n, ks[-1]))


# -- sweeps --------------------------------------------------------------------


@dataclass
class SweepTable:
    scheme: str
    n_list: list[int]
    rates: list[float]
    results: dict[tuple[int, float], SimResult]

    def pe_matrix(self) -> np.ndarray:
        return np.array([[self.results[(n, r)].pe for r in self.rates] for n in self.n_list])

    def monotone_fraction(self) -> float:
        """Share of adjacent rate pairs (per n) where P_e does not increase with rate."""
        order = np.argsort(self.rates)
        pe = self.pe_matrix()[:, order]
        if pe.shape[1] < 2:
            return 1.0
        return float(np.mean(pe[:, 1:] <= pe[:, :-1]))

    def rows(self) -> list[list[str]]:
        out = []
        for n in self.n_list:
            for r in self.rates:
                res = self.results[(n, r)]
                lo, hi = res.wilson_ci_95
                out.append([
                    self.scheme, str(n), str(res.k), f"{r:.12g}", str(res.trials),
                    str(res.failures), f"{res.pe:.12g}", f"{lo:.12g}", f"{hi:.12g}",
                ])
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        writer.writerows(self.rows())
        return buf.getvalue()


def reference_rate(d: JointDist, w: Subspace, scheme: str, chain: SubspaceChain | None = None) -> float:
    """Per-encoder rate the scheme needs asymptotically (final-stage rate for ``nc``)."""
    if scheme == "cc":
        return rate_cc(d, w)
    chain = chain or decompose(d)
    if scheme in ("ss", "nc"):
        return chain.rates[chain.locate(w) - 1]
    raise InputError(f"unknown scheme {scheme!r}; expected cc, ss or nc")


def rate_sweep(
    d: JointDist,
    w: Subspace,
    scheme: str,
    n_list: Sequence[int],
    rate_grid: Sequence[float],
    cfg: SimConfig,
    relative: bool = False,
    chain: SubspaceChain | None = None,
    backend: str | None = None,
) -> SweepTable:
    """Empirical P_e over a grid of blocklengths and per-encoder rates.

    With ``relative=True`` the grid is in multiples of :func:`reference_rate`.
    For ``nc`` the grid sets the last stage's rate and earlier stages are
    scaled in proportion to their chain rates.
    """
    if scheme not in ("cc", "ss", "nc"):
        raise InputError(f"unknown scheme {scheme!r}; expected cc, ss or nc")
    if scheme != "cc":
        chain = chain or decompose(d)
    ref = reference_rate(d, w, scheme, chain)
    rates = [float(r) * ref if relative else float(r) for r in rate_grid]
    results = {}
    for n in n_list:
        for r in rates:
            c = SimConfig(
                n=int(n), rate_bits=r, trials=cfg.trials, seed=cfg.seed, matrix_mode=cfg.matrix_mode,
                decoder_budget=cfg.decoder_budget, tie_tol=cfg.tie_tol,
            )
            if scheme == "cc":
                res = simulate_cc(d, w, c, backend)
            elif scheme == "ss":
                res = simulate_cc(d, chain.subspaces[chain.locate(w) - 1], c, backend)
            else:
                j0 = chain.locate(w)
                scaled = [r * x / chain.rates[j0 - 1] for x in chain.rates[:j0]]
                res = simulate_nested(d, w, c, stage_rates=scaled, chain=chain, backend=backend).end_to_end
            results[(int(n), r)] = res
    return SweepTable(scheme, [int(n) for n in n_list], rates, results)


# -- random-coding identity ------------------------------------------------------


def random_block_of_rank(q: int, n: int, s: int, r: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly drawn factors L (n x r), R (r x s) until L R has rank r."""
    if not 0 <= r <= min(n, s):
        raise InputError(f"rank {r} impossible for a {n} x {s} block")
    while True:
        block = _draw(rng, q, n, r) @ _draw(rng, q, r, s) % q
        if falg.rank(block, q) == r:
            return block


def syndrome_collision_rate(q: int, k: int, delta: np.ndarray, trials: int, rng: np.random.Generator) -> float:
    """Fraction of uniform (k x n) matrices A with A delta = 0."""
    delta = np.asarray(delta, dtype=np.int64)
    n = delta.shape[0]
    hits = 0
    for lo in range(0, trials, 8192):
        b = min(8192, trials - lo)
        a = rng.integers(0, q, size=(b, k, n), dtype=np.int64)
        prod = np.einsum("bkn,ns->bks", a, delta) % q
        hits += int(np.count_nonzero(~prod.reshape(b, -1).any(axis=1)))
    return hits / trials
