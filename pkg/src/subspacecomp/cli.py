"""Command-line interface: ``subspacecomp {analyze,chain,simulate,sweep,families}``.

Exit codes: 0 success, 2 input error, 3 budget exceeded, 4 internal consistency failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from pathlib import Path

from .chain import DEFAULT_TOL, decompose
from .errors import BudgetError, ConsistencyError, InputError
from .rates import TargetSpec, rate_report
from .sim import CSV_HEADER, DEFAULT_BUDGET, SimConfig, SweepTable, rate_sweep, reference_rate
from .sim import simulate_cc, simulate_cc_side_info, simulate_nested
from .source import FamilySpec, dist_to_document, load_distribution, make_family

FAMILY_HELP = {
    "example1": "example1:p1=P1,p2=P2   four binary sources X = Y L, 0 < p1 < p2 < 1/2",
    "opt_ss": "opt_ss:m=M,p=P         M binary sources X = Y U, alternating Bern(1/2), Bern(p)",
    "uniform": "uniform:q=Q,m=M        uniform over F_q^m",
    "random": "random:q=Q,m=M,seed=S  smoothed Dirichlet pmf (optional alpha, smoothing)",
}


def _split(values: list[str] | None, sep: str) -> list[str]:
    out: list[str] = []
    for v in values or []:
        out.extend(x.strip() for x in v.split(sep) if x.strip())
    return out


def _numbers(values: list[str] | None, kind, flag: str) -> list:
    try:
        return [kind(x) for x in _split(values, ",")]
    except ValueError:
        raise InputError(f"{flag} expects comma-separated numbers, got {values!r}") from None


def _load(args):
    if args.family and args.input:
        raise InputError("give either --family or --input, not both")
    if args.family:
        return make_family(FamilySpec.parse(args.family))
    if args.input:
        if not Path(args.input).is_file():
            raise InputError(f"input file {args.input!r} not found")
        return load_distribution(args.input)
    raise InputError("a distribution is required: use --family or --input")


def _target(args, d, flag: str = "target"):
    cols = _split(getattr(args, flag), ";")
    if not cols:
        raise InputError(f"--{flag} is required")
    return TargetSpec.from_columns(d.q, d.m, cols).subspace


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv(rows: list[list[str]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _text_table(rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() + "\n" for r in rows)


def _chain_rows(chain) -> list[list[str]]:
    rows = [["j", "dim", "basis", "H_N"]]
    for rec in chain.records():
        rows.append([str(rec["j"]), str(rec["dim"]), ";".join(rec["basis"]), f"{rec['H_N']:.12g}"])
    return rows


def cmd_chain(args) -> int:
    d = _load(args)
    chain = decompose(d, args.tolerance)
    rows = _chain_rows(chain)
    _emit(args, _csv(rows) if args.format == "csv" else _text_table(rows))
    return 0


def cmd_analyze(args) -> int:
    d = _load(args)
    w = _target(args, d)
    chain = decompose(d, args.tolerance)
    rec = rate_report(d, w, args.tolerance, chain).to_record()
    if args.format == "csv":
        _emit(args, _csv([list(rec), list(rec.values())]))
        return 0
    lines = [f"source: q={d.q}, m={d.m}; target W = {w}", "", "chain:"]
    lines += ["  " + ln for ln in _text_table(_chain_rows(chain)).splitlines()]
    lines += ["", "rates (bits per source symbol):"]
    width = max(len(k) for k in rec)
    lines += [f"  {k.ljust(width)}  {v}" for k, v in rec.items() if k != "target"]
    _emit(args, "\n".join(lines) + "\n")
    return 0


def _sim_config(args, d, n: int, rate: float | None) -> SimConfig:
    return SimConfig(
        n=n, rate_bits=rate, k=args.k if rate is None else None, trials=args.trials, seed=args.seed,
        matrix_mode=args.matrix_mode, decoder_budget=args.budget, tie_tol=args.tie_tol,
    )


def _result_row(scheme: str, rate: float, res) -> list[str]:
    lo, hi = res.wilson_ci_95
    return [scheme, str(res.n), str(res.k), f"{rate:.12g}", str(res.trials), str(res.failures),
            f"{res.pe:.12g}", f"{lo:.12g}", f"{hi:.12g}"]


def cmd_simulate(args) -> int:
    d = _load(args)
    w = _target(args, d)
    ns = _numbers(args.n, int, "--n")
    rates = _numbers(args.rate, float, "--rate")
    if len(ns) != 1 or len(rates) > 1:
        raise InputError("simulate takes one --n and at most one --rate (use sweep for grids)")
    if not rates and args.k is None and args.scheme != "nc":
        raise InputError("simulate needs --rate or --k")
    scheme = args.scheme
    chain = decompose(d, args.tolerance) if scheme in ("ss", "nc") else None
    rate = None
    if rates:
        rate = rates[0] * (reference_rate(d, w, "cc" if scheme == "side" else scheme, chain) if args.relative else 1.0)
    cfg = _sim_config(args, d, ns[0], rate)
    shown = rate if rate is not None or cfg.k is None else cfg.k / cfg.n * math.log2(d.q)
    rows = [CSV_HEADER]
    if scheme == "cc":
        rows.append(_result_row("cc", shown, simulate_cc(d, w, cfg, args.backend)))
    elif scheme == "ss":
        u = chain.subspaces[chain.locate(w) - 1]
        rows.append(_result_row("ss", shown, simulate_cc(d, u, cfg, args.backend)))
    elif scheme == "side":
        s = _target(args, d, "side")
        rows.append(_result_row("side", shown, simulate_cc_side_info(d, w, s, cfg, args.backend)))
    else:
        # without --rate, stage rates default to --margin times the chain rates
        scaled = None
        if rate is not None:
            j0 = chain.locate(w)
            scaled = [rate * x / chain.rates[j0 - 1] for x in chain.rates[:j0]]
        res = simulate_nested(d, w, cfg, stage_rates=scaled, margin=args.margin, chain=chain, backend=args.backend)
        for l, st in enumerate(res.stages, start=1):
            rows.append(_result_row(f"nc-stage{l}", st.k / st.n * math.log2(d.q), st))
        shown = res.end_to_end.k / cfg.n * math.log2(d.q) if rate is None else rate
        rows.append(_result_row("nc", shown, res.end_to_end))
    if args.format == "csv":
        _emit(args, _csv(rows))
    else:
        _emit(args, _text_table(rows))
    return 0


def cmd_sweep(args) -> int:
    d = _load(args)
    w = _target(args, d)
    ns = _numbers(args.n, int, "--n")
    rates = _numbers(args.rate, float, "--rate")
    if not ns or not rates:
        raise InputError("sweep needs --n and --rate lists")
    cfg = SimConfig(n=max(ns), rate_bits=0.0, trials=args.trials, seed=args.seed,
                    matrix_mode=args.matrix_mode, decoder_budget=args.budget, tie_tol=args.tie_tol)
    table: SweepTable = rate_sweep(d, w, args.scheme, ns, rates, cfg, relative=args.relative,
                                   backend=args.backend)
    text = table.to_csv() if args.format == "csv" else _text_table([CSV_HEADER] + table.rows())
    _emit(args, text)
    frac = table.monotone_fraction()
    print(f"monotone_fraction={frac:.6g} monotone={'true' if frac == 1.0 else 'false'}", file=sys.stderr)
    return 0


def cmd_families(args) -> int:
    if args.emit:
        d = make_family(FamilySpec.parse(args.emit))
        _emit(args, json.dumps(dist_to_document(d)) + "\n")
        return 0
    _emit(args, "".join(v + "\n" for v in FAMILY_HELP.values()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="subspacecomp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--family", help="inline family, e.g. example1:p1=0.1,p2=0.2")
    common.add_argument("--input", help="JSON distribution file")
    common.add_argument("--tolerance", type=float, default=DEFAULT_TOL, help="tie tolerance for entropy minimizers")
    common.add_argument("--format", choices=("text", "csv"), default="text")
    common.add_argument("--out", help="write output here instead of stdout")

    target = argparse.ArgumentParser(add_help=False)
    target.add_argument("--target", action="append", help="target column as a vector (1101 or 2,0,1); repeat or separate with ';'")

    simopts = argparse.ArgumentParser(add_help=False)
    simopts.add_argument("--n", action="append", help="blocklength(s), comma-separated")
    simopts.add_argument("--rate", action="append", help="per-encoder rate(s) in bits, comma-separated")
    simopts.add_argument("--relative", action="store_true", help="read --rate as multiples of the scheme's rate")
    simopts.add_argument("--trials", type=int, default=1000)
    simopts.add_argument("--seed", type=int, default=0)
    simopts.add_argument("--matrix-mode", choices=("redraw", "fixed"), default="redraw")
    simopts.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="largest coset the decoder may scan")
    simopts.add_argument("--tie-tol", type=float, default=1e-9)
    simopts.add_argument("--backend", choices=("cython", "python"), default=None)

    a = sub.add_parser("analyze", parents=[common, target], help="chain, scheme rates and converse bound")
    a.set_defaults(func=cmd_analyze)
    c = sub.add_parser("chain", parents=[common], help="the subspace chain")
    c.set_defaults(func=cmd_chain)
    s = sub.add_parser("simulate", parents=[common, target, simopts], help="one Monte Carlo run")
    s.add_argument("--scheme", choices=("cc", "ss", "side", "nc"), default="cc")
    s.add_argument("--side", action="append", help="side-information subspace for --scheme side")
    s.add_argument("--k", type=int, help="encoder rows, instead of --rate")
    s.add_argument("--margin", type=float, default=1.2, help="nc stage rates as multiples of the chain rates")
    s.set_defaults(func=cmd_simulate)
    w = sub.add_parser("sweep", parents=[common, target, simopts], help="P_e over a (n, rate) grid")
    w.add_argument("--scheme", choices=("cc", "ss", "nc"), default="cc")
    w.set_defaults(func=cmd_sweep)
    f = sub.add_parser("families", help="list families or emit one as a pmf file")
    f.add_argument("--emit", metavar="FAMILY", help="family to write as a JSON pmf")
    f.add_argument("--out")
    f.set_defaults(func=cmd_families)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return 3
    except ConsistencyError as exc:
        print(f"internal consistency failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
