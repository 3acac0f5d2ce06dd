"""Command-line front end: ``tokenmix {mix,verify,bench,audit-memory}``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import matfile
from .bench import BenchRecord, fit_exponent, time_call, write_records
from .dist_attn import max_feasible_length, scaling_bench
from .errors import TokenMixError
from .mixers import AttnParams, attention_mix
from .ops import OPS, make_mixer
from .selector import SelectorConfig, parse_selector, select
from .sgconv import audit_csv, memory_audit
from .verify import format_report, run_checks

log = logging.getLogger("tokenmix")


def _int_list(text: str) -> list[int]:
    """``"256,512"`` or a power-of-two range ``"256..8192"``."""
    if ".." in text:
        lo, hi = (int(v) for v in text.split(".."))
        out, v = [], lo
        while v <= hi:
            out.append(v)
            v *= 2
        return out
    return [int(v) for v in text.split(",") if v.strip()]


def _seed_list(text: str) -> list[int]:
    if ".." in text:
        lo, hi = (int(v) for v in text.split(".."))
        return list(range(lo, hi + 1))
    return [int(v) for v in text.split(",")]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _selector(args) -> SelectorConfig | None:
    if args.selector:
        return parse_selector(args.selector)
    if args.tau is not None:
        return SelectorConfig(tau=args.tau)
    return None


def cmd_mix(args) -> int:
    if args.op not in OPS:
        print(f"error: unknown op {args.op!r}; valid ops: {', '.join(OPS)}", file=sys.stderr)
        return 2
    if args.input:
        try:
            x = matfile.read(args.input)
        except OSError as e:
            print(f"error: cannot read {args.input}: {e.strerror}", file=sys.stderr)
            return 3
    else:
        x = np.random.default_rng(args.seed).standard_normal((args.len, args.dim))
    cfg = _selector(args)
    kept = np.arange(x.shape[0])
    if cfg is not None:
        x, kept = select(x, cfg)
    L, D = x.shape
    kernel = _float_list(args.kernel) if args.kernel else None
    mixer = make_mixer(args.op, L, D, heads=args.heads, workers=args.workers, seed=args.seed, kernel=kernel)
    y = mixer(x)

    diff = ""
    if args.op == "dist-attn":
        ref = attention_mix(x, AttnParams.random(D, args.heads, seed=args.seed))
        diff = f"{float(np.max(np.abs(y - ref))):.3e}"
    if args.out and args.out != "-":
        Path(args.out).write_text(matfile.dumps(y))
        summary_out = sys.stdout
    else:
        matfile.write(y, sys.stdout)
        summary_out = sys.stderr
    w = csv.writer(summary_out, lineterminator="\n")
    w.writerow(["op", "L", "D", "heads", "workers", "seed", "kept", "taxonomy", "max_abs_diff"])
    w.writerow([args.op, L, D, args.heads, args.workers, args.seed, len(kept), str(mixer.taxonomy), diff])
    return 0


def cmd_verify(args) -> int:
    results = run_checks(_seed_list(args.seed), fault=args.fault)
    report = format_report(results)
    sys.stdout.write(report)
    if args.out:
        Path(args.out).write_text(report)
    return 0 if all(r.passed for r in results) else 1


def cmd_bench(args) -> int:
    lengths = _int_list(args.len)
    ops = list(OPS) if args.op == "all" else args.op.split(",")
    for op in ops:
        if op not in OPS:
            print(f"error: unknown op {op!r}; valid ops: {', '.join(OPS)}", file=sys.stderr)
            return 2
    records: list[BenchRecord] = []
    for op in ops:
        if op == "dist-attn":
            recs = scaling_bench(lengths, args.dim, args.heads, args.workers, args.repeats,
                                 args.budget, args.seed)
            # the single-device reference rows duplicate an explicit attn sweep
            records += [r for r in recs if r.op == "dist-attn" or "attn" not in ops]
            continue
        for L in lengths:
            if op == "attn" and args.heads * L * L > args.budget:
                log.info("attn over budget at L=%d (%d > %d score elements)", L, args.heads * L * L, args.budget)
                continue
            x = np.random.default_rng(args.seed + L).standard_normal((L, args.dim))
            mixer = make_mixer(op, L, args.dim, heads=args.heads, seed=args.seed)
            ms = time_call(lambda: mixer(x), args.repeats)
            if op == "attn":
                records.append(BenchRecord(op, 1, L, args.dim, args.heads, ms, args.heads * L * L, 0,
                                           max_feasible_length(args.budget, args.heads, 1)))
            else:
                records.append(BenchRecord(op, 1, L, args.dim, 1, ms))

    out = Path(args.out)
    with out.open("w") as f:
        write_records(records, f)
    fit_path = out.with_name(out.stem + "_fit.csv")
    with fit_path.open("w") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["op", "workers", "exponent", "r2", "points"])
        for key in sorted({(r.op, r.workers) for r in records}):
            pts = [r for r in records if (r.op, r.workers) == key]
            if len(pts) < 2:
                continue
            slope, r2 = fit_exponent([r.L for r in pts], [r.wall_ms for r in pts])
            w.writerow([key[0], key[1], f"{slope:.3f}", f"{r2:.4f}", len(pts)])
            print(f"{key[0]:<12} workers={key[1]}  exponent={slope:.3f}  r2={r2:.4f}")
    print(f"wrote {out} and {fit_path}")
    return 0


def cmd_audit_memory(args) -> int:
    rows = memory_audit(args.k, args.dim, _int_list(args.len))
    text = audit_csv(rows)
    if args.out and args.out != "-":
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tokenmix", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    m = sub.add_parser("mix", help="apply one mixer to a generated or loaded sequence")
    m.add_argument("--op", required=True, help=f"one of: {', '.join(OPS)}")
    m.add_argument("--len", type=int, default=64)
    m.add_argument("--dim", type=int, default=16)
    m.add_argument("--heads", type=int, default=1)
    m.add_argument("--workers", type=int, default=1)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--kernel", help="comma-separated conv weights w_0,w_1,...")
    m.add_argument("--tau", type=float, help="keep tokens with L2 norm >= tau")
    m.add_argument("--selector", help="tau=<v>,scorer=<l2_norm|projection>[,seed=<n>]")
    m.add_argument("--input", help="matrix file to mix instead of a random sequence")
    m.add_argument("--budget", type=int, default=1 << 26)
    m.add_argument("--out", help="output matrix file ('-' or omitted: stdout)")
    m.set_defaults(func=cmd_mix)

    v = sub.add_parser("verify", help="run the oracle suite")
    v.add_argument("--seed", default="0", help="seed, list a,b or range a..b")
    v.add_argument("--fault", choices=["softmax-row"], help="inject a fault (for testing the suite)")
    v.add_argument("--out", help="also write the report here")
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="time mixers over a length sweep and fit exponents")
    b.add_argument("--op", default="all", help="comma-separated ops or 'all'")
    b.add_argument("--len", default="256..2048", help="lengths a,b,c or power-of-two range a..b")
    b.add_argument("--dim", type=int, default=64)
    b.add_argument("--heads", type=int, default=4)
    b.add_argument("--workers", type=int, default=4)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--repeats", type=int, default=3)
    b.add_argument("--budget", type=int, default=1 << 26, help="per-worker score-element budget")
    b.add_argument("--out", default="bench.csv")
    b.set_defaults(func=cmd_bench)

    a = sub.add_parser("audit-memory", help="sgconv parameter/kernel element counts")
    a.add_argument("--k", type=int, default=16, help="sub-kernel size")
    a.add_argument("--dim", type=int, default=1)
    a.add_argument("--len", default="64..8192")
    a.add_argument("--out")
    a.set_defaults(func=cmd_audit_memory)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except TokenMixError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
