"""Command-line front end.

Two subcommands:

    hinfmor run   --input-dir DIR | --synthetic kind:n  --method ... --orders ...
    hinfmor synth --kind ... --n ... --out DIR

Exit codes: 0 on success, 2 when some (method, order) rows failed, 3 for
invalid input (bad flags, unreadable matrices, out-of-range orders).

A config file (--config, flat ``key = value`` lines, # comments) can supply
any long flag of ``run``; explicit command-line flags win over the file.
Worker threads for norm evaluations come from the MOR_IHA_THREADS
environment variable (default 1).
"""

from __future__ import annotations

import argparse
import sys as _sys

from .errors import DimensionMismatch, ParseError
from .jobs import Job, run_job, write_system
from .statespace import FrequencyGrid
from .synthetic import make_synthetic


def _parse_config_file(path):
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, _, val = line.partition("=")
            values[key.strip().replace("-", "_")] = val.strip()
    return values


def _parse_grid(text):
    # "lo:hi:count", logarithmic
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError("grid must look like lo:hi:count")
    lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    return FrequencyGrid.log(lo, hi, count)


def _build_run_parser(sub):
    p = sub.add_parser("run", help="reduce a system and write a report bundle")
    p.add_argument("--input-dir", help="directory with A.mtx, b.mtx, c.mtx (+ E.mtx, d.mtx)")
    p.add_argument("--synthetic", help="generate the input instead, e.g. sss:100")
    p.add_argument(
        "--method",
        action="append",
        dest="methods",
        help="iha | irka | bt | mbt (repeatable, or comma-separated)",
    )
    p.add_argument("--orders", help="comma-separated reduction orders, e.g. 2,4,6")
    p.add_argument(
        "--mode",
        action="append",
        default=None,
        help="exact-step2 | sampled-norms | dump-curves (repeatable)",
    )
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--grid", help="sampling grid lo:hi:count (logarithmic)")
    p.add_argument("--tol", type=float, default=None, help="shift-iteration tolerance")
    p.add_argument("--config", help="flat key = value file; flags override it")
    return p


def _build_synth_parser(sub):
    p = sub.add_parser("synth", help="write a synthetic benchmark system")
    p.add_argument("--kind", required=True, help="sss | generic | resonant-chain")
    p.add_argument("--n", required=True, type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory for the .mtx files")
    return p


def _split_list(values):
    out = []
    for chunk in values or []:
        out.extend(x for x in chunk.split(",") if x)
    return out


def _job_from_args(args):
    cfg = _parse_config_file(args.config) if args.config else {}

    def pick(flag, default=None):
        v = getattr(args, flag)
        if v is not None:
            return v
        return cfg.get(flag, default)

    methods = _split_list(args.methods) or _split_list([cfg["method"]] if "method" in cfg else [])
    orders_text = pick("orders")
    if not orders_text:
        raise ValueError("--orders is required")
    orders = [int(x) for x in str(orders_text).split(",") if x]
    mode = _split_list(args.mode) or _split_list([cfg["mode"]] if "mode" in cfg else [])
    out = pick("out")
    if not out:
        raise ValueError("--out is required")
    grid_text = pick("grid")
    return Job(
        methods=methods,
        orders=orders,
        out_dir=str(out),
        input_dir=pick("input_dir"),
        synthetic=pick("synthetic"),
        mode=mode,
        seed=int(pick("seed", 0)),
        grid=_parse_grid(str(grid_text)) if grid_text else None,
        tol=float(pick("tol", 1e-6)),
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hinfmor",
        description="Reduced-order modeling with peak-gain targeted feed-through",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _build_run_parser(sub)
    _build_synth_parser(sub)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags; normalize to the invalid-input code
        return 0 if exc.code == 0 else 3

    try:
        if args.command == "synth":
            sys_ = make_synthetic(args.kind, args.n, seed=args.seed)
            write_system(sys_, args.out)
            print(f"wrote {args.kind} system of order {args.n} to {args.out}")
            return 0
        job = _job_from_args(args)
        result = run_job(job)
        ok = sum(1 for row in result.rows if row.status == "ok")
        print(f"{ok}/{len(result.rows)} rows ok; report at {result.report_csv}")
        for row in result.rows:
            if row.status != "ok":
                print(f"  {row.method} r={row.r}: {row.status}", file=_sys.stderr)
        return result.exit_code
    except (ValueError, OSError, ParseError, DimensionMismatch) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
