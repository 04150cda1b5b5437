"""Batch job runner: ingest matrices, reduce, emit reports and artifacts.

A job names an input (a directory of Matrix Market files or a synthetic
spec), the methods and orders to run, and an output directory.  Every
(method, order) pair contributes one report row; failures are recorded in
the row and turn the exit status partial instead of aborting the batch.

Emitted files (all written atomically, byte-stable for a fixed job+seed):
    report.csv            one row per (method, r), 5 significant digits
    report.json           same rows plus wall-clock and warnings
    run_manifest.json     job parameters and library versions
    <method>_r<r>/        model_{E,A,b,c,d}.mtx, plus for iha
                          dr_trace.csv and loewner_sigma.csv
    freq_response.csv     full-system gain/phase (mode dump-curves)
    <method>_r<r>/error_curve.csv   error along the grid (mode dump-curves)
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import __version__
from .baselines import balanced_truncation, modified_bt
from .errors import DimensionMismatch, ReductionError
from .irka import IrkaConfig, run_irka
from .mmio import read_matrix, write_matrix
from .norms import relative_error_and_bound
from .pipeline import HinfReductionConfig, reduce_hinf
from .statespace import DENSE_EIG_CAP, FrequencyGrid, LtiSystem
from .synthetic import make_synthetic

_METHODS = ("iha", "irka", "bt", "mbt")
_MODES = ("exact-step2", "sampled-norms", "dump-curves")


@dataclass
class Job:
    methods: list
    orders: list
    out_dir: str
    input_dir: str | None = None
    synthetic: str | None = None  # "kind:n", e.g. "sss:100"
    mode: list = field(default_factory=list)
    seed: int = 0
    grid: FrequencyGrid | None = None
    tol: float = 1e-6

    def validate(self):
        if bool(self.input_dir) == bool(self.synthetic):
            raise ValueError("exactly one of input_dir or synthetic is required")
        if not self.methods:
            raise ValueError("at least one method is required")
        for m in self.methods:
            if m not in _METHODS:
                raise ValueError(f"unknown method {m!r}; choose from {_METHODS}")
        if not self.orders:
            raise ValueError("at least one reduction order is required")
        for m in self.mode:
            if m not in _MODES:
                raise ValueError(f"unknown mode flag {m!r}; choose from {_MODES}")


def _load_vector(path, what):
    M = read_matrix(path)
    if sp.issparse(M):
        M = M.toarray()
    M = np.asarray(M)
    if M.ndim == 2 and 1 in M.shape:
        M = M.reshape(-1)
    if M.ndim != 1:
        raise DimensionMismatch(f"{what} must be a vector, got shape {M.shape}")
    return M


def ingest(input_dir: str) -> LtiSystem:
    """Assemble a system from A.mtx, b.mtx, c.mtx (+ optional E.mtx, d.mtx)."""
    def p(name):
        return os.path.join(input_dir, name)

    for required in ("A.mtx", "b.mtx", "c.mtx"):
        if not os.path.exists(p(required)):
            raise FileNotFoundError(f"missing {required} in {input_dir}")
    A = read_matrix(p("A.mtx"))
    b = _load_vector(p("b.mtx"), "b")
    c = _load_vector(p("c.mtx"), "c")
    n = b.shape[0]
    if os.path.exists(p("E.mtx")):
        E = read_matrix(p("E.mtx"))
    elif sp.issparse(A):
        E = sp.eye_array(n, format="csr")
    else:
        E = np.eye(n)
    d = 0.0
    if os.path.exists(p("d.mtx")):
        dv = _load_vector(p("d.mtx"), "d")
        if dv.size != 1:
            raise DimensionMismatch("d must be a single scalar")
        d = float(dv[0])
    return LtiSystem(E, A, b, c, d)


def write_system(sys: LtiSystem, out_dir: str):
    """Write a system as the same Matrix Market quadruple ingest reads."""
    os.makedirs(out_dir, exist_ok=True)
    write_matrix(os.path.join(out_dir, "E.mtx"), sys.E)
    write_matrix(os.path.join(out_dir, "A.mtx"), sys.A)
    write_matrix(os.path.join(out_dir, "b.mtx"), sys.b)
    write_matrix(os.path.join(out_dir, "c.mtx"), sys.c)
    write_matrix(os.path.join(out_dir, "d.mtx"), np.array([[sys.d]]))


def _atomic_write(path, text):
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="ascii", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float) and not np.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return f"{x:.5g}"


@dataclass(eq=False)
class ReportRow:
    method: str
    r: int
    dr_star: float | None = None
    abs_error: float | None = None
    rel_error: float | None = None
    lower_bound: float | None = None
    surrogate_k: int | None = None
    norm_method: str = ""
    wall_clock_s: float = 0.0
    status: str = "ok"
    warnings: list = field(default_factory=list)


@dataclass(eq=False)
class JobResult:
    rows: list
    exit_code: int
    out_dir: str
    report_csv: str
    report_json: str


def _parse_synthetic(spec):
    try:
        kind, n = spec.split(":")
        return kind, int(n)
    except ValueError as exc:
        raise ValueError(
            f"synthetic spec must look like 'kind:n', got {spec!r}"
        ) from exc


def load_system(job: Job) -> LtiSystem:
    if job.input_dir:
        return ingest(job.input_dir)
    kind, n = _parse_synthetic(job.synthetic)
    return make_synthetic(kind, n, seed=job.seed)


def _reduce_one(sys, method, r, job):
    """Run one method; returns (model, dr_star, surrogate_k, extra_files)."""
    sampled = "sampled-norms" in job.mode
    if method == "irka":
        res = run_irka(sys.strictly_proper(), IrkaConfig(r=r, tol=job.tol, seed=job.seed))
        return res.model, 0.0, None, {}
    if method == "iha":
        cfg = HinfReductionConfig(
            irka=IrkaConfig(r=r, tol=job.tol, seed=job.seed),
            step2_mode="exact" if "exact-step2" in job.mode else "surrogate",
            sampled_norms=sampled,
            grid=job.grid,
        )
        res = reduce_hinf(sys, cfg)
        files = {}
        step = res.exact_step if cfg.step2_mode == "exact" else res.surrogate_step
        if step is not None:
            lines = ["dr,value,stable,phase"]
            for pr in step.trace:
                lines.append(f"{pr.x:.17g},{_fmt(pr.value)},{int(pr.stable)},{pr.phase}")
            files["dr_trace.csv"] = "\n".join(lines) + "\n"
        if res.pencil is not None:
            lines = ["index,sigma"]
            for i, s in enumerate(res.pencil.singular_values):
                lines.append(f"{i},{s:.17g}")
            files["loewner_sigma.csv"] = "\n".join(lines) + "\n"
        k = res.surrogate.order if res.surrogate is not None else None
        return res.model, res.dr_star, k, files
    if method == "bt":
        return balanced_truncation(sys, r).model, 0.0, None, {}
    if method == "mbt":
        res = modified_bt(sys, r, force_sampled=sampled, grid=job.grid)
        return res.model, res.dr_star, None, {}
    raise ValueError(f"unknown method {method!r}")


def _write_model(model, row_dir):
    os.makedirs(row_dir, exist_ok=True)
    write_matrix(os.path.join(row_dir, "model_E.mtx"), model.Er)
    write_matrix(os.path.join(row_dir, "model_A.mtx"), model.Ar)
    write_matrix(os.path.join(row_dir, "model_b.mtx"), model.br)
    write_matrix(os.path.join(row_dir, "model_c.mtx"), model.cr)
    write_matrix(os.path.join(row_dir, "model_d.mtx"), np.array([[model.dr]]))


def _error_curve_csv(sys, model, grid):
    from .norms import error_realization
    from .statespace import sweep_realization

    err = error_realization(sys, model)
    vals = sweep_realization(err, 1j * grid.points)
    lines = ["omega,re,im,abs"]
    for w, v in zip(grid.points, vals):
        lines.append(f"{w:.17g},{v.real:.17g},{v.imag:.17g},{abs(v):.17g}")
    return "\n".join(lines) + "\n"


def _freq_response_csv(sys, grid):
    from .statespace import sweep_realization

    vals = sweep_realization(sys.realization(), 1j * grid.points)
    lines = ["omega,gain,phase"]
    for w, v in zip(grid.points, vals):
        lines.append(f"{w:.17g},{abs(v):.17g},{np.angle(v):.17g}")
    return "\n".join(lines) + "\n"


def run_job(job: Job) -> JobResult:
    """Execute every (method, order) pair and write the report bundle."""
    job.validate()
    sys = load_system(job)
    for r in job.orders:
        if not (1 <= r < max(sys.n, 2)):
            raise ValueError(f"reduction order {r} is out of range for n = {sys.n}")
    os.makedirs(job.out_dir, exist_ok=True)
    grid = job.grid if job.grid is not None else FrequencyGrid.default_sampled()
    sampled = "sampled-norms" in job.mode

    rows = []
    for method in job.methods:
        for r in sorted(job.orders):
            row = ReportRow(method=method, r=r)
            t0 = time.perf_counter()
            try:
                model, dr_star, k, files = _reduce_one(sys, method, r, job)
                bound = relative_error_and_bound(
                    sys,
                    model,
                    grid=grid,
                    force_sampled=sampled or sys.n + r > DENSE_EIG_CAP,
                )
                row.dr_star = float(dr_star)
                row.abs_error = bound.absolute_error
                row.rel_error = bound.relative_error
                row.lower_bound = bound.lower_bound
                row.surrogate_k = k
                row.norm_method = bound.method
                row_dir = os.path.join(job.out_dir, f"{method}_r{r}")
                _write_model(model, row_dir)
                for name, text in files.items():
                    _atomic_write(os.path.join(row_dir, name), text)
                if "dump-curves" in job.mode:
                    _atomic_write(
                        os.path.join(row_dir, "error_curve.csv"),
                        _error_curve_csv(sys, model, grid),
                    )
            except ReductionError as exc:
                row.status = f"{type(exc).__name__}: {exc}"
            row.wall_clock_s = time.perf_counter() - t0
            rows.append(row)

    if "dump-curves" in job.mode:
        _atomic_write(
            os.path.join(job.out_dir, "freq_response.csv"),
            _freq_response_csv(sys, grid),
        )

    header = "method,r,dr_star,abs_hinf_error,rel_hinf_error,lower_bound,surrogate_k,norm_method,status"
    lines = [header]
    for row in rows:
        lines.append(
            ",".join(
                [
                    row.method,
                    str(row.r),
                    _fmt(row.dr_star),
                    _fmt(row.abs_error),
                    _fmt(row.rel_error),
                    _fmt(row.lower_bound),
                    "" if row.surrogate_k is None else str(row.surrogate_k),
                    row.norm_method,
                    row.status.split(":")[0],
                ]
            )
        )
    report_csv = os.path.join(job.out_dir, "report.csv")
    _atomic_write(report_csv, "\n".join(lines) + "\n")

    payload = {
        "rows": [
            {
                "method": row.method,
                "r": row.r,
                "dr_star": row.dr_star,
                "abs_hinf_error": row.abs_error,
                "rel_hinf_error": row.rel_error,
                "lower_bound": row.lower_bound,
                "surrogate_k": row.surrogate_k,
                "norm_method": row.norm_method,
                "status": row.status,
            }
            for row in rows
        ],
    }
    report_json = os.path.join(job.out_dir, "report.json")
    _atomic_write(report_json, json.dumps(payload, indent=2, allow_nan=True) + "\n")

    # timing is the one run-to-run varying quantity; it lives in its own
    # file so every report artifact stays byte-identical across reruns
    timing = {
        "rows": [
            {"method": row.method, "r": row.r, "wall_clock_s": row.wall_clock_s}
            for row in rows
        ],
        "total_s": sum(row.wall_clock_s for row in rows),
    }
    _atomic_write(
        os.path.join(job.out_dir, "timing.json"),
        json.dumps(timing, indent=2) + "\n",
    )

    manifest = {
        "package_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": __import__("scipy").__version__,
        "job": {
            "methods": list(job.methods),
            "orders": sorted(job.orders),
            "input_dir": job.input_dir,
            "synthetic": job.synthetic,
            "mode": list(job.mode),
            "seed": job.seed,
            "tol": job.tol,
        },
    }
    _atomic_write(
        os.path.join(job.out_dir, "run_manifest.json"),
        json.dumps(manifest, indent=2) + "\n",
    )

    failed = any(row.status != "ok" for row in rows)
    return JobResult(
        rows=rows,
        exit_code=2 if failed else 0,
        out_dir=job.out_dir,
        report_csv=report_csv,
        report_json=report_json,
    )
