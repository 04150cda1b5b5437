"""End-to-end H-infinity-targeted reduction.

Step 1 finds an interpolatory core by the rational Krylov fixed point and
recycles every Hermite sample of the full transfer function its solves
produced.  Step 2 turns those samples into error samples H - H_r0, builds
a data-driven surrogate of the error system, and minimizes over the free
feed-through parameter the norm of

    F_k(s) - t (G1(s) - 1)(G2(s) - 1) / (1 - t G3(s)),

which approximates ||H - H_r(., t)|| at surrogate cost: every probe works
on matrices of size k + 2r, never n.  Candidates that destabilize the
reduced pencil are rejected with value +inf.  An exact mode evaluates the
true (n + r)-state error norm instead, for validation at desk scale.
"""

from __future__ import annotations

import numpy as np
from dataclasses import dataclass, field, replace

import scipy.linalg as spla

from ._optimize import ScalarSearch, ladder, minimize_scalar
from ._parallel import parallel_map
from .errors import (
    NoStableFeedthrough,
    SingularShift,
    SurrogateUnusable,
    UnstableSystem,
)
from .feedthrough import FeedthroughFamily
from .irka import IrkaConfig, IrkaResult, run_irka
from .loewner import (
    LoewnerPencil,
    Surrogate,
    build_pencil,
    dedupe_samples,
    extract_surrogate,
)
from .norms import (
    adaptive_grid,
    error_realization,
    hinf_norm,
    hinf_norm_sampled,
)
from .projection import ReducedModel
from .statespace import (
    DENSE_EIG_CAP,
    FrequencyGrid,
    LtiSystem,
    Realization,
    TransferSample,
    as_realization,
)

_DEGENERATE_REL = 1e-12


@dataclass
class BracketPolicy:
    """Candidate ladder for the feed-through search.

    Default: 0 and +/- scale * 10^{-decades}..10^0 with ``per_sign`` points
    per sign, scale being the norm of the error surrogate.  ``candidates``
    overrides the ladder entirely (absolute values, not multiples).
    """

    decades: int = 4
    per_sign: int = 5
    candidates: object = None

    def build(self, scale: float):
        if self.candidates is not None:
            vals = sorted(set(float(x) for x in self.candidates) | {0.0})
            return vals
        return ladder(scale, decades=self.decades, per_sign=self.per_sign)


@dataclass
class HinfReductionConfig:
    irka: IrkaConfig
    step2_mode: str = "surrogate"  # "surrogate" | "exact" | "both"
    bracket: BracketPolicy = field(default_factory=BracketPolicy)
    stability_margin: float = 0.0
    surrogate_k: object = "auto"
    surrogate_tol: float = 1e-5
    refine_tol: float = 1e-4
    norm_rel_tol: float = 1e-6
    sampled_norms: bool = False
    grid: FrequencyGrid | None = None
    max_order: int = DENSE_EIG_CAP
    run_diagnostics: bool = False


@dataclass(eq=False)
class OptimizationOutcome:
    dr_star: float
    objective_value: float
    search: ScalarSearch
    scale: float
    evaluator: str  # "level-set" | "sampled"
    mode: str       # "surrogate" | "exact"

    @property
    def trace(self):
        return self.search.trace

    @property
    def rejected_count(self):
        return self.search.rejected_count


@dataclass(eq=False)
class PipelineDiagnostics:
    degenerate: bool = False
    surrogate_order: int = 0
    sample_count: int = 0
    rejected_count: int = 0
    irka_converged: bool = False
    warnings: list = field(default_factory=list)
    feedthrough_offset: float = 0.0
    final_margin: float = np.nan
    circularity: float | None = None
    core_circularity: float | None = None
    rhp_interpolation_count: int | None = None
    count_converged: bool | None = None


@dataclass(eq=False)
class HinfReduction:
    model: ReducedModel
    dr_star: float
    objective_value: float
    irka: IrkaResult
    family: FeedthroughFamily
    pencil: LoewnerPencil | None
    surrogate: Surrogate | None
    surrogate_step: OptimizationOutcome | None
    exact_step: OptimizationOutcome | None
    diagnostics: PipelineDiagnostics

    @property
    def core(self) -> ReducedModel:
        return self.irka.model


def _surrogate_residual(fam: FeedthroughFamily, surr: Surrogate, dr: float) -> Realization:
    """Block realization of F_k - (family(dr) - core): order k + 2r.

    The feed-through increment has 2r poles (core plus perturbed pencils),
    so the probe size is k + 2r.  What matters is that n never appears.
    """
    pert = fam.assemble(dr)
    core = fam.core
    k, r = surr.order, core.order
    m = k + 2 * r
    E = np.zeros((m, m), dtype=complex)
    A = np.zeros((m, m), dtype=complex)
    E[:k, :k] = surr.Ek
    A[:k, :k] = surr.Ak
    E[k : k + r, k : k + r] = pert.Er
    A[k : k + r, k : k + r] = pert.Ar
    E[k + r :, k + r :] = core.Er
    A[k + r :, k + r :] = core.Ar
    b = np.concatenate([surr.bk, pert.br.astype(complex), core.br.astype(complex)])
    c = np.concatenate([surr.ck, -pert.cr.astype(complex), core.cr.astype(complex)])
    return Realization(E, A, b, c, -float(dr))


def optimize_feedthrough(
    fam: FeedthroughFamily,
    objective_system,
    mode: str = "surrogate",
    bracket: BracketPolicy | None = None,
    stability_margin: float = 0.0,
    refine_tol: float = 1e-4,
    norm_rel_tol: float = 1e-6,
    sampled: bool = False,
    grid: FrequencyGrid | None = None,
    max_order: int = DENSE_EIG_CAP,
    warnings_out: list | None = None,
) -> OptimizationOutcome:
    """Minimize the (surrogate or exact) error norm over the feed-through.

    ``objective_system`` is the error surrogate in surrogate mode and the
    full-order system in exact mode.  Probes destabilizing the reduced
    pencil are recorded with value +inf; if nothing admissible remains,
    NoStableFeedthrough is raised.
    """
    if bracket is None:
        bracket = BracketPolicy()
    warn = warnings_out if warnings_out is not None else []

    if mode == "surrogate":
        surr: Surrogate = objective_system

        def residual(dr):
            return _surrogate_residual(fam, surr, dr)

    elif mode == "exact":
        def residual(dr):
            return error_realization(objective_system, fam.assemble(dr))

    else:
        raise ValueError(f"unknown optimization mode {mode!r}")

    # the surrogate may legitimately carry right-half-plane poles: its job
    # is to match the error response along the axis, so probe with the axis
    # peak gain instead of demanding stability of the surrogate itself
    allow = mode == "surrogate"
    probe_n = residual(0.0).n
    use_levelset = not sampled and probe_n <= max_order
    if use_levelset:
        try:
            scale = hinf_norm(residual(0.0), rel_tol=norm_rel_tol,
                              max_order=max_order, allow_unstable=allow).value
        except UnstableSystem:
            warn.append(
                "error surrogate realization has imaginary-axis poles; "
                "falling back to sampled norms for the feed-through search"
            )
            use_levelset = False
    if not use_levelset:
        if grid is None:
            grid = adaptive_grid(residual(0.0), max_order=max_order)
        try:
            scale = hinf_norm_sampled(residual(0.0), grid=grid).value
        except SingularShift as exc:
            # the ruler itself is broken: no candidate can be ranked
            if mode == "surrogate":
                raise SurrogateUnusable(
                    "error surrogate is numerically singular along the "
                    "frequency axis"
                ) from exc
            raise NoStableFeedthrough(
                "the error response is numerically singular along the "
                "frequency axis"
            ) from exc
    evaluator = "level-set" if use_levelset else "sampled"

    def objective(dr):
        cand = fam.stability(dr, margin_required=stability_margin)
        if not cand.stable:
            return np.inf, False
        res = residual(dr)
        if use_levelset:
            try:
                return hinf_norm(res, rel_tol=norm_rel_tol, max_order=max_order,
                                 allow_unstable=allow).value, True
            except UnstableSystem:
                return np.inf, False
        try:
            return hinf_norm_sampled(res, grid=grid).value, True
        except SingularShift:
            return np.inf, False

    search = minimize_scalar(objective, bracket.build(scale), rel_tol=refine_tol)
    if not np.isfinite(search.value):
        raise NoStableFeedthrough(
            "every probed feed-through destabilized the reduced pencil"
        )
    return OptimizationOutcome(
        dr_star=float(search.x_best),
        objective_value=float(search.value),
        search=search,
        scale=float(scale),
        evaluator=evaluator,
        mode=mode,
    )


def reduce_hinf(sys: LtiSystem, cfg: HinfReductionConfig) -> HinfReduction:
    """Full reduction: interpolatory core, error surrogate, feed-through search.

    A nonzero full-order d is split off up front and folded back into the
    final model's feed-through, since the family parameter absorbs any
    constant offset.
    """
    d_offset = sys.d
    sys0 = sys.strictly_proper()
    diag = PipelineDiagnostics(feedthrough_offset=d_offset)

    irka_res = run_irka(sys0, cfg.irka)
    diag.irka_converged = irka_res.converged
    if irka_res.stagnated:
        diag.warnings.append("shift iteration stagnated before the tolerance")
    if irka_res.rolled_back:
        diag.warnings.append(
            "shift iteration ended on an unstable iterate; rolled back to "
            "the last stable one"
        )
    if irka_res.restarted:
        diag.warnings.append(
            "shift iteration produced no stable iterate; restarted from a "
            "reseeded initialization"
        )
    fam = FeedthroughFamily(irka_res.model)

    # error samples recycled from the shift iteration log
    core = irka_res.model
    err_samples = []
    hmax = 0.0
    for e in irka_res.log.unique_entries():
        try:
            h0, h0p = core.eval_deriv(e.point)
        except SingularShift:
            continue  # logged point collides with a reduced pole
        hmax = max(hmax, abs(e.value))
        err_samples.append(
            TransferSample(e.point, e.value - h0, e.derivative - h0p)
        )
    fmax = max((abs(e.value) for e in err_samples), default=0.0)
    degenerate = fmax <= _DEGENERATE_REL * (1.0 + hmax)

    pencil = None
    surrogate = None
    surr_out = None
    exact_out = None
    dr_star = 0.0
    objective_value = 0.0

    if degenerate:
        diag.degenerate = True
        diag.warnings.append(
            "reduction error vanishes at every logged sample; keeping zero "
            "feed-through"
        )
    else:
        err_samples = dedupe_samples(err_samples)
        diag.sample_count = len(err_samples)
        if len(err_samples) < 2:
            diag.warnings.append(
                "not enough distinct samples for an error surrogate; keeping "
                "zero feed-through"
            )
        else:
            pencil = build_pencil(err_samples)
            cap = 2 * cfg.irka.r + 1 if sys0.is_state_space_symmetric() else None
            k = None if cfg.surrogate_k == "auto" else int(cfg.surrogate_k)
            surrogate = extract_surrogate(
                pencil, k=k, tol=cfg.surrogate_tol, max_order=cap
            )
            diag.surrogate_order = surrogate.order
            if surrogate.order == 0:
                diag.warnings.append(
                    "error surrogate truncated to order zero; keeping zero "
                    "feed-through"
                )
                surrogate = None

    if surrogate is not None:
        common = dict(
            bracket=cfg.bracket,
            stability_margin=cfg.stability_margin,
            refine_tol=cfg.refine_tol,
            norm_rel_tol=cfg.norm_rel_tol,
            grid=cfg.grid,
            max_order=cfg.max_order,
            warnings_out=diag.warnings,
        )
        exact_sampled = cfg.sampled_norms or sys0.n + core.order > cfg.max_order
        run_exact = cfg.step2_mode in ("exact", "both")
        if cfg.step2_mode in ("surrogate", "both"):
            try:
                surr_out = optimize_feedthrough(
                    fam, surrogate, mode="surrogate",
                    sampled=cfg.sampled_norms, **common,
                )
            except SurrogateUnusable as exc:
                diag.warnings.append(f"{exc}; probing the exact error instead")
                run_exact = True
            except NoStableFeedthrough as exc:
                diag.warnings.append(f"{exc}; keeping zero feed-through")
        if run_exact:
            try:
                exact_out = optimize_feedthrough(
                    fam, sys0, mode="exact", sampled=exact_sampled, **common,
                )
            except NoStableFeedthrough as exc:
                diag.warnings.append(f"{exc}; keeping zero feed-through")
        primary = surr_out
        if cfg.step2_mode == "exact" or primary is None:
            primary = exact_out
        if primary is not None:
            dr_star = primary.dr_star
            objective_value = primary.objective_value

    for out in (surr_out, exact_out):
        if out is not None:
            diag.rejected_count += out.rejected_count

    model = fam.assemble(dr_star)
    if d_offset != 0.0:
        model = replace(model, dr=model.dr + d_offset)
    cand = fam.stability(dr_star, margin_required=cfg.stability_margin)
    diag.final_margin = cand.margin
    if not cand.stable:
        diag.warnings.append("final reduced model is not stable at the margin")

    result = HinfReduction(
        model=model,
        dr_star=dr_star,
        objective_value=objective_value,
        irka=irka_res,
        family=fam,
        pencil=pencil,
        surrogate=surrogate,
        surrogate_step=surr_out,
        exact_step=exact_out,
        diagnostics=diag,
    )
    if cfg.run_diagnostics:
        eq = equioscillation_diagnostics(sys, model, max_order=cfg.max_order)
        eq0 = equioscillation_diagnostics(
            sys0, core, count=False, max_order=cfg.max_order
        )
        diag.circularity = eq.circularity
        diag.core_circularity = eq0.circularity
        diag.rhp_interpolation_count = eq.rhp_interpolation_count
        diag.count_converged = eq.count_converged
    return result


# ----------------------------------------------------------------------
# error-shape diagnostics


def _pole_residue_terms(real: Realization, max_order):
    """Diagonalized form (poles, residues, d) or None if ill-conditioned."""
    import scipy.sparse as sp

    E = real.E.toarray() if sp.issparse(real.E) else np.asarray(real.E, dtype=float)
    A = real.A.toarray() if sp.issparse(real.A) else np.asarray(real.A)
    if E.shape[0] > max_order:
        return None
    if E.shape[0] == 0:
        return np.zeros(0, dtype=complex), np.zeros(0, dtype=complex), real.d
    lam, X = spla.eig(A, E)
    EX = E @ X
    try:
        cond = np.linalg.cond(EX)
    except np.linalg.LinAlgError:
        return None
    if not np.isfinite(cond) or cond > 1e12:
        return None
    bh = np.linalg.solve(EX, real.b.astype(complex))
    ch = X.T @ real.c
    return lam, ch * bh, real.d


class _ErrorEvaluator:
    """Vectorized H(s) - H_r(s) in pole-residue form, with a slow fallback."""

    def __init__(self, full, reduced, max_order=DENSE_EIG_CAP):
        f = as_realization(full)
        g = as_realization(reduced)
        tf = _pole_residue_terms(f, max_order)
        tg = _pole_residue_terms(g, max_order)
        self.fast = tf is not None and tg is not None
        if self.fast:
            self.lam = np.concatenate([tf[0], tg[0]])
            self.res = np.concatenate([tf[1], -tg[1]])
            self.d = complex(tf[2]) - complex(tg[2])
        else:
            self._f, self._g = f, g
            self.res = None
            self.d = complex(f.d) - complex(g.d)
            lams = []
            for real in (f, g):
                if real.n:
                    import scipy.sparse as sp

                    A = real.A.toarray() if sp.issparse(real.A) else np.asarray(real.A)
                    E = real.E.toarray() if sp.issparse(real.E) else np.asarray(real.E)
                    lams.append(spla.eig(A, E, right=False))
            self.lam = (
                np.concatenate(lams) if lams else np.zeros(0, dtype=complex)
            )

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        if self.fast:
            out = np.empty(s.shape, dtype=complex)
            chunk = max(1, int(2e6 // max(1, self.lam.size)))
            flat = s.reshape(-1)
            of = out.reshape(-1)
            for i in range(0, flat.size, chunk):
                blk = flat[i : i + chunk]
                of[i : i + chunk] = (
                    self.res @ (1.0 / (blk[None, :] - self.lam[:, None])) + self.d
                )
            return out
        from .statespace import eval_realization

        vals = parallel_map(
            lambda z: eval_realization(self._f, z) - eval_realization(self._g, z),
            s.reshape(-1),
        )
        return np.asarray(vals, dtype=complex).reshape(s.shape)


def _leg_winding(f, params, to_s, max_nodes):
    """Accumulated phase of f along one contour leg with adaptive bisection."""
    params = np.asarray(params, dtype=float)
    vals = f(to_s(params))
    for _ in range(60):
        if np.any(np.abs(vals) == 0.0):
            return np.nan, False
        dphi = np.angle(vals[1:] / vals[:-1])
        bad = np.nonzero(np.abs(dphi) > 0.5)[0]
        if bad.size == 0:
            return float(np.sum(dphi)), True
        if params.size + bad.size > max_nodes:
            return float(np.sum(dphi)), False
        mids = 0.5 * (params[bad] + params[bad + 1])
        mvals = f(to_s(mids))
        params = np.concatenate([params, mids])
        order = np.argsort(params, kind="stable")
        params = params[order]
        vals = np.concatenate([vals, mvals])[order]
    return np.nan, False


def _rhp_zero_count(evaluator: _ErrorEvaluator, radius, max_nodes=200000):
    """Zeros of the error inside the right half-plane by the argument principle.

    The boundary runs down the imaginary axis and closes with the
    right-going semicircular arc; the error is analytic there (both systems
    stable), so the winding number equals the zero count.
    """
    R = float(radius)
    # legs are parameterized ascending; the boundary orientation (down the
    # axis, then the arc from -jR through +R to +jR) flips the axis sign
    half = np.geomspace(R * 1e-10, R, 1200)
    omegas = np.concatenate([-half[::-1], [0.0], half])
    ax_phase, ax_ok = _leg_winding(
        evaluator, omegas, lambda w: 1j * w, max_nodes=max_nodes
    )
    arc_theta = np.linspace(-np.pi / 2, np.pi / 2, 720)
    arc_phase, arc_ok = _leg_winding(
        evaluator, arc_theta, lambda t: R * np.exp(1j * t), max_nodes=max_nodes
    )
    if not (ax_ok and arc_ok) or not np.isfinite(ax_phase + arc_phase):
        return None, False
    w = (-ax_phase + arc_phase) / (2.0 * np.pi)
    count = int(round(w))
    return count, abs(w - count) < 0.05


@dataclass(eq=False)
class EquiDiagnostics:
    circularity: float
    min_gain: float
    max_gain: float
    rhp_interpolation_count: int | None
    count_converged: bool
    degenerate: bool
    contour_radius: float


def equioscillation_diagnostics(
    sys,
    model,
    grid: FrequencyGrid | None = None,
    count: bool = True,
    max_order: int = DENSE_EIG_CAP,
) -> EquiDiagnostics:
    """How close the error H - H_r is to a constant-modulus function.

    circularity = min |err| / max |err| over the grid; 1.0 means the error
    has equal gain everywhere, the signature of an H-infinity-optimal
    approximant.  The right-half-plane zero count of the error (its number
    of interpolation points there) comes from a contour winding number.
    """
    ev = _ErrorEvaluator(sys, model, max_order=max_order)
    mags = np.abs(ev.lam)
    mags = mags[mags > 0]
    lo = float(mags.min()) * 1e-2 if mags.size else 1e-2
    hi = float(mags.max()) * 1e2 if mags.size else 1e2
    if grid is None:
        grid = FrequencyGrid.log(max(lo, 1e-12), hi, 2000)
    gains = np.abs(ev(1j * grid.points))
    gmin, gmax = float(gains.min()), float(gains.max())

    href = _ErrorEvaluator(sys, _zero_model(), max_order=max_order)
    hmax = float(np.max(np.abs(href(1j * grid.points[::8]))))
    if gmax <= 1e-12 * max(1.0, hmax):
        return EquiDiagnostics(
            circularity=1.0,
            min_gain=gmin,
            max_gain=gmax,
            rhp_interpolation_count=0,
            count_converged=True,
            degenerate=True,
            contour_radius=0.0,
        )
    circ = gmin / gmax if gmax > 0 else 1.0

    n_count, ok = None, False
    R = 0.0
    if count:
        pole_r = float(mags.max()) if mags.size else 1.0
        R = 1e3 * max(pole_r, 1.0)
        if ev.d != 0 and ev.fast:
            far = abs(np.sum(ev.res) / ev.d)
            R = max(R, 10.0 * far)
        n_count, ok = _rhp_zero_count(ev, R)
    return EquiDiagnostics(
        circularity=circ,
        min_gain=gmin,
        max_gain=gmax,
        rhp_interpolation_count=n_count,
        count_converged=ok,
        degenerate=False,
        contour_radius=R,
    )


def _zero_model() -> ReducedModel:
    return ReducedModel(
        Er=np.zeros((0, 0)),
        Ar=np.zeros((0, 0)),
        br=np.zeros(0),
        cr=np.zeros(0),
        dr=0.0,
    )
