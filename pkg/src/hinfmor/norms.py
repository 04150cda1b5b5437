"""System norms: level-set H-infinity, sampled H-infinity, H2, Hankel.

The H-infinity level-set iteration detects crossings of |H(j w)| = gamma
through purely imaginary eigenvalues of a 2n-by-2n zero pencil of
H~(s) H(s) - gamma^2 (H~ restricts to the complex conjugate on the
imaginary axis), then raises the lower bound from evaluations at interval
midpoints.  Every returned value is an actual evaluation, so the result is
always a certified lower bound; termination certifies the upper bracket.
All pencils are assembled without inverting E.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as spla
import scipy.sparse as sp

from ._parallel import parallel_map
from .errors import DimensionTooLarge, NonProper, SingularShift, UnstableSystem
from .statespace import (
    DENSE_EIG_CAP,
    FrequencyGrid,
    Realization,
    as_realization,
    eval_realization,
)

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(eq=False)
class HinfNorm:
    value: float
    peak_frequency: float
    method: str
    iterations: int


def _dense(M):
    return M.toarray() if sp.issparse(M) else np.asarray(M)


def _dense_realization(real: Realization) -> Realization:
    return Realization(
        _dense(real.E), _dense(real.A), np.asarray(real.b), np.asarray(real.c), real.d
    )


def _realization_poles(real: Realization):
    lam = spla.eig(_dense(real.A), _dense(real.E), right=False)
    return lam[np.lexsort((lam.imag, lam.real))]


def _sweep_candidates(poles, extra=()):
    """ω = 0, pole-derived resonances and a log sweep.

    The sweep only seeds the level-set lower bound, so its density is a
    cost knob, not a correctness one; small systems get a sparser seed and
    let the globally convergent iteration do the lifting.
    """
    mags = np.abs(poles)
    mags = mags[mags > 0]
    if mags.size == 0:
        lo, hi = 1e-2, 1e2
    else:
        lo, hi = float(mags.min()) * 1e-2, float(mags.max()) * 1e2
    num = 64 if poles.size > 40 else 24
    cands = [0.0]
    cands.extend(np.geomspace(max(lo, 1e-12), hi, num))
    cands.extend(abs(p.imag) for p in poles if p.imag != 0.0)
    cands.extend(extra)
    return np.unique(np.asarray(cands, dtype=float))


def _gain(real: Realization, w):
    return abs(eval_realization(real, 1j * w))


def _crossing_frequencies(real: Realization, gamma):
    """Signed frequencies where |H(j w)| = gamma, via the zero pencil.

    Builds the series realization of H~(s) H(s) - gamma^2 with
    H~(s) = conj(H(-conj(s))) and returns the imaginary parts of its
    nearly-imaginary zeros.
    """
    E, A, b, c, d = real
    n = real.n
    is_real = not any(np.iscomplexobj(np.asarray(M)) for M in (E, A, b, c, d))
    Et = E.conj()
    At = -A.conj()
    bt = b.conj()
    ct = -c.conj()
    dt = np.conj(d)
    Ap = np.zeros((2 * n, 2 * n), dtype=float if is_real else complex)
    Ap[:n, :n] = A
    Ap[:n, n:] = np.outer(b, ct)
    Ap[n:, n:] = At
    bp = np.concatenate([b * dt, bt])
    cp = np.concatenate([c, d * ct])
    Ep = np.zeros_like(Ap)
    Ep[:n, :n] = E
    Ep[n:, n:] = Et
    Dg = d * dt - gamma**2
    Az = Ap - np.outer(bp, cp) / Dg
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lam = spla.eig(Az, Ep, right=False)
    lam = lam[np.isfinite(lam)]
    keep = np.abs(lam.real) <= 1e-7 * (1.0 + np.abs(lam.imag))
    return np.sort(lam[keep].imag)


def hinf_norm(
    sys_like,
    rel_tol: float = 1e-6,
    max_order: int = DENSE_EIG_CAP,
    max_iters: int = 30,
    allow_unstable: bool = False,
) -> HinfNorm:
    """Certified H-infinity norm of a stable system by level-set iteration.

    Dense O(n^3) per iteration; refuses orders above ``max_order``.  The
    returned value is |H(j w*)| at the best frequency found, certified to
    lie within a factor (1 + rel_tol) of the supremum.

    With ``allow_unstable`` the same iteration computes the peak gain along
    the imaginary axis (the L-infinity norm) of a system whose poles avoid
    the axis itself; this is what the feed-through search needs when its
    data-driven error surrogate picks up right-half-plane poles.
    """
    real = _dense_realization(as_realization(sys_like))
    n = real.n
    if n > max_order:
        raise DimensionTooLarge(
            f"level-set norm of an order-{n} system exceeds the dense cap {max_order}"
        )
    dmag = abs(real.d)
    if n == 0:
        return HinfNorm(value=dmag, peak_frequency=0.0, method="level-set", iterations=0)
    poles = _realization_poles(real)
    if allow_unstable:
        if np.min(np.abs(poles.real)) <= 1e-10 * (1.0 + np.abs(poles).max()):
            raise UnstableSystem(
                "peak gain is unbounded: a pole sits on the imaginary axis"
            )
    elif np.max(poles.real) >= 0:
        raise UnstableSystem("H-infinity norm requires a stable system")

    def gain(w):
        try:
            return _gain(real, w)
        except SingularShift as exc:
            # a singular axis pencil is a pole at that frequency, whatever
            # the eigenvalue solver reported about its real part
            raise UnstableSystem(
                f"peak gain is unbounded: the response has a pole near "
                f"frequency {w:g}"
            ) from exc

    cands = _sweep_candidates(poles)
    gains = np.array(parallel_map(gain, cands))
    i = int(np.argmax(gains))
    lb, peak = float(gains[i]), float(cands[i])
    if dmag > lb:
        lb, peak = dmag, np.inf
    if lb == 0.0:
        return HinfNorm(value=0.0, peak_frequency=0.0, method="level-set", iterations=0)

    iters = 0
    for iters in range(1, max_iters + 1):
        gamma = lb * (1.0 + rel_tol)
        if gamma <= dmag * (1.0 + 1e-12):
            break  # the feed-through dominates; the peak sits at infinity
        omegas = _crossing_frequencies(real, gamma)
        if omegas.size < 2:
            break
        mids = 0.5 * (omegas[:-1] + omegas[1:])
        vals = np.array(parallel_map(gain, mids))
        j = int(np.argmax(vals))
        if vals[j] <= lb * (1.0 + 1e-14):
            break
        lb, peak = float(vals[j]), float(mids[j])
    if not any(np.iscomplexobj(np.asarray(M)) for M in real):
        peak = abs(peak)  # real data: the response is conjugate-symmetric
    return HinfNorm(value=lb, peak_frequency=peak, method="level-set", iterations=iters)


def adaptive_grid(sys_like, max_order: int = DENSE_EIG_CAP, num: int = 1000):
    """Log grid spanning [1e-2, 1e2] times the pole magnitude range.

    Falls back to the fixed default grid when the poles are out of reach
    (order above ``max_order``) or degenerate.
    """
    real = as_realization(sys_like)
    if real.n == 0 or real.n > max_order:
        return FrequencyGrid.default_sampled()
    try:
        lam = _realization_poles(_dense_realization(real))
    except (np.linalg.LinAlgError, ValueError):
        return FrequencyGrid.default_sampled()
    mags = np.abs(lam[np.isfinite(lam)])
    mags = mags[mags > 0]
    if mags.size == 0:
        return FrequencyGrid.default_sampled()
    lo = max(float(mags.min()) * 1e-2, 1e-12)
    hi = max(float(mags.max()) * 1e2, lo * 10.0)
    return FrequencyGrid.log(lo, hi, num)


def _golden_max(f, a, b, iters=30):
    """Plain golden-section maximization on [a, b]."""
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = f(x1)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def hinf_norm_sampled(
    sys_like, grid: FrequencyGrid | None = None, refine_iters: int = 30
) -> HinfNorm:
    """Grid maximum of |H(j w)| with golden-section refinement at the peak.

    Works at any scale (sparse solves per point); the result is a lower
    bound only, flagged by method="sampled".
    """
    real = as_realization(sys_like)
    if grid is None:
        grid = FrequencyGrid.default_sampled()
    pts = grid.points
    gains = np.array(parallel_map(lambda w: _gain(real, w), pts))
    i = int(np.argmax(gains))
    lo = pts[i - 1] if i > 0 else pts[0]
    hi = pts[i + 1] if i + 1 < pts.size else pts[-1]
    value, peak = float(gains[i]), float(pts[i])
    if hi > lo:
        if grid.spacing == "log" and lo > 0:
            x, fx = _golden_max(
                lambda t: _gain(real, 10.0**t), np.log10(lo), np.log10(hi),
                iters=refine_iters,
            )
            x = 10.0**x
        else:
            x, fx = _golden_max(lambda w: _gain(real, w), lo, hi, iters=refine_iters)
        if fx > value:
            value, peak = float(fx), float(x)
    return HinfNorm(
        value=value, peak_frequency=peak, method="sampled", iterations=refine_iters
    )


# ----------------------------------------------------------------------
def _proper_stable_dense(sys_like, what, max_order):
    real = _dense_realization(as_realization(sys_like))
    if real.n > max_order:
        raise DimensionTooLarge(
            f"{what} of an order-{real.n} system exceeds the dense cap {max_order}"
        )
    if real.n == 0:
        return real, None
    poles = _realization_poles(real)
    if np.max(poles.real) >= 0:
        raise UnstableSystem(f"{what} requires a stable system")
    return real, poles


def h2_norm(sys_like, max_order: int = DENSE_EIG_CAP) -> float:
    """H2 norm via the controllability Gramian of the descriptor pair.

    Solves A P E^T + E P A^T + b b^T = 0 (through the equivalent standard
    Lyapunov equation) and returns sqrt(c^T P c).  Requires d = 0.
    """
    real, _ = _proper_stable_dense(sys_like, "H2 norm", max_order)
    if real.d != 0.0:
        raise NonProper("H2 norm requires a strictly proper system (d = 0)")
    if real.n == 0:
        return 0.0
    F = np.linalg.solve(real.E, real.A)
    g = np.linalg.solve(real.E, real.b)
    P = spla.solve_continuous_lyapunov(F, -np.outer(g, g.conj()))
    val = float(np.real(real.c @ P @ real.c.conj()))
    return float(np.sqrt(max(val, 0.0)))


@dataclass(eq=False)
class HankelSpectrum:
    sigmas: np.ndarray

    def tail_bound(self, r: int) -> float:
        """Twice the trailing sum: the balanced-truncation error bound."""
        return float(2.0 * np.sum(self.sigmas[r:]))

    def __len__(self):
        return len(self.sigmas)


def gramian_factors(sys_like, max_order: int = DENSE_EIG_CAP):
    """Square factors Zc, Zo of the two descriptor Gramians.

    P = Zc Zc^T solves A P E^T + E P A^T + b b^T = 0 and Q = Zo Zo^T solves
    A^T Q E + E^T Q A + c c^T = 0.  Factors come from eigendecompositions
    with negative roundoff clipped, columns below machine relevance dropped.
    """
    real, _ = _proper_stable_dense(sys_like, "Gramian computation", max_order)
    E, A, b, c = real.E, real.A, real.b, real.c
    F = np.linalg.solve(E, A)
    g = np.linalg.solve(E, b)
    P = spla.solve_continuous_lyapunov(F, -np.outer(g, g))
    # the descriptor Q is E^{-T} Q2 E^{-1} with Q2 the standard-form
    # observability Gramian; factoring Q2 and multiplying by E^{-T} keeps
    # Zo a true square factor of Q
    Q2 = spla.solve_continuous_lyapunov(F.T, -np.outer(c, c))

    def _factor(M):
        M = 0.5 * (M + M.T)
        w, U = spla.eigh(M)
        w = np.clip(w, 0.0, None)
        keep = w > w.max(initial=0.0) * np.finfo(float).eps * M.shape[0]
        if not np.any(keep):
            return np.zeros((M.shape[0], 0))
        idx = np.nonzero(keep)[0][::-1]  # largest first
        return U[:, idx] * np.sqrt(w[idx])

    Zo = np.linalg.solve(E.T, _factor(Q2))
    return real, _factor(P), Zo


def hankel_singular_values(sys_like, max_order: int = DENSE_EIG_CAP) -> HankelSpectrum:
    """Hankel spectrum sqrt(eig(P E^T Q E)) via an SVD of Zo^T E Zc."""
    real, Zc, Zo = gramian_factors(sys_like, max_order=max_order)
    if real.n == 0:
        return HankelSpectrum(sigmas=np.zeros(0))
    sig = spla.svdvals(Zo.T @ real.E @ Zc)
    out = np.zeros(real.n)
    out[: sig.size] = sig
    return HankelSpectrum(sigmas=out)


# ----------------------------------------------------------------------
def error_realization(full_like, reduced_like) -> Realization:
    """Block-diagonal (n + r)-state realization of the mismatch H - H_r.

    The difference lives in the output map only; a sparse full-order block
    stays sparse.
    """
    f = as_realization(full_like)
    g = as_realization(reduced_like)
    if f.is_sparse():
        E = sp.block_diag([f.E, np.atleast_2d(g.E)], format="csr")
        A = sp.block_diag([f.A, np.atleast_2d(g.A)], format="csr")
    else:
        dt = np.result_type(f.E, g.E, f.A, g.A)
        E = np.zeros((f.n + g.n, f.n + g.n), dtype=dt)
        A = np.zeros_like(E)
        E[: f.n, : f.n] = _dense(f.E)
        E[f.n :, f.n :] = g.E
        A[: f.n, : f.n] = _dense(f.A)
        A[f.n :, f.n :] = g.A
    b = np.concatenate([f.b, g.b])
    c = np.concatenate([f.c, -np.asarray(g.c)])
    return Realization(E, A, b, c, f.d - g.d)


@dataclass(eq=False)
class ErrorBound:
    relative_error: float
    lower_bound: float | None
    absolute_error: float
    system_norm: float
    method: str
    peak_frequency: float


def relative_error_and_bound(
    sys,
    reduced,
    grid: FrequencyGrid | None = None,
    force_sampled: bool = False,
    max_order: int = DENSE_EIG_CAP,
    rel_tol: float = 1e-6,
) -> ErrorBound:
    """Relative H-infinity error of a reduced model plus the Hankel lower bound.

    The bound sigma_{r+1} / ||H|| applies to any order-r approximant; a
    certified computation that lands below it (beyond tolerance) indicates
    a numerics problem and triggers a warning.
    """
    err = error_realization(sys, reduced)
    r = as_realization(reduced).n
    certified = not force_sampled and not err.is_sparse() and err.n <= max_order
    if certified:
        e = hinf_norm(err, rel_tol=rel_tol, max_order=max_order)
        hnorm = hinf_norm(sys, rel_tol=rel_tol, max_order=max_order)
    else:
        e = hinf_norm_sampled(err, grid=grid)
        hnorm = hinf_norm_sampled(sys, grid=grid)
    lower = None
    full_n = as_realization(sys).n
    if certified and full_n <= max_order:
        sig = hankel_singular_values(sys, max_order=max_order).sigmas
        tail = float(sig[r]) if r < sig.size else 0.0
        lower = tail / hnorm.value if hnorm.value > 0 else 0.0
    rel = e.value / hnorm.value if hnorm.value > 0 else 0.0
    if lower is not None and rel < lower - 1e-8 * (1.0 + lower):
        warnings.warn(
            f"relative error {rel:.3e} fell below the Hankel bound {lower:.3e}; "
            "norm computation is suspect",
            RuntimeWarning,
        )
    return ErrorBound(
        relative_error=rel,
        lower_bound=lower,
        absolute_error=e.value,
        system_norm=hnorm.value,
        method=e.method,
        peak_frequency=e.peak_frequency,
    )
