"""One-parameter family of reduced models sharing one interpolation set.

Starting from an interpolatory core (E_r, A_r, b_r, c_r, d_r = 0) built at
points s_1..s_r, perturbing the realization as

    (c_r - t u) ^T (s E_r - A_r - t w u^T)^{-1} (b_r - t w) + t

with the recorded ones-surrogates u (b-side) and w (c-side) changes the
feed-through to t while leaving the values H_r(s_k) untouched for every t.
A Sherman-Morrison expansion collapses the family to

    H_r(s, t) = H_r0(s) + t (G1(s) - 1)(G2(s) - 1) / (1 - t G3(s)),

with G1 = u^T (sE_r - A_r)^{-1} b_r, G2 = c_r^T (sE_r - A_r)^{-1} w and
G3 = u^T (sE_r - A_r)^{-1} w, all equal to 1 (G1, G2) at the interpolation
points.  Evaluating the three G's and the core value needs two solves with
one factorization per point; a cached spectral factorization of (A_r, E_r)
turns repeated evaluations into O(r) dot products.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as spla

from .errors import DegenerateDenominator, FamilyPole
from .projection import ReducedModel

_DENOM_FLOOR = 1e-12


@dataclass(eq=False)
class FeedthroughCandidate:
    """Stability verdict for one feed-through value.

    margin is the distance of the rightmost perturbed pole to the
    imaginary axis (positive iff strictly stable).
    """

    dr: float
    stable: bool
    margin: float


class FeedthroughFamily:
    """Feed-through-parameterized models over a fixed interpolatory core."""

    def __init__(self, core: ReducedModel):
        if core.dr != 0.0:
            raise ValueError("family core must have zero feed-through")
        if core.u_ones is None or core.w_ones is None:
            raise ValueError("family core must carry its ones-surrogate vectors")
        self.core = core
        self._lam = None
        self._setup_cache()

    # ------------------------------------------------------------------
    def _setup_cache(self):
        """Diagonalize the core pencil once; fall back to direct solves."""
        r = self.core.order
        if r == 0:
            return
        try:
            lam, X = spla.eig(self.core.Ar, self.core.Er)
        except spla.LinAlgError:
            return
        ErX = self.core.Er @ X
        try:
            cond = np.linalg.cond(ErX)
        except np.linalg.LinAlgError:
            return
        if not np.isfinite(cond) or cond > 1e10:
            return
        lu = spla.lu_factor(ErX)
        self._lam = lam
        self._R_b = spla.lu_solve(lu, self.core.br.astype(complex))
        self._R_w = spla.lu_solve(lu, self.core.w_ones.astype(complex))
        self._L_c = X.T @ self.core.cr
        self._L_u = X.T @ self.core.u_ones

    def _g_all(self, s):
        """Return (H_r0(s), G1(s), G2(s), G3(s))."""
        if self.core.order == 0:
            return 0j, 0j, 0j, 0j
        if self._lam is not None:
            k = 1.0 / (s - self._lam)
            h0 = np.sum(self._L_c * self._R_b * k)
            g1 = np.sum(self._L_u * self._R_b * k)
            g2 = np.sum(self._L_c * self._R_w * k)
            g3 = np.sum(self._L_u * self._R_w * k)
            return complex(h0), complex(g1), complex(g2), complex(g3)
        M = s * self.core.Er - self.core.Ar
        lu = spla.lu_factor(M, check_finite=False)
        xb = spla.lu_solve(lu, self.core.br.astype(complex), check_finite=False)
        xw = spla.lu_solve(lu, self.core.w_ones.astype(complex), check_finite=False)
        return (
            complex(self.core.cr @ xb),
            complex(self.core.u_ones @ xb),
            complex(self.core.cr @ xw),
            complex(self.core.u_ones @ xw),
        )

    # ------------------------------------------------------------------
    def eval(self, s, dr: float) -> complex:
        """Family transfer value H_r(s, dr) via the displayed identity."""
        h0, g1, g2, g3 = self._g_all(s)
        if dr == 0.0:
            return h0
        denom = 1.0 - dr * g3
        if abs(denom) < _DENOM_FLOOR * (1.0 + abs(dr * g3)):
            raise FamilyPole(
                f"family denominator vanishes at s = {s} for feed-through {dr}"
            )
        return complex(h0 + dr * (g1 - 1.0) * (g2 - 1.0) / denom)

    def core_value(self, s) -> complex:
        return self.eval(s, 0.0)

    def assemble(self, dr: float) -> ReducedModel:
        """State-space member of the family at feed-through ``dr``."""
        core = self.core
        if dr == 0.0:
            return replace(core)
        u = core.u_ones
        w = core.w_ones
        return ReducedModel(
            Er=core.Er.copy(),
            Ar=core.Ar + dr * np.outer(w, u),
            br=core.br - dr * w,
            cr=core.cr - dr * u,
            dr=float(dr),
            u_ones=u.copy(),
            w_ones=w.copy(),
            points=None if core.points is None else core.points.copy(),
        )

    def stability(self, dr: float, margin_required: float = 0.0) -> FeedthroughCandidate:
        """Eigenvalue test of the perturbed pencil; margin is -max Re."""
        core = self.core
        if core.order == 0:
            return FeedthroughCandidate(dr=float(dr), stable=True, margin=np.inf)
        Ad = core.Ar + dr * np.outer(core.w_ones, core.u_ones)
        lam = spla.eig(Ad, core.Er, right=False)
        margin = float(-np.max(lam.real))
        return FeedthroughCandidate(
            dr=float(dr),
            stable=bool(margin > margin_required),
            margin=margin,
        )

    def matching_feedthrough(self, target, s_extra) -> float:
        """Feed-through making the family interpolate ``target`` at one more point.

        Solving H_r(s_extra, t) = H(s_extra) for t gives

            t = (H - H_r0) / ((G1 - 1)(G2 - 1) + G3 (H - H_r0))

        evaluated at s_extra.  The result is verified by substitution.
        """
        h = target.eval(s_extra)
        h0, g1, g2, g3 = self._g_all(s_extra)
        gap = h - h0
        denom = (g1 - 1.0) * (g2 - 1.0) + g3 * gap
        scale = abs((g1 - 1.0) * (g2 - 1.0)) + abs(g3 * gap) + 1e-300
        if abs(denom) < 1e-12 * scale or denom == 0.0:
            raise DegenerateDenominator(
                f"no finite feed-through interpolates the target at s = {s_extra}"
            )
        t = gap / denom
        if abs(t.imag) > 1e-8 * (1.0 + abs(t)):
            raise DegenerateDenominator(
                f"matching feed-through at s = {s_extra} is not real: {t}"
            )
        t = float(t.real)
        check = self.eval(s_extra, t)
        if abs(check - h) > 1e-8 * (1.0 + abs(h)):
            raise DegenerateDenominator(
                "matching feed-through failed its interpolation re-check"
            )
        return t
