"""Two-sided interpolatory projection onto shifted-solve bases.

Columns of V span (s_i E - A)^{-1} b and columns of W span
(s_i E - A)^{-T} c.  Projecting with W^T (plain transpose, the bases are
complex) yields a reduced model whose transfer function Hermite-interpolates
the full one at every shift.  Unit-column scaling is supported for
conditioning; the recorded scales replace the all-ones vector in the
feed-through family identities downstream.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as spla

from .errors import (
    DimensionMismatch,
    DuplicatePoints,
    NotConjugateClosed,
    RankDeficient,
    SingularReducedPencil,
    SingularShift,
)
from .statespace import LtiSystem, Realization

# Shifts closer than this (relative) are rejected as duplicates.
_POINT_GAP = 1e-10


def _check_points(points):
    pts = np.asarray(points, dtype=complex).reshape(-1)
    if pts.size == 0:
        raise DimensionMismatch("need at least one interpolation point")
    for i in range(pts.size):
        for j in range(i + 1, pts.size):
            if abs(pts[i] - pts[j]) < _POINT_GAP * (1.0 + abs(pts[i])):
                raise DuplicatePoints(
                    f"interpolation points {pts[i]} and {pts[j]} nearly coincide"
                )
    # closure under conjugation (exact: generators emit literal conjugate pairs)
    for s in pts:
        if s.imag != 0.0 and not np.any(pts == s.conjugate()):
            raise NotConjugateClosed(f"point {s} has no conjugate partner")
    return pts


@dataclass(eq=False)
class InterpolationBasis:
    """Primitive (or unit-scaled) interpolation bases for one point set.

    ``V[:, i] = v_scales[i] * (s_i E - A)^{-1} b`` and
    ``W[:, i] = w_scales[i] * (s_i E - A)^{-T} c``; with scaling "none" all
    scales are exactly 1.
    """

    points: np.ndarray
    V: np.ndarray
    W: np.ndarray
    v_scales: np.ndarray
    w_scales: np.ndarray

    @property
    def r(self):
        return self.points.shape[0]


@dataclass(eq=False)
class ReducedModel:
    """Order-r descriptor model produced by projection or assembly.

    ``u_ones`` / ``w_ones`` record what replaced the all-ones vector of the
    feed-through family identities under column scaling (b-side and
    c-side respectively); ``points`` keeps the interpolation set so later
    stages can realify and verify invariants.
    """

    Er: np.ndarray
    Ar: np.ndarray
    br: np.ndarray
    cr: np.ndarray
    dr: float = 0.0
    u_ones: np.ndarray | None = None
    w_ones: np.ndarray | None = None
    points: np.ndarray | None = None

    @property
    def order(self):
        return self.br.shape[0]

    def realization(self) -> Realization:
        return Realization(self.Er, self.Ar, self.br, self.cr, self.dr)

    def _solver(self, s):
        M = s * self.Er - self.Ar
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", spla.LinAlgWarning)
            lu, piv = spla.lu_factor(M, check_finite=False)
        diag = np.abs(np.diag(lu))
        if diag.size and (diag.min() == 0.0 or diag.min() < 1e-14 * diag.max()):
            raise SingularShift(
                f"evaluation point {s} coincides with a reduced pole", shift=s
            )
        return lu, piv

    def eval(self, s) -> complex:
        if self.order == 0:
            return complex(self.dr)
        lu = self._solver(s)
        return complex(self.cr @ spla.lu_solve(lu, self.br) + self.dr)

    def eval_deriv(self, s):
        if self.order == 0:
            return complex(self.dr), 0.0 + 0.0j
        lu = self._solver(s)
        v = spla.lu_solve(lu, self.br.astype(complex))
        z = spla.lu_solve(lu, self.Er @ v)
        return complex(self.cr @ v + self.dr), complex(-(self.cr @ z))

    def poles(self) -> np.ndarray:
        if self.order == 0:
            return np.array([], dtype=complex)
        lam = spla.eig(self.Ar, self.Er, right=False)
        return lam[np.lexsort((lam.imag, lam.real))]

    def is_stable(self, margin: float = 0.0) -> bool:
        lam = self.poles()
        if lam.size == 0:
            return True
        return bool(np.max(lam.real) < -margin)

    def is_real(self) -> bool:
        return not any(
            np.iscomplexobj(M) for M in (self.Er, self.Ar, self.br, self.cr)
        )

    def to_lti(self) -> LtiSystem:
        """Repackage a real reduced model as a validated LtiSystem."""
        if not self.is_real():
            raise ValueError("model is complex; realify it first")
        return LtiSystem(self.Er, self.Ar, self.br, self.cr, self.dr)


def build_basis(sys: LtiSystem, points, scaling: str = "none") -> InterpolationBasis:
    """Solve the 2r shifted systems defining the interpolation bases.

    Conjugate pairs are solved once and mirrored, which both halves the
    work and makes the pairing exact in floating point.
    """
    if scaling not in ("none", "unit"):
        raise ValueError(f"unknown scaling policy {scaling!r}")
    pts = _check_points(points)
    n, r = sys.n, pts.size
    V = np.empty((n, r), dtype=complex)
    W = np.empty((n, r), dtype=complex)
    done = np.zeros(r, dtype=bool)
    for i, s in enumerate(pts):
        if done[i]:
            continue
        solver = sys.shifted_solver(s)
        V[:, i] = solver.solve(sys.b)
        W[:, i] = solver.solve_transpose(sys.c)
        done[i] = True
        if s.imag != 0.0:
            j = int(np.nonzero(pts == s.conjugate())[0][0])
            if not done[j]:
                V[:, j] = V[:, i].conjugate()
                W[:, j] = W[:, i].conjugate()
                done[j] = True
    v_scales = np.ones(r)
    w_scales = np.ones(r)
    if scaling == "unit":
        for i in range(r):
            nv = np.linalg.norm(V[:, i])
            nw = np.linalg.norm(W[:, i])
            if nv == 0.0 or nw == 0.0:
                raise RankDeficient("an interpolation basis column vanished")
            V[:, i] /= nv
            W[:, i] /= nw
            v_scales[i] = 1.0 / nv
            w_scales[i] = 1.0 / nw
    for name, B in (("V", V), ("W", W)):
        if np.linalg.matrix_rank(B) < r:
            raise RankDeficient(f"basis {name} is numerically rank deficient")
    return InterpolationBasis(pts, V, W, v_scales, w_scales)


def project(sys: LtiSystem, basis: InterpolationBasis) -> ReducedModel:
    """Compress (E, A, b, c) with W^T . V; d_r starts at zero.

    The scale vectors ride along as the ones-surrogates of the
    feed-through family: u_ones = v_scales (b-side), w_ones = w_scales
    (c-side).
    """
    V, W = basis.V, basis.W
    if V.shape[0] != sys.n:
        raise DimensionMismatch("basis and system orders differ")
    EV = sys.E @ V
    AV = sys.A @ V
    Er = W.T @ EV
    Ar = W.T @ AV
    br = W.T @ sys.b
    cr = V.T @ sys.c
    diag = np.abs(np.diag(spla.lu_factor(Er, check_finite=False)[0]))
    if diag.size and (diag.max() == 0.0 or diag.min() < 1e-13 * diag.max()):
        raise SingularReducedPencil("reduced descriptor matrix is singular")
    return ReducedModel(
        Er=Er,
        Ar=Ar,
        br=br,
        cr=cr,
        dr=0.0,
        u_ones=basis.v_scales.astype(complex),
        w_ones=basis.w_scales.astype(complex),
        points=basis.points.copy(),
    )


def _pairing_transform(points):
    """Unitary-ish map sending conjugate-pair coordinates to real ones.

    For a pair (s, conj(s)) occupying coordinates (i, j) the block
    (1/sqrt(2)) [[1, -i], [1, i]] turns the columns (v, conj(v)) into
    sqrt(2) (Re v, Im v).  Real points map through unchanged.
    """
    pts = np.asarray(points)
    r = pts.size
    T = np.zeros((r, r), dtype=complex)
    used = np.zeros(r, dtype=bool)
    # deterministic pair matching: walk points sorted by (imag, real)
    order = np.lexsort((pts.real, pts.imag))
    inv = 1.0 / np.sqrt(2.0)
    for i in order:
        if used[i]:
            continue
        s = pts[i]
        if s.imag == 0.0:
            T[i, i] = 1.0
            used[i] = True
            continue
        partners = np.nonzero((pts == s.conjugate()) & ~used)[0]
        partners = partners[partners != i]
        if partners.size == 0:
            raise NotConjugateClosed(f"point {s} has no conjugate partner")
        j = int(partners[0])
        hi, lo = (i, j) if s.imag > 0 else (j, i)
        T[hi, hi] = inv
        T[lo, hi] = inv
        T[hi, lo] = -1j * inv
        T[lo, lo] = 1j * inv
        used[i] = used[j] = True
    return T


def realify(model: ReducedModel, tol: float = 1e-8) -> ReducedModel:
    """Transform a conjugate-closed complex model to real matrices.

    The transfer function and the family identity vectors are preserved
    exactly; imaginary residue beyond ``tol`` (relative) raises
    NotConjugateClosed.
    """
    if model.is_real():
        return model
    if model.points is None:
        raise NotConjugateClosed("model carries no interpolation points to pair")
    T = _pairing_transform(model.points)
    Er = T.T @ model.Er @ T
    Ar = T.T @ model.Ar @ T
    br = T.T @ model.br
    cr = T.T @ model.cr
    out = [Er, Ar, br, cr]
    ones = []
    for v in (model.u_ones, model.w_ones):
        if v is not None:
            tv = T.T @ v
            out.append(tv)
            ones.append(tv)
        else:
            ones.append(None)
    for M in out:
        scale = np.max(np.abs(M))
        if scale > 0 and np.max(np.abs(M.imag)) > tol * scale:
            raise NotConjugateClosed(
                "imaginary residue after realification exceeds tolerance"
            )
    return ReducedModel(
        Er=Er.real.copy(),
        Ar=Ar.real.copy(),
        br=br.real.copy(),
        cr=cr.real.copy(),
        dr=model.dr,
        u_ones=None if ones[0] is None else ones[0].real.copy(),
        w_ones=None if ones[1] is None else ones[1].real.copy(),
        points=None if model.points is None else model.points.copy(),
    )
