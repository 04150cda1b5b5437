"""Data-driven descriptor realizations from Hermite transfer samples.

From samples (s_i, F(s_i), F'(s_i)) two divided-difference matrices are
assembled: the basic one from values and the shifted one from s*F values,
with derivative data on the diagonals.  When the joint rank condition

    rank(s_i L - Ls) = rank [L Ls] = rank [L; Ls]  for all i

holds, truncating the SVD of a nonsingular pivot combination s_p L - Ls at
the numerical rank yields a descriptor realization that interpolates the
data.  Here the machinery runs on samples of the reduction error recycled
from the shift iteration log, giving a cheap surrogate of the error system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as spla

from .errors import DimensionMismatch, DuplicatePoints, SingularSurrogatePencil
from .statespace import Realization, TransferSample

_MERGE_GAP = 1e-12


def dedupe_samples(samples, rel_gap: float = _MERGE_GAP):
    """Drop later samples whose points (nearly) repeat earlier ones."""
    kept = []
    for smp in samples:
        s = complex(smp.point if hasattr(smp, "point") else smp[0])
        dup = any(
            abs(s - complex(k.point)) < rel_gap * (1.0 + abs(s)) for k in kept
        )
        if not dup:
            kept.append(
                smp
                if isinstance(smp, TransferSample)
                else TransferSample(*(complex(x) for x in smp))
            )
    return kept


@dataclass(eq=False)
class LoewnerPencil:
    """Divided-difference pencil plus the SVD of its pivot combination."""

    points: np.ndarray
    L: np.ndarray
    Ls: np.ndarray
    Z: np.ndarray
    singular_values: np.ndarray
    pivot_index: int
    # cached SVD factors of points[pivot_index] * L - Ls
    _Y: np.ndarray = None
    _Xh: np.ndarray = None

    @property
    def size(self):
        return self.points.shape[0]


def build_pencil(samples) -> LoewnerPencil:
    """Assemble the pencil from Hermite samples at distinct points.

    Off-diagonal entries are divided differences of F and of s F(s); the
    diagonals carry F'(s_i) and F(s_i) + s_i F'(s_i).
    """
    samples = [
        smp
        if isinstance(smp, TransferSample)
        else TransferSample(*(complex(x) for x in smp))
        for smp in samples
    ]
    ell = len(samples)
    if ell < 2:
        raise DimensionMismatch("need at least two samples to build a pencil")
    pts = np.array([s.point for s in samples], dtype=complex)
    for i in range(ell):
        for j in range(i + 1, ell):
            if abs(pts[i] - pts[j]) < _MERGE_GAP * (1.0 + abs(pts[i])):
                raise DuplicatePoints(
                    f"sample points {pts[i]} and {pts[j]} nearly coincide"
                )
    vals = np.array([s.value for s in samples], dtype=complex)
    ders = np.array([s.derivative for s in samples], dtype=complex)

    ds = pts[:, None] - pts[None, :]
    np.fill_diagonal(ds, 1.0)  # avoid 0/0; diagonals overwritten below
    L = (vals[:, None] - vals[None, :]) / ds
    sv = pts * vals
    Ls = (sv[:, None] - sv[None, :]) / ds
    np.fill_diagonal(L, ders)
    np.fill_diagonal(Ls, vals + pts * ders)  # product rule on s F(s)

    pivot = _choose_pivot(pts, L, Ls)
    P = pts[pivot] * L - Ls
    Y, sig, Xh = spla.svd(P)
    return LoewnerPencil(
        points=pts,
        L=L,
        Ls=Ls,
        Z=vals,
        singular_values=sig,
        pivot_index=pivot,
        _Y=Y,
        _Xh=Xh,
    )


def _probe_indices(pts):
    order = np.argsort(np.abs(pts), kind="stable")
    return sorted({int(order[0]), int(order[len(order) // 2]), int(order[-1])})


def _choose_pivot(pts, L, Ls):
    """Largest Frobenius norm among three magnitude-spread probes."""
    probes = _probe_indices(pts)
    norms = [np.linalg.norm(pts[i] * L - Ls) for i in probes]
    return probes[int(np.argmax(norms))]


def _numerical_rank(sigmas, tol):
    if sigmas.size == 0 or sigmas[0] == 0.0:
        return 0
    return int(np.count_nonzero(sigmas >= tol * sigmas[0]))


@dataclass(eq=False)
class RankReport:
    numerical_rank: int
    satisfied: bool
    pencil_ranks: list
    row_rank: int
    col_rank: int


def check_rank_condition(
    pencil: LoewnerPencil, tol: float = 1e-10, all_pivots: bool = False
) -> RankReport:
    """Numerical check of the joint rank condition.

    By default the per-point pencils are probed at the three
    magnitude-spread sample points; ``all_pivots`` checks every point.
    """
    pts, L, Ls = pencil.points, pencil.L, pencil.Ls
    idx = range(pencil.size) if all_pivots else _probe_indices(pts)
    pranks = []
    for i in idx:
        sig = spla.svdvals(pts[i] * L - Ls)
        pranks.append(_numerical_rank(sig, tol))
    row = _numerical_rank(spla.svdvals(np.hstack([L, Ls])), tol)
    col = _numerical_rank(spla.svdvals(np.vstack([L, Ls])), tol)
    ranks = set(pranks) | {row, col}
    rank = max(ranks) if ranks else 0
    return RankReport(
        numerical_rank=rank,
        satisfied=(len(ranks) == 1),
        pencil_ranks=pranks,
        row_rank=row,
        col_rank=col,
    )


@dataclass(eq=False)
class Surrogate:
    """Truncated data-driven realization of the sampled function."""

    Ek: np.ndarray
    Ak: np.ndarray
    bk: np.ndarray
    ck: np.ndarray
    order: int
    truncated_tail: np.ndarray
    source_points: np.ndarray

    def realization(self) -> Realization:
        return Realization(self.Ek, self.Ak, self.bk, self.ck, 0.0)

    def eval(self, s) -> complex:
        if self.order == 0:
            return 0j
        M = s * self.Ek - self.Ak
        return complex(self.ck @ np.linalg.solve(M, self.bk))


def extract_surrogate(
    pencil: LoewnerPencil,
    k=None,
    tol: float = 1e-5,
    max_order: int | None = None,
) -> Surrogate:
    """Project the pencil onto its dominant k singular directions.

    ``k=None`` picks the numerical rank at the relative singular-value
    drop ``tol``; ``max_order`` caps it (used for structured systems where
    theory suggests a natural order).
    """
    sig = pencil.singular_values
    if k is None:
        k = _numerical_rank(sig, tol)
    k = int(k)
    if k > pencil.size:
        raise DimensionMismatch(
            f"surrogate order {k} exceeds the sample count {pencil.size}"
        )
    if max_order is not None:
        k = min(k, int(max_order))
    if k == 0:
        return Surrogate(
            Ek=np.zeros((0, 0), dtype=complex),
            Ak=np.zeros((0, 0), dtype=complex),
            bk=np.zeros(0, dtype=complex),
            ck=np.zeros(0, dtype=complex),
            order=0,
            truncated_tail=sig.copy(),
            source_points=pencil.points.copy(),
        )
    Yk = pencil._Y[:, :k]
    Xk = pencil._Xh[:k, :].conj().T
    Ek = -(Yk.conj().T @ pencil.L @ Xk)
    Ak = -(Yk.conj().T @ pencil.Ls @ Xk)
    bk = Yk.conj().T @ pencil.Z
    ck = Xk.T @ pencil.Z
    dg = np.abs(np.diag(spla.lu_factor(Ek, check_finite=False)[0]))
    if dg.size and (dg.max() == 0.0 or dg.min() < 1e-13 * dg.max()):
        raise SingularSurrogatePencil(
            "surrogate descriptor matrix is numerically singular"
        )
    return Surrogate(
        Ek=Ek,
        Ak=Ak,
        bk=bk,
        ck=ck,
        order=k,
        truncated_tail=sig[k:].copy(),
        source_points=pencil.points.copy(),
    )


@dataclass(eq=False)
class SurrogateErrorReport:
    max_deviation: float
    at_point: complex
    deviations: np.ndarray


def surrogate_error_report(surrogate: Surrogate, truth, points) -> SurrogateErrorReport:
    """Compare the surrogate against a callable or system on given points.

    ``truth`` may be anything with an ``eval`` method or a plain callable
    s -> value.
    """
    f = truth.eval if hasattr(truth, "eval") else truth
    pts = np.asarray(points, dtype=complex).reshape(-1)
    devs = np.array([abs(surrogate.eval(s) - f(s)) for s in pts])
    i = int(np.argmax(devs))
    return SurrogateErrorReport(
        max_deviation=float(devs[i]), at_point=complex(pts[i]), deviations=devs
    )
