"""SISO descriptor systems E x' = A x + b u, y = c^T x + d u.

The full-order system is the only object in the toolkit that may be large,
so everything here is built around shifted solves (s*E - A) x = rhs that
never densify a sparse pencil.  Dense O(n^3) spectral operations (poles,
stability) are gated behind a configurable cap.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
import scipy.linalg as spla
import scipy.sparse as sp
import scipy.sparse.linalg as spsla
from scipy.linalg import lapack as _lapack

from .errors import (
    DimensionMismatch,
    DimensionTooLarge,
    SingularMassMatrix,
    SingularShift,
)

# Largest order for which dense eigensolves are attempted by default.
DENSE_EIG_CAP = 5000

# Reciprocal-condition floor below which a factorization counts as singular.
_RCOND_FLOOR = 1e-14


class Realization(NamedTuple):
    """Bare (E, A, b, c, d) realization, real or complex, dense or sparse.

    The unvalidated workhorse passed between norm and assembly routines.
    Transfer function: c^T (s E - A)^{-1} b + d.
    """

    E: object
    A: object
    b: np.ndarray
    c: np.ndarray
    d: complex

    @property
    def n(self):
        return self.b.shape[0]

    def is_sparse(self):
        return sp.issparse(self.E) or sp.issparse(self.A)


def as_realization(sys_like) -> Realization:
    if isinstance(sys_like, Realization):
        return sys_like
    return sys_like.realization()


class _DenseShiftedSolver:
    """LU of a dense shifted pencil M = s*E - A with transpose solves."""

    def __init__(self, M, shift=None):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", spla.LinAlgWarning)
            lu, piv = spla.lu_factor(M, check_finite=False)
        diag = np.abs(np.diag(lu))
        dmax = diag.max() if diag.size else 1.0
        if diag.size and (dmax == 0.0 or diag.min() < _RCOND_FLOOR * dmax):
            raise SingularShift(
                f"shifted pencil is numerically singular at s = {shift}",
                shift=shift,
            )
        self._lu = (lu, piv)
        self._real = not np.iscomplexobj(lu)

    def _solve(self, rhs, trans):
        if self._real and np.iscomplexobj(rhs):
            re = spla.lu_solve(self._lu, rhs.real, trans=trans, check_finite=False)
            im = spla.lu_solve(self._lu, rhs.imag, trans=trans, check_finite=False)
            return re + 1j * im
        return spla.lu_solve(self._lu, rhs, trans=trans, check_finite=False)

    def solve(self, rhs):
        return self._solve(rhs, 0)

    def solve_transpose(self, rhs):
        """Solve M^T x = rhs (plain transpose, no conjugation)."""
        return self._solve(rhs, 1)


class _SparseShiftedSolver:
    """Sparse LU of a shifted pencil; never forms a dense matrix."""

    def __init__(self, M, shift=None):
        try:
            self._lu = spsla.splu(M.tocsc())
        except RuntimeError as exc:  # "Factor is exactly singular"
            raise SingularShift(
                f"shifted pencil is numerically singular at s = {shift}",
                shift=shift,
            ) from exc
        diag = np.abs(self._lu.U.diagonal())
        dmax = diag.max() if diag.size else 1.0
        if diag.size and (dmax == 0.0 or diag.min() < _RCOND_FLOOR * dmax):
            raise SingularShift(
                f"shifted pencil is numerically singular at s = {shift}",
                shift=shift,
            )
        self._real = not np.iscomplexobj(self._lu.U.data)

    def _solve(self, rhs, trans):
        if self._real and np.iscomplexobj(rhs):
            re = self._lu.solve(np.ascontiguousarray(rhs.real), trans=trans)
            im = self._lu.solve(np.ascontiguousarray(rhs.imag), trans=trans)
            return re + 1j * im
        return self._lu.solve(np.asarray(rhs), trans=trans)

    def solve(self, rhs):
        return self._solve(rhs, "N")

    def solve_transpose(self, rhs):
        return self._solve(rhs, "T")


def shifted_solver(E, A, s):
    """Factor (s*E - A) once; complex shifts force complex factorizations."""
    if sp.issparse(E) or sp.issparse(A):
        M = (s * E - A).tocsc()
        return _SparseShiftedSolver(M, shift=s)
    M = s * np.asarray(E) - np.asarray(A)
    return _DenseShiftedSolver(M, shift=s)


def eval_realization(real: Realization, s):
    """Transfer-function value of a bare realization at one point.

    Dense realizations skip the solver wrapper and call the LAPACK LU
    kernels directly; norm sweeps evaluate here tens of thousands of
    times, so per-call overhead matters.  The singularity test (relative
    floor on the U diagonal) is identical to the wrapper's.
    """
    if real.n == 0:
        return complex(real.d)
    if sp.issparse(real.E) or sp.issparse(real.A):
        solver = shifted_solver(real.E, real.A, s)
        return complex(real.c @ solver.solve(real.b) + real.d)
    M = s * np.asarray(real.E) - np.asarray(real.A)
    if np.iscomplexobj(M) or np.iscomplexobj(real.b):
        lu, piv, info = _lapack.zgetrf(np.asarray(M, dtype=complex), overwrite_a=1)
        getrs = _lapack.zgetrs
        rhs = np.asarray(real.b, dtype=complex)
    else:
        lu, piv, info = _lapack.dgetrf(M, overwrite_a=1)
        getrs = _lapack.dgetrs
        rhs = np.asarray(real.b, dtype=float)
    diag = np.abs(np.diag(lu))
    dmax = diag.max() if diag.size else 1.0
    if info > 0 or dmax == 0.0 or diag.min() < _RCOND_FLOOR * dmax:
        raise SingularShift(
            f"shifted pencil is numerically singular at s = {s}", shift=s
        )
    x, info = getrs(lu, piv, rhs)
    return complex(real.c @ x + real.d)


def sweep_realization(real: Realization, points):
    """Values at many points; one factorization per point, order preserved."""
    from ._parallel import parallel_map

    return np.array(parallel_map(lambda s: eval_realization(real, s), points))


@dataclass(eq=False)
class TransferSample:
    """One Hermite sample: the point, H(point) and H'(point)."""

    point: complex
    value: complex
    derivative: complex

    def __iter__(self):
        return iter((self.point, self.value, self.derivative))


@dataclass(eq=False)
class FrequencyGrid:
    """Strictly increasing set of nonnegative frequencies for sampled norms."""

    points: np.ndarray
    spacing: str = "log"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size == 0:
            raise DimensionMismatch("frequency grid must be a nonempty 1-d array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("frequency grid must be finite")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("frequency grid must be strictly increasing")
        self.points = pts

    @classmethod
    def log(cls, lo, hi, num):
        return cls(np.geomspace(lo, hi, num), spacing="log")

    @classmethod
    def linear(cls, lo, hi, num):
        return cls(np.linspace(lo, hi, num), spacing="linear")

    @classmethod
    def default_sampled(cls):
        """500 log-spaced points on [1e-8, 10], the sampled-norm default."""
        return cls.log(1e-8, 10.0, 500)

    def __len__(self):
        return len(self.points)


def _as_vector(v, n, name):
    arr = np.asarray(v).reshape(-1)
    if arr.shape[0] != n:
        raise DimensionMismatch(f"{name} has length {arr.shape[0]}, expected {n}")
    return arr


@dataclass(eq=False, frozen=True)
class LtiSystem:
    """Validated real SISO descriptor system.

    E and A are square real matrices of the same order (dense ndarray or
    scipy.sparse), b and c are length-n real vectors, d a real scalar.
    E must be nonsingular; that is checked once at construction.  Instances
    are frozen: services hand out fresh arrays, never mutate state.
    """

    E: object
    A: object
    b: np.ndarray
    c: np.ndarray
    d: float = 0.0
    storage: str = field(default="dense")

    def __post_init__(self):
        E, A = self.E, self.A
        sparse = sp.issparse(E) or sp.issparse(A)
        if sparse:
            E = E if sp.issparse(E) else sp.csr_array(np.asarray(E, dtype=float))
            A = A if sp.issparse(A) else sp.csr_array(np.asarray(A, dtype=float))
            if np.iscomplexobj(E.data) or np.iscomplexobj(A.data):
                raise ValueError("full-order system matrices must be real")
        else:
            E = np.asarray(E, dtype=None)
            A = np.asarray(A, dtype=None)
            if np.iscomplexobj(E) or np.iscomplexobj(A):
                raise ValueError("full-order system matrices must be real")
            E = E.astype(float, copy=False)
            A = A.astype(float, copy=False)
        if E.shape[0] != E.shape[1] or A.shape != E.shape:
            raise DimensionMismatch(
                f"E and A must be square and equal-shaped, got {E.shape} and {A.shape}"
            )
        n = E.shape[0]
        b = _as_vector(self.b, n, "b")
        c = _as_vector(self.c, n, "c")
        if np.iscomplexobj(b) or np.iscomplexobj(c):
            raise ValueError("b and c must be real")
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b.astype(float, copy=False))
        object.__setattr__(self, "c", c.astype(float, copy=False))
        object.__setattr__(self, "d", float(self.d))
        object.__setattr__(self, "storage", "sparse" if sparse else "dense")
        if n > 0:
            self._check_mass_matrix(E, sparse)

    @staticmethod
    def _check_mass_matrix(E, sparse):
        try:
            if sparse:
                _SparseShiftedSolver(E.tocsc())
            else:
                _DenseShiftedSolver(E)
        except SingularShift as exc:
            raise SingularMassMatrix("descriptor matrix E is singular") from exc

    # ------------------------------------------------------------------
    @property
    def n(self) -> int:
        return self.b.shape[0]

    def realization(self) -> Realization:
        return Realization(self.E, self.A, self.b, self.c, self.d)

    def strictly_proper(self) -> "LtiSystem":
        if self.d == 0.0:
            return self
        return replace(self, d=0.0)

    def shifted_solver(self, s):
        if self.n == 0:
            raise DimensionMismatch("cannot factor the pencil of an order-0 system")
        return shifted_solver(self.E, self.A, s)

    def eval(self, s) -> complex:
        """H(s) = c^T (s E - A)^{-1} b + d."""
        if self.n == 0:
            return complex(self.d)
        solver = self.shifted_solver(s)
        return complex(self.c @ solver.solve(self.b) + self.d)

    def eval_deriv(self, s):
        """Return (H(s), H'(s)) sharing one factorization.

        H'(s) = -c^T (s E - A)^{-1} E (s E - A)^{-1} b; the two solves reuse
        the LU of (s E - A).
        """
        if self.n == 0:
            return complex(self.d), 0.0 + 0.0j
        solver = self.shifted_solver(s)
        v = solver.solve(self.b)
        z = solver.solve(self.E @ v)
        return complex(self.c @ v + self.d), complex(-(self.c @ z))

    def poles(self, max_order: int = DENSE_EIG_CAP) -> np.ndarray:
        """Generalized eigenvalues of (A, E), canonically sorted.

        Dense O(n^3); refuses orders above ``max_order`` so huge sparse
        systems are never densified by accident.
        """
        if self.n > max_order:
            raise DimensionTooLarge(
                f"poles of an order-{self.n} system exceed the dense cap {max_order}"
            )
        if self.n == 0:
            return np.array([], dtype=complex)
        A = self.A.toarray() if sp.issparse(self.A) else np.asarray(self.A)
        E = self.E.toarray() if sp.issparse(self.E) else np.asarray(self.E)
        lam = spla.eig(A, E, right=False)
        return lam[np.lexsort((lam.imag, lam.real))]

    def is_stable(self, margin: float = 0.0, max_order: int = DENSE_EIG_CAP) -> bool:
        """True iff every pole satisfies Re(pole) < -margin."""
        lam = self.poles(max_order=max_order)
        if lam.size == 0:
            return True
        return bool(np.max(lam.real) < -margin)

    def is_state_space_symmetric(self, tol: float = 1e-12) -> bool:
        """Detect the symmetric structure E = E^T > 0, A = A^T, b = c.

        Positive definiteness of E is verified only at dense desk scale;
        for sparse systems symmetry plus b = c is accepted as the marker.
        """
        E, A = self.E, self.A

        def _sym(M):
            if sp.issparse(M):
                R = (M - M.T).tocoo()
                gap = np.max(np.abs(R.data)) if R.nnz else 0.0
                scale = np.max(np.abs(M.data)) if M.nnz else 1.0
            else:
                gap = np.max(np.abs(M - M.T)) if M.size else 0.0
                scale = np.max(np.abs(M)) if M.size else 1.0
            return gap <= tol * max(scale, 1.0)

        if not (_sym(E) and _sym(A)):
            return False
        bscale = max(np.max(np.abs(self.b), initial=0.0), 1.0)
        if np.max(np.abs(self.b - self.c), initial=0.0) > tol * bscale:
            return False
        if self.storage == "dense" and 0 < self.n <= DENSE_EIG_CAP:
            try:
                w = spla.eigvalsh(np.asarray(E))
            except spla.LinAlgError:
                return False
            if w.min() <= 0:
                return False
        return True
