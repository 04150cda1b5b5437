"""Seeded synthetic test systems: symmetric, generic and resonant.

Three families, all stable by construction (no eigensolve needed, which
keeps generation cheap and deterministic at any order):

* "sss": E symmetric positive definite tridiagonal, A symmetric negative
  definite tridiagonal with a log-spread diagonal scaling, c = b.  The
  structured family on which the error-surrogate order settles at 2r + 1.
* "generic": A orthogonally similar to a stable block triangular form with
  random complex pairs and real modes, E = I.
* "resonant-chain": a chain of lightly damped second-order sections with
  log-spaced natural frequencies, giving a peaky gain curve.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .statespace import LtiSystem

_SPARSE_AUTO = 1000


def _spd_tridiagonal(rng, n, spread=None):
    """Diagonally dominant symmetric tridiagonal, optionally log-scaled."""
    diag = 2.0 + rng.uniform(0.0, 1.0, n)
    off = rng.uniform(-0.9, 0.9, n - 1) if n > 1 else np.zeros(0)
    if spread is not None:
        scale = np.sqrt(np.geomspace(spread[0], spread[1], n))
        diag = diag * scale * scale
        off = off * scale[:-1] * scale[1:]
    return diag, off

def _tridiag(diag, off, sparse):
    n = diag.size
    if sparse:
        return sp.diags_array(
            [off, diag, off], offsets=[-1, 0, 1], shape=(n, n), format="csr"
        )
    M = np.diag(diag)
    if n > 1:
        M += np.diag(off, 1) + np.diag(off, -1)
    return M


def _make_sss(rng, n, sparse):
    # two decades of mode spread: rich enough for honest reduction tests,
    # tame enough that the error pencil keeps a clean low-rank cutoff
    ediag, eoff = _spd_tridiagonal(rng, n)
    adiag, aoff = _spd_tridiagonal(rng, n, spread=(1e-1, 1e1))
    E = _tridiag(ediag, eoff, sparse)
    A = _tridiag(-adiag, -aoff, sparse)
    b = rng.standard_normal(n)
    return LtiSystem(E, A, b, b.copy(), 0.0)


def _make_generic(rng, n, sparse):
    # stable quasi-triangular core: 2x2 blocks for complex pairs, then an
    # orthogonal similarity so nothing about the construction is visible
    T = np.zeros((n, n))
    pair_heads = []
    i = 0
    while i < n:
        rate = -np.exp(rng.uniform(np.log(1e-2), np.log(1e2)))
        if i + 1 < n and rng.uniform() < 0.5:
            freq = np.exp(rng.uniform(np.log(1e-2), np.log(1e2)))
            T[i, i] = T[i + 1, i + 1] = rate
            T[i, i + 1] = freq
            T[i + 1, i] = -freq
            pair_heads.append(i)
            i += 2
        else:
            T[i, i] = rate
            i += 1
    # couple only above the block diagonal; touching the inside of a 2x2
    # rotation block would move its eigenvalues (possibly across the axis)
    allowed = np.triu(np.ones((n, n), dtype=bool), 1)
    for i in pair_heads:
        allowed[i, i + 1] = False
    idx = np.nonzero(allowed)
    mask = rng.uniform(size=idx[0].size) < 0.3
    T[idx[0][mask], idx[1][mask]] += 0.3 * rng.standard_normal(int(mask.sum()))
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    A = Q @ T @ Q.T
    E = np.eye(n)
    if sparse:
        A = sp.csr_array(A)
        E = sp.eye_array(n, format="csr")
    return LtiSystem(E, A, rng.standard_normal(n), rng.standard_normal(n), 0.0)


def _make_resonant_chain(rng, n, sparse):
    # block tridiagonal, so assemble from its three diagonals and never
    # touch an n-by-n dense array
    diag = np.zeros(n)
    sup = np.zeros(max(n - 1, 0))
    sub = np.zeros(max(n - 1, 0))
    b = np.zeros(n)
    c = np.zeros(n)
    pairs = n // 2
    freqs = np.geomspace(0.1, 10.0, max(pairs, 1))
    i = 0
    for p in range(pairs):
        w = freqs[p] * np.exp(rng.uniform(-0.05, 0.05))
        zeta = rng.uniform(0.02, 0.2)
        sup[i] = w
        sub[i] = -w
        diag[i + 1] = -2.0 * zeta * w
        b[i + 1] = rng.standard_normal()
        c[i] = rng.standard_normal()
        i += 2
    if i < n:  # odd order: one overdamped real mode
        diag[i] = -np.exp(rng.uniform(np.log(0.1), np.log(10.0)))
        b[i] = rng.standard_normal()
        c[i] = rng.standard_normal()
    if sparse:
        A = sp.diags_array(
            [sub, diag, sup], offsets=[-1, 0, 1], shape=(n, n), format="csr"
        )
        E = sp.eye_array(n, format="csr")
    else:
        A = np.diag(diag)
        if n > 1:
            A += np.diag(sup, 1) + np.diag(sub, -1)
        E = np.eye(n)
    return LtiSystem(E, A, b, c, 0.0)


_KINDS = {
    "sss": _make_sss,
    "generic": _make_generic,
    "resonant-chain": _make_resonant_chain,
}


def make_synthetic(kind: str, n: int, seed: int = 0, storage: str = "auto") -> LtiSystem:
    """Deterministic synthetic system of the requested kind and order."""
    if kind not in _KINDS:
        raise ValueError(f"unknown synthetic kind {kind!r}; choose from {sorted(_KINDS)}")
    if n < 1:
        raise ValueError("order must be positive")
    if storage not in ("auto", "dense", "sparse"):
        raise ValueError(f"unknown storage policy {storage!r}")
    sparse = storage == "sparse" or (storage == "auto" and n > _SPARSE_AUTO)
    rng = np.random.default_rng(seed)
    return _KINDS[kind](rng, n, sparse)
