"""Shared builders for the test suite.

Two kinds of inputs are used throughout: seeded synthetic systems from the
package's own generators (stable by construction), and hand-built
pole-residue systems whose transfer functions are known in closed form.
"""

import numpy as np
import pytest

from hinfmor.statespace import LtiSystem
from hinfmor.synthetic import make_synthetic

KINDS = ("generic", "sss", "resonant-chain")


def mixed_system(i, n, storage="auto"):
    """Deterministic system number ``i`` of order ``n``, cycling the kinds."""
    return make_synthetic(KINDS[i % len(KINDS)], n, seed=1000 + i, storage=storage)


def pole_residue_system(poles, residues):
    """Real state-space realization of sum_i residues[i] / (s - poles[i]).

    Complex poles must come as conjugate pairs with conjugate residues,
    listed consecutively (pair first member with positive imaginary part).
    Real 2x2 blocks carry each pair; the transfer function is exact.
    """
    poles = np.asarray(poles, dtype=complex)
    residues = np.asarray(residues, dtype=complex)
    blocks, bs, cs = [], [], []
    i = 0
    while i < poles.size:
        lam, rho = poles[i], residues[i]
        if abs(lam.imag) > 0:
            assert i + 1 < poles.size
            assert abs(poles[i + 1] - lam.conjugate()) < 1e-12 * (1 + abs(lam))
            a, w = lam.real, lam.imag
            blocks.append(np.array([[a, w], [-w, a]]))
            bs.extend([1.0, 0.0])
            cs.extend([2.0 * rho.real, 2.0 * rho.imag])
            i += 2
        else:
            blocks.append(np.array([[lam.real]]))
            bs.append(1.0)
            cs.append(rho.real)
            i += 1
    n = sum(B.shape[0] for B in blocks)
    A = np.zeros((n, n))
    k = 0
    for B in blocks:
        m = B.shape[0]
        A[k : k + m, k : k + m] = B
        k += m
    return LtiSystem(np.eye(n), A, np.array(bs), np.array(cs), 0.0)


def random_rational(rng, m):
    """Random stable order-m rational with distinct poles, d = 0.

    Returns (system, poles, residues); the poles are simple, a mix of real
    modes and conjugate pairs spread over about a decade of magnitudes.
    """
    poles, residues = [], []

    def far_enough(cands):
        return all(
            abs(p - q) > 1e-2 * (1.0 + abs(p)) for p in cands for q in poles
        )

    while len(poles) < m:
        if m - len(poles) >= 2 and rng.uniform() < 0.6:
            a = -np.exp(rng.uniform(np.log(0.3), np.log(3.0)))
            w = np.exp(rng.uniform(np.log(0.3), np.log(3.0)))
            if not far_enough([a + 1j * w, a - 1j * w]):
                continue
            rho = rng.standard_normal() + 1j * rng.standard_normal()
            if abs(rho) < 0.3:  # tiny residue would drop the degree below m
                rho *= 0.3 / abs(rho)
            poles.extend([a + 1j * w, a - 1j * w])
            residues.extend([rho, rho.conjugate()])
        else:
            p = -np.exp(rng.uniform(np.log(0.3), np.log(3.0)))
            if not far_enough([p]):
                continue
            rho = rng.standard_normal()
            if abs(rho) < 0.3:
                rho = 0.3 if rho >= 0 else -0.3
            poles.append(p)
            residues.append(rho)
    poles = np.array(poles, dtype=complex)
    return pole_residue_system(poles, residues), poles, np.array(residues)


@pytest.fixture
def rng():
    return np.random.default_rng(42)
