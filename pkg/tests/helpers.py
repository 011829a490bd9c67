"""Random instance generators shared by the test modules."""

import numpy as np

from btwogrid.bnormal import eigenstructure_from, sample_admissible_b
from btwogrid.twogrid import TwoGridConfig, sharp_admissible_b


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_hpd(rng, n, shift=0.5):
    g = crandn(rng, n, n)
    return g @ g.conj().T / n + shift * np.eye(n)


def random_unitary(rng, n):
    q, r = np.linalg.qr(crandn(rng, n, n))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_spectrum(rng, n, repeats=True, real=False):
    """Eigenvalues with some repeated values placed contiguously."""
    lam = []
    while len(lam) < n:
        z = rng.uniform(-2, 2) + (0 if real else 1j * rng.uniform(-2, 2))
        k = int(rng.integers(1, 3)) if repeats else 1
        lam.extend([z] * min(k, n - len(lam)))
    return np.array(lam, dtype=complex)


def random_b_normal(rng, n, repeats=True, real=False, seed=None):
    """(A, admissible B) with A = W diag(lam) W^{-1} B-normal by construction."""
    w = crandn(rng, n, n)
    lam = random_spectrum(rng, n, repeats, real)
    a = w @ np.diag(lam) @ np.linalg.inv(w)
    es = eigenstructure_from(w, lam)
    ab = sample_admissible_b(es, seed if seed is not None else int(rng.integers(2**31)))
    return a, ab.B


def b_normal_config(rng, n, n_c, nu=(1, 1), radius=0.9, seed=0):
    """B-normal two-grid configuration with |1 - lam| < radius, diagonal M^{-1}."""
    w = crandn(rng, n, n)
    lam = 1 + radius * np.sqrt(rng.uniform(0, 1, n)) * np.exp(2j * np.pi * rng.uniform(0, 1, n))
    k = w @ np.diag(lam) @ np.linalg.inv(w)
    m_inv = np.diag(rng.uniform(0.5, 2, n))
    a = np.linalg.solve(m_inv, k)
    ab = sharp_admissible_b(a, m_inv, n_c, seed=seed)
    return TwoGridConfig(a, m_inv, ab.B, nu[0], nu[1], n_c)


def smoothing_triple(rng, n, satisfy):
    """(A, M^{-1}, B) on either side of the smoothing assumption.

    With ``satisfy`` the B-similar form of K = M^{-1}A has a positive definite
    Hermitian part h, and the damping omega = lambda_min(h) / ||K||^2 gives
    ||I - omega K||_B^2 <= 1 - lambda_min(h)^2 / ||K||^2 < 1.  Otherwise K is
    a random matrix whose Hermitian part is indefinite.
    """
    b = random_hpd(rng, n)
    w, q = np.linalg.eigh(b)
    b_half = (q * np.sqrt(w)) @ q.conj().T
    b_mhalf = (q / np.sqrt(w)) @ q.conj().T
    g = crandn(rng, n, n)
    if satisfy:
        h = random_hpd(rng, n, shift=0.1)
        s = g - g.conj().T
        kt = h + s
        omega = np.linalg.eigvalsh(h)[0] / np.linalg.norm(kt, 2) ** 2
        kt = omega * kt
    else:
        kt = 2 * g
    k = b_mhalf @ kt @ b_half
    m_inv = np.diag(rng.uniform(0.5, 2, n)) + 0.1 * crandn(rng, n, n)
    a = np.linalg.solve(m_inv, k)
    return a, m_inv, b
