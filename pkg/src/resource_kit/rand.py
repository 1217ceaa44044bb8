"""Seeded samplers for states, unitaries and isometries.

Every sampler takes ``rng``, which may be a ``numpy.random.Generator`` or
anything accepted by ``numpy.random.default_rng`` (an int seed, ``None``).
"""

import numpy as np


def as_rng(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def ginibre(rows, cols, rng=None):
    rng = as_rng(rng)
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def haar_isometry(rows, cols, rng=None):
    """Haar-random isometry ``V`` with ``V^dagger V = I`` (rows >= cols)."""
    Q, R = np.linalg.qr(ginibre(rows, cols, rng))
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph


def haar_unitary(d, rng=None):
    return haar_isometry(d, d, rng)


def haar_state(d, rng=None):
    v = ginibre(d, 1, rng)[:, 0]
    return v / np.linalg.norm(v)


def random_density(d, rng=None, rank=None):
    """Density matrix ``G G^dagger / Tr`` from a ``d x rank`` Ginibre matrix."""
    G = ginibre(d, d if rank is None else rank, rng)
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_hermitian(d, rng=None):
    G = ginibre(d, d, rng)
    return (G + G.conj().T) / 2


def random_diagonal_unitary(d, rng=None):
    rng = as_rng(rng)
    return np.diag(np.exp(2j * np.pi * rng.random(d)))
