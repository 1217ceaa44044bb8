"""Density matrices, dephasing, and maximally correlated (MC) states.

The incoherent basis of every factor is the computational basis. Other
bases are passed explicitly as unitary matrices whose columns are the basis
vectors.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BadDimension, DimMismatch, InvalidState
from .matrix_core import as_matrix, check_dims, hermitian_eig, hermitian_residual, tensor

TOL_STATE = 1e-9
TOL_BASIS = 1e-10


def state_violations(rho):
    """Magnitudes of the three density-matrix invariant violations."""
    rho = as_matrix(rho)
    herm = hermitian_residual(rho)
    w = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    return {
        "hermitian": herm,
        "positivity": max(0.0, -float(w[0])) if w.size else 0.0,
        "trace": abs(float(np.trace(rho).real) - 1.0),
    }


def check_density(rho, tol=TOL_STATE):
    """Return ``rho`` as a complex array or raise InvalidState naming the violation."""
    rho = as_matrix(rho)
    if rho.shape[0] != rho.shape[1]:
        raise InvalidState(f"density matrix must be square, got {rho.shape}")
    for name, mag in state_violations(rho).items():
        if mag > tol:
            raise InvalidState(f"{name} invariant violated by {mag:.3e} (tol {tol:.1e})")
    return rho


def is_density(rho, tol=TOL_STATE):
    try:
        check_density(rho, tol)
    except (InvalidState, ValueError):
        return False
    return True


def check_basis(B, tol=TOL_BASIS):
    B = as_matrix(B)
    err = float(np.max(np.abs(B.conj().T @ B - np.eye(B.shape[1]))))
    if err > tol:
        raise DimMismatch(f"basis vectors not orthonormal (error {err:.2e})")
    return B


def pure(psi):
    psi = np.asarray(psi, dtype=complex).ravel()
    return np.outer(psi, psi.conj())


def computational(d):
    return np.eye(d, dtype=complex)


def dephase(rho, basis=None):
    """Pinch ``rho`` to its diagonal in ``basis`` (computational when None).

    ``basis`` columns are the basis vectors ``|b_i>``; the result is
    ``sum_i |b_i><b_i| rho |b_i><b_i|``.
    """
    rho = as_matrix(rho)
    if basis is None:
        return np.diag(np.diag(rho))
    B = as_matrix(basis)
    if B.shape[0] != rho.shape[0]:
        raise DimMismatch(f"basis dimension {B.shape[0]} != state dimension {rho.shape[0]}")
    pops = np.einsum("ij,ik,kj->j", B.conj(), rho, B)
    return (B * pops) @ B.conj().T


def max_coherent(d):
    """The maximally coherent pure state ``|phi_d> = d^{-1/2} sum_i |i>``."""
    if d < 2:
        raise BadDimension(f"maximally coherent state needs d >= 2, got {d}")
    return np.full((d, d), 1.0 / d, dtype=complex)


def ghz(d, parties):
    psi = np.zeros(d ** parties, dtype=complex)
    stride = sum(d ** k for k in range(parties))
    psi[np.arange(d) * stride] = 1 / np.sqrt(d)
    return pure(psi)


@dataclass
class MCState:
    """An N-party maximally correlated state.

    ``coeff`` is the d x d coefficient density matrix ``c_ij``; ``bases`` holds
    one matrix per party whose first ``d`` columns are the local vectors
    ``|a_i>, |b_i>, ...``. The represented state is
    ``sum_ij c_ij |a_i b_i ...><a_j b_j ...|``.
    """

    coeff: np.ndarray
    bases: list

    def __post_init__(self):
        self.coeff = check_density(self.coeff)
        if len(self.bases) < 2:
            raise DimMismatch("an MC state needs at least two parties")
        d = self.coeff.shape[0]
        checked = []
        for B in self.bases:
            B = check_basis(B)
            if B.shape[1] < d:
                raise DimMismatch(f"local basis has {B.shape[1]} vectors, need {d}")
            checked.append(B)
        self.bases = checked

    @property
    def parties(self):
        return len(self.bases)

    @property
    def dims(self):
        return tuple(B.shape[0] for B in self.bases)

    def correlated_vectors(self):
        """Columns ``|a_i b_i ...>`` for i < d, as a (prod dims) x d array."""
        d = self.coeff.shape[0]
        cols = [tensor(*[B[:, i:i + 1] for B in self.bases])[:, 0] for i in range(d)]
        return np.stack(cols, axis=1)

    def expand(self):
        K = self.correlated_vectors()
        return K @ self.coeff @ K.conj().T


def mc_embed(rho, parties=2, bases=None):
    """Map ``rho = sum c_ij |i><j|`` to ``sum c_ij |a_i b_i ...><a_j b_j ...|``."""
    rho = check_density(rho)
    d = rho.shape[0]
    if parties < 2:
        raise DimMismatch("an MC state needs at least two parties")
    if bases is None:
        bases = [computational(d)] * parties
    if len(bases) != parties:
        raise DimMismatch(f"{len(bases)} bases supplied for {parties} parties")
    for B in bases:
        if np.asarray(B).shape[0] < d:
            raise DimMismatch(f"basis dimension {np.asarray(B).shape[0]} < {d}")
    return MCState(rho, list(bases))


def mc_recognize(rho, dims, tol=1e-10):
    """Detect MC structure in the canonical basis ``{|ii...i>}``.

    Returns an MCState with computational bases when every entry of ``rho``
    outside ``span{|ii..><jj..|}`` is below ``tol``, otherwise None.
    """
    rho = as_matrix(rho)
    dims = check_dims(dims, rho.shape[0])
    if len(set(dims)) != 1 or len(dims) < 2:
        return None
    d = dims[0]
    stride = sum(d ** k for k in range(len(dims)))
    idx = np.arange(d) * stride
    rest = rho.copy()
    rest[np.ix_(idx, idx)] = 0
    if np.max(np.abs(rest), initial=0.0) > tol:
        return None
    coeff = rho[np.ix_(idx, idx)]
    try:
        return MCState(coeff, [computational(d)] * len(dims))
    except InvalidState:
        return None


@dataclass
class Purification:
    """``|psi> = sum_x sqrt(p(x)) |x>|zeta_x>`` on A (x) E.

    ``zetas[x]`` is the normalized environment vector for symbol x; symbols
    with ``p(x) == 0`` are inactive and carry the first environment basis
    vector as a placeholder.
    """

    p: np.ndarray
    zetas: np.ndarray
    active: np.ndarray

    @property
    def env_dim(self):
        return self.zetas.shape[1]

    def vector(self):
        d = len(self.p)
        psi = np.zeros((d, self.env_dim), dtype=complex)
        psi[:] = np.sqrt(self.p)[:, None] * self.zetas
        return psi.reshape(-1)


def purify(rho, cutoff=1e-12):
    """Purification of ``rho`` organised by incoherent-basis symbol.

    With ``rho = sum_k lam_k |v_k><v_k|`` the environment vector for symbol x
    is ``w_x = (sqrt(lam_k) <x|v_k>)_k``; ``p(x) = <w_x|w_x>`` equals
    ``<x|rho|x>`` and ``zeta_x = w_x / |w_x|``. The environment dimension is
    the number of eigenvalues above ``cutoff`` times the largest one.
    """
    rho = check_density(rho)
    w, V = hermitian_eig(rho)
    keep = w > cutoff * max(w[0], 0.0)
    w, V = w[keep], V[:, keep]
    W = V * np.sqrt(w)
    norms = np.linalg.norm(W, axis=1)
    active = norms ** 2 > 1e-15
    zetas = np.zeros_like(W)
    zetas[active] = W[active] / norms[active, None]
    zetas[~active, 0] = 1.0
    p = np.where(active, norms ** 2, 0.0)
    return Purification(p=p, zetas=zetas, active=active)
