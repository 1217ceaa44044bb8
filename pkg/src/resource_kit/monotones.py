"""Entropies and resource monotones. All logarithms are base 2 (bits)."""

import numpy as np

from .errors import BadAlpha, NotADistribution, NotPure
from .matrix_core import as_matrix, check_dims, eigvalsh, partial_trace, partial_transpose, trace_norm
from .states import dephase

ENTROPY_CUTOFF = 1e-12
SCHMIDT_CUTOFF = 1e-10
RENYI_GRID = (0.0, 0.25, 0.5, 1.0, 2.0, 4.0, np.inf)


def _entropy_of(values, cutoff):
    v = np.asarray(values, dtype=float)
    v = v[v > cutoff]
    h = float(-np.sum(v * np.log2(v)))
    return 0.0 if h == 0 else h


def shannon(p, tol=1e-9):
    """Shannon entropy in bits with ``0 log 0 = 0``."""
    p = np.asarray(p, dtype=float).ravel()
    if p.size == 0 or np.any(p < -tol) or abs(p.sum() - 1) > tol:
        raise NotADistribution(f"not a probability distribution (sum={p.sum():.12g})")
    return _entropy_of(p, 0.0)


def vn_entropy(rho):
    """von Neumann entropy; eigenvalues at or below 1e-12 are dropped."""
    return _entropy_of(eigvalsh(rho), ENTROPY_CUTOFF)


def rel_entropy_coherence(rho):
    """Relative entropy of coherence ``S(Delta(rho)) - S(rho)``."""
    rho = as_matrix(rho)
    return _entropy_of(np.real(np.diag(rho)), ENTROPY_CUTOFF) - vn_entropy(rho)


def l1_coherence(rho):
    """Sum of the moduli of the off-diagonal entries."""
    rho = as_matrix(rho)
    return float(np.sum(np.abs(rho)) - np.sum(np.abs(np.diag(rho))))


def negativity(rho, dims):
    """``(||rho^{T_B}||_1 - 1) / 2`` with the transpose on the second factor."""
    rho = as_matrix(rho)
    dims = check_dims(dims, rho.shape[0])
    if len(dims) != 2:
        raise ValueError(f"negativity needs a bipartite split, got dims {dims}")
    return (trace_norm(partial_transpose(rho, dims, 1)) - 1) / 2


def schmidt_spectrum(psi, dims, cutoff=SCHMIDT_CUTOFF):
    """Squared Schmidt coefficients of a pure bipartite state.

    ``psi`` may be a state vector or a rank-one density matrix. Values below
    ``cutoff`` times the largest are discarded.
    """
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim == 2:
        lam = eigvalsh(psi)
        if lam[0] < 1 - 1e-9:
            raise NotPure(f"largest eigenvalue {lam[0]:.12f} < 1 - 1e-9")
        dims = check_dims(dims, psi.shape[0])
        lam = eigvalsh(partial_trace(psi, dims, [0]))
    else:
        dims = check_dims(dims, psi.size)
        s = np.linalg.svd(psi.reshape(dims[0], -1), compute_uv=False)
        lam = s ** 2 / np.sum(s ** 2)
    lam = np.clip(lam, 0, None)
    return np.sort(lam[lam > cutoff * lam.max()])[::-1]


def renyi_from_spectrum(lam, alpha):
    lam = np.asarray(lam, dtype=float)
    if alpha < 0 or np.isnan(alpha):
        raise BadAlpha(f"alpha must lie in [0, inf], got {alpha}")
    if alpha == 0:
        return float(np.log2(len(lam)))
    if alpha == 1:
        return _entropy_of(lam, 0.0)
    if np.isinf(alpha):
        return float(-np.log2(lam.max()))
    return float(np.log2(np.sum(lam ** alpha)) / (1 - alpha))


def renyi_entanglement(psi, dims, alpha):
    """Renyi alpha-entropy of entanglement of a pure bipartite state.

    ``alpha = 0`` gives log of the Schmidt rank, ``alpha = 1`` the entropy
    of entanglement, ``alpha = inf`` the min-entropy; the limits are
    evaluated by their closed forms.
    """
    if alpha < 0 or np.isnan(alpha):
        raise BadAlpha(f"alpha must lie in [0, inf], got {alpha}")
    return renyi_from_spectrum(schmidt_spectrum(psi, dims), alpha)


def mc_distillable(mc):
    """``h({c_ii}) - S(rho_MC)`` for a bipartite MC state."""
    if mc.parties != 2:
        raise ValueError("mc_distillable is defined for bipartite MC states")
    return _entropy_of(np.real(np.diag(mc.coeff)), ENTROPY_CUTOFF) - vn_entropy(mc.expand())


def dephased_purity_gap(rho):
    """``Tr(rho^2) - Tr(Delta(rho)^2)``, nonnegative for every state."""
    rho = as_matrix(rho)
    D = dephase(rho)
    return float(np.real(np.trace(rho @ rho) - np.trace(D @ D)))


MEASURES = {
    "cr": (rel_entropy_coherence, "bits"),
    "l1": (l1_coherence, "dimensionless"),
    "entropy": (vn_entropy, "bits"),
}
