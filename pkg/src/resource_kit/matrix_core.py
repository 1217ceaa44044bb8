"""Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy`` complex arrays. Composite systems are described
by a tuple of local dimensions ``dims``; the tensor-product index convention
is row-major big-endian, i.e. the basis state ``|i1, i2, ..., iN>`` sits at
flat index ``((i1 * d2 + i2) * d3 + i3) ...`` so the first factor is the
most significant digit. ``np.kron`` already follows this convention.
"""

from functools import reduce

import numpy as np

from .errors import BadSubsystems, NonSquare, NotHermitian, ShapeMismatch

TOL_HERM = 1e-9


def as_matrix(M):
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2:
        raise ShapeMismatch(f"expected a 2-D array, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def _square(M):
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise NonSquare(f"matrix of shape {M.shape} is not square")
    return M


def dagger(M):
    return np.conj(np.swapaxes(M, -1, -2))


def hermitian_residual(M):
    """Largest entry of ``|M - M^dagger|``."""
    M = _square(M)
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(M - M.conj().T)))


def hermitian_eig(M, tol_herm=TOL_HERM):
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(w, V)`` with eigenvalues ``w`` sorted in descending order and
    the matching orthonormal eigenvectors as the columns of ``V``, so that
    ``M == V @ diag(w) @ V^dagger``.
    """
    M = _square(M)
    res = hermitian_residual(M)
    if res > tol_herm:
        raise NotHermitian(f"max |M - M^dagger| = {res:.3e} exceeds {tol_herm:.1e}")
    w, V = np.linalg.eigh((M + M.conj().T) / 2)
    return w[::-1].copy(), V[:, ::-1].copy()


def eigvalsh(M):
    """Eigenvalues of the Hermitian part of ``M``, descending."""
    M = _square(M)
    return np.linalg.eigvalsh((M + M.conj().T) / 2)[::-1]


def trace_norm(M):
    """Trace norm ``Tr sqrt(M^dagger M)``, i.e. the sum of singular values."""
    M = _square(M)
    if M.size == 0:
        return 0.0
    if hermitian_residual(M) < 1e-14 * max(1.0, float(np.max(np.abs(M)))):
        return float(np.sum(np.abs(np.linalg.eigvalsh(M))))
    return float(np.sum(np.linalg.svd(M, compute_uv=False)))


def trace_distance_ok(A, B, eps):
    """True iff ``||A - B||_1 < eps``."""
    A, B = as_matrix(A), as_matrix(B)
    if A.shape != B.shape:
        raise ShapeMismatch(f"shapes {A.shape} and {B.shape} differ")
    return trace_norm(A - B) < eps


def tensor(*ops):
    """Kronecker product of the arguments (first factor most significant)."""
    if not ops:
        return np.ones((1, 1), dtype=complex)
    return reduce(np.kron, [np.asarray(op, dtype=complex) for op in ops])


def check_dims(dims, size):
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise BadSubsystems(f"invalid subsystem dimensions {dims}")
    if int(np.prod(dims)) != size:
        raise BadSubsystems(f"dims {dims} multiply to {int(np.prod(dims))}, matrix has {size}")
    return dims


def partial_trace(M, dims, keep):
    """Trace out every factor of ``dims`` not listed in ``keep``.

    ``keep`` holds 0-based factor indices; the kept factors appear in the
    result in their original order.
    """
    M = _square(M)
    dims = check_dims(dims, M.shape[0])
    n = len(dims)
    keep = sorted({int(k) for k in np.atleast_1d(keep)})
    if any(k < 0 or k >= n for k in keep):
        raise BadSubsystems(f"keep={keep} out of range for {n} factors")
    T = M.reshape(dims + dims)
    # einsum subscripts: row index i_k, column index j_k; traced factors share a letter
    letters = iter("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")
    row = [next(letters) for _ in range(n)]
    col = [row[k] if k not in keep else next(letters) for k in range(n)]
    out = [row[k] for k in keep] + [col[k] for k in keep]
    R = np.einsum("".join(row + col) + "->" + "".join(out), T)
    d = int(np.prod([dims[k] for k in keep])) if keep else 1
    return R.reshape(d, d)


def partial_transpose(M, dims, party):
    """Transpose the tensor factor ``party`` (0-based) and leave the rest."""
    M = _square(M)
    dims = check_dims(dims, M.shape[0])
    n = len(dims)
    if not 0 <= party < n:
        raise BadSubsystems(f"party {party} out of range for {n} factors")
    T = M.reshape(dims + dims)
    T = np.swapaxes(T, party, n + party)
    return T.reshape(M.shape).copy()


def psd_sqrt(M, cutoff=0.0):
    """Square root of a positive semidefinite matrix (negative eigenvalues clipped)."""
    w, V = np.linalg.eigh((M + dagger(M)) / 2)
    w = np.where(w > cutoff, w, 0.0)
    return (V * np.sqrt(w)) @ V.conj().T


def psd_inv_sqrt(M, cutoff=1e-12):
    """Pseudo-inverse square root of a PSD matrix, restricted to its support.

    Eigenvalues below ``cutoff`` times the largest eigenvalue count as zero.
    """
    w, V = np.linalg.eigh((M + dagger(M)) / 2)
    thresh = cutoff * max(float(np.max(w, initial=0.0)), 0.0)
    inv = np.zeros_like(w)
    mask = w > thresh
    inv[mask] = 1.0 / np.sqrt(w[mask])
    return (V * inv) @ V.conj().T


def is_unitary(U, tol=1e-10):
    U = _square(U)
    return float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0])), initial=0.0)) <= tol


def basis_projector(d, i):
    P = np.zeros((d, d), dtype=complex)
    P[i, i] = 1.0
    return P


def ket(d, i):
    v = np.zeros(d, dtype=complex)
    v[i] = 1.0
    return v
