"""Quantum channels and the dephasing-covariant operational classes.

Channels are stored as a stack of Kraus operators of shape
``(r, out_dim, in_dim)``. The Choi matrix uses the unnormalized,
output-first convention ``J = sum_ij E(|i><j|) (x) |i><j|``, so the flat
row index of ``J`` is ``k * in_dim + i`` for output index k and input index i.
"""

from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from .errors import (
    BadDimension,
    DimMismatch,
    FillerInvalid,
    NotUnitary,
    SamplingFailed,
    SpecInvalid,
)
from .matrix_core import as_matrix, is_unitary, tensor, trace_norm
from .rand import as_rng, haar_isometry

TOL_CHANNEL = 1e-9


@dataclass
class QuantumChannel:
    kraus: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        K = np.asarray(self.kraus, dtype=complex)
        if K.ndim == 2:
            K = K[None]
        if K.ndim != 3 or K.shape[0] == 0:
            raise DimMismatch(f"Kraus stack must have shape (r, out, in), got {K.shape}")
        if not np.all(np.isfinite(K)):
            raise ValueError("Kraus operators have non-finite entries")
        self.kraus = K

    @property
    def in_dim(self):
        return self.kraus.shape[2]

    @property
    def out_dim(self):
        return self.kraus.shape[1]

    @property
    def choi(self):
        Kv = self.kraus.reshape(self.kraus.shape[0], -1)
        return Kv.T @ Kv.conj()

    @classmethod
    def from_choi(cls, J, in_dim, out_dim, cutoff=1e-14):
        J = as_matrix(J)
        if J.shape != (in_dim * out_dim,) * 2:
            raise DimMismatch(f"Choi shape {J.shape} does not match dims ({out_dim}, {in_dim})")
        w, V = np.linalg.eigh((J + J.conj().T) / 2)
        keep = w > cutoff * max(float(w[-1]), 1.0)
        if not np.any(keep):
            keep[-1] = True
        K = (V[:, keep] * np.sqrt(np.clip(w[keep], 0, None))).T
        return cls(K.reshape(-1, out_dim, in_dim))

    @classmethod
    def unitary(cls, U):
        return cls(np.asarray(U, dtype=complex)[None])

    @classmethod
    def identity(cls, d):
        return cls(np.eye(d, dtype=complex)[None])

    @classmethod
    def dephasing(cls, d, basis=None):
        B = np.eye(d, dtype=complex) if basis is None else as_matrix(basis)
        return cls(np.stack([np.outer(B[:, i], B[:, i].conj()) for i in range(d)]))

    @classmethod
    def replacement(cls, sigma, in_dim):
        """``rho -> Tr(rho) sigma``."""
        w, V = np.linalg.eigh(as_matrix(sigma))
        ks = []
        for lam, v in zip(w, V.T):
            if lam > 1e-15:
                for i in range(in_dim):
                    K = np.zeros((len(v), in_dim), dtype=complex)
                    K[:, i] = np.sqrt(lam) * v
                    ks.append(K)
        return cls(np.stack(ks))


def apply(ch, rho):
    """``sum_m K_m rho K_m^dagger``."""
    rho = as_matrix(rho)
    if rho.shape != (ch.in_dim, ch.in_dim):
        raise DimMismatch(f"state of shape {rho.shape} fed to channel with input dim {ch.in_dim}")
    K = ch.kraus
    return np.sum(K @ rho @ np.conj(np.swapaxes(K, 1, 2)), axis=0)


def apply_choi(J, rho, in_dim, out_dim):
    """Channel action from its Choi matrix: ``Tr_in[(I (x) rho^T) J]``."""
    T = np.asarray(J).reshape(out_dim, in_dim, out_dim, in_dim)
    return np.einsum("aibj,ji->ab", T, np.asarray(rho))


def compose(second, first):
    """Kraus stack of ``second o first``."""
    K = np.einsum("aij,bjk->abik", second.kraus, first.kraus)
    return QuantumChannel(K.reshape(-1, second.out_dim, first.in_dim))


@dataclass
class Report:
    ok: bool
    max_residual: float
    tol: float
    worst: tuple = None

    def to_dict(self):
        d = {"ok": bool(self.ok), "max_residual": float(self.max_residual), "tol": float(self.tol)}
        if self.worst is not None:
            d["worst"] = [int(x) for x in self.worst]
        return d


def is_cptp(ch, tol=TOL_CHANNEL):
    K = ch.kraus
    completeness = trace_norm(np.einsum("mji,mjk->ik", K.conj(), K) - np.eye(ch.in_dim))
    w_min = float(np.linalg.eigvalsh(ch.choi)[0])
    violation = max(completeness, -w_min, 0.0)
    return Report(violation <= tol, violation, tol)


def _basis(B, d):
    if B is None:
        return np.eye(d, dtype=complex)
    B = as_matrix(B)
    if B.shape != (d, d):
        raise DimMismatch(f"basis of shape {B.shape} for dimension {d}")
    return B


def unit_images(ch, B=None):
    """``out[i, j] = E(|b_i><b_j|)`` for every pair of input basis vectors."""
    B = _basis(B, ch.in_dim)
    KB = np.einsum("mij,jk->mik", ch.kraus, B)
    return np.einsum("mai,mbj->ijab", KB, KB.conj())


def is_dephasing_covariant(ch, B1=None, B2=None, tol=TOL_CHANNEL):
    """Check ``E(Delta_B1(X)) == Delta_B2(E(X))`` on every matrix unit ``|b_i><b_j|``.

    By linearity the d_in^2 matrix units are a complete certificate. The
    residual of a unit is the trace norm of the gap; ``worst`` is the first
    unit (row-major) attaining the maximum. For i != j the gap is the
    diagonal of E(|b_i><b_j|), for i == j it is the off-diagonal part of
    E(|b_i><b_i|), both in B2 coordinates.
    """
    # Kraus operators in the two bases: T[m, k, i] = <b'_k|K_m|b_i>
    T = ch.kraus
    if B1 is not None:
        T = T @ _basis(B1, ch.in_dim)
    if B2 is not None:
        T = _basis(B2, ch.out_dim).conj().T @ T
    d = ch.in_dim
    R = np.zeros((d, d))
    # diagonal entries <k|E(|i><j|)|k> = sum_m T[m,k,i] conj(T[m,k,j]); only
    # columns touched by output row k contribute, which keeps controlled maps cheap
    for k in range(ch.out_dim):
        Y = T[:, k, :]
        cols = np.flatnonzero(np.any(Y != 0, axis=0))
        if cols.size == 0:
            continue
        Yc = Y[:, cols]
        R[np.ix_(cols, cols)] += np.abs(Yc.T @ Yc.conj())
    for i in range(d):
        A = T[:, :, i]
        rows = np.flatnonzero(np.any(A != 0, axis=0))
        if rows.size < 2:
            R[i, i] = 0.0
            continue
        img = A[:, rows].T @ A[:, rows].conj()
        R[i, i] = trace_norm(img - np.diag(np.diag(img)))
    flat = int(np.argmax(R))
    worst = (flat // d, flat % d)
    best = float(R[worst])
    return Report(best <= tol, best, tol, worst)


def is_dio(ch, tol=TOL_CHANNEL):
    return is_dephasing_covariant(ch, None, None, tol)


def is_mio(ch, tol=TOL_CHANNEL):
    """Check that every incoherent input ``|i><i|`` maps to a diagonal output."""
    worst, best = (0,), -1.0
    for i in range(ch.in_dim):
        out = apply(ch, np.diag(np.eye(ch.in_dim)[i]).astype(complex))
        r = trace_norm(out - np.diag(np.diag(out)))
        if r > best:
            worst, best = (i,), r
    return Report(best <= tol, best, tol, worst)


def controlled_unitary_dio(unitaries, tol=1e-10):
    """Channel ``rho -> Tr_3(W rho W^dagger)`` with ``W = sum_m |m><m| (x) U_m``.

    Input space is control (x) target, output is the control register.
    """
    Us = [as_matrix(U) for U in unitaries]
    if not Us:
        raise DimMismatch("need at least one unitary")
    d3 = Us[0].shape[0]
    for U in Us:
        if U.shape != (d3, d3) or not is_unitary(U, tol):
            raise NotUnitary("controlled operations must be unitaries of a common dimension")
    M = len(Us)
    K = np.zeros((d3, M, M * d3), dtype=complex)
    for m, U in enumerate(Us):
        K[:, m, m * d3:(m + 1) * d3] = U
    return QuantumChannel(K)


def _local_frame(U, V, d):
    U = np.eye(d, dtype=complex) if U is None else as_matrix(U)
    V = np.eye(d, dtype=complex) if V is None else as_matrix(V)
    for X in (U, V):
        if X.shape != (d, d):
            raise DimMismatch(f"local unitary of shape {X.shape} for local dimension {d}")
        if not is_unitary(X, 1e-9):
            raise NotUnitary("twirl frame must be unitary")
    return U, V


def _masked(rho, frame, mask):
    rot = frame.conj().T @ rho @ frame
    return frame @ (rot * mask) @ frame.conj().T


def twirl_mask(d, parties=2):
    """Boolean mask of entries surviving the diagonal-unitary twirl.

    Entry ``(i_1..i_N), (k_1..k_N)`` survives iff it is on the diagonal or
    both multi-indices are constant (the MC block).
    """
    idx = np.array(np.unravel_index(np.arange(d ** parties), (d,) * parties)).T
    const = np.all(idx == idx[:, :1], axis=1)
    mask = np.outer(const, const)
    np.fill_diagonal(mask, True)
    return mask


def twirl(rho, U=None, V=None):
    """Closed-form diagonal-unitary twirl of a d (x) d state.

    The MC basis is ``|a_i b_i> = U|i> (x) V|i>``. In the rotated product basis
    ``|a_i b_j>`` the twirl keeps the diagonal and the MC block entries
    ``|a_i b_i><a_k b_k|`` and zeroes everything else.
    """
    rho = as_matrix(rho)
    d = int(round(np.sqrt(rho.shape[0])))
    if d * d != rho.shape[0]:
        raise DimMismatch(f"twirl needs a d x d bipartite state, got dimension {rho.shape[0]}")
    U, V = _local_frame(U, V, d)
    return _masked(rho, np.kron(U, V), twirl_mask(d, 2))


def twirl_multiparty(rho, parties, local_unitaries=None):
    """N-party twirl: keep fully diagonal entries and the N-party MC block."""
    rho = as_matrix(rho)
    d = int(round(rho.shape[0] ** (1.0 / parties)))
    if d ** parties != rho.shape[0]:
        raise DimMismatch(f"dimension {rho.shape[0]} is not d^{parties}")
    if local_unitaries is None:
        local_unitaries = [None] * parties
    if len(local_unitaries) != parties:
        raise DimMismatch(f"{len(local_unitaries)} local unitaries for {parties} parties")
    frame = tensor(*[_local_frame(X, None, d)[0] for X in local_unitaries])
    return _masked(rho, frame, twirl_mask(d, parties))


def mismatched_pairs(d):
    return [(i, j) for i in range(d) for j in range(d) if i != j]


def default_filler(d_in, d_out):
    """Filler on the mismatched block, in mismatched-pair coordinates.

    Equal dimensions relabel ``|a_i b_j> -> |a'_i b'_j>``; otherwise every
    input is sent to the pair (0, 1). Both act classically, hence are
    dephasing covariant.
    """
    n_in, n_out = d_in * (d_in - 1), d_out * (d_out - 1)
    if d_in == d_out:
        return QuantumChannel.identity(n_in)
    target = np.zeros((n_out, n_out), dtype=complex)
    target[0, 0] = 1.0
    return QuantumChannel.replacement(target, n_in)


@dataclass
class MCDCSpec:
    """Ingredients of an MC extension.

    ``in_bases``/``out_bases`` are pairs of local unitaries ``(U, V)`` whose
    columns give ``|a_i>``, ``|b_i>``; None means computational. ``filler``
    acts on the mismatched block in the coordinates of ``mismatched_pairs``.
    """

    dio: QuantumChannel
    in_bases: tuple = (None, None)
    out_bases: tuple = (None, None)
    filler: QuantumChannel = None


def mc_extend(spec, tol=TOL_CHANNEL):
    """Build ``(F (+) E_MC) o tau`` on the full bipartite space.

    The MC block maps by ``|a_i b_i><a_j b_j| -> sum_kl c_{ij,kl} |a'_k b'_k><a'_l b'_l|``
    with ``c_{ij,kl} = <k|E(|i><j|)|l>``: each Kraus operator K of E becomes
    ``sum_ki K_ki |a'_k b'_k><a_i b_i|``. The twirl leaves only the populations
    of the mismatched vectors ``|a_i b_j>``, so the filler enters as
    ``G |out_s><in_s|`` for each filler Kraus G and mismatched input s.
    """
    dio = spec.dio
    d1, d2 = dio.in_dim, dio.out_dim
    if d1 < 2 or d2 < 2:
        raise BadDimension("MC extension needs local dimensions >= 2")
    rep = is_dio(dio, tol)
    if not rep.ok:
        raise SpecInvalid(f"underlying map is not DIO (residual {rep.max_residual:.3e})")
    filler = spec.filler if spec.filler is not None else default_filler(d1, d2)
    if filler.in_dim != d1 * (d1 - 1) or filler.out_dim != d2 * (d2 - 1):
        raise FillerInvalid(
            f"filler maps {filler.in_dim} -> {filler.out_dim}, need "
            f"{d1 * (d1 - 1)} -> {d2 * (d2 - 1)}")
    frep = is_dio(filler, tol)
    if not frep.ok or not is_cptp(filler, tol).ok:
        raise FillerInvalid(f"filler is not a dephasing-covariant channel (residual {frep.max_residual:.3e})")

    U1, V1 = _local_frame(*spec.in_bases, d1)
    U2, V2 = _local_frame(*spec.out_bases, d2)
    F_in, F_out = np.kron(U1, V1), np.kron(U2, V2)
    mc_in = F_in[:, [i * d1 + i for i in range(d1)]]
    mc_out = F_out[:, [k * d2 + k for k in range(d2)]]
    mis_in = F_in[:, [i * d1 + j for i, j in mismatched_pairs(d1)]]
    mis_out = F_out[:, [i * d2 + j for i, j in mismatched_pairs(d2)]]

    kraus = [mc_out @ K @ mc_in.conj().T for K in dio.kraus]
    for G in filler.kraus:
        for s in range(mis_in.shape[1]):
            col = mis_out @ G[:, s]
            if np.linalg.norm(col) > 0:
                kraus.append(np.outer(col, mis_in[:, s].conj()))
    ch = QuantumChannel(np.stack(kraus))
    ch.meta["product_bases"] = (F_in, F_out)
    return ch


def _project_dio_affine(J, d_in, d_out):
    """Orthogonal projection of a Choi matrix onto the DIO + trace-preserving affine set."""
    T = J.reshape(d_out, d_in, d_out, d_in).copy()
    k = np.arange(d_out)
    i = np.arange(d_in)
    # E(|i><j|) for i != j must have zero diagonal
    off = ~np.eye(d_in, dtype=bool)
    diag_blocks = T[k, :, k, :]
    diag_blocks[:, off] = 0
    T[k, :, k, :] = diag_blocks
    # E(|i><i|) must be diagonal
    offk = ~np.eye(d_out, dtype=bool)
    pops = T[:, i, :, i]
    pops[:, offk] = 0
    # trace preservation: sum_k <k|E(|i><i|)|k> = 1
    dg = pops[:, k, k]
    pops[:, k, k] = dg + ((1.0 - dg.sum(axis=1)) / d_out)[:, None]
    T[:, i, :, i] = pops
    return T.reshape(d_out * d_in, d_out * d_in)


def _project_psd(J):
    w, V = np.linalg.eigh((J + J.conj().T) / 2)
    return (V * np.clip(w, 0, None)) @ V.conj().T


def random_dio(d_in, d_out, seed, max_iter=200, tol=TOL_CHANNEL):
    """Sample a DIO channel by alternating projections from a random CPTP map.

    Starts from the Choi matrix of a Haar-random Stinespring isometry and
    alternates between the DIO/trace-preserving affine set and the PSD cone.
    Whatever negativity remains after ``max_iter`` rounds is removed by mixing
    in the completely depolarizing-to-diagonal channel, which keeps the affine
    constraints exact. Iteration data is recorded in ``meta``.
    """
    if d_in < 2 or d_out < 2:
        raise BadDimension("random_dio needs dimensions >= 2")
    rng = as_rng(seed)
    r = d_in * d_out
    Vs = haar_isometry(d_out * r, d_in, rng)
    J = QuantumChannel(Vs.reshape(d_out, r, d_in).transpose(1, 0, 2)).choi
    it = 0
    w_min = -np.inf
    for it in range(1, max_iter + 1):
        J = _project_dio_affine(J, d_in, d_out)
        w_min = float(np.linalg.eigvalsh(J)[0])
        if w_min >= 0:
            break
        J = _project_psd(J)
    mix = 0.0
    if w_min < 1e-13:
        # J0 = I/d_out (x) I has smallest eigenvalue 1/d_out
        gap = 1e-13 - w_min
        mix = gap / (gap + 1.0 / d_out)
        J = (1 - mix) * J + mix * np.eye(d_in * d_out) / d_out
    ch = QuantumChannel.from_choi(J, d_in, d_out)
    ch.meta.update({"seed": seed if isinstance(seed, int) else None, "iterations": it,
                    "max_iter": max_iter, "mix": mix})
    if not (is_dio(ch, tol).ok and is_cptp(ch, tol).ok):
        raise SamplingFailed(f"random_dio({d_in}, {d_out}) failed after {it} iterations")
    return ch


def permutation_matrix(perm):
    d = len(perm)
    P = np.zeros((d, d), dtype=complex)
    P[list(perm), np.arange(d)] = 1.0
    return P


def all_permutations(d):
    return [permutation_matrix(p) for p in permutations(range(d))]

