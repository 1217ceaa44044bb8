"""Method of types and classical-quantum channel codes at finite block length.

Outputs of a CQ channel are stored through factors ``A_x`` with
``rho_x = A_x A_x^dagger``. Product outputs on n positions never have to be
materialised: all decoding quantities follow from the Gram matrix of the
factor columns, whose entries are products of single-letter overlaps. For a
family of factors ``A = [A_1 ... A_C]`` with ``G = A^dagger A``

    A^dagger S^{-1/2} A = G^{1/2},    S = A A^dagger,

so the pretty-good measurement success of codeword c is the squared
Frobenius norm of the c-th diagonal block of ``G^{1/2}``.
"""

import os
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from .errors import CompletionFailed, DimMismatch, DomainViolation, EmptyPool, TooLarge
from .matrix_core import as_matrix, eigvalsh, psd_sqrt, trace_norm
from .monotones import shannon, vn_entropy
from .states import check_density, purify, pure

MAX_ENUM = 2 ** 24
DENSE_LIMIT = 4096
GRAM_CUTOFF = 1e-12
TIE_TOL = 1e-12


def enum_limit():
    """Enumeration guard, overridable through ``RESOURCE_KIT_MAX_ENUM``."""
    raw = os.environ.get("RESOURCE_KIT_MAX_ENUM")
    return int(raw) if raw else MAX_ENUM


def guard(size, limit=None):
    limit = enum_limit() if limit is None else limit
    if size > limit:
        raise TooLarge(size, limit)


# ----------------------------------------------------------------- types


def type_of(xn, alphabet_size=None):
    """Empirical distribution of a sequence as exact fractions."""
    xn = [int(a) for a in xn]
    if not xn:
        raise ValueError("type of an empty sequence is undefined")
    k = max(xn) + 1 if alphabet_size is None else alphabet_size
    counts = np.bincount(xn, minlength=k)
    return tuple(Fraction(int(c), len(xn)) for c in counts)


def count_types(n, k):
    """Number of distinct types of length-n sequences over k letters."""
    return comb(n + k - 1, k - 1)


def all_sequences(k, n):
    """Every length-n sequence over ``range(k)`` in lexicographic order."""
    guard(k ** n)
    codes = np.arange(k ** n, dtype=np.int64)
    out = np.empty((k ** n, n), dtype=np.int8)
    for pos in range(n - 1, -1, -1):
        out[:, pos] = codes % k
        codes //= k
    return out


def letter_counts(seqs, k):
    seqs = np.asarray(seqs)
    return np.stack([(seqs == a).sum(axis=1) for a in range(k)], axis=1)


def sequence_probs(seqs, p):
    p = np.asarray(p, dtype=float)
    counts = letter_counts(seqs, len(p))
    logp = np.log(np.where(p > 0, p, 1.0))
    probs = np.exp(counts @ logp)
    dead = np.any(counts[:, p == 0] > 0, axis=1)
    probs[dead] = 0.0
    return probs


@dataclass
class SequenceSet:
    """Sequences (rows) with their i.i.d. probabilities under the source."""

    n: int
    sequences: np.ndarray
    probs: np.ndarray
    alphabet_size: int
    keys: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return len(self.sequences)

    @property
    def total_probability(self):
        return float(np.sum(self.probs))

    def counts(self):
        return letter_counts(self.sequences, self.alphabet_size)

    def type_keys(self):
        """Integer label per sequence, equal labels meaning equal types."""
        if self.keys is None:
            if len(self) == 0:
                self.keys = np.zeros(0, dtype=int)
            else:
                self.keys = np.unique(self.counts(), axis=0, return_inverse=True)[1].ravel()
        return self.keys

    def subset(self, mask_or_idx):
        keys = self.type_keys()[mask_or_idx]
        return SequenceSet(self.n, self.sequences[mask_or_idx], self.probs[mask_or_idx],
                           self.alphabet_size, keys)


def typical_set(p, n, delta):
    """All x^n with ``|N(a|x^n)/n - p(a)| < delta`` for every letter a.

    The inequality is strict; deviations within ``TIE_TOL`` of delta count as
    ties and are excluded, so rounding in p cannot flip membership.
    """
    p = np.asarray(p, dtype=float)
    k = len(p)
    guard(k ** n)
    seqs = all_sequences(k, n)
    counts = letter_counts(seqs, k)
    keep = np.all(np.abs(counts / n - p) < delta - TIE_TOL, axis=1)
    seqs = seqs[keep]
    return SequenceSet(n, seqs, sequence_probs(seqs, p), k)


# ----------------------------------------------------------- CQ channels


@dataclass
class CQChannel:
    """Classical-quantum channel ``x -> outputs[x]`` with source ``p``."""

    outputs: list
    source: np.ndarray
    factors: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.outputs = [check_density(r) for r in self.outputs]
        self.source = np.asarray(self.source, dtype=float)
        if len(self.outputs) != len(self.source):
            raise DimMismatch(f"{len(self.outputs)} outputs for {len(self.source)} source letters")
        shannon(self.source)
        dims = {r.shape[0] for r in self.outputs}
        if len(dims) != 1:
            raise DimMismatch(f"outputs of unequal dimension {sorted(dims)}")
        fs = []
        for r in self.outputs:
            w, V = np.linalg.eigh(r)
            keep = w > GRAM_CUTOFF
            fs.append(V[:, keep] * np.sqrt(w[keep]))
        rank = max(f.shape[1] for f in fs)
        F = np.zeros((len(fs), self.out_dim, rank), dtype=complex)
        for x, f in enumerate(fs):
            F[x, :, :f.shape[1]] = f
        self.factors = F

    @property
    def alphabet_size(self):
        return len(self.source)

    @property
    def out_dim(self):
        return self.outputs[0].shape[0]

    @property
    def rank(self):
        """Common (zero-padded) number of factor columns per letter."""
        return self.factors.shape[2]

    def average(self):
        return sum(px * r for px, r in zip(self.source, self.outputs))

    def letter_overlaps(self):
        """``O[x, y] = A_x^dagger A_y`` (r x r blocks)."""
        return np.einsum("xai,yaj->xyij", self.factors.conj(), self.factors)


def cq_from_state(rho):
    """CQ channel ``x -> |zeta_x><zeta_x|`` from the purification of ``rho``."""
    pur = purify(rho)
    return CQChannel([pure(z) for z in pur.zetas], pur.p)


def mutual_info(W):
    """Holevo quantity ``S(sum_x p(x) rho_x) - sum_x p(x) S(rho_x)``."""
    avg = vn_entropy(W.average())
    return avg - float(sum(px * vn_entropy(r) for px, r in zip(W.source, W.outputs) if px > 0))


def gram(W, X, Y):
    """Gram matrix of product-output factors for sequence lists X and Y.

    Row block a, column block b holds ``A_{x_a}^dagger A_{y_b}`` with the
    product factor ``A_{x^n} = A_{x_1} (x) ... (x) A_{x_n}``; blocks have
    side ``rank ** n``.
    """
    X = np.atleast_2d(X)
    Y = np.atleast_2d(Y)
    O = W.letter_overlaps()
    if W.rank == 1:
        out = np.ones((len(X), len(Y)), dtype=complex)
        O1 = O[:, :, 0, 0]
        for i in range(X.shape[1]):
            out *= O1[X[:, i][:, None], Y[:, i][None, :]]
        return out
    r = W.rank
    n = X.shape[1]
    guard(len(X) * len(Y) * r ** (2 * n), DENSE_LIMIT ** 2)
    T = np.ones((len(X), len(Y), 1, 1), dtype=complex)
    for i in range(n):
        blk = O[np.ix_(X[:, i], Y[:, i])]
        T = np.einsum("abij,abkl->abikjl", T, blk)
        s = T.shape
        T = T.reshape(s[0], s[1], s[2] * s[3], s[4] * s[5])
    R = T.shape[2]
    return T.transpose(0, 2, 1, 3).reshape(len(X) * R, len(Y) * R)


def self_gram(W, X):
    """Diagonal blocks ``A_x^dagger A_x`` for each sequence, shape (N, R, R)."""
    X = np.atleast_2d(X)
    O = W.letter_overlaps()
    T = np.ones((len(X), 1, 1), dtype=complex)
    for i in range(X.shape[1]):
        T = np.einsum("aij,akl->aikjl", T, O[X[:, i], X[:, i]])
        s = T.shape
        T = T.reshape(s[0], s[1] * s[2], s[3] * s[4])
    return T


def product_factor(W, xn):
    """Dense factor ``A_{x^n}`` on the full output space."""
    guard(W.out_dim ** len(xn), DENSE_LIMIT)
    F = np.ones((1, 1), dtype=complex)
    for x in xn:
        F = np.kron(F, W.factors[x])
    return F


# ----------------------------------------------------------------- PGM


def _sqrt_and_frame(G, cutoff=GRAM_CUTOFF):
    w, V = np.linalg.eigh((G + G.conj().T) / 2)
    keep = w > cutoff * max(float(w[-1]), 1e-300)
    w, V = w[keep], V[:, keep]
    sqrtG = (V * np.sqrt(w)) @ V.conj().T
    return sqrtG, w, V


@dataclass
class PrettyGoodMeasurement:
    """PGM for a list of codewords, held in the frame of the output support.

    The support of ``S = sum_c rho_c`` has orthonormal basis ``Q = A V s^{-1/2}``
    where ``G = V diag(s) V^dagger`` on its range. In that frame the codeword
    factors are ``X = diag(s^{1/2}) V^dagger`` and the elements are
    ``Pi_c = Vd_c Vd_c^dagger`` with ``Vd = V^dagger``.
    """

    codewords: np.ndarray
    channel: CQChannel
    gram: np.ndarray
    block: int
    sqrt_gram: np.ndarray = field(repr=False)
    frame_eigs: np.ndarray = field(repr=False)
    frame_vecs: np.ndarray = field(repr=False)

    @property
    def size(self):
        return len(self.codewords)

    @property
    def frame_dim(self):
        return len(self.frame_eigs)

    def _blocks(self):
        b = self.block
        return [slice(c * b, (c + 1) * b) for c in range(self.size)]

    def success(self):
        """``Tr[rho_c Pi_c]`` for every codeword."""
        return np.array([float(np.sum(np.abs(self.sqrt_gram[s, s]) ** 2)) for s in self._blocks()])

    def errors(self):
        return 1.0 - self.success()

    @property
    def max_error(self):
        return float(np.max(self.errors()))

    def frame_coords(self):
        """Columns of every codeword factor in frame coordinates (D x C*block)."""
        return np.sqrt(self.frame_eigs)[:, None] * self.frame_vecs.conj().T

    def frame_elements(self):
        """``[Pi_1, ..., Pi_C]`` as D x D matrices in the support frame."""
        Vd = self.frame_vecs.conj().T
        return [Vd[:, s] @ Vd[:, s].conj().T for s in self._blocks()]

    def frame_basis(self):
        """Orthonormal support basis ``Q`` on the full output space (small n only)."""
        A = np.concatenate([product_factor(self.channel, u) for u in self.codewords], axis=1)
        return A @ (self.frame_vecs / np.sqrt(self.frame_eigs))

    def operators(self):
        """Dense ``[Pi_0, Pi_1, ..., Pi_C]`` on the full output space (small n only)."""
        Q = self.frame_basis()
        ops = [Q @ P @ Q.conj().T for P in self.frame_elements()]
        rest = np.eye(Q.shape[0], dtype=complex) - sum(ops)
        return [rest] + ops


def pgm_from_gram(codewords, W, G, block):
    sqrtG, w, V = _sqrt_and_frame(G)
    return PrettyGoodMeasurement(np.asarray(codewords), W, G, block, sqrtG, w, V)


def pgm_decoder(codewords, W):
    """Pretty-good measurement ``Pi_c = S^{-1/2} rho_c S^{-1/2}`` for the codewords."""
    codewords = np.atleast_2d(np.asarray(codewords))
    if codewords.size == 0:
        raise EmptyPool("PGM needs at least one codeword")
    G = gram(W, codewords, codewords)
    return pgm_from_gram(codewords, W, G, G.shape[0] // len(codewords))


# ---------------------------------------------------------------- codes


@dataclass
class Code:
    """An (n, epsilon) code: same-type codewords plus their PGM decoder."""

    n: int
    codewords: np.ndarray
    probs: np.ndarray
    pgm: PrettyGoodMeasurement
    epsilon: float

    @property
    def size(self):
        return len(self.codewords)

    @property
    def max_error(self):
        return self.pgm.max_error

    @property
    def rate(self):
        return float(np.log2(self.size) / self.n)

    @property
    def probability(self):
        return float(np.sum(self.probs))

    @property
    def povm(self):
        return self.pgm.operators()


def verify_code(code):
    """Recompute the worst decoding error from a fresh Gram matrix."""
    return pgm_decoder(code.codewords, code.pgm.channel).max_error


def _candidate_order(pool):
    keys = pool.type_keys()
    mass = np.bincount(keys, weights=pool.probs, minlength=int(keys.max()) + 1)
    t = int(np.argmax(mass))
    idx = np.flatnonzero(keys == t)
    # descending probability, ties by lexicographic order (pool is sorted)
    return idx[np.argsort(-pool.probs[idx], kind="stable")]


def _max_errors(stack, block):
    """Worst PGM error for each Gram matrix in a (N, D, D) stack."""
    w, V = np.linalg.eigh(stack)
    w = np.where(w > GRAM_CUTOFF * np.maximum(w[:, -1:], 1e-300), w, 0.0)
    if block == 1:
        d = np.einsum("nij,nj,nij->ni", V, np.sqrt(w), V.conj())
        return 1.0 - np.min(np.abs(d) ** 2, axis=1)
    S = np.einsum("nij,nj,nkj->nik", V, np.sqrt(w), V.conj())
    C = stack.shape[1] // block
    S = S.reshape(len(S), C, block, C, block)
    blocks = S[:, np.arange(C), :, np.arange(C), :]  # (C, N, block, block)
    return 1.0 - np.min(np.sum(np.abs(blocks) ** 2, axis=(2, 3)), axis=0)


def build_code(W, n, epsilon, pool, batch=4096):
    """Greedy same-type code inside ``pool``.

    Candidates from the most probable type are visited in descending
    probability (lexicographic on ties). A candidate is kept when the PGM
    recomputed with it still has every error strictly below ``epsilon``;
    otherwise it is skipped and the scan continues. While the code is
    unchanged all pending candidates are tested in one stacked
    eigendecomposition; the first that passes is accepted, which is the same
    outcome as testing them one at a time.
    """
    if len(pool) == 0:
        raise EmptyPool("cannot build a code from an empty pool")
    if pool.n != n:
        raise DimMismatch(f"pool has block length {pool.n}, expected {n}")
    order = _candidate_order(pool)
    seqs = pool.sequences[order]
    G = gram(W, seqs[:1], seqs[:1])
    b = G.shape[0]
    chosen = [0]
    cross = gram(W, seqs, seqs[:1]).reshape(len(seqs), b, b)  # candidate vs accepted
    own = self_gram(W, seqs)
    j = 1
    chunk = 16
    while j < len(seqs):
        stop = min(len(seqs), j + chunk)
        m = stop - j
        D = G.shape[0]
        stack = np.empty((m, D + b, D + b), dtype=complex)
        stack[:, :D, :D] = G
        stack[:, D:, :D] = cross[j:stop]
        stack[:, :D, D:] = np.conj(np.swapaxes(cross[j:stop], 1, 2))
        stack[:, D:, D:] = own[j:stop]
        passed = np.flatnonzero(_max_errors(stack, b) < epsilon)
        if passed.size == 0:
            j = stop
            chunk = min(2 * chunk, batch)
            continue
        chunk = 16
        k = j + int(passed[0])
        chosen.append(k)
        G = stack[passed[0]]
        new = gram(W, seqs, seqs[k:k + 1]).reshape(len(seqs), b, b)
        cross = np.concatenate([cross, new], axis=2)
        j = k + 1
    picked = order[chosen]
    pgm = pgm_from_gram(seqs[chosen], W, G, b)
    return Code(n, pool.sequences[picked], pool.probs[picked], pgm, float(epsilon))


@dataclass
class CoveringPartition:
    """Disjoint same-type codes carved out of the typical set."""

    n: int
    cells: list
    typical: SequenceSet
    uncovered: SequenceSet
    epsilon: float
    delta: float
    entropy: float
    holevo: float

    @property
    def coverage(self):
        return float(sum(c.probability for c in self.cells))

    @property
    def L(self):
        """Cell count plus the empty terminating iteration."""
        return len(self.cells) + 1

    @property
    def rate(self):
        return float(np.log2(self.L) / self.n)

    @property
    def tau_slack(self):
        """Smallest slack making ``rate <= H - I + tau`` hold."""
        return max(0.0, self.rate - (self.entropy - self.holevo))

    @property
    def coverage_ok(self):
        return self.coverage >= 1 - self.epsilon

    def labels(self):
        """``(l, c)`` for every covered sequence, in cell order."""
        return [(l, c) for l, code in enumerate(self.cells) for c in range(code.size)]


def covering_partition(W, n, epsilon, delta):
    """Carve codes from the typical set until its residual mass is at most epsilon/2."""
    typ = typical_set(W.source, n, delta)
    remaining = np.ones(len(typ), dtype=bool)
    index = {tuple(s): i for i, s in enumerate(typ.sequences.tolist())}
    cells = []
    while typ.probs[remaining].sum() > epsilon / 2:
        pool_idx = np.flatnonzero(remaining)
        code = build_code(W, n, epsilon, typ.subset(pool_idx))
        for u in code.codewords.tolist():
            remaining[index[tuple(u)]] = False
        cells.append(code)
    return CoveringPartition(n, cells, typ, typ.subset(remaining), float(epsilon), float(delta),
                             shannon(W.source), mutual_info(W))


def cells_disjoint(partition):
    seen = set()
    for code in partition.cells:
        for u in code.codewords.tolist():
            t = tuple(u)
            if t in seen:
                return False
            seen.add(t)
    return True


# ------------------------------------------------- gentle measurement, dilation


def gentle_check(rho, X, tol=1e-9):
    """Evaluate both sides of ``||rho - sqrt(X) rho sqrt(X)||_1 <= sqrt(8 eps)``."""
    rho = as_matrix(rho)
    X = as_matrix(X)
    if rho.shape != X.shape:
        raise DimMismatch(f"shapes {rho.shape} and {X.shape} differ")
    wr = eigvalsh(rho)
    wx = eigvalsh(X)
    tr = float(np.trace(rho).real)
    if wr[-1] < -tol or tr > 1 + tol:
        raise DomainViolation(f"rho must be positive with trace <= 1 (min eig {wr[-1]:.2e}, trace {tr:.12f})")
    if wx[-1] < -tol or wx[0] > 1 + tol:
        raise DomainViolation(f"X must satisfy 0 <= X <= I (spectrum in [{wx[-1]:.2e}, {wx[0]:.12f}])")
    eps = 1.0 - float(np.trace(rho @ X).real)
    sX = psd_sqrt(X)
    lhs = trace_norm(rho - sX @ rho @ sX)
    bound = float(np.sqrt(8 * max(eps, 0.0)))
    return {"epsilon": eps, "lhs": lhs, "bound": bound, "ok": bool(lhs <= bound + tol)}


def decoder_dilation(elements, tol=1e-9):
    """Unitary ``W`` on ``B (x) B1`` extending ``sum_c sqrt(Pi_c) (x) |c><0|``.

    ``elements`` are ``Pi_1..Pi_C``; the remainder ``Pi_0 = I - sum Pi_c`` is
    added internally, so B1 has dimension C + 1. Index convention is
    ``beta * (C + 1) + c``. The remaining columns come from a complete QR
    factorisation of the isometry.
    """
    if isinstance(elements, Code):
        elements = elements.pgm.frame_elements()
    elements = [as_matrix(P) for P in elements]
    D = elements[0].shape[0]
    K = len(elements) + 1
    rest = np.eye(D, dtype=complex) - sum(elements)
    roots = [psd_sqrt(rest)] + [psd_sqrt(P) for P in elements]
    J = np.zeros((D * K, D), dtype=complex)
    for c, R in enumerate(roots):
        J[c::K, :] = R
    Q, Rm = np.linalg.qr(J, mode="complete")
    iso_err = float(np.max(np.abs(J.conj().T @ J - np.eye(D)), initial=0.0))
    if iso_err > tol:
        raise CompletionFailed(f"POVM elements do not sum to at most I (isometry error {iso_err:.2e})")
    Wm = np.zeros((D * K, D * K), dtype=complex)
    first = np.arange(D) * K
    Wm[:, first] = J
    others = np.setdiff1d(np.arange(D * K), first)
    # orthonormal complement of range(J) from the trailing QR columns
    Wm[:, others] = Q[:, D:]
    err = float(np.max(np.abs(Wm.conj().T @ Wm - np.eye(D * K))))
    if err > tol:
        raise CompletionFailed(f"dilation unitarity error {err:.2e}")
    return Wm

