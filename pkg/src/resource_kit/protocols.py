"""Finite-n simulations of DIO coherence formation and distillation.

Both protocols start from the purification ``sum_x sqrt(p(x)) |x>|zeta_x>``
and the covering partition of the typical set for the CQ channel
``x -> zeta_x``. A covered sequence is addressed as ``(l, c)``: cell l of the
partition, codeword c inside that cell. All same-type sequences have equal
probability, so the cell weight ``w_l`` is spread uniformly over its C_l
codewords.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .channels import QuantumChannel, Report, apply, controlled_unitary_dio, is_dio
from .errors import TooLarge
from .coding import covering_partition, cq_from_state, decoder_dilation, gram
from .matrix_core import trace_norm
from .monotones import rel_entropy_coherence
from .rand import as_rng
from .states import check_density

EXACT_LIMIT = 1024
EXPLICIT_LIMIT = 10 ** 7
DILATION_LIMIT = 4096
CSV_COLUMNS = ("n", "rate", "fidelity_or_distance", "epsilon", "delta", "tau_slack", "seed")


@dataclass
class SimulationReport:
    protocol: str
    n: int
    rate: float
    fidelity_or_distance: float
    epsilon: float
    delta: float
    tau_slack: float
    label_weights: list
    seed: int
    details: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        d["version"] = __version__
        return d

    def csv_row(self):
        return [getattr(self, k) for k in CSV_COLUMNS]


def _covering(rho, n, epsilon, delta, partition):
    rho = check_density(rho)
    W = cq_from_state(rho)
    if partition is None:
        partition = covering_partition(W, n, epsilon, delta)
    return rho, W, partition


def _common(partition, rho):
    return {
        "L": partition.L,
        "cells": len(partition.cells),
        "cell_sizes": [c.size for c in partition.cells],
        "coverage": partition.coverage,
        "coverage_ok": partition.coverage_ok,
        "typical_size": len(partition.typical),
        "typical_mass": partition.typical.total_probability,
        "entropy": partition.entropy,
        "holevo": partition.holevo,
        "c_r": rel_entropy_coherence(rho),
        "covering_rate": partition.rate,
        "max_code_error": max(c.max_error for c in partition.cells),
    }


# ------------------------------------------------------------- formation


@dataclass
class CellDilation:
    """Decoder dilation of one cell and its ``chi`` vectors in frame coordinates.

    ``frame`` holds the codeword factors in the cell's support frame (D x C);
    ``chi[:, c]`` is ``W_l^dagger (zeta_c (x) |c+1>)`` with index ``beta*(C+1)+k``;
    ancilla value 0 belongs to the remainder element of the POVM.
    """

    frame: np.ndarray
    unitary: np.ndarray
    chi: np.ndarray

    @property
    def size(self):
        return self.frame.shape[1]

    @property
    def anc_dim(self):
        return self.size + 1

    def tagged(self, c, tag):
        v = np.zeros(self.unitary.shape[0], dtype=complex)
        v[np.arange(self.frame.shape[0]) * self.anc_dim + tag] = self.frame[:, c]
        return v


def cell_dilations(partition):
    """Dense dilation per cell; each unitary has dimension ``D (C + 1)``."""
    size = max(c.pgm.frame_dim * (c.size + 1) for c in partition.cells)
    if size > DILATION_LIMIT:
        raise TooLarge(size, DILATION_LIMIT, "decoder dilation")
    out = []
    for code in partition.cells:
        X = code.pgm.frame_coords()
        Wl = decoder_dilation(code.pgm.frame_elements())
        cell = CellDilation(X, Wl, None)
        tags = np.stack([cell.tagged(c, c + 1) for c in range(cell.size)], axis=1)
        cell.chi = Wl.conj().T @ tags
        out.append(cell)
    return out


def formation_dio_report(dilations, tol=1e-9):
    """Matrix-unit certificate for ``V(rho) = Tr_B(V rho V^dagger)``.

    ``V(|l><l'|) = |l><l'| (x) A_ll'`` with ``A_ll'[c, c'] ~ <chi_l'c'|chi_lc>``.
    For l != l' the image has no diagonal entries and the dephased input is
    zero, so the residual vanishes identically. For l == l' the residual is
    the trace norm of the off-diagonal part of ``A_ll``.
    """
    worst, best = (0, 0), 0.0
    for l, cell in enumerate(dilations):
        A = (cell.chi.conj().T @ cell.chi).T / cell.size
        r = trace_norm(A - np.diag(np.diag(A)))
        if r > best:
            worst, best = (l, l), r
    return Report(best <= tol, best, tol, worst)


def formation_channel(partition, dilations):
    """Explicit Kraus form of the formation isometry channel (small n only).

    Input is the cell label, output is ``(l, c)`` with c padded to the largest
    cell; the environment is ``B (x) B1`` with B1 padded to the largest
    ``C + 1``.
    """
    W = partition.cells[0].pgm.channel
    n = partition.n
    L = len(dilations)
    Cmax = max(d.size for d in dilations)
    K = Cmax + 1
    env = W.out_dim ** n * K
    if env * L * Cmax * L > EXPLICIT_LIMIT:
        raise ValueError(f"explicit formation channel too large ({env} Kraus operators)")
    V = np.zeros((env, L * Cmax, L), dtype=complex)
    for l, (code, cell) in enumerate(zip(partition.cells, dilations)):
        Q = code.pgm.frame_basis()
        D = Q.shape[1]
        for c in range(cell.size):
            y = cell.chi[:, c].reshape(D, cell.anc_dim)
            full = np.zeros((Q.shape[0], K), dtype=complex)
            full[:, :cell.anc_dim] = Q @ y
            V[:, l * Cmax + c, l] = full.reshape(-1) / np.sqrt(cell.size)
    # Kraus operator beta is <beta| V, i.e. K_beta[(l,c), l] = <beta|chi_lc>/sqrt(C_l)
    return QuantumChannel(V)


def _purified_overlap(partition, dilations):
    """``<T|Out>`` between the typical purification and the protocol output."""
    total = 0.0
    for code, cell in zip(partition.cells, dilations):
        s = sum(np.vdot(cell.tagged(c, 0), cell.chi[:, c]) for c in range(cell.size))
        total += code.probability / cell.size * s
    return complex(total)


def _exact_distance(partition, dilations):
    """Trace norm between the protocol output and rho^{(x)n} on the typical support."""
    W = partition.cells[0].pgm.channel
    typ = partition.typical
    index = {tuple(u): i for i, u in enumerate(typ.sequences.tolist())}
    cov_rows = []
    for code in partition.cells:
        cov_rows.extend(index[tuple(u)] for u in code.codewords.tolist())
    cov_rows = np.array(cov_rows)
    covered = typ.sequences[cov_rows]
    Gamma = gram(W, covered, covered)  # <zeta_a|zeta_b> over covered sequences
    N = len(covered)
    K = max(d.anc_dim for d in dilations)
    # chi_x = sum_{a,k} Z_k[a, x] |zeta_a>|k> with Z_k block diagonal over cells
    blocks = []
    for code, cell in zip(partition.cells, dilations):
        pgm = code.pgm
        coeff = pgm.frame_vecs / np.sqrt(pgm.frame_eigs)  # Q = A coeff
        y = cell.chi.reshape(pgm.frame_dim, cell.anc_dim, cell.size)
        blocks.append(np.einsum("ab,bkc->kac", coeff, y))
    out_gram = np.zeros((N, N), dtype=complex)
    for k in range(K):
        Zk = np.zeros((N, N), dtype=complex)
        start = 0
        for blk in blocks:
            C = blk.shape[2]
            if k < blk.shape[0]:
                Zk[start:start + C, start:start + C] = blk[k]
            start += C
        out_gram += Zk.conj().T @ Gamma @ Zk
    sq = np.sqrt(typ.probs)
    target = sq[:, None] * gram(W, typ.sequences, typ.sequences).T * sq[None, :]
    output = np.zeros_like(target)
    sc = sq[cov_rows]
    output[np.ix_(cov_rows, cov_rows)] = sc[:, None] * out_gram.T * sc[None, :]
    return trace_norm(output - target)


def simulate_formation(rho, n, epsilon, delta, seed=0, partition=None, dio_tol=1e-9):
    """Formation of ``rho^{(x)n}`` from the cell-label state by the isometry channel.

    The reported distance is the trace norm between the channel output and
    ``rho^{(x)n}`` restricted to the typical support. It is exact when the
    typical set has at most ``EXACT_LIMIT`` members; otherwise the trace
    norm of the difference of the two purifications is reported, which upper
    bounds it.
    """
    rho, W, partition = _covering(rho, n, epsilon, delta, partition)
    dil = cell_dilations(partition)
    dio = formation_dio_report(dil, dio_tol)
    ortho = max(float(np.max(np.abs(d.chi.conj().T @ d.chi - np.eye(d.size)))) for d in dil)
    a = partition.typical.total_probability
    b = partition.coverage
    ov = _purified_overlap(partition, dil)
    bound = float(np.sqrt(max((a + b) ** 2 - 4 * abs(ov) ** 2, 0.0)))
    details = _common(partition, rho)
    details.update({"dio": dio.to_dict(), "chi_orthonormality": ortho, "distance_bound": bound,
                    "dilation_unitarity": max(float(np.max(np.abs(d.unitary.conj().T @ d.unitary
                                                                   - np.eye(len(d.unitary)))))
                                              for d in dil)})
    if len(partition.typical) <= EXACT_LIMIT:
        distance = _exact_distance(partition, dil)
        details["distance_method"] = "exact"
    else:
        distance = bound
        details["distance_method"] = "purified_bound"
    details["distance_exact"] = distance if details["distance_method"] == "exact" else None
    return SimulationReport("formation", n, partition.rate, float(distance), float(epsilon),
                            float(delta), partition.tau_slack,
                            [c.probability for c in partition.cells], int(seed), details)


# ----------------------------------------------------------- distillation


def _alignment(W, ref, cw, S):
    """Unitary on A3 maximising ``Re <Psi_ref| (U (x) I) |Psi>`` (polar factor).

    ``Psi = sum_s |s>|zeta_s>`` for the codewords ``cw``; rows and columns
    beyond a cell's size are zero padding.
    """
    G = np.zeros((S, S), dtype=complex)
    G[:len(ref), :len(cw)] = gram(W, ref, cw)  # G[s', s] = <zeta_ref,s'|zeta_s>
    P, _, Qh = np.linalg.svd(G.T)
    return Qh.conj().T @ P.conj().T


def _group_fidelity(W, cells, Us, S):
    """Fidelity of the A2 register with the maximally coherent state."""
    M = len(cells)
    N = sum(len(c) for c in cells)
    seqs = np.concatenate(cells)
    owner = np.concatenate([[m] * len(c) for m, c in enumerate(cells)])
    slot = np.concatenate([np.arange(len(c)) for c in cells])
    # v_t[(m, s)] = U_m[t, s]; F = sum_t <v_t|Gamma|v_t> / (M N)
    Ustack = np.stack(Us)
    V = Ustack[owner, :, slot]  # N x S
    acc = 0.0
    for lo in range(0, N, 512):
        G = gram(W, seqs[lo:lo + 512], seqs)
        acc += float(np.real(np.sum(V[lo:lo + 512].conj() * (G @ V))))
    return acc / (M * N)


def _rho_a2a3(W, cells, S):
    """Conditional A2 (x) A3 state ``Tr_B |Psi_q><Psi_q|`` before the controlled unitary."""
    M = len(cells)
    dim = M * S
    seqs = np.concatenate(cells)
    idx = np.concatenate([m * S + np.arange(len(c)) for m, c in enumerate(cells)])
    G = gram(W, seqs, seqs)
    rho = np.zeros((dim, dim), dtype=complex)
    rho[np.ix_(idx, idx)] = G.T / len(seqs)
    return rho


def simulate_distillation(rho, n, epsilon, delta, seed=0, partition=None, dio_tol=1e-9,
                          channel_limit=4096):
    """Distillation towards the maximally coherent state.

    Cells of the covering are grouped by type q. Inside a group, cell m is
    the A2 label and the codeword index s is the A3 label. The unitary for
    cell m aligns its codeword state with the group's first cell (polar
    factor of the cross Gram matrix), and the channel
    ``Tr_A3(W . W^dagger)`` with ``W = sum_m |m><m| (x) U_m`` acts on A2A3.

    The headline fidelity and rate are expectations over the A1 outcome q
    (the residual outcome contributes zero to both); the outcome drawn with
    ``seed`` is reported alongside.
    """
    rho, W, partition = _covering(rho, n, epsilon, delta, partition)
    groups = {}
    for code in partition.cells:
        key = tuple(np.bincount(code.codewords[0], minlength=W.alphabet_size).tolist())
        groups.setdefault(key, []).append(code)
    outcomes = []
    worst = None
    for key, codes in groups.items():
        cells = [c.codewords for c in codes]
        M = len(cells)
        S = max(len(c) for c in cells)
        Us = [_alignment(W, cells[0], c, S) for c in cells]
        fid = 1.0 if M == 1 else _group_fidelity(W, cells, Us, S)
        ch = controlled_unitary_dio(Us)
        rep = is_dio(ch, dio_tol)
        if worst is None or rep.max_residual > worst.max_residual:
            worst = rep
        item = {"type": list(key), "weight": sum(c.probability for c in codes), "M": M, "S": S,
                "fidelity": fid, "rate": float(np.log2(M) / n), "dio": rep.to_dict()}
        if M * S <= channel_limit and M > 1:
            out = apply(ch, _rho_a2a3(W, cells, S))
            item["fidelity_via_channel"] = float(np.real(np.sum(out)) / M)
        outcomes.append(item)
    weights = np.array([o["weight"] for o in outcomes])
    residual = max(0.0, 1.0 - float(weights.sum()))
    rng = as_rng(seed)
    pick = int(rng.choice(len(outcomes) + 1, p=np.append(weights, residual) / (weights.sum() + residual)))
    sampled = outcomes[pick] if pick < len(outcomes) else None
    fidelity = float(sum(o["weight"] * o["fidelity"] for o in outcomes))
    rate = float(sum(o["weight"] * o["rate"] for o in outcomes))
    details = _common(partition, rho)
    details.update({
        "outcomes": outcomes,
        "residual_weight": residual,
        "dio": worst.to_dict(),
        "sampled_outcome": None if sampled is None else sampled["type"],
        "sampled_rate": 0.0 if sampled is None else sampled["rate"],
        "sampled_fidelity": 0.0 if sampled is None else sampled["fidelity"],
        "conditional_fidelity": fidelity / max(float(weights.sum()), 1e-300),
    })
    return SimulationReport("distillation", n, rate, fidelity, float(epsilon), float(delta),
                            partition.tau_slack, weights.tolist(), int(seed), details)
