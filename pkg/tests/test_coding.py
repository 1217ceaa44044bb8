from fractions import Fraction
from itertools import product
from math import comb

import numpy as np
import pytest

from oracles import binomial_window_mass, dense_pgm, rand_state, two_state_pgm_error, typical_bruteforce
from resource_kit.coding import (
    CQChannel,
    all_sequences,
    build_code,
    cells_disjoint,
    count_types,
    covering_partition,
    cq_from_state,
    decoder_dilation,
    gentle_check,
    mutual_info,
    pgm_decoder,
    type_of,
    typical_set,
    verify_code,
)
from resource_kit.errors import DomainViolation, EmptyPool, TooLarge
from resource_kit.monotones import rel_entropy_coherence, shannon, vn_entropy
from resource_kit.rand import random_density
from resource_kit.states import max_coherent, pure


def qubit(a, r):
    return np.array([[a, r], [r, 1 - a]], dtype=complex)


def test_type_of():
    assert type_of((0, 0, 1, 1)) == (Fraction(1, 2), Fraction(1, 2))
    assert type_of((2, 2, 2), 3) == (0, 0, 1)
    rng = np.random.default_rng(0)
    for _ in range(20):
        xn = rng.integers(0, 3, size=int(rng.integers(1, 12)))
        assert sum(type_of(xn, 3)) == 1
    seqs = all_sequences(2, 4)
    types = {type_of(s, 2) for s in seqs}
    assert len(types) == 5 == count_types(4, 2)
    assert len(types) <= (4 + 1) ** 2


def test_all_sequences_is_lexicographic():
    seqs = all_sequences(3, 3)
    assert [tuple(s) for s in seqs] == list(product(range(3), repeat=3))


def test_typical_set_examples():
    T = typical_set([1.0, 0.0], 5, 0.1)
    assert len(T) == 1 and not T.sequences.any()
    assert T.total_probability == pytest.approx(1.0)
    T = typical_set([0.5, 0.5], 2, 0.6)
    assert len(T) == 4 and T.total_probability == pytest.approx(1.0)
    probs = [typical_set([0.7, 0.3], n, 0.12).total_probability for n in (8, 12, 16)]
    assert probs[0] <= probs[1] <= probs[2]
    for n, mass in zip((8, 12, 16), probs):
        assert abs(mass - binomial_window_mass(0.7, n, 0.12)) <= 1e-12


@pytest.mark.xfail(strict=True, reason="exact mass of the n=16, delta=0.12 window is 0.7253")
def test_typical_mass_at_16_reaches_080():
    assert typical_set([0.7, 0.3], 16, 0.12).total_probability >= 0.8


def test_typical_set_matches_bruteforce():
    # the last case has sequences exactly on the boundary, which are excluded
    for p, n, delta in (([0.7, 0.3], 8, 0.15), ([0.2, 0.5, 0.3], 5, 0.25), ([0.6, 0.4], 10, 0.1)):
        T = typical_set(p, n, delta)
        ref = typical_bruteforce(p, n, delta)
        assert [tuple(s) for s in T.sequences] == ref
        ref_mass = sum(np.prod([p[x] for x in xn]) for xn in ref)
        assert abs(T.total_probability - ref_mass) <= 1e-12


def test_typical_set_guard(monkeypatch):
    monkeypatch.setenv("RESOURCE_KIT_MAX_ENUM", "100")
    with pytest.raises(TooLarge) as info:
        typical_set([0.5, 0.5], 7, 0.1)
    assert info.value.size == 128 and info.value.limit == 100


def test_cq_from_state_identity():
    rho = np.diag([0.3, 0.7]).astype(complex)
    W = cq_from_state(rho)
    assert mutual_info(W) == pytest.approx(shannon(W.source), abs=1e-12)
    psi = np.array([0.6, 0.8])
    W = cq_from_state(pure(psi))
    assert mutual_info(W) == pytest.approx(0.0, abs=1e-12)
    assert shannon(W.source) == pytest.approx(rel_entropy_coherence(pure(psi)), abs=1e-12)
    rng = np.random.default_rng(1)
    for d in (2, 3, 4):
        for _ in range(10):
            rho = random_density(d, rng)
            W = cq_from_state(rho)
            assert abs(shannon(W.source) - mutual_info(W) - rel_entropy_coherence(rho)) <= 1e-9


def test_mutual_info_examples():
    W = CQChannel([np.eye(2) / 2] * 3, [0.2, 0.3, 0.5])
    assert mutual_info(W) == pytest.approx(0.0, abs=1e-12)
    W = CQChannel([np.diag(e).astype(complex) for e in np.eye(4)], [0.25] * 4)
    assert mutual_info(W) == pytest.approx(2.0)
    rng = np.random.default_rng(2)
    W = cq_from_state(random_density(3, rng))
    assert mutual_info(W) == pytest.approx(vn_entropy(W.average()), abs=1e-12)


def test_pgm_examples():
    W = cq_from_state(qubit(0.7, 0.2))
    pgm = pgm_decoder([[0, 1, 0]], W)
    assert pgm.max_error <= 1e-12
    ops = pgm.operators()
    assert np.allclose(ops[1] @ ops[1], ops[1], atol=1e-10)
    W = cq_from_state(np.diag([0.5, 0.5]).astype(complex))
    pgm = pgm_decoder(all_sequences(2, 3), W)
    assert pgm.max_error <= 1e-12


def test_two_state_pgm_closed_form():
    for theta in np.linspace(0.1, 1.4, 8):
        z0 = np.array([1, 0], dtype=complex)
        z1 = np.array([np.cos(theta), np.sin(theta)], dtype=complex)
        W = CQChannel([pure(z0), pure(z1)], [0.5, 0.5])
        pgm = pgm_decoder([[0], [1]], W)
        assert pgm.max_error == pytest.approx(two_state_pgm_error(np.cos(theta)), abs=1e-12)


def test_pgm_matches_dense_oracle():
    rng = np.random.default_rng(3)
    for d in (2, 3):
        rho = random_density(d, rng)
        W = cq_from_state(rho)
        zetas = [np.linalg.eigh(o)[1][:, -1] for o in W.outputs]
        cw = all_sequences(d, 3)[rng.choice(d ** 3, size=5, replace=False)]
        pgm = pgm_decoder(cw, W)
        elements, success = dense_pgm(zetas, cw)
        assert np.allclose(pgm.success(), success, atol=1e-10)
        ops = pgm.operators()
        for P, R in zip(ops[1:], elements):
            assert np.max(np.abs(P - R)) <= 1e-9
        assert np.min(np.linalg.eigvalsh(ops[0])) >= -1e-9


def test_pgm_mixed_outputs():
    rng = np.random.default_rng(4)
    outs = [random_density(3, rng, 2) for _ in range(2)]
    W = CQChannel(outs, [0.4, 0.6])
    cw = all_sequences(2, 2)
    pgm = pgm_decoder(cw, W)
    full = []
    for u in cw:
        r = np.array([[1.0 + 0j]])
        for x in u:
            r = np.kron(r, outs[x])
        full.append(r)
    S = sum(full)
    w, V = np.linalg.eigh(S)
    keep = w > 1e-12
    Si = (V[:, keep] / np.sqrt(w[keep])) @ V[:, keep].conj().T
    ref = [np.trace(r @ Si @ r @ Si).real for r in full]
    assert np.allclose(pgm.success(), ref, atol=1e-10)


def test_build_code_examples():
    W = CQChannel([pure([1, 0])] * 2, [0.5, 0.5])
    T = typical_set(W.source, 4, 0.3)
    assert build_code(W, 4, 0.1, T).size == 1
    W = cq_from_state(np.diag([0.6, 0.4]).astype(complex))
    T = typical_set(W.source, 6, 0.2)
    code = build_code(W, 6, 0.1, T)
    keys = T.type_keys()
    mass = np.bincount(keys, weights=T.probs)
    assert code.size == np.sum(keys == np.argmax(mass))
    assert code.max_error <= 1e-12
    with pytest.raises(EmptyPool):
        build_code(W, 6, 0.1, T.subset(np.zeros(len(T), dtype=bool)))


def test_build_code_is_greedy_and_certified():
    W = cq_from_state(qubit(0.7, 0.3))
    for n, eps in ((6, 0.1), (8, 0.2), (10, 0.1)):
        T = typical_set(W.source, n, 0.3)
        code = build_code(W, n, eps, T)
        types = {type_of(u, 2) for u in code.codewords}
        assert len(types) == 1
        assert len({tuple(u) for u in code.codewords}) == code.size
        assert code.max_error < eps
        assert abs(verify_code(code) - code.max_error) <= 1e-10
        # greedy: every skipped candidate that precedes an accepted one fails when added
        order = [tuple(u) for u in T.sequences if type_of(u, 2) in types]
        kept = {tuple(u) for u in code.codewords}
        prefix = []
        for u in order:
            trial = prefix + [u]
            err = pgm_decoder(np.array(trial), W).max_error
            if u in kept:
                assert err < eps
                prefix = trial
            else:
                assert err >= eps - 1e-12
        assert len(prefix) == code.size


def test_build_code_batching_does_not_change_the_code():
    W = cq_from_state(qubit(0.7, 0.3))
    T = typical_set(W.source, 8, 0.3)
    ref = build_code(W, 8, 0.2, T, batch=1)
    for batch in (3, 64, 4096):
        assert np.array_equal(build_code(W, 8, 0.2, T, batch=batch).codewords, ref.codewords)


def test_build_code_rate_near_holevo():
    W = cq_from_state(qubit(0.7, 0.3))
    T = typical_set(W.source, 10, 0.3)
    code = build_code(W, 10, 0.2, T)
    assert abs(code.rate - mutual_info(W)) <= 0.25


def test_covering_examples():
    W = cq_from_state(pure(np.sqrt([0.7, 0.3])))
    cov = covering_partition(W, 6, 0.2, 0.3)
    assert all(c.size == 1 for c in cov.cells)
    assert cov.L == len(cov.cells) + 1
    assert cov.coverage >= cov.typical.total_probability - 0.1
    # orthogonal outputs: each cell swallows a whole type class
    W = cq_from_state(np.diag([0.7, 0.3]).astype(complex))
    cov = covering_partition(W, 8, 0.2, 0.3)
    keys = cov.typical.type_keys()
    assert cov.L <= len(set(keys.tolist())) + 1
    for code in cov.cells:
        k = int(np.sum(code.codewords[0] == 1))
        assert code.size == comb(8, k) and code.max_error <= 1e-12


def test_covering_certificates():
    W = cq_from_state(qubit(0.7, 0.3))
    for n in (6, 8, 10):
        cov = covering_partition(W, n, 0.2, 0.3)
        assert cells_disjoint(cov)
        assert cov.uncovered.total_probability <= 0.1 + 1e-12
        assert cov.coverage_ok == (cov.coverage >= 0.8)
        assert abs(cov.coverage + cov.uncovered.total_probability - cov.typical.total_probability) <= 1e-12
        for code in cov.cells:
            assert abs(verify_code(code) - code.max_error) <= 1e-10
            assert code.max_error < 0.2
        H, I = shannon(W.source), mutual_info(W)
        assert cov.rate <= H - I + cov.tau_slack + 1e-12
        covered = sum(c.size for c in cov.cells) + len(cov.uncovered)
        assert covered == len(cov.typical)


def test_gentle_check():
    rng = np.random.default_rng(5)
    rho = random_density(3, rng)
    rep = gentle_check(rho, np.eye(3))
    assert rep["lhs"] <= 1e-12 and abs(rep["epsilon"]) <= 1e-12
    v = np.array([0.6, 0.8j, 0])
    rep = gentle_check(pure(v), pure(v))
    assert rep["lhs"] <= 1e-12 and rep["ok"]
    for _ in range(100):
        d = int(rng.integers(2, 9))
        sigma = random_density(d, rng) * rng.uniform(0.5, 1.0)
        A = random_density(d, rng)
        X = A / np.linalg.eigvalsh(A)[-1] * rng.uniform(0.2, 1.0)
        rep = gentle_check(sigma, X)
        assert rep["ok"] and rep["lhs"] <= rep["bound"] + 1e-9
    with pytest.raises(DomainViolation):
        gentle_check(rho, 2 * np.eye(3))
    with pytest.raises(DomainViolation):
        gentle_check(2 * rho, np.eye(3))


def test_decoder_dilation_examples():
    P = [np.diag([1.0, 0]), np.diag([0, 1.0])]
    Wm = decoder_dilation(P)
    assert np.allclose(Wm.conj().T @ Wm, np.eye(6))
    assert set(np.round(np.abs(Wm), 12).ravel()) <= {0.0, 1.0}
    Wm = decoder_dilation([np.eye(3)])
    assert np.max(np.abs(Wm.conj().T @ Wm - np.eye(6))) <= 1e-12
    # first column block carries sqrt(Pi_c) tagged with ancilla c + 1
    assert np.allclose(Wm[1::2, ::2], np.eye(3))


def test_decoder_dilation_of_random_code():
    W = cq_from_state(qubit(0.7, 0.3))
    T = typical_set(W.source, 8, 0.3)
    code = build_code(W, 8, 0.2, T)
    elements = code.pgm.frame_elements()
    Wm = decoder_dilation(code)
    K = len(elements) + 1
    assert np.max(np.abs(Wm @ Wm.conj().T - np.eye(len(Wm)))) <= 1e-9
    from resource_kit.matrix_core import psd_sqrt
    D = elements[0].shape[0]
    for c, P in enumerate(elements):
        assert np.allclose(Wm[c + 1::K, ::K], psd_sqrt(P), atol=1e-10)
    rest = np.eye(D) - sum(elements)
    assert np.allclose(Wm[0::K, ::K], psd_sqrt(rest), atol=1e-7)


def test_cq_channel_validation():
    with pytest.raises(ValueError):
        CQChannel([max_coherent(2)], [0.5, 0.5])
    with pytest.raises(ValueError):
        CQChannel([max_coherent(2), max_coherent(3)], [0.5, 0.5])
    with pytest.raises(ValueError):
        CQChannel([np.eye(2)], [1.0])
    rng = np.random.default_rng(6)
    W = CQChannel([rand_state(2, rng), rand_state(2, rng)], [0.5, 0.5])
    assert W.rank == 2
