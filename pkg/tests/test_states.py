import numpy as np
import pytest

from oracles import rand_state, rand_unitary
from resource_kit.errors import BadDimension, DimMismatch, InvalidState
from resource_kit.matrix_core import eigvalsh, partial_trace, trace_norm
from resource_kit.monotones import rel_entropy_coherence
from resource_kit.rand import random_diagonal_unitary
from resource_kit.states import (
    check_density,
    computational,
    dephase,
    ghz,
    max_coherent,
    mc_embed,
    mc_recognize,
    pure,
    purify,
)


def test_check_density_names_violation():
    with pytest.raises(InvalidState, match="trace"):
        check_density(np.eye(2))
    with pytest.raises(InvalidState, match="positivity"):
        check_density(np.diag([1.5, -0.5]))
    with pytest.raises(InvalidState, match="hermitian"):
        check_density(np.array([[0.5, 1], [0, 0.5]]))


def test_dephase_examples():
    assert np.allclose(dephase(max_coherent(2)), np.eye(2) / 2)
    D = np.diag([0.2, 0.3, 0.5]).astype(complex)
    assert np.array_equal(dephase(D), D)
    rng = np.random.default_rng(0)
    for d in (2, 3, 5):
        for _ in range(10):
            rho = rand_state(d, rng)
            once = dephase(rho)
            assert np.max(np.abs(dephase(once) - once)) <= 1e-12
            assert np.trace(once).real == pytest.approx(1.0)


def test_dephase_in_rotated_basis():
    rng = np.random.default_rng(1)
    for _ in range(10):
        B = rand_unitary(3, rng)
        rho = rand_state(3, rng)
        out = dephase(rho, B)
        rot = B.conj().T @ out @ B
        assert np.allclose(rot, np.diag(np.diag(rot)), atol=1e-12)
        assert np.allclose(np.diag(rot), np.diag(B.conj().T @ rho @ B))
    with pytest.raises(DimMismatch):
        dephase(np.eye(2) / 2, np.eye(3))


def test_max_coherent():
    assert np.allclose(max_coherent(2), np.full((2, 2), 0.5))
    assert rel_entropy_coherence(max_coherent(4)) == pytest.approx(2.0, abs=1e-12)
    for d in range(2, 17):
        P = max_coherent(d)
        assert abs(np.trace(P @ P).real - 1) <= 1e-12
    with pytest.raises(BadDimension):
        max_coherent(1)


def test_mc_embed_examples():
    Phi = mc_embed(max_coherent(2)).expand()
    v = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert np.allclose(Phi, np.outer(v, v))
    D = np.diag([0.6, 0.4]).astype(complex)
    E = mc_embed(D).expand()
    assert np.allclose(E, np.diag([0.6, 0, 0, 0.4]))
    rng = np.random.default_rng(2)
    for d in (2, 3, 4):
        rho = rand_state(d, rng)
        bases = [rand_unitary(d + 1, rng), rand_unitary(d + 2, rng)]
        ev = eigvalsh(mc_embed(rho, 2, bases).expand())
        ref = np.concatenate([eigvalsh(rho), np.zeros((d + 1) * (d + 2) - d)])
        assert np.allclose(ev, ref, atol=1e-12)
    with pytest.raises(DimMismatch):
        mc_embed(rand_state(3, rng), 2, [np.eye(2), np.eye(3)])


def test_mc_recognize():
    Phi = mc_embed(max_coherent(2)).expand()
    mc = mc_recognize(Phi, [2, 2])
    assert mc is not None and np.allclose(mc.coeff, max_coherent(2))
    e01 = np.zeros((4, 4))
    e01[1, 1] = 1
    assert mc_recognize(e01, [2, 2]) is None
    rng = np.random.default_rng(3)
    for parties in (2, 3):
        for d in (2, 3):
            rho = rand_state(d, rng)
            back = mc_recognize(mc_embed(rho, parties).expand(), [d] * parties)
            assert np.max(np.abs(back.coeff - rho)) <= 1e-12


def test_ghz_is_multiparty_mc():
    G = ghz(2, 3)
    mc = mc_recognize(G, [2, 2, 2])
    assert mc is not None and np.allclose(mc.coeff, max_coherent(2))


def test_purify_examples():
    psi = np.array([0.6, 0.8j])
    pur = purify(pure(psi))
    assert pur.env_dim == 1
    assert np.allclose(np.abs(pur.vector()), np.abs(psi))
    pur = purify(np.eye(2) / 2)
    assert pur.env_dim == 2
    v = pur.vector()
    assert np.allclose(partial_trace(np.outer(v, v.conj()), [2, 2], [1]), np.eye(2) / 2)
    rng = np.random.default_rng(4)
    for d in (2, 3, 4):
        for rank in range(1, d + 1):
            rho = rand_state(d, rng, rank)
            pur = purify(rho)
            assert pur.env_dim == rank
            v = pur.vector()
            back = partial_trace(np.outer(v, v.conj()), [d, rank], [0])
            assert np.max(np.abs(back - rho)) <= 1e-10
            assert np.max(np.abs(pur.p - np.diag(rho).real)) <= 1e-12


def test_purify_inactive_symbol():
    rho = np.diag([0.5, 0.0, 0.5]).astype(complex)
    pur = purify(rho)
    assert list(pur.active) == [True, False, True]
    assert pur.zetas[1, 0] == 1.0


def test_dephased_state_commutes_with_diagonal_unitaries():
    rng = np.random.default_rng(5)
    for d in (2, 3, 4):
        for _ in range(10):
            D = dephase(rand_state(d, rng))
            g = random_diagonal_unitary(d, rng)
            assert trace_norm(D @ g - g @ D) <= 1e-10


def test_computational_basis():
    assert np.array_equal(computational(3), np.eye(3))
