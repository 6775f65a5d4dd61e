import numpy as np
import pytest

from conftest import gauss
from subdiag.algebra import BlockPartition, SubAlg
from subdiag.beurling import (
    Subspace,
    beurling_extract,
    direct_sum,
    is_invariant,
    random_invariant_subspace,
    subspace_distance,
    type_split,
    wandering,
)
from subdiag.errors import NotInvariantError
from subdiag.factor import inner_outer
from subdiag.matcore import adj, fro, hs_inner, unit


def T(*sizes):
    return SubAlg.block_upper(BlockPartition(sizes))


T2 = T(1, 1)


def test_subspace_basis_is_orthonormal(rng):
    K = Subspace.span([gauss(rng, 3) for _ in range(4)])
    gram = np.array([[hs_inner(x, y) for y in K.basis] for x in K.basis])
    assert np.allclose(gram, np.eye(4))


def test_is_invariant_examples():
    assert is_invariant(Subspace.span([unit(2, 0, 0), unit(2, 0, 1)]), T2)
    assert not is_invariant(Subspace.span([unit(2, 1, 0)]), T2)
    assert is_invariant(Subspace.span([unit(2, i, j) for i in range(2) for j in range(2)]), T2)


def test_wandering_examples():
    K = Subspace.span([unit(2, 0, 0), unit(2, 0, 1)])
    W = wandering(K, T2)
    assert W.dim == 1
    assert subspace_distance(W, Subspace.span([unit(2, 0, 0)])) < 1e-12
    assert wandering(Subspace.zero(2), T2).dim == 0
    with pytest.raises(NotInvariantError):
        wandering(Subspace.span([unit(2, 1, 0)]), T2)


def test_wandering_of_unitary_orbit(rng):
    alg = T(1, 2)
    u, _ = np.linalg.qr(gauss(rng, 3))
    K = Subspace.span([u @ a for a in alg.basis_A])
    W = wandering(K, alg)
    target = Subspace.span([u @ d for d in alg.basis_D])
    assert subspace_distance(W, target) < 1e-10


def test_type_split_examples():
    K = Subspace.span([unit(2, i, j) for i in range(2) for j in range(2)])
    K1, K2 = type_split(K, T2)
    assert K2.dim == 0 and K1.dim == 4
    W = wandering(K, T2)
    assert subspace_distance(W, Subspace.span([unit(2, 0, 0), unit(2, 1, 0)])) < 1e-12
    K1, K2 = type_split(Subspace.zero(3), T(2, 1))
    assert K1.dim == 0 and K2.dim == 0


def test_extract_examples():
    dec = beurling_extract(Subspace.span([unit(2, 0, 0), unit(2, 0, 1)]), T2)
    assert len(dec.isometries) == 1
    assert np.allclose(np.abs(dec.isometries[0]), unit(2, 0, 0))
    K = Subspace.span([unit(2, i, j) for i in range(2) for j in range(2)])
    dec = beurling_extract(K, T2)
    assert len(dec.isometries) == 2
    u1, u2 = dec.isometries
    assert np.allclose(np.abs(u1), unit(2, 0, 0)) and np.allclose(np.abs(u2), unit(2, 1, 0))
    assert fro(adj(u1) @ u2) < 1e-12
    assert dec.residuals["reconstruction"] < 1e-12


def test_extract_unitary_orbit():
    alg = T(2, 1)
    K = random_invariant_subspace(alg, generators=1, rng=np.random.default_rng(4))
    dec = beurling_extract(K, alg)
    assert len(dec.isometries) == 1
    u = dec.isometries[0]
    assert fro(adj(u) @ u - np.eye(3)) < 1e-8
    assert subspace_distance(Subspace.span([u @ a for a in alg.basis_A]), K) < 1e-8


def test_generator_inner_factor_gives_same_subspace():
    alg = T(1, 2)
    rng = np.random.default_rng(11)
    K = random_invariant_subspace(alg, generators=1, rng=rng)
    g = np.random.default_rng(11)
    n = alg.n
    left = g.standard_normal((n, n)) + 1j * g.standard_normal((n, n))
    right = g.standard_normal((n, n)) + 1j * g.standard_normal((n, n))
    u = inner_outer(left @ right, alg).inner_u
    assert subspace_distance(Subspace.span([u @ a for a in alg.basis_A]), K) < 1e-8


def test_full_space_from_many_generators():
    alg = T(1, 1, 1)
    K = random_invariant_subspace(alg, seed=2, generators=9)
    assert K.dim == 9


def test_random_subspace_reproducible():
    alg = T(2, 1)
    a = random_invariant_subspace(alg, seed=5, generators=2, rank=1)
    b = random_invariant_subspace(alg, seed=5, generators=2, rank=1)
    assert np.array_equal(a.basis, b.basis)
    with pytest.raises(ValueError):
        random_invariant_subspace(alg, generators=0)


@pytest.mark.parametrize("sizes", [(1, 1), (2, 1), (1, 1, 1), (1, 2, 2), (2, 3), (1,) * 5, (3,)])
def test_decomposition_properties(sizes):
    alg = T(*sizes)
    for i in range(6):
        rank = [None, 1, 2][i % 3] if alg.n > 2 else None
        K = random_invariant_subspace(alg, seed=100 * i + len(sizes), generators=1 + i % 3, rank=rank)
        assert is_invariant(K, alg)
        W = wandering(K, alg)
        for w in W.basis:
            for k in K.basis:
                for a0 in alg.basis_A0:
                    assert abs(hs_inner(w, k @ a0)) < 1e-8
        for x in W.basis:
            for y in W.basis:
                m = adj(x) @ y
                assert fro(np.where(alg.mask_D, 0, m)) <= 1e-10
        dec = beurling_extract(K, alg)
        r = dec.residuals
        assert r["type2_dim"] == 0
        assert r["reconstruction"] <= 1e-8
        assert r["orthogonal_ranges"] <= 1e-10
        for u in dec.isometries:
            p = adj(u) @ u
            ev = np.linalg.eigvalsh(p)
            assert np.all(np.minimum(np.abs(ev), np.abs(ev - 1)) < 1e-8)
            assert fro(np.where(alg.mask_D, 0, p)) < 1e-8
        assert subspace_distance(direct_sum(*[Subspace.span([u @ a for a in alg.basis_A])
                                              for u in dec.isometries]), K) < 1e-8
