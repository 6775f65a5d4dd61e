import numpy as np
import pytest

from conftest import gauss
from subdiag.algebra import (
    BlockPartition,
    SubAlg,
    a_neg,
    check_density,
    check_multiplicative_expectation,
    check_tau_maximal,
    check_unique_extension,
    expectation,
    random_element,
)
from subdiag.errors import DimensionError
from subdiag.matcore import adj, fro, unit
from subdiag.verify import compositions


def T(*sizes):
    return SubAlg.block_upper(BlockPartition(sizes))


def test_partition_validation():
    assert BlockPartition.parse("2,1").n == 3
    with pytest.raises(ValueError):
        BlockPartition((2, 0))
    with pytest.raises(ValueError):
        BlockPartition(())


def test_expectation_examples(rng):
    x = np.array([[1, 2], [3, 4]], dtype=complex)
    assert np.array_equal(expectation(x, T(1, 1)), np.diag([1, 4]))
    y = gauss(rng, 3)
    assert np.array_equal(expectation(y, T(3)), y)
    assert np.array_equal(expectation(unit(3, 0, 2), T(2, 1)), np.zeros((3, 3)))
    with pytest.raises(DimensionError):
        expectation(np.eye(2), T(2, 1))


@pytest.mark.parametrize("sizes", [(1, 1), (2, 1), (1, 2, 1), (3,), (2, 2, 2)])
def test_expectation_properties(rng, sizes):
    alg = T(*sizes)
    x = gauss(rng, alg.n)
    px = alg.expectation(x)
    assert np.array_equal(alg.expectation(px), px)
    assert abs(np.trace(px) - np.trace(x)) / alg.n <= 1e-12
    assert np.linalg.norm(px, 2) <= np.linalg.norm(x, 2) + 1e-12
    d1 = np.where(alg.mask_D, gauss(rng, alg.n), 0)
    d2 = np.where(alg.mask_D, gauss(rng, alg.n), 0)
    assert fro(alg.expectation(d1 @ x @ d2) - d1 @ px @ d2) < 1e-12


def test_explicit_expectation_matches_block():
    blk = T(2, 1)
    mats = list(blk.basis_A)
    exp = SubAlg.explicit(mats)
    x = np.arange(9).reshape(3, 3).astype(complex)
    assert np.allclose(exp.expectation(x), blk.expectation(x))
    assert exp.dim_A == blk.dim_A and exp.dim_D == blk.dim_D


def test_multiplicative_examples():
    for sizes in [(1, 1), (2, 1), (1, 1, 1), (4,)]:
        assert check_multiplicative_expectation(T(*sizes)).holds
    assert check_multiplicative_expectation(a_neg()).holds
    idem = SubAlg.explicit([np.eye(2), unit(2, 0, 0) + unit(2, 0, 1)])
    out = check_multiplicative_expectation(idem)
    assert not out.holds and out.witness is not None


def test_star_algebra_is_multiplicative():
    # span{1, E12 + E21} is a *-algebra, so Phi is the identity on it
    alg = SubAlg.explicit([np.eye(2), unit(2, 0, 1) + unit(2, 1, 0)])
    assert check_multiplicative_expectation(alg).holds


def test_density_examples():
    out = check_density(T(1, 1, 1))
    assert out.holds and out.dimension == 9
    assert check_density(T(3)).holds
    out = check_density(a_neg())
    assert not out.holds and out.dimension == 5
    w = out.witness
    assert fro(w - adj(w)) < 1e-12
    assert np.allclose(w / w[0, 1], unit(3, 0, 1) + unit(3, 1, 0))


def test_tau_maximal_examples():
    assert check_tau_maximal(T(1, 1)).holds
    assert check_tau_maximal(T(3)).holds
    out = check_tau_maximal(a_neg())
    assert not out.holds and out.dimension == 8
    assert out.witness is not None


def test_unique_extension_examples():
    out = check_unique_extension(T(1, 1))
    assert out.holds and out.dimension == 0
    assert check_unique_extension(T(1)).holds
    out = check_unique_extension(a_neg())
    assert not out.holds and out.dimension == 4
    k = out.witness
    assert fro(k - adj(k)) < 1e-12
    for f in a_neg().basis_A:
        assert abs(np.trace(f @ k)) < 1e-12


@pytest.mark.parametrize("n", range(1, 6))
def test_all_block_algebras_pass(n):
    for c in compositions(n):
        alg = T(*c)
        assert check_multiplicative_expectation(alg).holds
        assert check_density(alg).holds
        assert check_tau_maximal(alg).holds
        assert check_unique_extension(alg).holds


@pytest.mark.parametrize("sizes", [(1, 1, 1), (2, 1, 2), (1, 1, 1, 1)])
def test_a0_nilpotent(sizes):
    alg = T(*sizes)
    k = len(sizes)
    a0 = alg.basis_A0
    prod = np.eye(alg.n, dtype=complex)
    rng = np.random.default_rng(1)
    for _ in range(k):
        prod = prod @ np.einsum("k,kij->ij", rng.standard_normal(len(a0)), a0)
    assert np.array_equal(prod, np.zeros_like(prod))


def test_random_element_flavors():
    alg = T(2, 1)
    b = random_element(alg, "positive_invertible_in_M", seed=3, cond_cap=50)
    w = np.linalg.eigvalsh(b)
    assert fro(b - adj(b)) < 1e-14
    assert w[0] >= 1 / 50 - 1e-12 and w[-1] <= 1 + 1e-12
    a = random_element(alg, "invertible_in_A", seed=3)
    assert np.all(a[~alg.mask_A] == 0)
    assert abs(np.linalg.det(a[:2, :2])) > 0 and abs(a[2, 2]) > 0
    s = np.linalg.svd(a, compute_uv=False)
    assert s[0] / s[-1] <= 1e3
    assert np.array_equal(random_element(alg, "general", seed=9), random_element(alg, "general", seed=9))
    h = random_element(alg, "selfadjoint", seed=1)
    assert np.allclose(h, adj(h))
    with pytest.raises(ValueError):
        random_element(alg, "bogus")
    with pytest.raises(ValueError):
        random_element(alg, cond_cap=1.0)


def test_explicit_closure_adds_products():
    alg = SubAlg.explicit([unit(3, 0, 1), unit(3, 1, 2)])
    # the closure must contain E_13 and the identity
    assert alg.contains(unit(3, 0, 2))
    assert alg.contains(np.eye(3))


def test_descriptor_round_trip():
    from subdiag.io import algebra_from_json

    for alg in (T(2, 1), a_neg()):
        back = algebra_from_json(alg.descriptor())
        assert back.dim_A == alg.dim_A
        assert back.n == alg.n
