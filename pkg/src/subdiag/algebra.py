"""Subalgebras of M_n, the conditional expectation onto the diagonal
subalgebra D = A ∩ A*, and decidable structural checks.

Two descriptors are supported: block upper-triangular algebras, given by
a :class:`BlockPartition`, and algebras given by an explicit spanning set,
which are closed under multiplication on construction.
"""
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionError, IllPosedAlgebraError, NotInAlgebraError
from .matcore import adj, as_cmatrix, fro, unit

TOL_ALG = 1e-10


@dataclass(frozen=True)
class BlockPartition:
    sizes: tuple

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        if len(sizes) < 1 or any(s < 1 for s in sizes):
            raise ValueError(f"invalid block partition {self.sizes!r}")
        object.__setattr__(self, "sizes", sizes)

    @property
    def n(self):
        return sum(self.sizes)

    @property
    def k(self):
        return len(self.sizes)

    def block_of(self):
        """Block index of every row/column."""
        return np.repeat(np.arange(self.k), self.sizes)

    def slices(self):
        out, start = [], 0
        for s in self.sizes:
            out.append(slice(start, start + s))
            start += s
        return out

    @classmethod
    def parse(cls, text):
        return cls(tuple(int(t) for t in str(text).split(",") if t.strip()))


@dataclass(frozen=True)
class CheckOutcome:
    holds: bool
    witness: Optional[object] = None
    residual: float = 0.0
    dimension: Optional[int] = None


def _span_basis(rows, tol):
    """Orthonormal row basis (complex) of the span of ``rows`` via SVD."""
    if rows.shape[0] == 0:
        return rows
    u, s, vh = np.linalg.svd(rows, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return rows[:0]
    r = int(np.sum(s > tol * s[0]))
    return vh[:r]


def _null_rows(basis, dim):
    """Orthonormal basis (as rows) of {x : basis @ x = 0}."""
    if basis.shape[0] == 0:
        return np.eye(dim, dtype=np.complex128)
    _, s, vh = np.linalg.svd(basis, full_matrices=True)
    r = int(np.sum(s > 1e-10 * s[0]))
    return vh[r:].conj()


class SubAlg:
    """A unital subalgebra A of M_n with its expectation onto D = A ∩ A*.

    Build one with :meth:`block_upper` or :meth:`explicit`.  Instances are
    treated as immutable; derived bases are cached on first use.
    """

    def __init__(self, n, kind, partition=None, basis=None):
        self.n = n
        self.kind = kind
        self.partition = partition
        self._basis = basis

    @classmethod
    def block_upper(cls, partition):
        if not isinstance(partition, BlockPartition):
            partition = BlockPartition(tuple(partition))
        return cls(partition.n, "block_upper", partition=partition)

    @classmethod
    def explicit(cls, mats: Sequence, max_rounds=None):
        """Close ``mats`` together with the identity under multiplication."""
        mats = [as_cmatrix(m) for m in mats]
        if not mats:
            raise IllPosedAlgebraError("explicit algebra needs at least one matrix")
        n = mats[0].shape[0]
        if any(m.shape != (n, n) for m in mats):
            raise DimensionError("basis matrices of different sizes")
        rows = np.stack([np.eye(n, dtype=np.complex128).reshape(-1)] + [m.reshape(-1) for m in mats])
        basis = _span_basis(rows, TOL_ALG)
        rounds = max_rounds if max_rounds is not None else n * n + 1
        for _ in range(rounds):
            b = basis.reshape(-1, n, n)
            prods = np.einsum("aij,bjk->abik", b, b).reshape(-1, n * n)
            new = _span_basis(np.vstack([basis, prods]), 1e-9)
            if new.shape[0] == basis.shape[0]:
                break
            basis = new
        else:
            raise IllPosedAlgebraError("multiplicative closure did not stabilize")
        return cls(n, "explicit", basis=basis)

    def descriptor(self):
        if self.kind == "block_upper":
            return {"n": self.n, "kind": "block_upper", "partition": list(self.partition.sizes)}
        from .io import matrix_to_json

        return {"n": self.n, "kind": "explicit",
                "basis": [matrix_to_json(m) for m in self.basis_A]}

    def __repr__(self):
        if self.kind == "block_upper":
            return f"SubAlg.block_upper({self.partition.sizes})"
        return f"SubAlg.explicit(n={self.n}, dim={self.dim_A})"

    # masks (block algebras only)

    @cached_property
    def mask_A(self):
        self._need_block()
        b = self.partition.block_of()
        return b[:, None] <= b[None, :]

    @cached_property
    def mask_D(self):
        self._need_block()
        b = self.partition.block_of()
        return b[:, None] == b[None, :]

    @cached_property
    def mask_A0(self):
        return self.mask_A & ~self.mask_D

    def _need_block(self):
        if self.kind != "block_upper":
            raise AttributeError("masks exist only for block_upper algebras")

    # bases, as arrays of shape (dim, n, n); orthonormal for tau up to the 1/n factor

    def _units(self, mask):
        idx = np.argwhere(mask)
        return np.stack([unit(self.n, i, j) for i, j in idx]) if len(idx) else np.zeros((0, self.n, self.n), complex)

    @cached_property
    def basis_A(self):
        if self.kind == "block_upper":
            return self._units(self.mask_A)
        return self._basis.reshape(-1, self.n, self.n)

    @cached_property
    def basis_D(self):
        if self.kind == "block_upper":
            return self._units(self.mask_D)
        n = self.n
        a = self._basis
        astar = np.stack([adj(m).reshape(-1) for m in a.reshape(-1, n, n)])
        astar = _span_basis(astar, TOL_ALG)
        # intersection of two subspaces: null space of [A^T, -B^T]
        stack = np.hstack([a.T, -astar.T])
        _, s, vh = np.linalg.svd(stack)
        s_full = np.zeros(vh.shape[0])
        s_full[: s.size] = s
        null = vh[s_full <= 1e-9 * max(s[0], 1.0)].conj()
        if null.shape[0] == 0:
            raise IllPosedAlgebraError("A ∩ A* is trivial; algebra is not unital")
        rows = null[:, : a.shape[0]] @ a
        d = _span_basis(rows, 1e-9)
        d = self._close_star(d)
        return d.reshape(-1, n, n)

    def _close_star(self, d):
        n = self.n
        herm = [0.5 * (m + adj(m)) for m in d.reshape(-1, n, n)]
        herm += [0.5j * (adj(m) - m) for m in d.reshape(-1, n, n)]
        rows = np.stack([h.reshape(-1) for h in herm])
        return _span_basis(rows, 1e-9)

    @cached_property
    def basis_A0(self):
        if self.kind == "block_upper":
            return self._units(self.mask_A0)
        n = self.n
        rows = np.stack([(m - self.expectation(m)).reshape(-1) for m in self.basis_A])
        return _span_basis(rows, 1e-9).reshape(-1, n, n)

    @property
    def dim_A(self):
        return int(self.basis_A.shape[0])

    @property
    def dim_D(self):
        return int(self.basis_D.shape[0])

    @cached_property
    def hermitian_basis_D0(self):
        """Real basis of the traceless Hermitian elements of D, Frobenius-orthonormal."""
        n = self.n
        herm = []
        for m in self.basis_D:
            herm.append(0.5 * (m + adj(m)))
            herm.append(0.5j * (adj(m) - m))
        one = np.eye(n).reshape(-1) / np.sqrt(n)
        rows = []
        for h in herm:
            x = np.concatenate([h.real.reshape(-1), h.imag.reshape(-1)])
            rows.append(x)
        rows = np.array(rows)
        one_r = np.concatenate([one, np.zeros(n * n)])
        rows = rows - np.outer(rows @ one_r, one_r)
        if rows.shape[0] == 0:
            return np.zeros((0, n, n), complex)
        u, s, vh = np.linalg.svd(rows, full_matrices=False)
        r = int(np.sum(s > 1e-9 * max(s[0], 1e-300))) if s.size else 0
        out = vh[:r]
        mats = out[:, : n * n] + 1j * out[:, n * n:]
        return mats.reshape(-1, n, n)

    # the conditional expectation

    def expectation(self, x):
        x = as_cmatrix(x)
        if x.shape[0] != self.n:
            raise DimensionError(f"expected a {self.n}x{self.n} matrix")
        if self.kind == "block_upper":
            return np.where(self.mask_D, x, 0.0)
        d = self.basis_D
        coeffs = np.einsum("kij,ij->k", d.conj(), x)
        return np.einsum("k,kij->ij", coeffs, d)

    def project_A(self, x):
        if self.kind == "block_upper":
            return np.where(self.mask_A, x, 0.0)
        b = self.basis_A
        return np.einsum("k,kij->ij", np.einsum("kij,ij->k", b.conj(), x), b)

    def membership_residual(self, x):
        x = as_cmatrix(x)
        return fro(x - self.project_A(x))

    def contains(self, x, tol=TOL_ALG):
        return self.membership_residual(x) <= tol * max(fro(x), 1.0)

    def require_member(self, x, name="element"):
        if not self.contains(x, 1e-8):
            raise NotInAlgebraError(f"{name} is not in A (residual {self.membership_residual(x):.3e})")


def expectation(x, alg: SubAlg):
    return alg.expectation(x)


def a_neg():
    """Diagonal matrices plus span{E_13} in M_3: tracial but not maximal subdiagonal."""
    mats = [unit(3, i, i) for i in range(3)] + [unit(3, 0, 2)]
    return SubAlg.explicit(mats)


def _expect_batch(alg, xs):
    """Phi applied to a stack of matrices (..., n, n)."""
    if alg.kind == "block_upper":
        return np.where(alg.mask_D, xs, 0.0)
    d = alg.basis_D
    coeffs = np.einsum("kij,...ij->...k", d.conj(), xs)
    return np.einsum("...k,kij->...ij", coeffs, d)


def check_multiplicative_expectation(alg: SubAlg):
    """Phi(ab) = Phi(a) Phi(b) over all pairs of basis elements of A."""
    basis = alg.basis_A
    pb = _expect_batch(alg, basis)
    prods = np.einsum("aij,bjk->abik", basis, basis)
    diff = _expect_batch(alg, prods) - np.einsum("aij,bjk->abik", pb, pb)
    norms = np.linalg.norm(basis.reshape(len(basis), -1), axis=1)
    scale = np.maximum(np.outer(norms, norms), 1e-300)
    rel = np.linalg.norm(diff.reshape(len(basis), len(basis), -1), axis=2) / scale
    worst = float(rel.max(initial=0.0))
    bad = np.argwhere(rel > TOL_ALG)
    witness = None
    if bad.size:
        i, j = bad[0]
        witness = basis[i] @ basis[j]
    return CheckOutcome(witness is None, witness, worst)


def _hermitian_witness(x):
    h = x + adj(x)
    if fro(h) <= 1e-12 * fro(x):
        h = 1j * (x - adj(x))
    return h / fro(h)


def check_density(alg: SubAlg):
    """Does A + A* span all of M_n?"""
    n = alg.n
    rows = np.vstack([alg.basis_A.reshape(-1, n * n),
                      np.stack([adj(m).reshape(-1) for m in alg.basis_A])])
    span = _span_basis(rows, 1e-9)
    dim = int(span.shape[0])
    if dim == n * n:
        return CheckOutcome(True, None, 0.0, dim)
    comp = _null_rows(span.conj(), n * n)
    # prefer the complement vector built from the earliest matrix unit
    proj = comp.T @ comp.conj()
    for j in range(n * n):
        col = proj[:, j]
        if np.linalg.norm(col) > 1e-6:
            w = _hermitian_witness(col.reshape(n, n))
            break
    return CheckOutcome(False, w, float(len(comp)), dim)


def check_tau_maximal(alg: SubAlg):
    """Is A exactly the annihilator {x : tau(x a0) = 0 for a0 in A_0}?"""
    n = alg.n
    a0 = alg.basis_A0
    if a0.shape[0] == 0:
        ann_dim = n * n
        ann = np.eye(n * n, dtype=np.complex128)
    else:
        # tau(x a0) = sum_ij x_ij a0_ji, a linear functional with coefficient vec(a0^T)
        func = np.stack([m.T.reshape(-1) for m in a0])
        func = _span_basis(func, 1e-9)
        ann = _null_rows(func, n * n)
        ann_dim = int(ann.shape[0])
    contained = float(np.abs(np.einsum("aij,bji->ab", alg.basis_A, a0)).max(initial=0.0))
    holds = bool(ann_dim == alg.dim_A and contained <= 1e-9)
    witness = None
    if not holds:
        for row in ann:
            x = row.reshape(n, n)
            if alg.membership_residual(x) > 1e-6:
                witness = x / fro(x)
                break
    return CheckOutcome(holds, witness, float(contained), ann_dim)


def check_unique_extension(alg: SubAlg):
    """Real dimension of Hermitian k with tau(f k) = 0 for all f in A; holds iff 0."""
    n = alg.n
    # real coordinates of Hermitian k: diagonal reals, then Re/Im of strict upper entries
    coords = []
    for i in range(n):
        coords.append(unit(n, i, i))
    for i in range(n):
        for j in range(i + 1, n):
            coords.append(unit(n, i, j) + unit(n, j, i))
            coords.append(1j * unit(n, i, j) - 1j * unit(n, j, i))
    # vals[f, c] = tr(f c)
    vals = np.einsum("fij,cji->fc", alg.basis_A, np.array(coords))
    mat = np.empty((2 * vals.shape[0], vals.shape[1]))
    mat[0::2] = vals.real
    mat[1::2] = vals.imag
    s = np.linalg.svd(mat, compute_uv=False)
    rank = int(np.sum(s > 1e-9 * max(s[0], 1e-300))) if s.size else 0
    d = len(coords) - rank
    witness = None
    if d > 0:
        _, _, vh = np.linalg.svd(mat)
        v = vh[-1]
        witness = sum(c * coef for c, coef in zip(coords, v))
        witness = witness / fro(witness)
    return CheckOutcome(d == 0, witness, 0.0, d)


def random_element(alg: SubAlg, flavor="general", seed=0, cond_cap=1e3, rng=None):
    """Seeded random element.

    flavors: ``general`` (Gaussian on A), ``invertible_in_A`` (shifted by
    a multiple of 1 until the condition number is at most ``cond_cap``),
    ``positive_invertible_in_M`` (Hermitian, spectrum in [1/cond_cap, 1]),
    ``selfadjoint`` (Hermitian in M).
    """
    if cond_cap <= 1:
        raise ValueError("cond_cap must exceed 1")
    if rng is None:
        rng = np.random.default_rng(seed)
    n = alg.n

    def gauss():
        return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)

    if flavor == "general":
        if alg.kind == "block_upper":
            return np.where(alg.mask_A, gauss(), 0.0)
        c = (rng.standard_normal(alg.dim_A) + 1j * rng.standard_normal(alg.dim_A)) / np.sqrt(2)
        return np.einsum("k,kij->ij", c, alg.basis_A) * np.sqrt(n)
    if flavor == "invertible_in_A":
        a = random_element(alg, "general", rng=rng, cond_cap=cond_cap)
        shift = 0.0
        step = max(fro(a) / np.sqrt(n), 1e-3)
        while True:
            x = a + shift * np.eye(n)
            s = np.linalg.svd(x, compute_uv=False)
            if s[-1] > 0 and s[0] / s[-1] <= cond_cap:
                return x / s[0]
            shift = step if shift == 0.0 else 2.0 * shift
    if flavor == "positive_invertible_in_M":
        g = gauss()
        h = g @ adj(g)
        w = np.linalg.eigvalsh(h)
        t = max(0.0, (w[-1] - cond_cap * w[0]) / (cond_cap - 1.0))
        h = (h + t * np.eye(n)) / (w[-1] + t)
        return 0.5 * (h + adj(h))
    if flavor == "selfadjoint":
        g = gauss()
        return 0.5 * (g + adj(g))
    raise ValueError(f"unknown flavor {flavor!r}")
