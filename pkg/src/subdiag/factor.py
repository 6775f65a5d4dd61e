"""Factorizations inside the algebra A.

The workhorse is :func:`cholesky_in_A`, which writes a positive invertible
b as a* a with a in A.  Inner-outer, Riesz and modulus factorizations are
built on it; :func:`factor_via_weighted_projection` and
:func:`inner_outer_via_projection` are independent routes used as cross
checks and for explicit-basis algebras.
"""
from dataclasses import dataclass

import numpy as np

from .algebra import TOL_ALG, SubAlg
from .errors import (
    ExponentMismatchError,
    IllPosedAlgebraError,
    NotFactorableError,
    NotPositiveError,
    NotSubdiagonalError,
    SingularMatrixError,
)
from .fkdet import fk_det
from .matcore import (
    RANK_TOL,
    adj,
    as_cmatrix,
    fro,
    herm_eig,
    is_hermitian,
    mat_fn,
    polar,
    singular_values,
    unitary_extend,
)

DET_FLOOR = 1e-8
CROSS_TOL = 1e-8


@dataclass(frozen=True)
class InnerOuter:
    inner_u: np.ndarray
    outer_h: np.ndarray


@dataclass(frozen=True)
class RieszPair:
    y: np.ndarray
    z: np.ndarray
    p: float
    q: float
    r: float


def _require_pd(b, name="b"):
    b = as_cmatrix(b, name)
    if not is_hermitian(b):
        raise NotPositiveError(f"{name} is not Hermitian")
    w = herm_eig(b).values
    if w[-1] <= 0 or w[0] <= RANK_TOL * w[-1]:
        raise NotPositiveError(f"{name} is not positive definite")
    return 0.5 * (b + adj(b))


def _require_block(alg, op):
    if alg.kind != "block_upper":
        raise IllPosedAlgebraError(f"{op} needs a block_upper algebra")


def cholesky_in_A(b, alg: SubAlg):
    """Block Cholesky: a block upper-triangular with a* a = b.

    Diagonal blocks of ``a`` are the positive square roots of the Schur
    complements, which fixes the D-unitary freedom.
    """
    _require_block(alg, "cholesky_in_A")
    b = _require_pd(b)
    sl = alg.partition.slices()
    a = np.zeros_like(b)
    for i, si in enumerate(sl):
        s = b[si, si] - sum(adj(a[sk, si]) @ a[sk, si] for sk in sl[:i])
        s = 0.5 * (s + adj(s))
        aii = mat_fn(s, "power", 0.5)
        a[si, si] = aii
        for sj in sl[i + 1:]:
            rhs = b[si, sj] - sum(adj(a[sk, si]) @ a[sk, sj] for sk in sl[:i])
            a[si, sj] = np.linalg.solve(aii, rhs)
    return a


def block_inverse(h, alg: SubAlg):
    """Inverse of an element of a block upper-triangular algebra by back substitution.

    The result has exact zeros below the block diagonal.  Raises
    ``SingularMatrixError`` when a diagonal block is singular.
    """
    _require_block(alg, "block_inverse")
    sl = alg.partition.slices()
    k = len(sl)
    x = np.zeros_like(h)
    top = max(singular_values(h)[0], 1e-300)
    for i in range(k - 1, -1, -1):
        si = sl[i]
        hii = h[si, si]
        if singular_values(hii)[-1] <= RANK_TOL * top:
            raise SingularMatrixError(f"diagonal block {i} is singular")
        hinv = np.linalg.inv(hii)
        x[si, si] = hinv
        for j in range(i + 1, k):
            sj = sl[j]
            acc = sum(h[si, sl[m]] @ x[sl[m], sj] for m in range(i + 1, j + 1))
            x[si, sj] = -hinv @ acc
    return x


def weighted_projection_of_one(b, alg: SubAlg):
    """Orthogonal projection of 1 onto span(A_0) for <x, y> = tau(y* x b)."""
    n = alg.n
    basis = alg.basis_A0
    if basis.shape[0] == 0:
        return np.zeros((n, n), dtype=np.complex128)
    # gram[i, j] = <a_j, a_i>, rhs[i] = <1, a_i>
    gram = np.einsum("iab,jac,cb->ij", basis.conj(), basis, b)
    rhs = np.einsum("iab,ab->i", basis.conj(), b)
    coeffs = np.linalg.solve(gram, rhs)
    return np.einsum("k,kij->ij", coeffs, basis)


def factor_via_weighted_projection(b, alg: SubAlg):
    """Return a in A with a b a* = 1, i.e. b^{-1} = a* a.

    Works for any descriptor.  Raises ``NotSubdiagonalError`` when
    (1 - p) b (1 - p)* fails to land in D, which cannot happen for a
    maximal subdiagonal algebra.
    """
    b = _require_pd(b)
    n = alg.n
    one = np.eye(n, dtype=np.complex128)
    p = weighted_projection_of_one(b, alg)
    x = (one - p) @ b @ adj(one - p)
    x = 0.5 * (x + adj(x))
    off = fro(x - alg.expectation(x))
    if off > 1e3 * TOL_ALG * fro(one - p) ** 2 * fro(b):
        raise NotSubdiagonalError("(1-p) b (1-p)* is not in D", residual=off)
    e = mat_fn(alg.expectation(x), "power", 0.5)
    e = np.linalg.inv(e)
    e = 0.5 * (e + adj(e))
    a = e @ (one - p)
    if alg.kind == "block_upper":
        a = np.where(alg.mask_A, a, 0.0)
    return a


def factor_in_A(b, alg: SubAlg):
    """a in A with a* a = b, by block Cholesky or (explicit algebras) the projection route."""
    if alg.kind == "block_upper":
        return cholesky_in_A(b, alg)
    b = _require_pd(b)
    return factor_via_weighted_projection(np.linalg.inv(b), alg)


def _det_floor_ok(f):
    top = singular_values(f)[0]
    d = fk_det(f)
    return d > DET_FLOOR * top, d


def _solve_right(f, h, alg):
    """f h^{-1}."""
    if alg.kind == "block_upper":
        return f @ block_inverse(h, alg)
    return np.linalg.solve(h.T, f.T).T


def canonicalize(pair: InnerOuter, alg: SubAlg):
    """Rotate by the D-unitary that makes Phi(h) positive definite.

    Two factorizations of the same f differ by a D-unitary, so they share
    one canonical form.
    """
    u, h = pair.inner_u, pair.outer_h
    ph = alg.expectation(h)
    pol = polar(ph)
    w = pol.isometry_part
    if fro(adj(w) @ w - np.eye(alg.n)) > 1e-6:
        raise SingularMatrixError("Phi(h) is singular; cannot canonicalize")
    if alg.kind == "block_upper":
        w = np.where(alg.mask_D, w, 0.0)
    h2 = adj(w) @ h
    u2 = u @ w
    if alg.kind == "block_upper":
        h2 = np.where(alg.mask_A, h2, 0.0)
    return InnerOuter(u2, h2)


def inner_outer(f, alg: SubAlg):
    """f = u h with u unitary and h outer (invertible in A), canonical form."""
    f = as_cmatrix(f, "f")
    ok, d = _det_floor_ok(f)
    if not ok:
        raise NotFactorableError(f"Delta(f) = {d:.3e} is below the determinant floor")
    h = factor_in_A(adj(f) @ f, alg)
    u = _solve_right(f, h, alg)
    return canonicalize(InnerOuter(u, h), alg)


def project_onto_span(x, gens):
    """Least-squares projection of x onto span(gens) in the trace inner product."""
    if len(gens) == 0:
        return np.zeros_like(x)
    cols = np.stack([g.reshape(-1) for g in gens], axis=1)
    coef, *_ = np.linalg.lstsq(cols, x.reshape(-1), rcond=None)
    return (cols @ coef).reshape(x.shape)


def inner_outer_via_projection(f, alg: SubAlg):
    """Inner-outer factorization from the projection v of f onto span(f A_0).

    u is the unitary completion of the partial isometry in the polar
    decomposition of f - v, and h = u* f.
    """
    f = as_cmatrix(f, "f")
    ok, d = _det_floor_ok(f)
    if not ok:
        raise NotFactorableError(f"Delta(f) = {d:.3e} is below the determinant floor")
    v = project_onto_span(f, [f @ a0 for a0 in alg.basis_A0])
    u = unitary_extend(polar(f - v).isometry_part)
    h = adj(u) @ f
    if alg.kind == "block_upper":
        h = np.where(alg.mask_A, h, 0.0)
    return canonicalize(InnerOuter(u, h), alg)


def solve_in_A(h, rhs, alg: SubAlg):
    """Least-squares x in A with h x = rhs; returns (x, residual)."""
    if alg.kind == "block_upper":
        try:
            x = block_inverse(h, alg) @ rhs
        except SingularMatrixError:
            x = None
        if x is not None:
            return x, fro(h @ x - rhs)
    basis = alg.basis_A
    cols = np.stack([(h @ a).reshape(-1) for a in basis], axis=1)
    coef, *_ = np.linalg.lstsq(cols, rhs.reshape(-1), rcond=None)
    x = np.einsum("k,kij->ij", coef, basis)
    return x, fro(h @ x - rhs)


def is_outer(h, alg: SubAlg):
    """Outer test in the block model: h in A and h x = 1 solvable in A.

    Returns ``(bool, diagnostics)``; diagnostics carry Delta(h), Delta(Phi(h)),
    |tau(h)|, the membership residual and the certificate residual.
    """
    h = as_cmatrix(h, "h")
    n = alg.n
    member = alg.membership_residual(h)
    scale = max(fro(h), 1e-300)
    diag = {
        "delta": fk_det(h),
        "delta_phi": fk_det(alg.expectation(h)),
        "abs_trace": float(abs(np.trace(h) / n)),
        "membership_residual": member,
    }
    in_A = member <= 1e-8 * scale
    ok, _ = _det_floor_ok(h) if scale > 1e-300 else (False, 0.0)
    if not in_A or not ok:
        diag["certificate_residual"] = float("inf")
        return False, diag
    x, res = solve_in_A(h, np.eye(n, dtype=np.complex128), alg)
    diag["certificate_residual"] = res
    return bool(res <= 1e-8 * np.sqrt(n)), diag


def left_right_symmetric(h, alg: SubAlg):
    """span(A h) == span(A), compared by rank."""
    n = alg.n
    basis = alg.basis_A
    base = np.stack([a.reshape(-1) for a in basis])
    prod = np.stack([(a @ h).reshape(-1) for a in basis])
    r_a = np.linalg.matrix_rank(base, tol=1e-9)
    r_ah = np.linalg.matrix_rank(prod, tol=1e-9 * max(fro(h), 1e-300))
    r_both = np.linalg.matrix_rank(np.vstack([base, prod]), tol=1e-9 * max(fro(h), 1.0))
    return bool(r_ah == r_a and r_both == r_a)


def jensen_check(a, alg: SubAlg):
    """(Delta(a), Delta(Phi(a))) for a in A."""
    a = as_cmatrix(a, "a")
    alg.require_member(a, "a")
    return fk_det(a), fk_det(alg.expectation(a))


def lp_norm(x, s):
    """tau(|x|^s)^(1/s); s = inf gives the operator norm."""
    sv = singular_values(x)
    if np.isinf(s):
        return float(sv[0])
    return float(np.mean(sv ** s) ** (1.0 / s))


def _recip(x):
    return 0.0 if np.isinf(x) else 1.0 / x


def riesz_factor(x, p, q, r, alg: SubAlg, eps=None):
    """x = y z with y, z in A, using z = factor of (x* x)^{r/q}.

    Singular x is refused: the construction needs z invertible.  With
    ``eps`` set, x + eps * 1 is factored instead.
    """
    x = as_cmatrix(x, "x")
    if abs(_recip(p) + _recip(q) - _recip(r)) > 1e-12:
        raise ExponentMismatchError(f"1/p + 1/q != 1/r for p={p}, q={q}, r={r}")
    alg.require_member(x, "x")
    if eps:
        x = x + eps * np.eye(alg.n)
    ok, d = _det_floor_ok(x)
    if not ok:
        raise NotFactorableError(f"x is singular (Delta = {d:.3e})")
    xx = adj(x) @ x
    z = factor_in_A(mat_fn(xx, "power", r * _recip(q)), alg)
    y = _solve_right(x, z, alg)
    if alg.kind == "block_upper":
        y = np.where(alg.mask_A, y, 0.0)
        z = np.where(alg.mask_A, z, 0.0)
    return RieszPair(y, z, p, q, r)


def outer_with_modulus(f, p, alg: SubAlg):
    """Outer h with |h| = f^{1/p}, so f = |h|^p."""
    f = _require_pd(f, "f")
    if p <= 0:
        raise ValueError("p must be positive")
    return factor_in_A(mat_fn(f, "power", 2.0 / p), alg)


def outer_square_root(h, alg: SubAlg):
    """An outer k in A with k^2 = h for invertible h in A (primary square root).

    A primary matrix function of h is a polynomial in h, hence lies in A.
    """
    from scipy.linalg import sqrtm

    h = as_cmatrix(h, "h")
    k = sqrtm(h)
    return np.asarray(k, dtype=np.complex128)
