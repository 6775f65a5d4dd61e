"""Dense complex linear algebra on (M_n, tau) with tau = trace / n.

Matrices are plain ``numpy`` complex128 arrays of shape (n, n).  Every
routine here is a pure function of its arguments.
"""
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import (
    DimensionError,
    NotHermitianError,
    NotPartialIsometryError,
    NotPositiveError,
    SingularMatrixError,
)

# relative to the Frobenius norm of the input
TOL_EIG = 1e-11
# relative to the largest singular value
RANK_TOL = 1e-10
TOL_HERM = 1e-10

JACOBI_MAX_SWEEPS = 60


@dataclass(frozen=True)
class EigDecomp:
    values: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True)
class PolarDecomp:
    isometry_part: np.ndarray
    modulus: np.ndarray


def as_cmatrix(x, name="matrix"):
    """Coerce ``x`` to a finite square complex128 array."""
    a = np.array(x, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def adj(x):
    return x.conj().T


def fro(x):
    return float(np.linalg.norm(x))


def unit(n, i, j):
    """Matrix unit E_ij (zero-based indices)."""
    e = np.zeros((n, n), dtype=np.complex128)
    e[i, j] = 1.0
    return e


def trace_state(x):
    x = as_cmatrix(x)
    return complex(np.trace(x) / x.shape[0])


def hs_inner(x, y):
    """tau(y* x), the L^2(M) inner product (linear in ``x``)."""
    x = as_cmatrix(x, "x")
    y = as_cmatrix(y, "y")
    if x.shape != y.shape:
        raise DimensionError(f"dimension mismatch {x.shape} vs {y.shape}")
    return complex(np.vdot(y, x) / x.shape[0])


def l2_norm(x):
    """tau(|x|^2)^(1/2)."""
    return fro(x) / np.sqrt(x.shape[0])


def is_hermitian(h, tol=TOL_HERM):
    return fro(h - adj(h)) <= tol * max(fro(h), 1e-300)


def weighted_inner(x, y, h):
    """tau(h^{1/2} y* x h^{1/2}) for a positive semidefinite weight ``h``."""
    x = as_cmatrix(x, "x")
    y = as_cmatrix(y, "y")
    h = as_cmatrix(h, "h")
    if not (x.shape == y.shape == h.shape):
        raise DimensionError("dimension mismatch")
    r = mat_fn(h, "power", 0.5)
    return complex(np.trace(r @ adj(y) @ x @ r) / x.shape[0])


@njit(cache=True)
def _jacobi(a, tol, max_sweeps):
    """Cyclic complex Jacobi; returns (eigenvalues, eigenvectors) unsorted."""
    a = a.copy()
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    scale = np.sqrt(np.sum(np.abs(a) ** 2))
    if n == 1 or scale == 0.0:
        return np.real(np.diag(a)).copy(), v
    for _ in range(max_sweeps):
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += abs(a[i, j]) ** 2
        if np.sqrt(off) <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= 1e-300 or r <= 1e-18 * scale:
                    continue
                theta = (a[q, q].real - a[p, p].real) / (2.0 * r)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # J = diag(1, conj(phase)) on (p, q) composed with a real rotation
                cq = np.conj(apq / r)
                jpp = c + 0j
                jpq = s + 0j
                jqp = -s * cq
                jqq = c * cq
                for k in range(n):
                    xp = a[k, p]
                    xq = a[k, q]
                    a[k, p] = xp * jpp + xq * jqp
                    a[k, q] = xp * jpq + xq * jqq
                for k in range(n):
                    xp = a[p, k]
                    xq = a[q, k]
                    a[p, k] = np.conj(jpp) * xp + np.conj(jqp) * xq
                    a[q, k] = np.conj(jpq) * xp + np.conj(jqq) * xq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    xp = v[k, p]
                    xq = v[k, q]
                    v[k, p] = xp * jpp + xq * jqp
                    v[k, q] = xp * jpq + xq * jqq
    return np.real(np.diag(a)).copy(), v


@njit(cache=True)
def _jacobi_singular(f, max_sweeps):
    """Jacobi on f* f, then singular values as column norms of f V (unsorted)."""
    g = f.conj().T @ f
    g = 0.5 * (g + g.conj().T)
    _, v = _jacobi(g, 1e-15, max_sweeps)
    fv = f @ v
    n = f.shape[1]
    sv = np.empty(n)
    for j in range(n):
        sv[j] = np.sqrt(np.sum(np.abs(fv[:, j]) ** 2))
    return sv, v


def herm_eig(h, method="jacobi"):
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    ``method="jacobi"`` runs cyclic complex Jacobi rotations;
    ``method="lapack"`` defers to ``numpy.linalg.eigh`` and is meant for
    hot loops (optimizer objective evaluations).
    """
    h = as_cmatrix(h, "h")
    if not is_hermitian(h):
        raise NotHermitianError("herm_eig requires a Hermitian matrix")
    h = 0.5 * (h + adj(h))
    if method == "lapack":
        w, v = np.linalg.eigh(h)
        return EigDecomp(w, v)
    if method != "jacobi":
        raise ValueError(f"unknown eigen method {method!r}")
    w, v = _jacobi(np.ascontiguousarray(h), 1e-15, JACOBI_MAX_SWEEPS)
    order = np.argsort(w, kind="stable")
    return EigDecomp(w[order], v[:, order])


def _right_singular(f, method):
    if method == "jacobi":
        # column norms of f V are accurate to eps * sigma_max even for tiny sigma
        return _jacobi_singular(np.ascontiguousarray(f), JACOBI_MAX_SWEEPS)
    e = herm_eig(adj(f) @ f, method=method)
    return np.linalg.norm(f @ e.vectors, axis=0), e.vectors


def singular_values(f, method="jacobi"):
    """Singular values of ``f`` in descending order."""
    f = as_cmatrix(f, "f")
    sv, _ = _right_singular(f, method)
    return np.sort(sv)[::-1]


def polar(f, method="jacobi"):
    """Minimal polar decomposition f = u |f|, u vanishing on ker |f|."""
    f = as_cmatrix(f, "f")
    sv, vecs = _right_singular(f, method)
    cutoff = RANK_TOL * sv.max() if sv.size else 0.0
    modulus = (vecs * sv) @ adj(vecs)
    modulus = 0.5 * (modulus + adj(modulus))
    keep = sv > cutoff
    if not np.any(keep):
        z = np.zeros_like(f)
        return PolarDecomp(z, z.copy())
    vk = vecs[:, keep]
    left = (f @ vk) / sv[keep]
    u = left @ adj(vk)
    return PolarDecomp(u, modulus)


def _is_projection(p, tol):
    return fro(p @ p - p) <= tol and fro(p - adj(p)) <= tol


def _complement_basis(proj):
    """Orthonormal basis of ker(proj), built from e_1, e_2, ... in index order."""
    n = proj.shape[0]
    comp = np.eye(n, dtype=np.complex128) - proj
    cols = []
    for j in range(n):
        x = comp[:, j].copy()
        for _ in range(2):
            for c in cols:
                x = x - c * np.vdot(c, x)
        nx = np.linalg.norm(x)
        if nx > 1e-6:
            cols.append(x / nx)
    return cols


def unitary_extend(u):
    """Complete a partial isometry to a unitary agreeing with it on its initial space.

    The kernel and cokernel are given orthonormal bases in index order and
    matched one to one, so the completion is deterministic.
    """
    u = as_cmatrix(u, "u")
    n = u.shape[0]
    tol = 1e-8 * max(1.0, np.sqrt(n))
    init = adj(u) @ u
    final = u @ adj(u)
    if not (_is_projection(init, tol) and _is_projection(final, tol)):
        raise NotPartialIsometryError("input is not a partial isometry")
    ker = _complement_basis(init)
    coker = _complement_basis(final)
    if len(ker) != len(coker):
        raise NotPartialIsometryError("kernel and cokernel dimensions differ")
    out = u.copy()
    for k, c in zip(ker, coker):
        out = out + np.outer(c, k.conj())
    return out


def mat_fn(h, fn, q=None, method="jacobi"):
    """Functional calculus: ``fn`` in {"power", "log", "exp"}.

    ``power`` needs a positive semidefinite argument and exponent ``q > 0``
    (``q == 0`` returns the identity); ``log`` needs a positive definite
    argument; ``exp`` takes any Hermitian matrix.
    """
    h = as_cmatrix(h, "h")
    e = herm_eig(h, method=method)
    w = e.values
    top = max(abs(w).max(), 1e-300)
    if fn == "power":
        if q is None or q < 0:
            raise ValueError("power needs an exponent q >= 0")
        if w.min() < -1e-9 * top:
            raise NotPositiveError("power of a matrix that is not positive semidefinite")
        w = np.clip(w, 0.0, None)
        if q == 0:
            fw = np.ones_like(w)
        else:
            fw = w ** q
    elif fn == "log":
        if w.min() <= RANK_TOL * top:
            raise SingularMatrixError("log of a singular or non-positive matrix")
        fw = np.log(w)
    elif fn == "exp":
        fw = np.exp(w)
    else:
        raise ValueError(f"unknown matrix function {fn!r}")
    out = (e.vectors * fw) @ adj(e.vectors)
    return 0.5 * (out + adj(out))


def inv(x):
    x = as_cmatrix(x)
    try:
        return np.linalg.inv(x)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc


def orthonormalize(vectors, h=None):
    """Modified Gram-Schmidt with one re-orthogonalization pass.

    Inner product is ``hs_inner`` or, when ``h`` is given, ``weighted_inner``
    with weight ``h``.  Vectors whose residual norm is at most
    ``RANK_TOL * max input norm`` are dropped.
    """
    vectors = [as_cmatrix(v) for v in vectors]
    if not vectors:
        return []
    n = vectors[0].shape[0]
    if h is None:
        def ip(x, y):
            return np.vdot(y, x) / n
    else:
        h = as_cmatrix(h, "h")
        r = mat_fn(h, "power", 0.5)

        def ip(x, y):
            return np.trace(r @ adj(y) @ x @ r) / n

    norms = [np.sqrt(abs(ip(v, v))) for v in vectors]
    cutoff = RANK_TOL * max(norms)
    basis = []
    for v in vectors:
        x = v.copy()
        for _ in range(2):
            for b in basis:
                x = x - b * ip(x, b)
        nx = np.sqrt(abs(ip(x, x)))
        if nx > cutoff and nx > 0.0:
            basis.append(x / nx)
    return basis


def vec_basis(mats):
    """Stack matrices as rows of an (k, n*n) array; hs inner product is row vdot / n."""
    if len(mats) == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    return np.stack([np.asarray(m).reshape(-1) for m in mats])
