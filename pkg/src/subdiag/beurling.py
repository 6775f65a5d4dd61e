"""Right A-invariant subspaces of L^2(M_n): wandering subspaces, the
type 1 / type 2 split, and extraction of partial isometries u_i with
K = sum of u_i A (column sum).
"""
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .algebra import TOL_ALG, SubAlg
from .errors import NotInvariantError, NotSubdiagonalError
from .matcore import adj, as_cmatrix, fro, mat_fn

TOL_SUB = 1e-8
MODULUS_CUT = 1e-6


@dataclass
class Subspace:
    """Subspace of M_n held as a trace-orthonormal basis, array of shape (k, n, n)."""

    n: int
    basis: np.ndarray

    @classmethod
    def span(cls, mats, n=None, tol=1e-10, scale=None):
        """Span of ``mats``; singular values below ``tol * scale`` are dropped.

        ``scale`` defaults to the largest singular value.  Pass the size of
        the inputs before any cancellation (e.g. products) so that pure
        rounding noise is not mistaken for a direction.
        """
        mats = [as_cmatrix(m) for m in mats]
        if n is None:
            if not mats:
                raise ValueError("empty span needs n")
            n = mats[0].shape[0]
        if not mats:
            return cls(n, np.zeros((0, n, n), dtype=np.complex128))
        rows = np.stack([m.reshape(-1) for m in mats])
        u, s, vh = np.linalg.svd(rows, full_matrices=False)
        if s.size == 0 or s[0] == 0.0:
            return cls(n, np.zeros((0, n, n), dtype=np.complex128))
        ref = s[0] if scale is None else max(scale, 1e-300)
        r = int(np.sum(s > tol * ref))
        # tau-orthonormal: tau(y* x) = vdot / n
        return cls(n, vh[:r].reshape(-1, n, n) * np.sqrt(n))

    @classmethod
    def zero(cls, n):
        return cls(n, np.zeros((0, n, n), dtype=np.complex128))

    @property
    def dim(self):
        return int(self.basis.shape[0])

    def rows(self):
        """Euclidean-orthonormal rows spanning the subspace."""
        return self.basis.reshape(self.dim, self.n * self.n) / np.sqrt(self.n)

    def project(self, x):
        r = self.rows()
        if r.shape[0] == 0:
            return np.zeros_like(x)
        v = x.reshape(-1)
        return (r.T @ (r.conj() @ v)).reshape(x.shape)

    def residual(self, x):
        return fro(x - self.project(x))

    def orth_complement_in(self, other):
        """other ⊖ self, assuming self ⊆ other."""
        mats = [b - self.project(b) for b in other.basis]
        return Subspace.span(mats, n=self.n, tol=1e-8)


def subspace_distance(K, L):
    """Spectral norm of P_K - P_L (sine of the largest principal angle); 1 if dims differ."""
    if K.dim != L.dim:
        return 1.0
    if K.dim == 0:
        return 0.0
    pk = K.rows().T @ K.rows().conj()
    pl = L.rows().T @ L.rows().conj()
    return float(np.linalg.norm(pk - pl, 2))


def direct_sum(*spaces):
    n = spaces[0].n
    mats = [b for s in spaces for b in s.basis]
    return Subspace.span(mats, n=n, tol=1e-8)


@dataclass
class BeurlingDecomp:
    isometries: List[np.ndarray]
    type2_part: Subspace
    wandering: Subspace = None
    residuals: dict = field(default_factory=dict)


def is_invariant(K: Subspace, alg: SubAlg, tol=TOL_SUB):
    for k in K.basis:
        for a in alg.basis_A:
            x = k @ a
            if K.residual(x) > tol * max(fro(x), 1.0):
                return False
    return True


def _require_invariant(K, alg):
    if not is_invariant(K, alg):
        raise NotInvariantError("subspace is not right A-invariant")


def _times(K, mats):
    prods = [k @ a for k in K.basis for a in mats]
    scale = max((fro(k) for k in K.basis), default=0.0) * max((fro(a) for a in mats), default=0.0)
    return Subspace.span(prods, n=K.n, tol=1e-8, scale=scale)


def wandering(K: Subspace, alg: SubAlg):
    """W = K ⊖ span(K A_0)."""
    _require_invariant(K, alg)
    if K.dim == 0:
        return Subspace.zero(K.n)
    return _times(K, alg.basis_A0).orth_complement_in(K)


def type_split(K: Subspace, alg: SubAlg):
    """(K1, K2): K1 = span(W A), K2 = intersection of span(K A_0^m) over m >= 1.

    Raises ``NotSubdiagonalError`` if K is not the orthogonal column sum
    of the two pieces.
    """
    _require_invariant(K, alg)
    n = K.n
    if K.dim == 0:
        return Subspace.zero(n), Subspace.zero(n)
    cur = K
    for _ in range(n * n + 1):
        nxt = _times(cur, alg.basis_A0)
        if nxt.dim == cur.dim:
            break
        cur = nxt
    K2 = cur
    W = wandering(K, alg)
    K1 = _times(W, alg.basis_A)
    recon = subspace_distance(direct_sum(K1, K2), K)
    cross = max((fro(adj(x) @ y) for x in K1.basis for y in K2.basis), default=0.0)
    if recon > TOL_SUB or cross > 1e-8:
        raise NotSubdiagonalError("K is not the column sum of its type 1 and type 2 parts",
                                  residual=max(recon, cross))
    return K1, K2


def _projection_defect(m):
    """Distance of the eigenvalues of a Hermitian m from {0, 1}."""
    w = np.linalg.eigvalsh(0.5 * (m + adj(m)))
    return float(np.max(np.minimum(np.abs(w), np.abs(w - 1.0)))) if w.size else 0.0


def _first_nonzero(w, tol):
    idx = np.flatnonzero(np.abs(w.reshape(-1)) > tol)
    return int(idx[0]) if idx.size else w.size


def _merge(isometries, alg):
    """Fuse pieces u_i, u_j into u_i + u_j when that loses nothing.

    Allowed when the initial projections are orthogonal and
    (u_i + u_j) A still spans u_i A + u_j A; e.g. K = u A is returned as
    one isometry even if the greedy pass found it in several pieces.
    """
    out = []
    for u in isometries:
        for k, v in enumerate(out):
            if fro((adj(u) @ u) @ (adj(v) @ v)) > TOL_SUB:
                continue
            fused = u + v
            span_fused = _times(Subspace.span([fused], n=alg.n), alg.basis_A)
            span_pair = direct_sum(_times(Subspace.span([v], n=alg.n), alg.basis_A),
                                   _times(Subspace.span([u], n=alg.n), alg.basis_A))
            if span_fused.dim == span_pair.dim:
                out[k] = fused
                break
        else:
            out.append(u)
    return out


def beurling_extract(K: Subspace, alg: SubAlg):
    """Greedy module Gram-Schmidt over D on the wandering subspace.

    Each step takes the wandering vector w of largest norm (ties broken by
    the position of its first nonzero entry), checks w* w in D, records the
    partial isometry u of w = u |w| and removes u D from the rest.  Pieces
    that together form a single partial isometry are fused at the end.
    """
    _require_invariant(K, alg)
    n = K.n
    K1, K2 = type_split(K, alg)
    W = wandering(K, alg)
    ws = [w.copy() for w in W.basis]
    scale = max((fro(w) for w in ws), default=0.0)
    cutoff = TOL_SUB * max(scale, 1e-300)
    isometries = []
    worst_wstar = 0.0
    # W* W ⊂ D on the whole wandering basis
    for x in W.basis:
        for y in W.basis:
            m = adj(x) @ y
            worst_wstar = max(worst_wstar, fro(m - alg.expectation(m)))
    if worst_wstar > 1e-8:
        raise NotSubdiagonalError("W* W is not contained in D", residual=worst_wstar)
    while ws:
        norms = np.array([fro(w) for w in ws])
        if norms.max() <= cutoff:
            break
        top = norms.max()
        ties = [i for i in range(len(ws)) if norms[i] >= top * (1 - 1e-9)]
        pick = min(ties, key=lambda i: _first_nonzero(ws[i], 1e-9 * top))
        w = ws.pop(pick)
        ww = adj(w) @ w
        if fro(ww - alg.expectation(ww)) > 1e-8 * max(fro(ww), 1e-300):
            raise NotSubdiagonalError("w* w is not in D", residual=fro(ww - alg.expectation(ww)))
        ww = alg.expectation(ww)
        ww = 0.5 * (ww + adj(ww))
        mod = mat_fn(ww, "power", 0.5)
        wv, vv = np.linalg.eigh(mod)
        # small singular directions of w stay in the remainder and are picked up later
        keep = wv > MODULUS_CUT * max(wv.max(), 1e-300)
        pinv = (vv[:, keep] / wv[keep]) @ adj(vv[:, keep])
        u = w @ pinv
        isometries.append(u)
        for _ in range(2):
            ws = [x - u @ alg.expectation(adj(u) @ x) for x in ws]
    isometries = _merge(isometries, alg)
    recon = direct_sum(*([_times(Subspace.span([u], n=n), alg.basis_A) for u in isometries] + [K2]))
    residuals = {
        "wstar_w_in_D": worst_wstar,
        "reconstruction": subspace_distance(recon, K),
        "projection": max((_projection_defect(adj(u) @ u) for u in isometries), default=0.0),
        "modulus_in_D": max((fro(adj(u) @ u - alg.expectation(adj(u) @ u)) for u in isometries),
                            default=0.0),
        "orthogonal_ranges": max((fro(adj(isometries[i]) @ isometries[j])
                                  for i in range(len(isometries))
                                  for j in range(len(isometries)) if i != j), default=0.0),
        "type2_dim": K2.dim,
    }
    return BeurlingDecomp(isometries, K2, W, residuals)


def random_invariant_subspace(alg: SubAlg, seed=0, generators=1, rank=None, rng=None):
    """span{g_j a : a in A} for random g_j; ``rank`` limits the rank of each g_j."""
    if generators < 1:
        raise ValueError("generators must be >= 1")
    if rng is None:
        rng = np.random.default_rng(seed)
    n = alg.n
    mats = []
    for _ in range(generators):
        r = n if rank is None else rank
        left = rng.standard_normal((n, r)) + 1j * rng.standard_normal((n, r))
        right = rng.standard_normal((r, n)) + 1j * rng.standard_normal((r, n))
        g = left @ right
        mats.extend(g @ a for a in alg.basis_A)
    return Subspace.span(mats, n=n, tol=1e-9)
