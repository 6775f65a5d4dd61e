"""Fuglede-Kadison determinant Delta(f) = exp tau(log |f|) on M_n."""
import numpy as np

from .matcore import RANK_TOL, adj, as_cmatrix, mat_fn, polar, singular_values

REL_TOL_DET = 1e-9
AH_MARGIN = 1e-6
AH_GRID = 64
AH_GRID_MAX = 4096


def fk_det(f):
    """Geometric mean of the singular values; 0 when ``f`` is numerically singular.

    Equal to the infimum over eps > 0 of Delta(|f| + eps), which is attained
    in the limit, so no regularization parameter is needed.
    """
    f = as_cmatrix(f, "f")
    sv = singular_values(f)
    if sv[0] == 0.0 or sv[-1] <= RANK_TOL * sv[0]:
        return 0.0
    return float(np.exp(np.mean(np.log(sv))))


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def _gauss(rng, n):
    return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)


def det_axiom_suite(seed, n, trials, rel_tol=REL_TOL_DET):
    """Check the determinant axioms on ``trials`` random instances.

    (1) Delta(h) = Delta(h*) = Delta(|h|); (2) h >= g >= 0 implies
    Delta(h) >= Delta(g); (3) Delta(h^q) = Delta(h)^q for q in {1/2, 2, 3};
    (4) Delta(hb) = Delta(h) Delta(b) = Delta(bh).  Every Delta value is also
    compared with |det|^(1/n).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    failures = []
    max_res = 0.0
    for t in range(trials):
        h = _gauss(rng, n)
        b = _gauss(rng, n)
        g0 = _gauss(rng, n)
        g = g0 @ adj(g0)
        extra = _gauss(rng, n)
        hp = g + extra @ adj(extra)
        d = fk_det(h)
        res = {
            "adjoint": _rel(d, fk_det(adj(h))),
            "modulus": _rel(d, fk_det(polar(h).modulus)),
            "oracle": _rel(d, abs(np.linalg.det(h)) ** (1.0 / n)),
            "product_left": _rel(fk_det(h @ b), d * fk_det(b)),
            "product_right": _rel(fk_det(b @ h), d * fk_det(b)),
        }
        pos = polar(h).modulus
        for q in (0.5, 2.0, 3.0):
            res[f"power_{q:g}"] = _rel(fk_det(mat_fn(pos, "power", q)), d ** q)
        dh, dg = fk_det(hp), fk_det(g)
        res["monotone"] = max(0.0, (dg - dh) / max(dh, 1e-300))
        worst = max(res.values())
        max_res = max(max_res, worst)
        if worst > rel_tol:
            failures.append({"trial": t, "residuals": res})
    return {"instances": trials, "passes": trials - len(failures),
            "failures": len(failures), "max_residual": max_res, "failed": failures}


def ah_grid(points):
    """t values 0.5, -0.5, then geometrically shrinking magnitudes down to 2**-32."""
    half = points // 2
    mags = 2.0 ** -(1.0 + np.arange(half) * (31.0 / max(half - 1, 1)))
    out = np.empty(2 * half)
    out[0::2] = mags
    out[1::2] = -mags
    return out


def arens_hoffman_witness(h, alg=None, grid=AH_GRID, grid_max=AH_GRID_MAX, margin=AH_MARGIN):
    """First t on the grid with Delta(1 - t h) < 1 - margin, or None.

    A nonzero selfadjoint h always admits such t; the grid is doubled up to
    ``grid_max`` points before giving up.  ``alg`` is accepted for
    interface symmetry and is not used.
    """
    h = as_cmatrix(h, "h")
    n = h.shape[0]
    one = np.eye(n)
    size = grid
    while size <= grid_max:
        for t in ah_grid(size):
            if fk_det(one - t * h) < 1.0 - margin:
                return float(t)
        size *= 2
    return None
