"""Szegő-type extremal problems over A_0 + {d in D : Delta(d) >= 1}.

The optimum value of each problem is Delta(h), which :func:`fk_det`
computes independently from singular values; the optimizers here never
call it, so agreement is a genuine check.

d is parametrized as exp(s) with s Hermitian in D and tau(s) = 0, so
Delta(d) = 1 identically and the determinant constraint disappears.
Restricting to positive d loses nothing: the polar phase of d is a
unitary in D that can be moved onto the A_0 part.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .algebra import SubAlg
from .errors import NotPositiveError
from .fkdet import fk_det
from .matcore import adj, as_cmatrix, fro, herm_eig, is_hermitian, mat_fn


@dataclass
class SzegoOptions:
    restarts: int = 8
    max_iters: int = 5000
    grad_tol: float = 1e-8
    seed: int = 0
    fd_step: float = 1e-5
    armijo: float = 1e-4
    backtrack: float = 0.5


@dataclass
class SzegoResult:
    value: float
    argmin_a: np.ndarray
    argmin_d: np.ndarray
    iterations: int
    converged: bool
    restarts_used: int
    grad_norm: float = 0.0
    mirror_value: Optional[float] = None
    restart_values: list = field(default_factory=list)


def opt_tol_for(alg: SubAlg):
    """1e-4 for scalar-diagonal partitions, 1e-3 when D has a block of size > 1."""
    if alg.kind == "block_upper" and max(alg.partition.sizes) == 1:
        return 1e-4
    return 1e-3


def _require_psd(h):
    h = as_cmatrix(h, "h")
    if not is_hermitian(h):
        raise NotPositiveError("h must be Hermitian positive semidefinite")
    w = herm_eig(h, method="lapack").values
    if w[0] < -1e-10 * max(abs(w[-1]), 1e-300):
        raise NotPositiveError("h must be positive semidefinite")
    return 0.5 * (h + adj(h))


def _psd_power(x, e):
    w, v = np.linalg.eigh(0.5 * (x + adj(x)))
    w = np.clip(w, 0.0, None)
    return (v * w ** e) @ adj(v)


def szego_objective(a, d, h, p=2.0):
    """tau(h |a + d|^p)."""
    x = np.asarray(a) + np.asarray(d)
    n = x.shape[0]
    m = adj(x) @ x
    mp = m if p == 2 else _psd_power(m, p / 2.0)
    return float(np.real(np.trace(h @ mp)) / n)


def _sub_rngs(seed, count):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def _exp_herm(s):
    w, v = np.linalg.eigh(s)
    return (v * np.exp(w)) @ adj(v), w, v


class _L2Problem:
    """G(theta) = min over a in A_0 of tau((a + d) h (a + d)*), d = exp(sum theta_k S_k)."""

    def __init__(self, h, alg):
        self.h = h
        self.n = alg.n
        self.S = alg.hermitian_basis_D0
        self.A0 = alg.basis_A0
        self.r = _psd_power(h, 0.5)
        if self.A0.shape[0]:
            self.cols = np.stack([(a @ self.r).reshape(-1) for a in self.A0], axis=1)

    def d_of(self, theta):
        s = np.einsum("k,kij->ij", theta, self.S) if len(theta) else np.zeros((self.n, self.n), complex)
        return _exp_herm(0.5 * (s + adj(s)))

    def evaluate(self, theta, want_grad=True):
        d, w, v = self.d_of(theta)
        if self.A0.shape[0]:
            coef, *_ = np.linalg.lstsq(self.cols, -(d @ self.r).reshape(-1), rcond=None)
            a = np.einsum("k,kij->ij", coef, self.A0)
        else:
            a = np.zeros_like(d)
        x = a + d
        val = fro(x @ self.r) ** 2 / self.n
        if not want_grad:
            return val, None, a, d
        # envelope theorem: only the explicit dependence on d matters
        m = self.h @ adj(x)
        lam = w
        diff = lam[:, None] - lam[None, :]
        el = np.exp(lam)
        with np.errstate(divide="ignore", invalid="ignore"):
            gamma = np.where(np.abs(diff) > 1e-12,
                             np.exp(lam[None, :]) * np.expm1(diff) / np.where(diff == 0, 1, diff),
                             0.5 * (el[:, None] + el[None, :]))
        mt = adj(v) @ m @ v
        grad = np.empty(len(theta))
        for k, sk in enumerate(self.S):
            et = adj(v) @ sk @ v
            grad[k] = 2.0 * np.real(np.sum(gamma * et * mt.T)) / self.n
        return val, grad, a, d


def _descend(prob, theta, opts):
    """Gradient descent, Barzilai-Borwein trial step, Armijo backtracking."""
    val, g, a, d = prob.evaluate(theta)
    step = 1.0
    gn = float(np.linalg.norm(g))
    for it in range(1, opts.max_iters + 1):
        if gn <= opts.grad_tol * max(1.0, val):
            return theta, val, a, d, it - 1, True, gn
        while True:
            trial = theta - step * g
            tval, _, _, _ = prob.evaluate(trial, want_grad=False)
            if tval <= val - opts.armijo * step * gn * gn:
                break
            step *= opts.backtrack
            if step < 1e-20:
                return theta, val, a, d, it, False, gn
        val_new, g_new, a, d = prob.evaluate(trial)
        ds = trial - theta
        dg = g_new - g
        curv = float(ds @ dg)
        step = float(ds @ ds) / curv if curv > 0 else 2.0 * step
        theta, val, g = trial, val_new, g_new
        gn = float(np.linalg.norm(g))
    return theta, val, a, d, opts.max_iters, gn <= opts.grad_tol * max(1.0, val), gn


def szego_l2(h, alg: SubAlg, opts: Optional[SzegoOptions] = None):
    """Minimize tau(h |a + d|^2) over a in A_0, d in D with Delta(d) >= 1.

    The inner problem in a is exact least squares; the outer problem in
    s = log d runs gradient descent with Armijo backtracking from
    ``opts.restarts`` starting points (s = 0 first).
    """
    opts = opts or SzegoOptions()
    h = _require_psd(h)
    prob = _L2Problem(h, alg)
    k = prob.S.shape[0]
    rngs = _sub_rngs(opts.seed, max(opts.restarts, 1))
    best = None
    values = []
    for i in range(max(opts.restarts, 1)):
        theta0 = np.zeros(k) if i == 0 else rngs[i].standard_normal(k)
        theta, val, a, d, its, conv, gn = _descend(prob, theta0, opts)
        values.append(val)
        if best is None or val < best.value:
            best = SzegoResult(val, a, d, its, conv, i + 1, gn)
    best.restarts_used = max(opts.restarts, 1)
    best.restart_values = values
    return best


class _JointProblem:
    """Joint parametrization (a0 coefficients, theta) for the general-p objectives."""

    def __init__(self, alg, objective):
        self.n = alg.n
        self.S = alg.hermitian_basis_D0
        self.A0 = alg.basis_A0
        self.m = self.A0.shape[0]
        self.k = self.S.shape[0]
        self.objective = objective

    def unpack(self, z):
        c = z[: self.m] + 1j * z[self.m: 2 * self.m]
        theta = z[2 * self.m:]
        a = np.einsum("k,kij->ij", c, self.A0) if self.m else np.zeros((self.n, self.n), complex)
        s = np.einsum("k,kij->ij", theta, self.S) if self.k else np.zeros((self.n, self.n), complex)
        d, _, _ = _exp_herm(0.5 * (s + adj(s)))
        return a, d

    def __call__(self, z):
        a, d = self.unpack(z)
        return self.objective(a + d)

    def size(self):
        return 2 * self.m + self.k


def _fd_grad(fun, z, step):
    g = np.empty_like(z)
    for i in range(z.size):
        hi = step * max(1.0, abs(z[i]))
        zp = z.copy()
        zm = z.copy()
        zp[i] += hi
        zm[i] -= hi
        g[i] = (fun(zp) - fun(zm)) / (2.0 * hi)
    return g


def _minimize_joint(prob, opts):
    rngs = _sub_rngs(opts.seed, max(opts.restarts, 1))
    best = None
    values = []
    size = prob.size()
    for i in range(max(opts.restarts, 1)):
        z0 = np.zeros(size) if i == 0 else 0.5 * rngs[i].standard_normal(size)
        if size == 0:
            val = prob(z0)
            res_x, its, conv, gn = z0, 0, True, 0.0
        else:
            res = minimize(prob, z0, jac=lambda z: _fd_grad(prob, z, opts.fd_step),
                           method="BFGS",
                           options={"gtol": opts.grad_tol, "maxiter": opts.max_iters})
            res_x, val, its = res.x, float(res.fun), int(res.nit)
            gn = float(np.linalg.norm(res.jac))
            # finite-difference noise can stop BFGS short of gtol at a true minimizer
            conv = bool(res.success) or gn <= 1e-6 * max(1.0, val)
        values.append(val)
        if best is None or val < best.value:
            a, d = prob.unpack(res_x)
            best = SzegoResult(val, a, d, its, conv, i + 1, gn)
    best.restarts_used = max(opts.restarts, 1)
    best.restart_values = values
    return best


def szego_l1p(h, p, alg: SubAlg, opts: Optional[SzegoOptions] = None):
    """Minimize tau(h |a + d|^p), p >= 1, over the same feasible set."""
    if p < 1:
        raise ValueError("p must be >= 1")
    opts = opts or SzegoOptions()
    h = _require_psd(h)
    n = alg.n

    def obj(x):
        return float(np.real(np.trace(h @ _psd_power(adj(x) @ x, p / 2.0))) / n)

    return _minimize_joint(_JointProblem(alg, obj), opts)


def szego_lp_general(h, p, q, alg: SubAlg, opts: Optional[SzegoOptions] = None):
    """Minimize tau(|h^{q/p} a|^p)^{1/q} over a in A with Delta(Phi(a)) >= 1.

    The mirrored problem tau(|a h^{q/p}|^p)^{1/q} is solved as well and its
    optimum is returned in ``mirror_value``.
    """
    if p <= 0 or q <= 0:
        raise ValueError("p and q must be positive")
    opts = opts or SzegoOptions()
    h = _require_psd(h)
    n = alg.n
    g = _psd_power(h, q / p)

    def left(x):
        y = g @ x
        return float(np.real(np.trace(_psd_power(adj(y) @ y, p / 2.0))) / n) ** (1.0 / q)

    def right(x):
        y = x @ g
        return float(np.real(np.trace(_psd_power(adj(y) @ y, p / 2.0))) / n) ** (1.0 / q)

    res = _minimize_joint(_JointProblem(alg, left), opts)
    mirror = _minimize_joint(_JointProblem(alg, right), opts)
    res.mirror_value = mirror.value
    res.converged = res.converged and mirror.converged
    return res


def det_zero_criterion(h, p, q, alg: SubAlg):
    """(distance from h^{q/p} to span(h^{q/p} A_0) in L^2, Delta(h)).

    A positive determinant forces a positive distance; the converse fails
    in general (A = M gives A_0 = 0 and distance = norm).
    """
    h = _require_psd(h)
    g = mat_fn(h, "power", q / p)
    n = alg.n
    gens = [g @ a0 for a0 in alg.basis_A0]
    if gens:
        cols = np.stack([x.reshape(-1) for x in gens], axis=1)
        coef, *_ = np.linalg.lstsq(cols, g.reshape(-1), rcond=None)
        resid = g.reshape(-1) - cols @ coef
    else:
        resid = g.reshape(-1)
    return float(np.linalg.norm(resid) / np.sqrt(n)), fk_det(h)
