"""Delayed wave profiles on a truncated line by Newton's method and continuation in the delay.

The profile problem is

    w'' + c w' + w (1 - w - f(w(x + c tau))) = 0,   w(-inf) = 1, w(+inf) = 0,

discretized on a uniform grid of [-L, L] with Dirichlet ends.  The unknown is
stored as ``u = w - psi`` where ``psi`` is a smooth step; this keeps full
relative precision in both exponentially flat tails.

Two closures fix the translation:

* ``pinned``: c is an extra unknown and w(pin_x) = 1/2;
* ``operator``: c = c(u) = 1/2 ln rho(u) with
  rho(u) = int (u + psi)^2 min(e^s, 1) ds.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq
from scipy.sparse.linalg import splu

from .errors import (
    ContinuationStalled,
    MonotonicityLost,
    NoConvergence,
    NonpositiveRho,
    ResidualNaN,
    SingularJacobian,
    TailTooShort,
)
from .scalar_wave import family_reaction, solve_nondelayed, speed_bounds
from .spectrum import characteristic_roots


# ---------------------------------------------------------------- cutoff, weight

def smoothstep(x):
    """Quintic S with S(0)=0, S(1)=1 and vanishing first/second derivatives at both ends."""
    t = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return t**3 * (10.0 - 15.0 * t + 6.0 * t**2)


def cutoff_and_weight(x):
    """Return (psi, psi', psi'', mu) at x.

    psi = 1 - S(x) is identically 1 for x <= 0 and 0 for x >= 1; mu = 1 + x^2.
    """
    x = np.asarray(x, dtype=float)
    t = np.clip(x, 0.0, 1.0)
    inside = (x > 0.0) & (x < 1.0)
    psi = 1.0 - smoothstep(x)
    dpsi = np.where(inside, -30.0 * t**2 * (1.0 - t) ** 2, 0.0)
    d2psi = np.where(inside, -60.0 * t * (1.0 - t) * (1.0 - 2.0 * t), 0.0)
    mu = 1.0 + x * x
    return psi, dpsi, d2psi, mu


def weight_derivatives(x):
    x = np.asarray(x, dtype=float)
    return 1.0 + x * x, 2.0 * x, np.full_like(x, 2.0)


# ---------------------------------------------------------------- grid

@dataclass(frozen=True)
class Grid:
    L: float
    n: int

    @property
    def x(self):
        return np.linspace(-self.L, self.L, self.n)

    @property
    def h(self):
        return 2.0 * self.L / (self.n - 1)

    def index_of(self, x0):
        return int(round((x0 + self.L) / self.h))


def _quadrature_weights(grid):
    """Composite Simpson weights when the interval count is even, trapezoid otherwise."""
    n, h = grid.n, grid.h
    if (n - 1) % 2 == 0:
        wts = np.full(n, 2.0)
        wts[1::2] = 4.0
        wts[0] = wts[-1] = 1.0
        return wts * h / 3.0
    wts = np.full(n, h)
    wts[0] = wts[-1] = 0.5 * h
    return wts


def _rho_weights(grid):
    x = grid.x
    return _quadrature_weights(grid) * np.minimum(np.exp(np.minimum(x, 0.0)), 1.0)


def rho(u, grid):
    psi = cutoff_and_weight(grid.x)[0]
    w = psi + np.asarray(u, dtype=float)
    # analytic left tail: int_{-inf}^{-L} w(-L)^2 e^s ds
    return float(np.dot(_rho_weights(grid), w * w) + np.exp(-grid.L) * w[0] ** 2)


def c_functional(u, grid):
    """c(u) = 1/2 ln rho(u)."""
    r = rho(u, grid)
    if not np.isfinite(r) or r <= 0.0:
        raise NonpositiveRho(f"rho(u) = {r}; the profile is corrupted")
    return 0.5 * np.log(r)


def c_gradient_vector(u, grid):
    """Vector g with c'(u) h = g . h."""
    psi = cutoff_and_weight(grid.x)[0]
    w = psi + np.asarray(u, dtype=float)
    r = rho(u, grid)
    if not np.isfinite(r) or r <= 0.0:
        raise NonpositiveRho(f"rho(u) = {r}; the profile is corrupted")
    g = _rho_weights(grid) * w
    g[0] += np.exp(-grid.L) * w[0]
    return g / r


def c_functional_gradient(u, h, grid):
    """c'(u) h = (1/rho) int (u + psi) h min(e^s, 1) ds."""
    return float(np.dot(c_gradient_vector(u, grid), np.asarray(h, dtype=float)))


# ---------------------------------------------------------------- interpolation

_OFFSETS = np.arange(-2, 4)


def hermite_weights(t):
    """Weights on offsets -2..3 of the C^1 cubic Hermite interpolant at j + t.

    Nodal slopes come from fourth-order central differences, so the rule is
    fourth-order accurate and local.  Returns (value weights, d/dt weights),
    each of shape (len(t), 6).
    """
    t = np.asarray(t, dtype=float)
    t2, t3 = t * t, t * t * t
    h00, h10 = 2 * t3 - 3 * t2 + 1, t3 - 2 * t2 + t
    h01, h11 = -2 * t3 + 3 * t2, t3 - t2
    d00, d10 = 6 * t2 - 6 * t, 3 * t2 - 4 * t + 1
    d01, d11 = -6 * t2 + 6 * t, 3 * t2 - 2 * t

    def assemble(a00, a10, a01, a11):
        return np.stack(
            [
                a10 / 12.0,
                -8.0 * a10 / 12.0 + a11 / 12.0,
                a00 - 8.0 * a11 / 12.0,
                a01 + 8.0 * a10 / 12.0,
                -a10 / 12.0 + 8.0 * a11 / 12.0,
                -a11 / 12.0,
            ],
            axis=-1,
        )

    return assemble(h00, h10, h01, h11), assemble(d00, d10, d01, d11)


@dataclass
class _Shift:
    cols: np.ndarray     # (m, 6) grid indices, possibly outside [0, n)
    wts: np.ndarray      # (m, 6) value weights
    dwts: np.ndarray     # (m, 6) d/dposition weights (already divided by h)


def _shift_stencil(positions, grid):
    xi = (np.asarray(positions, dtype=float) + grid.L) / grid.h
    # beyond a few cells outside the grid the field is constant anyway
    xi = np.clip(xi, -6.0, grid.n + 5.0)
    # positions that are grid nodes up to rounding land exactly on them
    near = np.rint(xi)
    xi = np.where(np.abs(xi - near) <= 1e-10, near, xi)
    j = np.floor(xi)
    t = xi - j
    w, dw = hermite_weights(t)
    cols = j.astype(int)[:, None] + _OFFSETS[None, :]
    return _Shift(cols, w, dw / grid.h)


def _gather(values, left, right, cols):
    n = values.shape[0]
    out = np.where(cols < 0, left, np.where(cols >= n, right, values[np.clip(cols, 0, n - 1)]))
    return out


# ---------------------------------------------------------------- discretization

def _difference_stencils(order, h):
    if order == 4:
        d1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / (12.0 * h)
        d2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12.0 * h * h)
        return np.arange(-2, 3), d1, d2
    if order == 2:
        return np.arange(-1, 2), np.array([-1.0, 0.0, 1.0]) / (2 * h), np.array([1.0, -2.0, 1.0]) / (h * h)
    raise ValueError("order must be 2 or 4")


@dataclass
class Jacobian:
    """Newton matrix in factored-friendly form.

    ``local`` is the sparse n x n block (difference operator, reaction
    diagonal and the shifted-argument band).  In operator mode the full
    Jacobian is ``local + outer(left, right)``: ``left`` is dR/dc and
    ``right`` is the gradient of c(u).  In pinned mode the unknown is (u, c);
    ``left`` is the c-column and ``right`` the pin row.
    """

    local: sp.csc_matrix
    left: np.ndarray
    right: np.ndarray
    mode: str

    def rank_one_block(self):
        if self.mode != "operator":
            raise ValueError("rank-one block exists only in operator mode")
        return np.outer(self.left, self.right)

    def toarray(self):
        A = self.local.toarray()
        if self.mode == "operator":
            return A + self.rank_one_block()
        n = A.shape[0]
        full = np.zeros((n + 1, n + 1))
        full[:n, :n] = A
        full[:n, n] = self.left
        full[n, :n] = self.right
        return full

    def matvec(self, h):
        h = np.asarray(h, dtype=float)
        if self.mode == "operator":
            return self.local @ h + self.left * np.dot(self.right, h)
        n = self.local.shape[0]
        top = self.local @ h[:n] + self.left * h[n]
        return np.concatenate([top, [np.dot(self.right, h[:n])]])

    def bordered(self):
        """Sparse (n+1) x (n+1) system; operator mode borders with s = c'(u) h."""
        n = self.local.shape[0]
        corner = -1.0 if self.mode == "operator" else 0.0
        col = sp.csc_matrix(self.left.reshape(n, 1))
        row = sp.csc_matrix(self.right.reshape(1, n))
        return sp.bmat([[self.local, col], [row, sp.csc_matrix([[corner]])]], format="csc")

    def solve(self, rhs):
        n = self.local.shape[0]
        rhs = np.asarray(rhs, dtype=float)
        if self.mode == "operator":
            big = np.concatenate([rhs, [0.0]])
        else:
            big = rhs
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error")
                lu = splu(self.bordered())
                sol = lu.solve(big)
        except (RuntimeError, Warning) as exc:
            raise SingularJacobian(str(exc)) from exc
        if not np.all(np.isfinite(sol)):
            raise SingularJacobian("non-finite Newton step")
        return sol[:n] if self.mode == "operator" else sol


class ProfileProblem:
    """Discrete residual and Jacobian of the delayed profile problem at fixed tau."""

    def __init__(self, f, tau, grid, mode="pinned", order=4, pin_x=0.0):
        if mode not in ("pinned", "operator"):
            raise ValueError(f"unknown mode {mode!r}")
        self.f = f
        self.tau = float(tau)
        self.grid = grid
        self.mode = mode
        self.order = order
        self.pin_x = float(pin_x)
        x = grid.x
        self.x = x
        self.psi, self.dpsi, self.d2psi, _ = cutoff_and_weight(x)
        self.offsets, self.s1, self.s2 = _difference_stencils(order, grid.h)
        self._ops = self._difference_operators()
        pin = _shift_stencil(np.array([self.pin_x]), grid)
        self._pin = pin

    @property
    def n(self):
        return self.grid.n

    def _difference_operators(self):
        n = self.n
        rows, cols, v1, v2 = [], [], [], []
        interior = np.arange(1, n - 1)
        for off, a, b in zip(self.offsets, self.s1, self.s2):
            c = interior + off
            ok = (c >= 0) & (c < n)
            rows.append(interior[ok])
            cols.append(c[ok])
            v1.append(np.full(ok.sum(), a))
            v2.append(np.full(ok.sum(), b))
        rows, cols = np.concatenate(rows), np.concatenate(cols)
        D1 = sp.csr_matrix((np.concatenate(v1), (rows, cols)), shape=(n, n))
        D2 = sp.csr_matrix((np.concatenate(v2), (rows, cols)), shape=(n, n))
        # psi contributions, including ghost values (1 left, 0 right)
        D1psi = np.zeros(n)
        D2psi = np.zeros(n)
        xs = self.x
        h = self.grid.h
        for off, a, b in zip(self.offsets, self.s1, self.s2):
            p = cutoff_and_weight(xs[interior] + off * h)[0]
            D1psi[interior] += a * p
            D2psi[interior] += b * p
        # plateau rows must give exact zeros
        flat = (xs[interior] + self.offsets.min() * h >= 1.0) | (xs[interior] + self.offsets.max() * h <= 0.0)
        D1psi[interior[flat]] = 0.0
        D2psi[interior[flat]] = 0.0
        return D1, D2, D1psi, D2psi

    # --- pieces shared by residual and jacobian
    def split_unknowns(self, z):
        z = np.asarray(z, dtype=float)
        if self.mode == "pinned":
            return z[: self.n], float(z[self.n])
        return z, c_functional(z, self.grid)

    def _shifted(self, u, c):
        st = _shift_stencil(self.x + c * self.tau, self.grid)
        uv = _gather(u, 0.0, 0.0, st.cols)
        pv = _gather(self.psi, 1.0, 0.0, st.cols)
        base = np.sum(pv * st.wts, axis=1)
        base = np.where(np.all(pv == 1.0, axis=1), 1.0, base)
        base = np.where(np.all(pv == 0.0, axis=1), 0.0, base)
        delta = np.sum(uv * st.wts, axis=1)
        slope = np.sum((uv + pv) * st.dwts, axis=1)
        return st, base, delta, slope

    def derivatives(self, u):
        D1, D2, D1psi, D2psi = self._ops
        return D1 @ u + D1psi, D2 @ u + D2psi

    def residual(self, z):
        u, c = self.split_unknowns(z)
        n = self.n
        dw, d2w = self.derivatives(u)
        _, base, delta, _ = self._shifted(u, c)
        fs = self.f.split(base, delta)
        w = self.psi + u
        one_minus_w = (1.0 - self.psi) - u
        R = d2w + c * dw + w * (one_minus_w - fs)
        R[0] = u[0]
        R[n - 1] = u[n - 1]
        if self.mode == "pinned":
            pv = _gather(self.psi, 1.0, 0.0, self._pin.cols)[0]
            uv = _gather(u, 0.0, 0.0, self._pin.cols)[0]
            pin = np.dot(pv + uv, self._pin.wts[0]) - 0.5
            R = np.concatenate([R, [pin]])
        if not np.all(np.isfinite(R)):
            raise ResidualNaN("non-finite residual (f evaluation overflowed)")
        return R

    def jacobian(self, z):
        u, c = self.split_unknowns(z)
        n = self.n
        D1, D2, _, _ = self._ops
        dw, _ = self.derivatives(u)
        st, base, delta, slope = self._shifted(u, c)
        fs = self.f.split(base, delta)
        dfs = self.f.split(base, delta, order=1)
        w = self.psi + u
        one_minus_w = (1.0 - self.psi) - u

        interior = np.zeros(n, dtype=bool)
        interior[1:-1] = True
        diag = np.where(interior, one_minus_w - w - fs, 0.0)
        A = (D2 + c * D1).tocsr() + sp.diags(diag)

        # shifted-argument band: -w_i f'(w_s) * interpolation weights
        coef = -w * dfs
        rows = np.repeat(np.arange(n), 6).reshape(n, 6)
        vals = coef[:, None] * st.wts
        ok = (st.cols >= 0) & (st.cols < n) & interior[:, None]
        band = sp.csr_matrix((vals[ok], (rows[ok], st.cols[ok])), shape=(n, n))
        local = (A + band).tolil()
        local[0, :] = 0.0
        local[n - 1, :] = 0.0
        local[0, 0] = 1.0
        local[n - 1, n - 1] = 1.0
        local = local.tocsc()

        dR_dc = np.where(interior, dw + coef * self.tau * slope, 0.0)
        if self.mode == "pinned":
            pin_row = np.zeros(n)
            cols = self._pin.cols[0]
            okp = (cols >= 0) & (cols < n)
            np.add.at(pin_row, cols[okp], self._pin.wts[0][okp])
            return Jacobian(local, dR_dc, pin_row, "pinned")
        g = c_gradient_vector(u, self.grid)
        return Jacobian(local, dR_dc, g, "operator")


# ---------------------------------------------------------------- solutions

@dataclass(frozen=True)
class ProfileOptions:
    L: float = 60.0
    n: int = 2401
    newton_tol: float = 1e-10
    max_iter: int = 40
    mode: str = "pinned"
    alpha: float = 0.5
    order: int = 4

    @property
    def grid(self):
        return Grid(self.L, self.n)


@dataclass(frozen=True)
class DecayRates:
    gamma_plus_fit: float
    gamma_minus_fit: float
    gamma_plus_pred: float
    gamma_minus_pred: float


@dataclass(frozen=True)
class WaveSolution:
    tau: float
    c: float
    x: np.ndarray
    u: np.ndarray
    w: np.ndarray
    dw: np.ndarray
    iterations: int
    residual: float
    monotone: bool
    mode: str
    grid: Grid
    decay: DecayRates | None = None
    norm_Emu: float = float("nan")
    pin_x: float = 0.0
    warnings: tuple = field(default_factory=tuple)

    @property
    def gamma_plus(self):
        return self.decay.gamma_plus_fit if self.decay else float("nan")

    @property
    def gamma_minus(self):
        return self.decay.gamma_minus_fit if self.decay else float("nan")

    def unknowns(self, mode=None):
        mode = mode or self.mode
        return np.concatenate([self.u, [self.c]]) if mode == "pinned" else self.u.copy()


def is_monotone(u, grid):
    """Strict decrease of w = psi + u at every adjacent grid pair."""
    psi = cutoff_and_weight(grid.x)[0]
    dw = np.diff(u) + np.diff(psi)
    return bool(np.all(dw < 0.0))


def interior_range_ok(u, grid):
    """0 < w < 1 strictly at interior points, evaluated without cancellation."""
    psi = cutoff_and_weight(grid.x)[0]
    w = psi + u
    one_minus = (1.0 - psi) - u
    return bool(np.all(w[1:-1] > 0.0) and np.all(one_minus[1:-1] > 0.0))


def newton(problem, z0, tol=1e-10, max_iter=40):
    """Damped Newton: halve the step while the sup-residual grows."""
    z = np.array(z0, dtype=float)
    try:
        R = problem.residual(z)
    except (NonpositiveRho, ResidualNaN) as exc:
        raise NoConvergence(f"initial guess rejected: {exc}") from exc
    r = np.max(np.abs(R))
    it = 0
    # at least one step: tail entries far below tol are still corrected
    while r > tol or it == 0:
        if it >= max_iter:
            raise NoConvergence(f"no convergence after {max_iter} iterations (residual {r:.3e})")
        it += 1
        try:
            step = problem.jacobian(z).solve(-R)
        except (SingularJacobian, NonpositiveRho) as exc:
            raise NoConvergence(f"Newton step failed at iteration {it}: {exc}") from exc
        lam = 1.0
        while True:
            trial = z + lam * step
            try:
                Rt = problem.residual(trial)
                rt = np.max(np.abs(Rt))
            except (NonpositiveRho, ResidualNaN):
                rt = np.inf
            if rt < r or lam < 1e-3 or (it == 1 and r <= tol and rt <= tol):
                break
            lam *= 0.5
        if not np.isfinite(rt):
            raise NoConvergence(f"damped step left the admissible set at iteration {it}")
        if rt >= r and lam < 1e-3 and not (r <= tol and rt <= tol):
            # stagnation at round-off: accept if already close
            if r <= 10.0 * tol:
                break
            raise NoConvergence(f"damping failed at iteration {it} (residual {r:.3e})")
        z, R, r = trial, Rt, rt
    return z, it, r


def _initial_unknowns(init, grid, mode):
    """Accept a WaveSolution, a NondelayedWave-like object, a (w, c) pair or a bare w array."""
    x = grid.x
    psi = cutoff_and_weight(x)[0]
    c = 0.0
    if isinstance(init, WaveSolution):
        if init.grid == grid:
            u = init.u.copy()
        else:
            u = np.interp(x, init.x, init.w) - psi
        c = init.c
    elif hasattr(init, "w") and hasattr(init, "c"):
        u = np.interp(x, init.x, init.w) - psi
        om = getattr(init, "one_minus_w", None)
        if om is not None and np.array_equal(init.x, x):
            left = psi == 1.0
            u[left] = -om[left]
        c = init.c
    elif isinstance(init, tuple):
        w, c = init
        u = np.asarray(w, dtype=float) - psi
    else:
        u = np.asarray(init, dtype=float) - psi
    if mode == "pinned":
        return np.concatenate([u, [c]])
    return u


def _finalize(problem, z, iterations, residual, opts):
    u, c = problem.split_unknowns(z)
    grid = problem.grid
    dw, _ = problem.derivatives(u)
    w = problem.psi + u
    mono = is_monotone(u, grid)
    notes = []
    if not mono:
        notes.append("MonotonicityLost: profile not strictly decreasing")
    if not interior_range_ok(u, grid):
        notes.append("profile leaves (0, 1) in the interior")
    sol = WaveSolution(
        tau=problem.tau, c=float(c), x=grid.x, u=u, w=w, dw=dw, iterations=iterations,
        residual=float(residual), monotone=mono, mode=problem.mode, grid=grid,
        pin_x=problem.pin_x, warnings=tuple(notes),
    )
    decay = None
    if mono:
        try:
            decay = decay_rates(sol, problem.f)
        except TailTooShort as exc:
            notes.append(str(exc))
    norm = weighted_norm(u, grid, opts.alpha)
    return replace(sol, decay=decay, norm_Emu=norm, warnings=tuple(notes))


def solve_profile(f, tau, init=None, opts=None, pin_x=0.0):
    """Converged delayed profile at delay ``tau``.

    ``init`` defaults to the non-delayed shooting front.  Monotonicity loss is
    not an error here: it is recorded in ``warnings`` and ``monotone``.
    """
    opts = opts or ProfileOptions()
    grid = opts.grid
    if init is None:
        F, dF = family_reaction(f)
        init = solve_nondelayed(F, dF=dF, L=opts.L, n=opts.n)
    problem = ProfileProblem(f, tau, grid, mode=opts.mode, order=opts.order, pin_x=pin_x)
    z0 = _initial_unknowns(init, grid, opts.mode)
    z, it, r = newton(problem, z0, tol=opts.newton_tol, max_iter=opts.max_iter)
    return _finalize(problem, z, it, r, opts)


def recenter_pinned(sol, f, opts=None, tol=1e-13):
    """Move the pin of a pinned solution until c(u) equals its speed.

    The pin location s solves c_functional(u_s) - c_s = 0, where (u_s, c_s) is
    the pinned solution with w(s) = 1/2; each evaluation re-solves the pinned
    problem from the previous one.  Returns the recentred WaveSolution.
    """
    opts = opts or ProfileOptions()
    grid = sol.grid
    opts = replace(opts, mode="pinned", L=grid.L, n=grid.n)
    cache = {}

    def solve_at(s, start):
        key = float(s)
        if key not in cache:
            cache[key] = solve_profile(f, sol.tau, init=start, opts=opts, pin_x=s)
        return cache[key]

    def mismatch(s, start):
        s_sol = solve_at(s, start)
        return c_functional(s_sol.u, grid) - s_sol.c

    # first guess by shifting the sampled profile
    def shifted_gap(s):
        w = np.interp(grid.x - s + sol.pin_x, grid.x, sol.w, left=1.0, right=0.0)
        return c_functional(w - cutoff_and_weight(grid.x)[0], grid) - sol.c

    lo, hi = -10.0, 10.0
    s0 = brentq(shifted_gap, lo, hi, xtol=1e-12)
    s1 = s0 + 1e-3
    g0 = mismatch(s0, sol)
    g1 = mismatch(s1, solve_at(s0, sol))
    for _ in range(30):
        if abs(g1) <= tol or g1 == g0:
            break
        s2 = s1 - g1 * (s1 - s0) / (g1 - g0)
        s0, g0 = s1, g1
        s1, g1 = s2, mismatch(s2, solve_at(s0, sol))
    return solve_at(s1, sol)


def operator_residual(sol, f):
    """Sup of the operator-mode residual (c taken from c(u)) at a solution's profile."""
    problem = ProfileProblem(f, sol.tau, sol.grid, mode="operator")
    return float(np.max(np.abs(problem.residual(sol.u))))


# ---------------------------------------------------------------- diagnostics

def _stencil_weights(offsets, k):
    """Weights of the k-th derivative on integer ``offsets`` (unit spacing)."""
    offsets = np.asarray(offsets, dtype=float)
    V = np.vander(offsets, increasing=True).T
    rhs = np.zeros(offsets.size)
    rhs[k] = float(np.prod(np.arange(1, k + 1)))
    return np.linalg.solve(V, rhs)


def _segment_derivative(v, h, k, npts=7):
    """k-th derivative from npts-point stencils kept inside the segment (centred when possible)."""
    m = v.size
    if m < npts:
        out = v
        for _ in range(k):
            out = np.gradient(out, h, edge_order=2 if m > 2 else 1)
        return out
    half = npts // 2
    out = np.empty(m)
    w = _stencil_weights(np.arange(-half, half + 1), k) / h**k
    out[half:m - half] = sum(w[j] * v[j:m - npts + 1 + j] for j in range(npts))
    for i in range(half):
        out[i] = np.dot(_stencil_weights(np.arange(npts) - i, k), v[:npts]) / h**k
        j = m - 1 - i
        out[j] = np.dot(_stencil_weights(np.arange(npts) - (j - (m - npts)), k), v[m - npts:]) / h**k
    return out


def _derivative(v, h, k, x=None, breaks=(0.0, 1.0)):
    """k-th derivative; stencils do not cross ``breaks`` that fall on grid nodes.

    The cutoff psi is a quintic on [0, 1] and constant outside, so splitting
    there differentiates u = w - psi as accurately as the smooth w.
    """
    v = np.asarray(v, dtype=float)
    if x is None:
        return _segment_derivative(v, h, k)
    cuts = []
    for b in breaks:
        i = int(np.rint((b - x[0]) / h))
        if 0 < i < v.size - 1 and abs(x[i] - b) <= 1e-9 * h:
            cuts.append(i)
    out = np.empty_like(v)
    start = 0
    for i in cuts + [v.size - 1]:
        # segments share their end nodes; the left segment's value is kept there
        seg = _segment_derivative(v[start:i + 1], h, k)
        out[start:i + 1] = seg if start == 0 else np.concatenate([[out[start]], seg[1:]])
        start = i
    return out


def holder_seminorm(p, h, alpha=0.5, levels=10):
    """max |p(x) - p(y)| / |x - y|^alpha over pairs at separations h * 2^j, j = 0..levels."""
    p = np.asarray(p, dtype=float)
    best = 0.0
    for j in range(levels + 1):
        d = 2**j
        if d >= p.size:
            break
        best = max(best, float(np.max(np.abs(p[d:] - p[:-d]))) / (d * h) ** alpha)
    return best


def weighted_norm(u, grid, alpha=0.5):
    """Discrete estimate of ||u||_{E_mu} = ||mu u||_E with mu = 1 + x^2.

    The E-norm is |p| + |p'| + |p''| (sup norms) + [p'']_alpha.  Derivatives
    of u are taken piecewise on x <= 0, [0, 1] and x >= 1, where the third
    derivative of psi jumps; the estimate stays linear in u.
    """
    h, x = grid.h, grid.x
    u = np.asarray(u, dtype=float)
    mu, dmu, d2mu = weight_derivatives(x)
    du = _derivative(u, h, 1, x)
    d2u = _derivative(u, h, 2, x)
    p = mu * u
    dp = dmu * u + mu * du
    d2p = d2mu * u + 2.0 * dmu * du + mu * d2u
    return float(
        np.max(np.abs(p)) + np.max(np.abs(dp)) + np.max(np.abs(d2p)) + holder_seminorm(d2p, h, alpha)
    )


def _tail_fit(x, y):
    if x.size < 20:
        raise TailTooShort(f"tail window has {x.size} points (< 20); increase L")
    slope = np.polyfit(x, np.log(y), 1)[0]
    return float(slope)


def decay_rates(sol, f):
    """Fitted and predicted exponential tail rates (gamma_plus at +inf, gamma_minus at -inf)."""
    x = sol.x
    psi = cutoff_and_weight(x)[0]
    w = psi + sol.u
    one_minus = (1.0 - psi) - sol.u
    right = (x > 1.0) & (w > 1e-8) & (w < 1e-3)
    left = (x < 0.0) & (one_minus > 1e-8) & (one_minus < 1e-3)
    g_plus = -_tail_fit(x[right], w[right])
    g_minus = _tail_fit(x[left], one_minus[left])
    plus = characteristic_roots(f, sol.c, sol.tau, "plus")
    minus = characteristic_roots(f, sol.c, sol.tau, "minus")
    return DecayRates(g_plus, g_minus, -plus.roots[0], minus.roots[0])


# ---------------------------------------------------------------- continuation

@dataclass(frozen=True)
class BoundCheck:
    tau: float
    c: float
    ok: bool
    detail: str


@dataclass(frozen=True)
class Sweep:
    solutions: tuple
    bounds: object = None
    checks: tuple = ()
    substeps: int = 0

    @property
    def taus(self):
        return np.array([s.tau for s in self.solutions])

    @property
    def speeds(self):
        return np.array([s.c for s in self.solutions])

    @property
    def max_norm(self):
        return max(s.norm_Emu for s in self.solutions)

    @property
    def all_monotone(self):
        return all(s.monotone for s in self.solutions)


def check_speed_bound(c, bounds, slack=1e-3):
    ok = abs(c) <= bounds.c_star + slack
    if c > 0:
        ok = ok and c <= bounds.c0 + slack
    if c < 0:
        ok = ok and c >= bounds.c1 - slack
    return ok, f"c={c:.6g} c1={bounds.c1:.6g} c0={bounds.c0:.6g} c*={bounds.c_star:.6g}"


def continue_in_tau(f, tau_max, dtau, opts=None, bounds=None):
    """Natural continuation in the delay from the tau = 0 shooting front.

    Each step starts from the previous solution.  A failed step is retried with
    halved increments down to ``dtau / 16``.
    """
    opts = opts or ProfileOptions()
    if bounds is None:
        bounds = speed_bounds(f)
    F, dF = family_reaction(f)
    start = solve_nondelayed(F, dF=dF, L=opts.L, n=opts.n)
    current = solve_profile(f, 0.0, init=start, opts=opts)
    if not current.monotone:
        raise MonotonicityLost("tau = 0 solution is not monotone", current)
    sols = [current]
    n_steps = int(round(tau_max / dtau)) if tau_max > 0 else 0
    targets = [k * dtau for k in range(1, n_steps + 1)]
    substeps = 0
    for target in targets:
        tau = current.tau
        h = dtau
        while tau < target - 1e-12:
            nxt = min(tau + h, target)
            try:
                trial = solve_profile(f, nxt, init=current, opts=opts)
            except NoConvergence:
                h *= 0.5
                if h < dtau / 16.0 - 1e-15:
                    raise ContinuationStalled(
                        f"continuation stalled after tau = {current.tau:.6g}", current.tau
                    )
                continue
            if not trial.monotone:
                raise MonotonicityLost(
                    f"step to tau = {nxt:.6g} converged but lost monotonicity", trial
                )
            if nxt < target - 1e-12:
                substeps += 1
            current, tau = trial, nxt
        sols.append(current)
    checks = tuple(
        BoundCheck(s.tau, s.c, *check_speed_bound(s.c, bounds)) for s in sols
    )
    return Sweep(tuple(sols), bounds, checks, substeps)
