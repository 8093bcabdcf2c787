"""Method-of-lines simulation of the delayed reaction-diffusion equation

    v_t = v_xx + c_frame v_x + v (1 - v - f(v(x, t - tau)))

on [-L_sim, L_sim] with Dirichlet ends held at their initial values.

Diffusion (and the optional co-moving advection) is Crank-Nicolson; the
reaction is explicit, two-step Adams-Bashforth, with the delayed frame read
from a ring buffer.  dt divides tau exactly, so no interpolation in time.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack
from scipy.stats import linregress

from .errors import BlowUp, InvalidStep, WindowTooShort
from .profile_solver import cutoff_and_weight

GUARD = (-0.05, 1.05)
DT_TARGET = 0.01
L_SIM = 150.0
DX = 0.05
BURN_IN = 0.2
MIN_TRACK = 100


def _response(f, v):
    # exact zero of f at v = 1 keeps v = 1 a fixed point to the last bit
    if hasattr(f, "near_one"):
        return np.where(v > 0.5, f.near_one(v - 1.0), f(v))
    return f(v)


def front_position(x, v, level=0.5):
    """Leftmost x where v crosses ``level`` downward, by linear interpolation."""
    below = np.flatnonzero(v < level)
    if below.size == 0 or below[0] == 0:
        return np.nan
    i = below[0]
    v0, v1 = v[i - 1], v[i]
    return float(x[i - 1] + (v0 - level) / (v0 - v1) * (x[i] - x[i - 1]))


@dataclass
class SimState:
    f: object
    x: np.ndarray
    v: np.ndarray
    tau: float
    dt: float
    ring: np.ndarray        # (lag + 1, n) past frames, ring[head] is the current one
    head: int
    t: float = 0.0
    c_frame: float = 0.0
    left: float = 1.0
    right: float = 0.0
    track_t: list = field(default_factory=list)
    track_x: list = field(default_factory=list)
    _lu: tuple = field(default=None, repr=False)
    _prev_reaction: np.ndarray = field(default=None, repr=False)

    @property
    def lag(self):
        return self.ring.shape[0] - 1

    @property
    def h(self):
        return float(self.x[1] - self.x[0])

    def delayed(self):
        """Frame at t - tau (the oldest in the ring)."""
        return self.ring[(self.head + 1) % self.ring.shape[0]]

    def track(self):
        return np.asarray(self.track_t), np.asarray(self.track_x)


def default_ic(x, x0=0.0):
    """Step at x0 smoothed by the unit-width cutoff."""
    return cutoff_and_weight(np.asarray(x) - x0 + 0.5)[0]


def time_step(tau, dt_target):
    if tau <= 0.0:
        return float(dt_target), 0
    lag = int(round(tau / dt_target))
    if lag == 0:
        raise InvalidStep(f"dt_target={dt_target} is too coarse for tau={tau}: no history frames")
    return tau / lag, lag


def init(f, L_sim=L_SIM, n_sim=None, tau=0.0, dt_target=DT_TARGET, ic=None, c_frame=0.0):
    """Set up a simulation.

    Parameters
    ----------
    f : callable
        Response function (or envelope) of the delayed argument.
    L_sim, n_sim : float, int
        Grid on [-L_sim, L_sim]; ``n_sim`` defaults to spacing 0.05.
    tau : float
        Delay; the initial history is constant in time and equal to ``ic``.
    ic : callable or array, optional
        Initial profile; default is a smoothed step at x = 0.
    c_frame : float
        Speed of the co-moving frame (adds c_frame * v_x).
    """
    if tau < 0.0:
        raise InvalidStep(f"tau must be nonnegative, got {tau}")
    if n_sim is None:
        n_sim = int(round(2.0 * L_sim / DX)) + 1
    x = np.linspace(-L_sim, L_sim, n_sim)
    if ic is None:
        v = default_ic(x)
    elif callable(ic):
        v = np.asarray(ic(x), dtype=float)
    else:
        v = np.array(ic, dtype=float)
        if v.shape != x.shape:
            raise ValueError(f"initial profile has shape {v.shape}, grid has {x.shape}")
    dt, lag = time_step(tau, dt_target)
    ring = np.tile(v, (lag + 1, 1))
    st = SimState(f, x, v.copy(), float(tau), dt, ring, head=0, c_frame=float(c_frame),
                  left=float(v[0]), right=float(v[-1]))
    st._lu = _factor(st)
    st.track_t.append(0.0)
    st.track_x.append(front_position(x, st.v))
    return st


def _operator_bands(st):
    # interior rows of D2 + c_frame D1 (second-order central differences)
    h = st.h
    lo = 1.0 / h**2 - st.c_frame / (2.0 * h)
    up = 1.0 / h**2 + st.c_frame / (2.0 * h)
    return lo, -2.0 / h**2, up


def _factor(st):
    n = st.x.size
    lo, di, up = _operator_bands(st)
    k = 0.5 * st.dt
    dl = np.full(n - 1, -k * lo)
    d = np.full(n, 1.0 - k * di)
    du = np.full(n - 1, -k * up)
    d[0] = d[-1] = 1.0
    du[0] = 0.0
    dl[-1] = 0.0
    dl, d, du, du2, ipiv, info = lapack.dgttrf(dl, d, du)
    if info != 0:
        raise BlowUp(f"Crank-Nicolson matrix is singular (info={info})")
    return dl, d, du, du2, ipiv


def reaction_term(st, v=None, delayed=None):
    v = st.v if v is None else v
    delayed = st.delayed() if delayed is None else delayed
    return v * ((1.0 - v) - _response(st.f, delayed))


def step(st):
    """Advance one time step in place and return the state."""
    v = st.v
    lo, di, up = _operator_bands(st)
    R = reaction_term(st)
    Rp = R if st._prev_reaction is None else st._prev_reaction
    k = 0.5 * st.dt
    rhs = v.copy()
    rhs[1:-1] = (v[1:-1] + k * (lo * v[:-2] + di * v[1:-1] + up * v[2:])
                 + st.dt * (1.5 * R[1:-1] - 0.5 * Rp[1:-1]))
    rhs[0], rhs[-1] = st.left, st.right
    new, info = lapack.dgttrs(*st._lu, rhs)
    if info != 0 or not np.all(np.isfinite(new)):
        raise BlowUp(f"non-finite field at t={st.t + st.dt:.6g}")
    lo_g, hi_g = GUARD
    if new.min() < lo_g or new.max() > hi_g:
        raise BlowUp(
            f"field left [{lo_g}, {hi_g}] at t={st.t + st.dt:.6g} "
            f"(min {new.min():.4g}, max {new.max():.4g})"
        )
    st._prev_reaction = R
    st.head = (st.head + 1) % st.ring.shape[0]
    st.ring[st.head] = new
    st.v = new
    st.t += st.dt
    st.track_t.append(st.t)
    st.track_x.append(front_position(st.x, new))
    return st


def run(st, t_final, callback=None, every=1):
    """Step until ``t_final``; ``callback(st)`` is called every ``every`` steps."""
    nsteps = int(round((t_final - st.t) / st.dt))
    for i in range(nsteps):
        step(st)
        if callback is not None and (i + 1) % every == 0:
            callback(st)
    return st


@dataclass(frozen=True)
class SpeedFit:
    c_sim: float
    stderr: float
    window: tuple


def measure_speed(st, window=None):
    """Least-squares speed of the v = 1/2 level set.

    ``window`` is a (t0, t1) interval; by default the first 20% of the run is
    dropped.  With v(x, t) = w(x - c t) the level set moves at +c.  In a
    co-moving frame the fitted slope is c - c_frame, and c is reported.
    """
    t, xs = st.track()
    if window is None:
        window = (BURN_IN * t[-1], t[-1])
    m = (t >= window[0]) & (t <= window[1]) & np.isfinite(xs)
    if np.count_nonzero(m) < MIN_TRACK:
        raise WindowTooShort(f"{np.count_nonzero(m)} track points in window {window} (< {MIN_TRACK})")
    fit = linregress(t[m], xs[m])
    # in a frame moving at c_frame the observed slope is c - c_frame
    return SpeedFit(float(fit.slope + st.c_frame), float(fit.stderr), (float(window[0]), float(window[1])))


def recentered_distance(st, x_ref, w_ref):
    """Sup distance between the simulated front shifted to put v = 1/2 at 0 and w_ref."""
    x_half = front_position(st.x, st.v)
    v = np.interp(np.asarray(x_ref) + x_half, st.x, st.v)
    return float(np.max(np.abs(v - w_ref)))


def wave_ic(sol):
    """Initial profile from a converged WaveSolution, extended by 1 and 0 outside its grid."""
    xs, ws = sol.x, sol.w

    def ic(x):
        return np.interp(x, xs, ws, left=1.0, right=0.0)

    return ic


@dataclass(frozen=True)
class EnvelopeVerdict:
    passed: bool
    direction: str
    worst: float        # most adverse increment (negative of the violation size)
    samples: int
    t_final: float


def envelope_comparison_run(f_envelope, w_init, expect_direction, t_final=50.0,
                            dt=DT_TARGET, sample_every=10, tol=1e-6):
    """Run the non-delayed envelope dynamics from a delayed wave, in its own frame.

    ``w_init`` is any profile with fields ``x`` (uniform, symmetric), ``w``
    and ``c``.  The simulation uses that grid, Dirichlet values fixed at its end
    values and advection at the wave's speed.  For ``"increasing"`` the
    verdict holds when every sampled increment v(t + s) - v(t) is >= -tol
    pointwise; ``"decreasing"`` is the mirror image.
    """
    if expect_direction not in ("increasing", "decreasing"):
        raise ValueError(f"expect_direction must be 'increasing' or 'decreasing', got {expect_direction!r}")
    sign = 1.0 if expect_direction == "increasing" else -1.0
    x = np.asarray(w_init.x)
    st = init(f_envelope, float(-x[0]), x.size, 0.0, dt, ic=w_init.w, c_frame=w_init.c)
    state = {"prev": st.v.copy(), "worst": np.inf, "n": 0}

    def sample(s):
        inc = sign * (s.v - state["prev"])
        state["worst"] = min(state["worst"], float(inc.min()))
        state["prev"] = s.v.copy()
        state["n"] += 1

    run(st, t_final, callback=sample, every=sample_every)
    worst = state["worst"]
    return EnvelopeVerdict(bool(worst >= -tol), expect_direction, worst, state["n"], st.t)
