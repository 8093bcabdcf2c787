"""Non-delayed bistable fronts by phase-plane shooting, and the envelope speed bounds.

The profile equation ``w'' + c w' + F(w) = 0`` is written as the planar system
``w' = p, p' = -c p - F(w)``.  The front is the heteroclinic orbit from the
saddle (1, 0) to the saddle (0, 0); it exists for a single speed c.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import EnvelopeDegenerate, NoBracket
from .nonlinearity import envelope_structure, monotone_envelopes

EPS_START = 1e-8
ATOL = 1e-12
RTOL = 1e-10
X_MAX = 500.0
GRID_L = 60.0
GRID_N = 2401


@dataclass(frozen=True)
class NondelayedWave:
    x: np.ndarray
    w: np.ndarray
    dw: np.ndarray
    c: float
    reaction_tag: str
    bracket_width: float
    rate_left: float   # 1 - w ~ exp(rate_left * x) as x -> -inf
    rate_right: float  # w ~ exp(-rate_right * x) as x -> +inf
    one_minus_w: np.ndarray | None = None  # 1 - w without cancellation in the left tail

    def is_strictly_decreasing(self):
        """Strict decrease at every grid pair, read from 1 - w where w rounds to 1."""
        left = self.w > 0.5
        om = self.one_minus_w if self.one_minus_w is not None else 1.0 - self.w
        d_left = np.diff(om)[left[1:]]
        d_right = np.diff(self.w)[~left[:-1]]
        return bool(np.all(d_left > 0.0) and np.all(d_right < 0.0))


@dataclass(frozen=True)
class SpeedBounds:
    c0: float
    c1: float
    wave0: NondelayedWave
    wave1: NondelayedWave

    @property
    def c_star(self):
        return max(abs(self.c0), abs(self.c1))


def _slope(F, w, h=1e-6):
    return (F(w + h) - F(w - h)) / (2.0 * h)


def _saddle_rates(c, dF0, dF1):
    # unstable rate at (1, 0) and (decay) rate at (0, 0)
    lam_u = 0.5 * (-c + np.sqrt(c * c - 4.0 * dF1))
    lam_s = 0.5 * (-c - np.sqrt(c * c - 4.0 * dF0))
    return lam_u, lam_s


def _rhs(c, F):
    def rhs(x, y):
        return [y[1], -c * y[1] - F(y[0])]

    return rhs


def _classify(c, F, dF1):
    """+1 if the orbit leaving (1, 0) overshoots w = 0, -1 if it turns back first."""
    lam_u = 0.5 * (-c + np.sqrt(c * c - 4.0 * dF1))
    y0 = [1.0 - EPS_START, -EPS_START * lam_u]

    def hit_zero(x, y):
        return y[0]

    hit_zero.terminal = True
    hit_zero.direction = -1

    def turn(x, y):
        return y[1]

    turn.terminal = True
    turn.direction = 1

    sol = solve_ivp(_rhs(c, F), (0.0, X_MAX), y0, method="RK45", rtol=RTOL, atol=ATOL,
                    events=(hit_zero, turn))
    if sol.t_events[0].size:
        return 1
    return -1


def _check_bistable(F, dF0, dF1):
    grid = np.linspace(0.0, 1.0, 2001)[1:-1]
    vals = np.array([F(w) for w in grid])
    signs = np.sign(vals)
    signs = signs[signs != 0.0]
    changes = int(np.count_nonzero(signs[1:] != signs[:-1]))
    if changes != 1 or dF0 >= 0.0 or dF1 >= 0.0:
        raise NoBracket(
            f"reaction is not bistable on [0, 1] (interior sign changes={changes}, "
            f"F'(0)={dF0:.4g}, F'(1)={dF1:.4g})"
        )


def solve_nondelayed(F, tol_c=1e-8, dF=None, c_range=(-5.0, 5.0), tag="F",
                     L=GRID_L, n=GRID_N):
    """Speed and profile of the bistable front of ``w'' + c w' + F(w) = 0``.

    Parameters
    ----------
    F : callable
        Scalar reaction with F(0) = F(1) = 0 and one interior zero.
    tol_c : float
        Bisection stops once the speed bracket is narrower than ``tol_c``.
    dF : callable, optional
        Derivative of F; central differences are used when omitted.

    Returns
    -------
    NondelayedWave
        Profile sampled on ``n`` uniform points of [-L, L], normalized so
        that w(0) = 1/2.
    """
    if dF is None:
        dF0, dF1 = _slope(F, 0.0), _slope(F, 1.0)
    else:
        dF0, dF1 = float(dF(0.0)), float(dF(1.0))
    _check_bistable(F, dF0, dF1)

    lo, hi = map(float, c_range)
    if _classify(lo, F, dF1) != 1 or _classify(hi, F, dF1) != -1:
        raise NoBracket(f"speed interval [{lo}, {hi}] does not bracket the front; widen c_range")
    while hi - lo > tol_c:
        mid = 0.5 * (lo + hi)
        if _classify(mid, F, dF1) == 1:
            lo = mid
        else:
            hi = mid
    c = 0.5 * (lo + hi)
    x, w, dw, lam_u, lam_s, om = _assemble_profile(c, F, dF0, dF1, L, n)
    return NondelayedWave(x, w, dw, c, tag, hi - lo, float(lam_u), float(-lam_s), om)


def _assemble_profile(c, F, dF0, dF1, L, n):
    lam_u, lam_s = _saddle_rates(c, dF0, dF1)
    rhs = _rhs(c, F)

    def half(x, y):
        return y[0] - 0.5

    half.terminal = True

    # left branch: from the unstable manifold of (1, 0) down to w = 1/2
    y_left = [1.0 - EPS_START, -EPS_START * lam_u]
    left = solve_ivp(rhs, (0.0, X_MAX), y_left, method="RK45", rtol=RTOL, atol=ATOL,
                     events=half, dense_output=True)
    x_mid_left = left.t_events[0][0]
    # right branch: backwards along the stable manifold of (0, 0) up to w = 1/2
    y_right = [EPS_START, EPS_START * lam_s]
    right = solve_ivp(rhs, (0.0, -X_MAX), y_right, method="RK45", rtol=RTOL, atol=ATOL,
                      events=half, dense_output=True)
    x_mid_right = right.t_events[0][0]

    # shift so that w(0) = 1/2 on both branches
    left_start = -x_mid_left
    right_end = -x_mid_right

    x = np.linspace(-L, L, n)
    w = np.empty(n)
    dw = np.empty(n)

    m = x <= left_start
    e = EPS_START * np.exp(lam_u * (x[m] - left_start))
    w[m], dw[m] = 1.0 - e, -lam_u * e
    one_minus = 1.0 - w
    one_minus[m] = e

    m = (x > left_start) & (x <= 0.0)
    y = left.sol(x[m] + x_mid_left)
    w[m], dw[m] = y[0], y[1]

    m = (x > 0.0) & (x < right_end)
    y = right.sol(x[m] + x_mid_right)
    w[m], dw[m] = y[0], y[1]

    m = x >= right_end
    e = EPS_START * np.exp(lam_s * (x[m] - right_end))
    w[m], dw[m] = e, lam_s * e
    keep = x <= left_start
    one_minus[~keep] = 1.0 - w[~keep]
    return x, w, dw, lam_u, lam_s, one_minus


def profile_residual(wave, F):
    """Sup of the central-difference residual of w'' + c w' + F(w), and an O(h^2) error scale.

    Returns ``(residual, estimate)`` where the estimate bounds the truncation
    error of the difference quotients themselves.
    """
    x, w, c = wave.x, wave.w, wave.c
    h = x[1] - x[0]
    d2 = (w[2:] - 2.0 * w[1:-1] + w[:-2]) / h**2
    d1 = (w[2:] - w[:-2]) / (2.0 * h)
    Fw = np.array([F(v) for v in w[1:-1]]) if not _vectorized(F) else F(w[1:-1])
    res = np.max(np.abs(d2 + c * d1 + Fw))
    # third and fourth derivatives from the exact slope samples
    p = wave.dw
    d3 = np.gradient(np.gradient(p, h), h)
    d4 = np.gradient(d3, h)
    est = h**2 * (np.max(np.abs(d4)) / 12.0 + abs(c) * np.max(np.abs(d3)) / 6.0)
    return float(res), float(est)


def _vectorized(F):
    try:
        out = F(np.zeros(2))
        return np.shape(out) == (2,)
    except Exception:
        return False


def _envelope_reaction(env):
    def F(w):
        if np.ndim(w):
            return w * (1.0 - w - env(w))
        w = float(w)
        return w * (1.0 - w - env.scalar(w))

    def dF(w):
        if np.ndim(w):
            return 1.0 - 2.0 * w - env(w) - w * env(w, 1)
        w = float(w)
        return 1.0 - 2.0 * w - env.scalar(w) - w * env.scalar(w, 1)

    return F, dF


def speed_bounds(f, tol_c=1e-8):
    """Speeds c0 (lower envelope f0) and c1 (upper envelope f1) with c1 <= c0."""
    env = monotone_envelopes(f)
    waves = []
    for name, e in (("f0", env.f0), ("f1", env.f1)):
        above_one, crossings = envelope_structure(e)
        if not above_one or crossings != 1:
            raise EnvelopeDegenerate(
                f"envelope {name} loses bistability (value at 0 above 1: {above_one}, crossings: {crossings})"
            )
        F, dF = _envelope_reaction(e)
        waves.append(solve_nondelayed(F, tol_c=tol_c, dF=dF, tag=name))
    return SpeedBounds(waves[0].c, waves[1].c, waves[0], waves[1])


def nagumo(alpha):
    """Cubic reaction w (1 - w)(w - alpha)."""

    def F(w):
        return w * (1.0 - w) * (w - alpha)

    return F


def family_reaction(f):
    def F(w):
        if np.ndim(w):
            return w * (1.0 - w - f(w))
        w = float(w)
        return w * (1.0 - w - f.scalar(w))

    def dF(w):
        if np.ndim(w):
            return 1.0 - 2.0 * w - f(w) - w * f(w, 1)
        w = float(w)
        return 1.0 - 2.0 * w - f.scalar(w) - w * f.scalar(w, 1)

    return F, dF
