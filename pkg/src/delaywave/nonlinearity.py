"""Response functions f, their bistable landmarks and monotone envelopes.

The model reaction is ``F(w) = w (1 - w - f(w))``.  Response functions are
polynomials; the reference family is

    f(w) = kappa (1 - w) + (1 - w)^2 (a + b w).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import Polynomial

from .errors import FamilyError

FAMILIES = {
    "A": (0.0, 1.2, 3.0),
    "B": (0.5, 0.8, 2.6),
    "C": (0.0, 1.05, 2.2),
}

ENVELOPE_GRID = 4097
CHECK_GRID = 10_000


@dataclass(frozen=True)
class ResponseFunction:
    """Polynomial response f(w) with exact derivatives.

    ``coef`` holds ascending monomial coefficients.  ``kappa``, ``a``, ``b``
    are set only for members of the reference family.
    """

    coef: tuple
    kappa: float | None = None
    a: float | None = None
    b: float | None = None
    label: str = ""
    coef_at_one: tuple | None = None

    @cached_property
    def _polys(self):
        p = Polynomial(self.coef)
        return [p.deriv(k) if k else p for k in range(5)]

    @cached_property
    def _polys_at_one(self):
        # same polynomials in the variable v = w - 1
        if self.coef_at_one is not None:
            q = Polynomial(self.coef_at_one)
        else:
            q = Polynomial(self.coef)(Polynomial([1.0, 1.0]))
            scale = max(abs(c) for c in self.coef)
            if abs(q.coef[0]) <= 1e-13 * scale:
                # f(1) = 0 up to rounding of the re-expansion
                q = Polynomial(np.concatenate([[0.0], q.coef[1:]]))
        return [q.deriv(k) if k else q for k in range(5)]

    def __call__(self, w, order=0):
        w = np.asarray(w, dtype=float)
        if order > 4:
            return np.zeros_like(w)
        # above 1/2 use the expansion about 1 (w - 1 is exact there), so f(1) = 0 exactly
        out = np.where(w >= 0.5, self._polys_at_one[order](w - 1.0), self._polys[order](w))
        return out[()] if out.ndim == 0 else out

    @cached_property
    def _horner(self):
        # plain-float coefficient lists (highest degree first) for scalar evaluation
        lo = [list(map(float, q.coef[::-1])) for q in self._polys]
        hi = [list(map(float, q.coef[::-1])) for q in self._polys_at_one]
        return lo, hi

    def scalar(self, w, order=0):
        """Fast evaluation at a single float; same branch rule as ``__call__``."""
        if order > 4:
            return 0.0
        lo, hi = self._horner
        if w >= 0.5:
            coef, t = hi[order], w - 1.0
        else:
            coef, t = lo[order], w
        acc = 0.0
        for a in coef:
            acc = acc * t + a
        return acc

    def near_one(self, v, order=0):
        """Evaluate f^(order)(1 + v) without cancellation for tiny v."""
        return self._polys_at_one[order](v)

    def split(self, base, delta, order=0):
        """Evaluate at ``base + delta``; exact-plateau bases keep tail precision.

        ``base`` is expected to be exactly 1.0 or 0.0 in the tails, as it is
        for the cutoff function used by the profile solver.
        """
        base = np.asarray(base, dtype=float)
        delta = np.asarray(delta, dtype=float)
        out = self(base + delta, order)
        at_one = base == 1.0
        if np.any(at_one):
            out = np.where(at_one, self.near_one(delta, order), out)
        return out

    @property
    def degree(self):
        return len(self.coef) - 1

    @classmethod
    def from_coefficients(cls, coef, label="custom"):
        return cls(tuple(float(c) for c in coef), label=label)


def make_family(kappa, a, b, label=""):
    """Member of the reference family; rejects parameters that break bistability."""
    kappa, a, b = float(kappa), float(a), float(b)
    if not (0.0 <= kappa < 1.0):
        raise FamilyError(f"kappa must lie in [0, 1), got {kappa}")
    if not a > 0.0:
        raise FamilyError(f"a must be positive, got {a}")
    if kappa + a <= 1.0:
        raise FamilyError(f"f(0) = kappa + a = {kappa + a} must exceed 1")
    if b <= kappa + 2.0 * a:
        raise FamilyError(f"f'(0) = b - kappa - 2a = {b - kappa - 2 * a} must be positive")
    one_minus = Polynomial([1.0, -1.0])
    p = kappa * one_minus + one_minus**2 * Polynomial([a, b])
    coef = tuple(float(c) for c in p.coef)
    # f(1 + v) = -kappa v + v^2 (a + b + b v), exact in v
    at_one = (0.0, -kappa, a + b, b)
    return ResponseFunction(coef, kappa=kappa, a=a, b=b, label=label, coef_at_one=at_one)


def family(name):
    return make_family(*FAMILIES[name], label=name)


def reaction(f, w):
    """F(w) = w (1 - w - f(w))."""
    w = np.asarray(w, dtype=float)
    return w * (1.0 - w - f(w))


def reaction_prime(f, w):
    w = np.asarray(w, dtype=float)
    return 1.0 - 2.0 * w - f(w) - w * f(w, 1)


def reaction_integral(f):
    """Exact integral of F over [0, 1] for polynomial f."""
    p = Polynomial(f.coef)
    F = Polynomial([0.0, 1.0, -1.0]) - Polynomial([0.0, 1.0]) * p
    P = F.integ()
    return float(P(1.0) - P(0.0))


def _real_roots(poly, lo, hi, open_interval=True):
    """Real roots of ``poly`` in (lo, hi), Newton-polished, sorted."""
    if poly.degree() < 1 or np.allclose(poly.coef, 0.0):
        return []
    dp = poly.deriv()
    out = []
    for r in poly.roots():
        if abs(r.imag) > 1e-7:
            continue
        x = float(r.real)
        for _ in range(8):
            d = dp(x)
            if d == 0.0:
                break
            step = poly(x) / d
            x -= step
            if abs(step) < 1e-16:
                break
        inside = lo < x < hi if open_interval else lo <= x <= hi
        if inside:
            out.append(x)
    out.sort()
    dedup = []
    for x in out:
        if not dedup or abs(x - dedup[-1]) > 1e-12:
            dedup.append(x)
    return dedup


def critical_points(f):
    """Interior critical points of f on (0, 1)."""
    return _real_roots(Polynomial(f.coef).deriv(), 0.0, 1.0)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    witness: float
    detail: str = ""


@dataclass(frozen=True)
class BistableStructure:
    w0: float
    wstar: float
    f0_breakpoint: float
    f1_breakpoint: float
    slope_at_0: float
    slope_at_1: float
    slope_at_w0: float
    condition_report: tuple = field(default_factory=tuple)

    @property
    def passes(self):
        return all(c.passed for c in self.condition_report)

    def failures(self):
        return [c for c in self.condition_report if not c.passed]

    def as_rows(self):
        return [(c.name, c.passed, c.witness) for c in self.condition_report]


def characterize(f):
    """Locate w0, w*, envelope breakpoints and evaluate every admissibility condition.

    A failing condition is recorded with a witness value; nothing is raised.
    """
    p = Polynomial(f.coef)
    grid = np.linspace(0.0, 1.0, CHECK_GRID + 1)
    open_grid = grid[:-1]
    crit = critical_points(f)

    # f(w) - (1 - w) vanishes at w = 1 by f(1) = 0; count only interior roots
    g = p - Polynomial([1.0, -1.0])
    w0_roots = _real_roots(g, 0.0, 1.0)
    w0_roots = [r for r in w0_roots if r < 1.0 - 1e-9]
    w0 = w0_roots[0] if w0_roots else float("nan")

    wstar_roots = _real_roots(p - 1.0, 0.0, 1.0)
    wstar = wstar_roots[0] if wstar_roots else float("nan")

    cand = np.concatenate([[0.0, 1.0], crit])
    f1_break = float(cand[np.argmax(f(cand))])

    f_zero = float(f(0.0))
    back = [r for r in _real_roots(p - f_zero, 0.0, 1.0) if f(r, 1) < 0.0]
    if f(0.0, 1) < 0.0:
        f0_break = 0.0
    else:
        f0_break = back[0] if back else 1.0

    s0, s1 = float(f(0.0, 1)), float(f(1.0, 1))
    sw0 = float(f(w0, 1)) if w0_roots else float("nan")

    checks = []
    fvals = np.concatenate([f(open_grid), f(np.asarray(crit))])
    checks.append(Check("f_positive_below_one", bool(fvals.min() > 0.0), float(fvals.min())))
    f1 = float(f(1.0))
    checks.append(Check("f_vanishes_at_one", abs(f1) <= 1e-12, f1))
    checks.append(Check("slope_at_one_above_minus_one", s1 > -1.0, s1))
    checks.append(Check("f_at_zero_above_one", f_zero > 1.0, f_zero))
    checks.append(Check("slope_at_zero_positive", s0 > 0.0, s0))
    if wstar_roots:
        below = open_grid[open_grid < wstar]
        mins = float(np.min(f(below))) if below.size else f_zero
        checks.append(Check("f_above_one_below_wstar", mins > 1.0, wstar))
    else:
        checks.append(Check("f_above_one_below_wstar", False, float("nan"), "f = 1 has no root in (0, 1)"))
    checks.append(Check("single_crossing_w0", len(w0_roots) == 1, float(len(w0_roots))))
    checks.append(Check("slope_at_w0_below_minus_one", bool(sw0 < -1.0), sw0))
    if wstar_roots:
        tail = np.concatenate([open_grid[open_grid >= wstar], [wstar]])
        mx = float(np.max(f(tail, 1)))
        checks.append(Check("decreasing_from_wstar_to_one", mx < 0.0, mx))
    else:
        checks.append(Check("decreasing_from_wstar_to_one", False, float("nan"), "w* undefined"))

    return BistableStructure(
        w0=w0,
        wstar=wstar,
        f0_breakpoint=float(f0_break),
        f1_breakpoint=f1_break,
        slope_at_0=s0,
        slope_at_1=s1,
        slope_at_w0=sw0,
        condition_report=tuple(checks),
    )


class Envelope:
    """Running-min (``lower``) or reverse running-max (``upper``) of f on [0, 1].

    Off-grid evaluation is exact: the extremum over a sub-interval is attained
    at its endpoints or at an interior critical point of f.  Arguments are
    clamped to [0, 1].
    """

    def __init__(self, f, kind):
        if kind not in ("lower", "upper"):
            raise ValueError(kind)
        self.f = f
        self.kind = kind
        self._crit = np.asarray(critical_points(f), dtype=float)
        self._crit_vals = f(self._crit) if self._crit.size else np.zeros(0)
        self._crit_list = [(float(c), float(v)) for c, v in zip(self._crit, self._crit_vals)]
        self._end = float(f(0.0)) if kind == "lower" else float(f(1.0))

    def _candidates(self, w):
        w = np.clip(np.asarray(w, dtype=float), 0.0, 1.0)
        fw = self.f(w)
        if self.kind == "lower":
            best = np.minimum(fw, self.f(0.0))
            for c, fc in zip(self._crit, self._crit_vals):
                best = np.where(c < w, np.minimum(best, fc), best)
        else:
            best = np.maximum(fw, self.f(1.0))
            for c, fc in zip(self._crit, self._crit_vals):
                best = np.where(c > w, np.maximum(best, fc), best)
        return w, fw, best

    def scalar(self, w, order=0):
        """Fast evaluation at a single float."""
        f = self.f
        wc = min(max(w, 0.0), 1.0)
        fw = f.scalar(wc)
        if self.kind == "lower":
            best = min(fw, self._end)
            for c, fc in self._crit_list:
                if c < wc and fc < best:
                    best = fc
        else:
            best = max(fw, self._end)
            for c, fc in self._crit_list:
                if c > wc and fc > best:
                    best = fc
        if order == 0:
            return best
        if fw == best and 0.0 <= w <= 1.0:
            return f.scalar(wc, order)
        return 0.0

    def __call__(self, w, order=0):
        w_arr = np.asarray(w, dtype=float)
        wc, fw, best = self._candidates(w_arr)
        if order == 0:
            return best
        active = (fw == best) & (w_arr >= 0.0) & (w_arr <= 1.0)
        return np.where(active, self.f(wc, order), 0.0)


@dataclass(frozen=True)
class EnvelopePair:
    grid: np.ndarray
    f0_values: np.ndarray
    f1_values: np.ndarray
    f0: Envelope
    f1: Envelope

    def f0_interp(self, w):
        return np.interp(w, self.grid, self.f0_values)

    def f1_interp(self, w):
        return np.interp(w, self.grid, self.f1_values)


def monotone_envelopes(f, n_grid=ENVELOPE_GRID):
    grid = np.linspace(0.0, 1.0, n_grid)
    lo, hi = Envelope(f, "lower"), Envelope(f, "upper")
    f0v, f1v = lo(grid), hi(grid)
    # node values are exact; enforce monotonicity against rounding
    f0v = np.minimum.accumulate(f0v)
    f1v = np.maximum.accumulate(f1v[::-1])[::-1]
    return EnvelopePair(grid, f0v, f1v, lo, hi)


def envelope_structure(env):
    """(f(0) > 1, number of roots of 1 - w = env(w) on [0, 1)) for an Envelope."""
    grid = np.linspace(0.0, 1.0, CHECK_GRID + 1)[:-1]
    g = env(grid) - (1.0 - grid)
    crossings = int(np.count_nonzero(np.sign(g[1:]) != np.sign(g[:-1])))
    return bool(env(0.0) > 1.0), crossings
