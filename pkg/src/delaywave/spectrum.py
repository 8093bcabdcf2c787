"""Essential-spectrum curves of the limiting operators and their characteristic roots.

At the rest state 0 (x -> +inf) the linearization is
``u'' + c u' + (1 - f(0)) u``; at the rest state 1 (x -> -inf) it is
``u'' + c u' - u - f'(1) u(x + c tau)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RootNotFound


@dataclass(frozen=True)
class SpectrumReport:
    xi: np.ndarray
    lam_plus: np.ndarray
    lam_minus: np.ndarray
    max_re_plus: float
    max_re_minus: float

    @property
    def ns(self):
        return bool(self.max_re_plus < 0.0 and self.max_re_minus < 0.0)

    @property
    def margin(self):
        return -max(self.max_re_plus, self.max_re_minus)


@dataclass(frozen=True)
class NSVerdict:
    satisfied: bool
    margin: float
    margin_plus: float
    margin_minus: float
    xi_worst: float


@dataclass(frozen=True)
class CharacteristicRoots:
    side: str
    roots: tuple
    residual: float


def essential_curves(f, c, tau, xi_max=20.0, n_xi=4001):
    """Sample lambda_+(xi) and lambda_-(xi) on a symmetric grid of [-xi_max, xi_max]."""
    xi = np.linspace(-xi_max, xi_max, n_xi)
    f0 = float(f(0.0))
    d1 = float(f(1.0, 1))
    lam_plus = -xi**2 + 1j * c * xi + (1.0 - f0)
    lam_minus = -xi**2 + 1j * c * xi - 1.0 - d1 * np.exp(1j * c * tau * xi)
    return SpectrumReport(
        xi, lam_plus, lam_minus, float(lam_plus.real.max()), float(lam_minus.real.max())
    )


def condition_ns(f, c, tau, xi_max=20.0, n_xi=4001):
    """Both curves strictly in the left half-plane; margin is minus the largest real part."""
    rep = essential_curves(f, c, tau, xi_max, n_xi)
    re = np.maximum(rep.lam_plus.real, rep.lam_minus.real)
    return NSVerdict(
        satisfied=rep.ns,
        margin=rep.margin,
        margin_plus=-rep.max_re_plus,
        margin_minus=-rep.max_re_minus,
        xi_worst=float(rep.xi[np.argmax(re)]),
    )


def minus_characteristic(z, c, tau, slope_at_one):
    return z * z + c * z - 1.0 - slope_at_one * np.exp(c * tau * z)


def characteristic_roots(f, c, tau, side):
    """Tail roots.

    ``plus``: both roots of z^2 + c z + 1 - f(0) = 0 (ascending).
    ``minus``: the positive root of z^2 + c z - 1 = f'(1) exp(c tau z),
    found by Newton from the f'(1) = 0 root with a bisection fallback.
    """
    if side == "plus":
        q = 1.0 - float(f(0.0))
        disc = np.sqrt(c * c - 4.0 * q) if c * c - 4.0 * q >= 0 else np.nan
        if not np.isfinite(disc):
            raise RootNotFound("complex plus-side roots: f(0) < 1 - c^2/4")
        r1, r2 = 0.5 * (-c - disc), 0.5 * (-c + disc)
        res = max(abs(r * r + c * r + q) for r in (r1, r2))
        return CharacteristicRoots("plus", (float(r1), float(r2)), float(res))
    if side != "minus":
        raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")

    d1 = float(f(1.0, 1))
    g = lambda z: minus_characteristic(z, c, tau, d1)
    dg = lambda z: 2.0 * z + c - d1 * c * tau * np.exp(c * tau * z)
    z = 0.5 * (-c + np.sqrt(c * c + 4.0))
    ok = False
    for _ in range(60):
        step = g(z) / dg(z)
        z -= step
        if not (0.0 < z <= 10.0) or not np.isfinite(z):
            break
        if abs(step) <= 1e-14 * max(1.0, abs(z)):
            ok = True
            break
    if not ok:
        lo, hi = 1e-6, 10.0
        if g(lo) * g(hi) > 0:
            raise RootNotFound(f"no positive root in (0, 10] for c={c}, tau={tau}, f'(1)={d1}")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if g(lo) * g(mid) <= 0:
                hi = mid
            else:
                lo = mid
            if hi - lo < 1e-15:
                break
        z = 0.5 * (lo + hi)
    return CharacteristicRoots("minus", (float(z),), float(abs(g(z))))


def imaginary_axis_gap(c, slope_at_one, y_max=50.0, n=20001):
    """min over real y of |(iy)^2 + c i y - 1| - |f'(1)|; positive means no imaginary roots."""
    y = np.linspace(-y_max, y_max, n)
    mod = np.abs(-(y**2) + 1j * c * y - 1.0)
    return float(mod.min() - abs(slope_at_one))
