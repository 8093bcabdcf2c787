import numpy as np
import pytest
from numpy.polynomial import Polynomial

from delaywave.errors import EnvelopeDegenerate, NoBracket
from delaywave.nonlinearity import ResponseFunction, family, reaction_integral
from delaywave.scalar_wave import (
    family_reaction,
    nagumo,
    profile_residual,
    solve_nondelayed,
    speed_bounds,
)


@pytest.fixture(scope="module")
def nagumo_03():
    return solve_nondelayed(nagumo(0.3))


def test_nagumo_speed(nagumo_03):
    assert nagumo_03.c == pytest.approx((1 - 2 * 0.3) / np.sqrt(2), abs=1e-6)


def test_nagumo_closed_form_profile(nagumo_03):
    # w = 1 / (1 + exp(x / sqrt 2)) solves w'' + c w' + w(1-w)(w-alpha) = 0, w(0) = 1/2
    x = nagumo_03.x
    exact = 1.0 / (1.0 + np.exp(x / np.sqrt(2)))
    assert np.max(np.abs(nagumo_03.w - exact)) < 1e-6
    dexact = -exact * (1 - exact) / np.sqrt(2)
    assert np.max(np.abs(nagumo_03.dw - dexact)) < 1e-6


def test_closed_form_profile_residual():
    # the oracle itself: substitute the closed form symbolically-by-hand
    x = np.linspace(-10, 10, 201)
    alpha = 0.3
    w = 1.0 / (1.0 + np.exp(x / np.sqrt(2)))
    d1 = -w * (1 - w) / np.sqrt(2)
    d2 = -(1 - 2 * w) * d1 / np.sqrt(2)
    c = (1 - 2 * alpha) / np.sqrt(2)
    assert np.max(np.abs(d2 + c * d1 + w * (1 - w) * (w - alpha))) < 1e-15


def test_nagumo_symmetric():
    assert abs(solve_nondelayed(nagumo(0.5), tol_c=1e-6).c) <= 1e-3


@pytest.mark.parametrize("alpha", [0.3, 0.7])
def test_speed_sign_law_nagumo(alpha):
    F = nagumo(alpha)
    integral = 1.0 / 12.0 - alpha / 6.0
    assert np.sign(solve_nondelayed(F, tol_c=1e-4).c) == np.sign(integral)


@pytest.mark.parametrize("name", ["A", "B", "C"])
def test_speed_sign_law_families(name):
    f = family(name)
    F, dF = family_reaction(f)
    assert np.sign(solve_nondelayed(F, dF=dF, tol_c=1e-4).c) == np.sign(reaction_integral(f))


def test_wave_invariants(nagumo_03):
    w = nagumo_03
    assert np.all(np.diff(w.w) <= 0)
    assert w.is_strictly_decreasing()
    assert abs(w.w[0] - 1.0) < 1e-6 and abs(w.w[-1]) < 1e-6
    assert np.interp(0.0, w.x, w.w) == pytest.approx(0.5, abs=1e-8)
    assert w.bracket_width <= 1e-8


def test_residual_below_discretization_estimate(nagumo_03):
    res, est = profile_residual(nagumo_03, nagumo(0.3))
    assert res <= 10.0 * est


def test_translation_normalization():
    F = nagumo(0.3)
    a = solve_nondelayed(F, tol_c=1e-6, n=2401)
    b = solve_nondelayed(F, tol_c=1e-6, n=3001)
    assert abs(a.c - b.c) <= 2e-6


def test_no_bracket_for_narrow_range():
    with pytest.raises(NoBracket, match="widen"):
        solve_nondelayed(nagumo(0.3), c_range=(0.5, 5.0))


def test_no_bracket_for_monostable():
    with pytest.raises(NoBracket):
        solve_nondelayed(lambda w: w * (1 - w))


# ---------------------------------------------------------------- speed bounds

@pytest.fixture(scope="module")
def bounds_a():
    return speed_bounds(family("A"))


def test_bounds_family_a(bounds_a):
    # regression values from the first shooting run (tol 1e-8)
    assert bounds_a.c1 == pytest.approx(-0.2455919, abs=1e-6)
    assert bounds_a.c0 == pytest.approx(-0.2452868, abs=1e-6)
    assert bounds_a.c1 <= bounds_a.c0
    assert bounds_a.c_star == max(abs(bounds_a.c0), abs(bounds_a.c1))


def test_monotone_comparison(bounds_a):
    # F0 >= F >= F1 pointwise, so c0 >= c >= c1
    F, dF = family_reaction(family("A"))
    c = solve_nondelayed(F, dF=dF).c
    assert bounds_a.c1 <= c <= bounds_a.c0


def test_bounds_of_decreasing_function():
    # g = (1 - w)(1.2 - 0.6 w) is decreasing: F = 0.6 w (1 - w)(w - 1/3)
    g = ResponseFunction.from_coefficients(Polynomial([1.0, -1.0]) * Polynomial([1.2, -0.6]))
    b = speed_bounds(g)
    exact = np.sqrt(0.6 / 2.0) * (1.0 - 2.0 / 3.0)
    assert b.c0 == pytest.approx(exact, abs=1e-6)
    assert b.c1 == pytest.approx(b.c0, abs=2e-8)


def test_degenerate_envelope():
    with pytest.raises(EnvelopeDegenerate):
        speed_bounds(ResponseFunction.from_coefficients([0.9, -0.9]))
