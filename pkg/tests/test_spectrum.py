import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from delaywave.errors import RootNotFound
from delaywave.nonlinearity import ResponseFunction, family, make_family
from delaywave.spectrum import (
    characteristic_roots,
    condition_ns,
    essential_curves,
    imaginary_axis_gap,
    minus_characteristic,
)

speeds = st.floats(-0.6, 0.6)
delays = st.floats(0.0, 3.0)


@given(speeds, delays)
def test_plus_curve_at_zero(c, tau):
    rep = essential_curves(family("A"), c, tau, n_xi=401)
    mid = rep.xi.size // 2
    assert rep.xi[mid] == 0.0
    assert rep.lam_plus[mid].real == pytest.approx(-0.2, abs=1e-14)


@given(st.sampled_from("ABC"), speeds, delays)
def test_minus_curve_bound(name, c, tau):
    f = family(name)
    rep = essential_curves(f, c, tau, n_xi=801)
    assert rep.max_re_minus <= -1.0 + f.kappa + 1e-14


@given(speeds, delays)
def test_conjugate_symmetry(c, tau):
    rep = essential_curves(family("B"), c, tau, n_xi=401)
    np.testing.assert_allclose(rep.lam_plus[::-1], np.conj(rep.lam_plus), atol=1e-12)
    np.testing.assert_allclose(rep.lam_minus[::-1], np.conj(rep.lam_minus), atol=1e-12)


@given(st.sampled_from("ABC"), speeds, delays)
def test_ns_margin_lower_bound(name, c, tau):
    f = family(name)
    v = condition_ns(f, c, tau)
    assert v.satisfied
    assert v.margin >= min(f(0.0) - 1.0, 1.0 - f.kappa) - 1e-12


def test_boundary_case_f0_equals_one():
    g = ResponseFunction.from_coefficients([1.0, -1.0])
    v = condition_ns(g, 0.1, 1.0)
    assert not v.satisfied
    assert v.xi_worst == 0.0
    assert v.margin_plus == 0.0


def test_minus_margin_vanishes_as_kappa_tends_to_one():
    margins = [condition_ns(make_family(k, 0.5, 3.0), 0.0, 1.0).margin_minus for k in (0.9, 0.99, 0.999)]
    assert margins == pytest.approx([0.1, 0.01, 0.001], abs=1e-12)


# ---------------------------------------------------------------- roots

def test_plus_roots_zero_speed():
    r = characteristic_roots(family("A"), 0.0, 0.0, "plus")
    assert r.roots == pytest.approx((-np.sqrt(0.2), np.sqrt(0.2)), abs=1e-15)
    assert r.roots[0] * r.roots[1] == pytest.approx(1.0 - 1.2, abs=1e-14)


def test_minus_root_kappa_zero():
    r = characteristic_roots(family("A"), 0.2, 1.7, "minus")
    assert r.roots[0] == pytest.approx((-0.2 + np.sqrt(4.04)) / 2.0, abs=1e-12)
    assert r.roots[0] == pytest.approx(0.90499, abs=1e-5)


def test_minus_root_with_delay_term():
    r = characteristic_roots(family("B"), -0.1, 1.0, "minus")
    z = r.roots[0]
    assert z > 0.0
    assert r.residual <= 1e-12
    assert abs(minus_characteristic(z, -0.1, 1.0, -0.5)) <= 1e-12


@given(st.sampled_from("ABC"), speeds, delays)
def test_minus_root_residual(name, c, tau):
    r = characteristic_roots(family(name), c, tau, "minus")
    assert r.roots[0] > 0.0
    assert r.residual <= 1e-12


@given(speeds)
def test_plus_root_grows_with_f0(c):
    mags = []
    for f0 in (1.05, 1.2, 1.4):
        g = make_family(0.0, f0, 2 * f0 + 1.0)
        mags.append(-characteristic_roots(g, c, 0.0, "plus").roots[0])
    assert mags[0] < mags[1] < mags[2]


def test_complex_plus_roots_raise():
    g = ResponseFunction.from_coefficients([0.5, -0.5])
    with pytest.raises(RootNotFound):
        characteristic_roots(g, 0.1, 0.0, "plus")


def test_unknown_side():
    with pytest.raises(ValueError):
        characteristic_roots(family("A"), 0.1, 0.0, "left")


@pytest.mark.parametrize("name", ["A", "B", "C"])
def test_no_imaginary_minus_roots(name):
    f = family(name)
    for c in (-0.5, 0.0, 0.5):
        assert imaginary_axis_gap(c, float(f(1.0, 1))) > 0.0
