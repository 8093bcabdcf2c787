import numpy as np
import pytest

from delaywave.acceptance import bounds, simulation, sweep_solution
from delaywave.errors import BlowUp, InvalidStep, WindowTooShort
from delaywave.nonlinearity import ResponseFunction, characterize, family, monotone_envelopes
from delaywave.pde_sim import (
    envelope_comparison_run,
    front_position,
    init,
    measure_speed,
    run,
    step,
    time_step,
)


def nagumo_response(alpha):
    # w(1-w)(w-alpha) = w(1 - w - f(w)) with f = (1-w)(1+alpha-w)
    return ResponseFunction.from_coefficients([1.0 + alpha, -(2.0 + alpha), 1.0], f"nagumo{alpha}")


def nagumo_profile(x):
    return 1.0 / (1.0 + np.exp(x / np.sqrt(2.0)))


def test_zero_delay_ring():
    st = init(family("A"), 20.0, 401, 0.0, 0.01)
    assert st.lag == 0 and st.ring.shape[0] == 1
    assert st.dt == 0.01


def test_step_ic_in_unit_interval():
    st = init(family("A"), 20.0, 401, 1.0, 0.01)
    assert st.v.min() == 0.0 and st.v.max() == 1.0
    assert st.ring.shape == (101, 401)
    assert st.left == 1.0 and st.right == 0.0


def test_time_step_divides_delay():
    dt, lag = time_step(0.5, 0.015)
    assert lag == 33
    assert dt == 0.5 / 33
    assert lag * dt == pytest.approx(0.5, abs=1e-15)


def test_reject_coarse_step():
    with pytest.raises(InvalidStep):
        init(family("A"), 20.0, 401, 0.5, 2.0)


@pytest.mark.parametrize("level", [0.0, 1.0])
def test_constant_states_are_fixed_points(level):
    st = init(family("A"), 10.0, 201, 0.5, 0.01, ic=lambda x: np.full_like(x, level))
    run(st, 1.0)
    assert np.max(np.abs(st.v - level)) <= 1e-15


def test_unstable_middle_state_grows():
    # F'(w0) = -w0 (1 + f'(w0)) > 0 for family A
    s = characterize(family("A"))
    assert -s.w0 * (1.0 + s.slope_at_w0) > 0.0
    v0 = s.w0 + 1e-3
    st = init(family("A"), 10.0, 201, 0.0, 0.01, ic=lambda x: np.full_like(x, v0))
    run(st, 2.0)
    assert st.v[100] > v0 + 1e-3


def test_blow_up_guard():
    st = init(family("A"), 10.0, 201, 0.0, 0.01, ic=lambda x: np.full_like(x, 1.2))
    with pytest.raises(BlowUp):
        step(st)


def test_front_position_linear_interpolation():
    x = np.linspace(-1, 1, 21)
    v = 0.5 - 0.3 * (x - 0.123)
    assert front_position(x, v) == pytest.approx(0.123, abs=1e-14)


def test_window_too_short():
    st = init(family("A"), 20.0, 401, 0.0, 0.01)
    run(st, 0.5)
    with pytest.raises(WindowTooShort):
        measure_speed(st)


@pytest.mark.parametrize("alpha,expected,tol", [(0.3, (1 - 0.6) / np.sqrt(2), 5e-3), (0.5, 0.0, 2e-3)])
def test_nagumo_speed(alpha, expected, tol):
    st = init(nagumo_response(alpha), 40.0, None, 0.0, 0.01, ic=nagumo_profile)
    run(st, 40.0)
    fit = measure_speed(st)
    assert fit.c_sim == pytest.approx(expected, abs=tol)
    assert fit.window[0] == pytest.approx(8.0)


def test_family_a_moves_left():
    st = init(family("A"), 40.0, None, 0.0, 0.01)
    run(st, 40.0)
    assert np.sign(measure_speed(st).c_sim) == -1


@pytest.mark.parametrize("name", ["A", "B", "C"])
def test_invariant_region(name):
    st = init(family(name), 30.0, None, 1.0, 0.01)
    extremes = [np.inf, -np.inf]

    def watch(s):
        extremes[0] = min(extremes[0], s.v.min())
        extremes[1] = max(extremes[1], s.v.max())

    run(st, 20.0, callback=watch)
    assert extremes[0] >= -1e-8 and extremes[1] <= 1 + 1e-8


def test_co_moving_frame_reports_lab_speed():
    st = init(nagumo_response(0.3), 40.0, None, 0.0, 0.01, ic=nagumo_profile, c_frame=0.28)
    run(st, 40.0)
    t, xh = st.track()
    assert abs(xh[-1] - xh[0]) < 0.2
    assert measure_speed(st).c_sim == pytest.approx(0.2828, abs=5e-3)


# ---------------------------------------------------------------- against the profile solver

@pytest.mark.parametrize("tau", [0.0, 0.5, 1.0])
def test_bvp_cross_check(tau):
    fit, dist = simulation("A", tau)
    assert fit.c_sim == pytest.approx(sweep_solution("A", tau).c, abs=5e-3)
    assert dist <= 5e-3


@pytest.mark.parametrize("tau", [0.5, 1.0])
def test_bvp_cross_check_family_c(tau):
    sol = sweep_solution("C", tau)
    from delaywave.pde_sim import wave_ic

    st = init(family("C"), 100.0, None, tau, 0.01, ic=wave_ic(sol))
    run(st, 60.0)
    assert measure_speed(st).c_sim == pytest.approx(sol.c, abs=5e-3)


def test_lower_function_dynamics():
    env = monotone_envelopes(family("C"))
    v = envelope_comparison_run(env.f0, sweep_solution("C", 1.0), "increasing", t_final=20.0)
    assert v.passed and v.samples == 200


def test_upper_function_dynamics():
    env = monotone_envelopes(family("A"))
    v = envelope_comparison_run(env.f1, sweep_solution("A", 1.0), "decreasing", t_final=20.0)
    assert v.passed


def test_envelope_wave_is_stationary_in_its_frame():
    b = bounds("C")
    env = monotone_envelopes(family("C"))
    w = b.wave0
    st = init(env.f0, 60.0, w.x.size, 0.0, 0.01, ic=w.w, c_frame=w.c)
    run(st, 20.0)
    assert np.max(np.abs(st.v - w.w)) <= 1e-4


def test_bad_direction():
    with pytest.raises(ValueError):
        envelope_comparison_run(None, sweep_solution("A", 0.0), "sideways")
