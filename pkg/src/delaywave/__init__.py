"""Traveling fronts of a reaction-diffusion equation with delayed response.

    v_t = v_xx + v (1 - v) - f(v(x, t - tau)) v
"""
from .errors import DelayWaveError
from .nonlinearity import (
    Envelope,
    ResponseFunction,
    characterize,
    family,
    make_family,
    monotone_envelopes,
)
from .profile_solver import (
    ProfileOptions,
    WaveSolution,
    continue_in_tau,
    solve_profile,
)
from .scalar_wave import solve_nondelayed, speed_bounds
from .spectrum import characteristic_roots, condition_ns, essential_curves

__version__ = "0.1.0"

__all__ = [
    "DelayWaveError",
    "Envelope",
    "ProfileOptions",
    "ResponseFunction",
    "WaveSolution",
    "characteristic_roots",
    "characterize",
    "condition_ns",
    "continue_in_tau",
    "essential_curves",
    "family",
    "make_family",
    "monotone_envelopes",
    "solve_nondelayed",
    "solve_profile",
    "speed_bounds",
]
