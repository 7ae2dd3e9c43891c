"""Frequency responses of the filter, the open loop and the sensitivity pair.

Continuous-time quantities take the Laplace variable ``s`` (rad/s), the
discrete-time ones the ``z`` variable.  On the imaginary axis / unit circle
the fast path :func:`phi_on_axis` is used; it factors the cascade into a
pure delay of ``Lbar`` samples times a real zero-phase amplitude.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import _kernels
from .errors import EvaluationError, PoleProximityError
from .filter_design import HyperParams, PhiPlan

POLE_TOL = 1e-300
EXP_LIMIT = 700.0

Representation = Literal["ct", "dt"]


def _scalar_or_array(value, like):
    return complex(value) if np.ndim(like) == 0 else value


def _phi_from_x(plan: PhiPlan, x):
    """Cascade value as a function of ``x = T*s`` (``z = exp(x)``)."""
    x = np.asarray(x, dtype=complex)
    re = np.real(x)
    if np.any(re < 0) and np.max(-re) * plan.Lbar > EXP_LIMIT:
        raise EvaluationError(
            f"filter evaluation overflows for Re[T s] = {np.min(re):.6g} (delay span {plan.Lbar} samples)"
        )
    N = plan.N
    out = np.exp(-plan.kappa * x)
    for st in plan.stages:
        h = st.half_taps
        ub = st.Ubar
        acc = h[0] * np.exp(-N * ub * x)
        # symmetric pairs (n, -n), smallest |n| first
        for n in range(1, N + 1):
            acc = acc + h[n] * (np.exp(-(N - n) * ub * x) + np.exp(-(N + n) * ub * x))
        out = out * acc
    if not np.all(np.isfinite(out)):
        raise EvaluationError("non-finite filter value")
    return out


def phi_ct(plan: PhiPlan, s):
    """Linear-phase cascade at Laplace point(s) ``s``."""
    out = _phi_from_x(plan, plan.params.T * np.asarray(s, dtype=complex))
    return _scalar_or_array(out, s)


def phi_dt(plan: PhiPlan, z):
    """Linear-phase cascade at ``z`` point(s); ``z`` must be nonzero."""
    z_arr = np.asarray(z, dtype=complex)
    if np.any(z_arr == 0):
        raise EvaluationError("phi_dt is undefined at z = 0")
    return _scalar_or_array(_phi_from_x(plan, np.log(z_arr)), z)


def phi_on_axis(plan: PhiPlan, theta):
    """Cascade at ``z = exp(j theta)`` (equivalently ``s = j theta / T``)."""
    theta = np.asarray(theta, dtype=float)
    amp = _kernels.cascade_amplitude(plan.half_taps, plan.ubar, theta)
    return np.exp(-1j * plan.Lbar * np.ravel(theta)).reshape(theta.shape) * amp.reshape(theta.shape)


def stage_on_axis(plan: PhiPlan, theta):
    """Per-stage zero-phase amplitudes, shape ``(l, len(theta))``."""
    theta = np.ravel(np.asarray(theta, dtype=float))
    return np.vstack([
        _kernels.cascade_amplitude(st.half_taps[None, :], np.array([st.Ubar]), theta)
        for st in plan.stages
    ])


def _b_ct(params: HyperParams, s):
    return params.omega_b / (s + params.omega_b)


def _b_dt(params: HyperParams, z):
    wbT = params.omega_b * params.T
    return wbT * z / ((1.0 + wbT) * z - 1.0)


def _loop_gain(params: HyperParams) -> float:
    return params.omega_c * params.L / 2.0


def _open_loop(phi, b, params):
    one_minus = 1.0 - phi
    if np.any(np.abs(one_minus) < POLE_TOL):
        raise PoleProximityError("|1 - Phi| below pole tolerance")
    return _loop_gain(params) * (1.0 + phi) / one_minus * b


def open_loop_ct(plan: PhiPlan, params: HyperParams, s):
    s_arr = np.asarray(s, dtype=complex)
    if np.any(s_arr == -params.omega_b):
        raise PoleProximityError("s = -omega_b is a pole of B(s)")
    if np.any(np.isinf(s_arr)):
        raise EvaluationError("s must be finite")
    return _scalar_or_array(_open_loop(phi_ct(plan, s_arr), _b_ct(params, s_arr), params), s)


def open_loop_dt(plan: PhiPlan, params: HyperParams, z):
    z_arr = np.asarray(z, dtype=complex)
    pole = 1.0 / (1.0 + params.omega_b * params.T)
    if np.any(np.abs(z_arr - pole) < POLE_TOL):
        raise PoleProximityError("z is the pole of the discretized B")
    return _scalar_or_array(_open_loop(phi_dt(plan, z_arr), _b_dt(params, z_arr), params), z)


def sensitivity_pair(gamma):
    """``(S, T) = (1/(1+gamma), gamma/(1+gamma))``; infinite gamma maps to (0, 1)."""
    g = np.asarray(gamma, dtype=complex)
    if np.any(g == -1):
        raise EvaluationError("1 + Gamma = 0: sensitivity is singular")
    inf = np.isinf(g)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(inf, 0.0, 1.0 / (1.0 + g))
        t = np.where(inf, 1.0, g / (1.0 + g))
    if np.ndim(gamma) == 0:
        return complex(s), complex(t)
    return s, t


def loop_on_axis(plan: PhiPlan, params: HyperParams, theta, representation: Representation):
    """Gamma, S, T and a pole flag on the imaginary axis or the unit circle.

    ``theta`` is rad/sample for ``dt`` and rad/s for ``ct``.  S and T are
    formed from a common denominator so rows near a pole of Gamma stay finite.
    """
    theta = np.ravel(np.asarray(theta, dtype=float))
    if representation == "ct":
        phi = phi_on_axis(plan, theta * params.T)
        b = _b_ct(params, 1j * theta)
    elif representation == "dt":
        phi = phi_on_axis(plan, theta)
        b = _b_dt(params, np.exp(1j * theta))
    else:
        raise ValueError(f"unknown representation {representation!r}")
    k = _loop_gain(params)
    if k == 0.0:
        # rho = 0: the observer is switched off and S is exactly one
        ones = np.ones(theta.shape, dtype=complex)
        return np.zeros_like(ones), ones, np.zeros_like(ones), np.zeros(theta.shape, dtype=bool)
    one_minus = 1.0 - phi
    num_t = k * (1.0 + phi) * b
    den = one_minus + num_t
    s = one_minus / den
    t = num_t / den
    flag = np.abs(one_minus) < POLE_TOL
    with np.errstate(divide="ignore", invalid="ignore"):
        gamma = np.where(flag, complex(np.inf), num_t / np.where(flag, 1.0, one_minus))
    return gamma, s, t, flag


def log_abs_sensitivity(plan: PhiPlan, params: HyperParams, theta, representation: Representation):
    """``ln|S|`` on the axis/circle, written to stay accurate inside notches."""
    theta = np.ravel(np.asarray(theta, dtype=float))
    if representation == "ct":
        phi = phi_on_axis(plan, theta * params.T)
        b = _b_ct(params, 1j * theta)
    else:
        phi = phi_on_axis(plan, theta)
        b = _b_dt(params, np.exp(1j * theta))
    one_minus = 1.0 - phi
    den = one_minus + _loop_gain(params) * (1.0 + phi) * b
    with np.errstate(divide="ignore"):
        return np.log(np.abs(one_minus)) - np.log(np.abs(den))


@dataclass(frozen=True)
class GridSpec:
    start: float
    stop: float
    count: int
    spacing: Literal["linear", "log"] = "log"

    def __post_init__(self):
        if self.count < 2:
            raise ValueError("grid needs at least 2 points")
        if not (0 < self.start < self.stop) and self.spacing == "log":
            raise ValueError("log grid needs 0 < start < stop")
        if not self.start < self.stop:
            raise ValueError("grid start must be below stop")

    def points(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.count)
        if self.spacing == "linear":
            return np.linspace(self.start, self.stop, self.count)
        raise ValueError(f"unknown spacing {self.spacing!r}")


def default_grid(params: HyperParams, representation: Representation) -> GridSpec:
    if representation == "dt":
        return GridSpec(1e-4, math.pi, 20001, "log")
    return GridSpec(1e-4 * params.omega0, 100.0 * params.omega_b, 20001, "log")


@dataclass
class ResponseTable:
    representation: str
    grid: np.ndarray
    gamma_vals: np.ndarray
    s_vals: np.ndarray
    t_vals: np.ndarray
    flagged: np.ndarray
    params_hash: str
    extra: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.grid)

    @property
    def unit_sum_error(self) -> float:
        return float(np.max(np.abs(self.s_vals + self.t_vals - 1.0)))


def bode_table(plan: PhiPlan, params: HyperParams, representation: Representation = "dt",
               grid_spec: GridSpec | None = None) -> ResponseTable:
    """Gamma, S and T over a frequency grid.

    Discrete-time grids are clipped to ``(0, pi]``.  Rows lying on a pole of
    Gamma are flagged (``flagged``) and carry ``Gamma = inf``, ``S = 0``.
    """
    grid_spec = grid_spec or default_grid(params, representation)
    grid = grid_spec.points()
    if representation == "dt":
        grid = grid[(grid > 0) & (grid <= math.pi)]
    if grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must contain at least two strictly increasing points")
    gamma, s, t, flag = loop_on_axis(plan, params, grid, representation)
    return ResponseTable(representation=representation, grid=grid, gamma_vals=gamma, s_vals=s,
                         t_vals=t, flagged=flag, params_hash=params.key())
