"""Sensitivity integrals of the observer loop: closed forms and quadrature."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .filter_design import HyperParams, PhiPlan
from .freq_response import log_abs_sensitivity
from .quadrature import QuadResult, adaptive_gk15

DEFAULT_TOL = 1e-10
MAX_DEPTH = 30
N_RECORD = 200


@dataclass(frozen=True)
class TheoreticalValue:
    representation: str
    value: float
    formula_inputs: dict


@dataclass
class IntegralSweep:
    representation: str
    upper_limits: np.ndarray
    partials: np.ndarray
    target: TheoreticalValue
    quad_config: dict
    error_estimate: float
    n_unconverged: int
    evaluations: int
    quad: QuadResult | None = field(default=None, repr=False)

    @property
    def total(self) -> float:
        """Final integral value; the discrete-time one covers the full circle."""
        last = float(self.partials[-1])
        return 2.0 * last if self.representation == "dt" else last


@dataclass
class ConvergenceReport:
    upper_limits: np.ndarray
    errors: np.ndarray
    mode: str  # "relative" or "absolute"
    monotone: bool
    upward_variation: float
    final_error: float


def delta_ct_closed(params: HyperParams) -> TheoreticalValue:
    wb, wc, L = params.omega_b, params.omega_c, params.L
    return TheoreticalValue("ct", -math.pi * wb * wc * L / 4.0, {"omega_b": wb, "omega_c": wc, "L": L})


def delta_dt_closed(params: HyperParams) -> TheoreticalValue:
    wb, wc, L, T = params.omega_b, params.omega_c, params.L, params.T
    value = 2.0 * math.pi * (math.log(2.0 + 2.0 * wb * T) - math.log(2.0 + 2.0 * wb * T + wb * wc * L * T))
    return TheoreticalValue("dt", value, {"omega_b": wb, "omega_c": wc, "L": L, "T": T})


def harmonic_breakpoints(omega0: float, rho: float, upper: float) -> np.ndarray:
    """Centres ``n*omega0`` and edges ``n*omega0 +- rho`` inside ``[0, upper]``."""
    n = np.arange(0, math.floor(upper / omega0) + 2)
    pts = np.concatenate([n * omega0, n * omega0 - rho, n * omega0 + rho])
    return pts[(pts > 0) & (pts < upper)]


def _record_points(lo: float, hi: float, count: int) -> np.ndarray:
    return np.geomspace(lo, hi, count)


def _sweep(plan, params, representation, upper, record_from, tol, n_record, target):
    wp = params.rho if representation == "ct" else params.rho * params.T
    w0 = params.omega0 if representation == "ct" else params.omega0 * params.T
    record = _record_points(min(record_from, upper), upper, n_record)
    bp = np.concatenate([[0.0, upper], harmonic_breakpoints(w0, wp, upper), record])
    if params.rho == 0:
        quad = adaptive_gk15(lambda x: np.zeros_like(x), bp, tol=tol, max_depth=MAX_DEPTH)
    else:
        quad = adaptive_gk15(
            lambda x: log_abs_sensitivity(plan, params, x, representation),
            bp, tol=tol, max_depth=MAX_DEPTH,
        )
    partials = quad.cumulative_at(record)
    return IntegralSweep(
        representation=representation,
        upper_limits=record,
        partials=partials,
        target=target,
        quad_config={"tol": tol, "max_depth": MAX_DEPTH, "rule": "gk15",
                     "breakpoints": "harmonics +- rho", "n_record": n_record},
        error_estimate=quad.error,
        n_unconverged=quad.n_unconverged,
        evaluations=quad.evaluations,
        quad=quad,
    )


def integrate_ln_s_ct(plan: PhiPlan, params: HyperParams, W: float | None = None,
                      tol: float = DEFAULT_TOL, n_record: int = N_RECORD) -> IntegralSweep:
    """Partial integrals of ``ln|S(j w)|`` over ``[0, w]`` for ``w`` up to ``W``.

    ``W`` defaults to ``100 * omega_b``.
    """
    W = 100.0 * params.omega_b if W is None else float(W)
    if W <= 0:
        raise ValueError("W must be positive")
    return _sweep(plan, params, "ct", W, 1e-2 * params.omega0, tol, n_record, delta_ct_closed(params))


def integrate_ln_s_dt(plan: PhiPlan, params: HyperParams, tol: float = DEFAULT_TOL,
                      n_record: int = N_RECORD) -> IntegralSweep:
    """Partial integrals of ``ln|S(e^{jW})|`` for ``W`` up to ``pi``.

    ``sweep.total`` doubles the half-circle value (``|S|`` is even in ``W``).
    """
    return _sweep(plan, params, "dt", math.pi, 1e-4, tol, n_record, delta_dt_closed(params))


def convergence_report(sweep: IntegralSweep, monotone_rtol: float = 1e-2,
                       monotone_atol: float = 1e-12) -> ConvergenceReport:
    """Error of each recorded partial against the closed form.

    The sweep counts as monotone when the summed upward steps of the partials
    stay below ``monotone_rtol * |target|`` (``monotone_atol`` for a zero target).
    """
    if len(sweep.partials) == 0:
        raise ValueError("empty sweep")
    target = sweep.target.value
    partials = np.asarray(sweep.partials, dtype=float)
    if sweep.representation == "dt":
        partials = 2.0 * partials
    rises = np.diff(partials)
    upward = float(np.sum(rises[rises > 0]))
    if target == 0:
        errors = np.abs(partials - target)
        mode = "absolute"
        monotone = upward <= monotone_atol
    else:
        errors = np.abs(partials - target) / abs(target)
        mode = "relative"
        monotone = upward <= monotone_rtol * abs(target)
    return ConvergenceReport(
        upper_limits=np.asarray(sweep.upper_limits),
        errors=errors,
        mode=mode,
        monotone=bool(monotone),
        upward_variation=upward,
        final_error=float(errors[-1]),
    )
