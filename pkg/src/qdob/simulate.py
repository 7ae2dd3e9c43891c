"""Discrete-time closed-loop simulation of the observer on a nominal plant.

The plant and the ``B(s)/P_n(s)`` observer path are discretized by backward
Euler, the Q-filter by replacing each ``T``-second delay with ``z^-1``.  The
observer loop has one algebraic dependency per step (backward Euler gives the
plant a direct feedthrough); it is linear and solved in closed form, see
``qdob._kernels``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from . import _kernels
from .errors import ConfigurationError, InsufficientDataError, SimulationError
from .filter_design import HyperParams, PhiPlan
from .freq_response import loop_on_axis

RHP_TOL = 0.0


@dataclass(frozen=True)
class NominalPlant:
    """``P_n(s) = (b_0 + ... + b_n s^n) / (a_0 + ... + a_{m-1} s^{m-1} + s^m)``.

    Coefficients are in ascending powers of ``s``; the monic leading
    denominator coefficient is implicit.
    """

    num_coeffs: tuple = (1.0,)
    den_coeffs: tuple = (1.0,)

    def __post_init__(self):
        num = np.trim_zeros(np.asarray(self.num_coeffs, dtype=float), "b")
        if num.size == 0:
            raise ConfigurationError("plant numerator is identically zero")
        n = num.size - 1
        m = len(self.den_coeffs)
        if not n < m:
            raise ConfigurationError(f"plant must be strictly proper (n={n}, m={m})")
        if m - n > 1:
            raise ConfigurationError(
                f"relative degree {m - n} > 1: B(s)/P_n(s) would be improper with a first-order B"
            )
        zeros = npoly.polyroots(num) if n > 0 else np.array([])
        poles = npoly.polyroots(self.den)
        if np.any(zeros.real >= RHP_TOL):
            raise ConfigurationError(f"plant has zeros in the closed right-half plane: {zeros}")
        if np.any(poles.real >= RHP_TOL):
            raise ConfigurationError(f"plant has poles in the closed right-half plane: {poles}")

    @property
    def num(self) -> np.ndarray:
        return np.trim_zeros(np.asarray(self.num_coeffs, dtype=float), "b")

    @property
    def den(self) -> np.ndarray:
        return np.append(np.asarray(self.den_coeffs, dtype=float), 1.0)


@dataclass(frozen=True)
class DiscreteSystem:
    """Difference equation in ``q = z^-1``: ``sum a_i y[k-i] = sum b_i x[k-i]``, ``a_0 = 1``."""

    num: np.ndarray
    den: np.ndarray

    def dc_gain(self) -> float:
        return float(np.sum(self.num) / np.sum(self.den))


@dataclass(frozen=True)
class DiscretePlant:
    plant: DiscreteSystem
    observer: DiscreteSystem  # B(s)/P_n(s)


def _backward_euler(num_s, den_s, T):
    """Substitute ``s -> (1 - q)/T`` into ``num_s/den_s`` (ascending powers of ``s``)."""
    M = max(len(num_s), len(den_s)) - 1
    one_minus_q = np.array([1.0, -1.0])

    def subst(c):
        acc = np.zeros(M + 1)
        for i, ci in enumerate(c):
            term = ci * T ** (M - i) * npoly.polypow(one_minus_q, i)
            acc[: term.size] += term
        return acc

    num_q, den_q = subst(num_s), subst(den_s)
    if abs(den_q[0]) < 1e-12:
        raise ConfigurationError(f"discretized denominator leading coefficient {den_q[0]!r} is ~0")
    return DiscreteSystem(num=num_q / den_q[0], den=den_q / den_q[0])


def discretize_plant(plant: NominalPlant, T: float, omega_b: float) -> DiscretePlant:
    """Backward-Euler images of ``P_n`` and of ``B P_n^-1``."""
    observer_num = omega_b * plant.den
    observer_den = npoly.polymul([omega_b, 1.0], plant.num)
    return DiscretePlant(
        plant=_backward_euler(plant.num, plant.den, T),
        observer=_backward_euler(observer_num, observer_den, T),
    )


@dataclass(frozen=True)
class DisturbanceSpec:
    """Harmonics ``(n, amplitude, phase)`` with sinusoidal envelope modulation.

    ``envelope_phases`` (one per harmonic) offsets each envelope; zeros if omitted.
    """

    harmonics: tuple = ()
    envelope_rate: float = 0.0
    envelope_depth: float = 0.0
    envelope_phases: tuple | None = None

    def __post_init__(self):
        if not 0.0 <= self.envelope_depth < 1.0:
            raise ConfigurationError("envelope_depth must lie in [0, 1)")
        if self.envelope_rate < 0:
            raise ConfigurationError("envelope_rate must be >= 0")
        for h in self.harmonics:
            if len(h) != 3 or h[0] < 0 or int(h[0]) != h[0]:
                raise ConfigurationError(f"bad harmonic entry {h!r}; expected (n>=0, amplitude, phase)")
        if self.envelope_phases is not None and len(self.envelope_phases) != len(self.harmonics):
            raise ConfigurationError("envelope_phases must match the number of harmonics")


def make_disturbance(spec: DisturbanceSpec, params: HyperParams, duration: float | None = None,
                     steps: int | None = None) -> np.ndarray:
    """Sample the quasiperiodic disturbance at ``t = kT``.

    Give either ``duration`` (seconds) or ``steps``.
    """
    if steps is None:
        if duration is None:
            raise ValueError("give duration or steps")
        steps = int(math.floor(duration / params.T + 1e-9))
    if spec.envelope_depth > 0 and not spec.envelope_rate < params.rho:
        raise ConfigurationError(
            f"envelope_rate {spec.envelope_rate!r} must be below rho {params.rho!r}"
        )
    t = np.arange(steps) * params.T
    d = np.zeros(steps)
    psi = spec.envelope_phases or (0.0,) * len(spec.harmonics)
    for (n, amp, phase), ps in zip(spec.harmonics, psi):
        env = 1.0 + spec.envelope_depth * np.sin(spec.envelope_rate * t + ps)
        d += amp * env * np.cos(n * params.omega0 * t + phase)
    return d


def check_quasiperiodic(samples, params: HyperParams, min_periods: int = 8,
                        oversample: int = 8) -> float:
    """Smallest in-band energy fraction over all lifting offsets.

    The record is cut into ``Lbar``-sample periods; for each offset the lifted
    sequence is Hann-tapered and its DTFT (zero-padded by ``oversample``) is
    split at ``|W| <= rho*L``.  All-zero sequences count as fully in band.
    The taper's main lobe spans ``+-4 pi / C`` for ``C`` periods, so records much
    shorter than ``4 pi / (rho L)`` periods under-report the fraction.
    """
    x = np.asarray(samples, dtype=float)
    Lbar = int(round(params.L / params.T))
    C = x.size // Lbar
    if C < min_periods:
        raise InsufficientDataError(f"need at least {min_periods} periods of {Lbar} samples, got {C}")
    lifted = x[: C * Lbar].reshape(C, Lbar)
    lifted = lifted * np.hanning(C + 2)[1:-1, None]
    P = 1 << int(math.ceil(math.log2(oversample * C)))
    spec = np.abs(np.fft.fft(lifted, n=P, axis=0)) ** 2
    omega = np.abs(np.angle(np.exp(2j * np.pi * np.arange(P) / P)))
    band = omega <= params.rho * params.L + 1e-12
    total = spec.sum(axis=0)
    inband = spec[band].sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(total > 0, inband / total, 1.0)
    return float(np.min(frac))


@dataclass
class SimTrace:
    T: float
    time: np.ndarray
    r: np.ndarray
    d: np.ndarray
    u: np.ndarray
    y: np.ndarray
    dhat: np.ndarray
    xi: np.ndarray = field(repr=False)
    observer_enabled: bool = True

    def __len__(self):
        return self.time.size

    def columns(self) -> dict:
        return {"time": self.time, "r": self.r, "d": self.d, "u": self.u, "y": self.y, "dhat": self.dhat}


def _delay_taps(plan: PhiPlan) -> np.ndarray:
    """Stage taps indexed by delay ``j`` (in units of ``Ubar``), ``j = 0..2N``."""
    h = plan.half_taps
    N = plan.N
    j = np.arange(2 * N + 1)
    return np.ascontiguousarray(h[:, np.abs(N - j)])


def run_closed_loop(plant: NominalPlant, plan: PhiPlan, params: HyperParams, disturbance,
                    reference=None, steps: int | None = None, enabled: bool = True) -> SimTrace:
    """Simulate ``steps`` samples of the observer loop from a zero initial state.

    ``disturbance`` and ``reference`` are sample arrays (``reference`` defaults
    to zero).  ``enabled=False`` runs the plant open loop (``u = r``).
    """
    d = np.ascontiguousarray(disturbance, dtype=float)
    steps = d.size if steps is None else int(steps)
    if d.size < steps:
        raise ValueError(f"disturbance has {d.size} samples, need {steps}")
    d = d[:steps]
    r = np.zeros(steps) if reference is None else np.ascontiguousarray(reference, dtype=float)[:steps]
    if r.size < steps:
        raise ValueError("reference shorter than steps")
    if steps < plan.Lbar:
        raise ValueError(f"steps={steps} shorter than one period ({plan.Lbar} samples)")

    disc = discretize_plant(plant, params.T, params.omega_b)
    u = np.zeros(steps)
    y = np.zeros(steps)
    xi = np.zeros(steps)
    dhat = np.zeros(steps)
    hist = np.zeros((plan.l + 1, steps)) if enabled else np.zeros((plan.l + 1, 1))
    status = _kernels.run_loop(
        d, r, disc.plant.num, disc.plant.den, disc.observer.num, disc.observer.den,
        _delay_taps(plan), plan.ubar, int(plan.kappa), float(params.omega_c * params.L), bool(enabled),
        u, y, xi, dhat, hist,
    )
    if status != _kernels.SIM_OK:
        raise SimulationError("closed loop diverged: output overflow", step=int(status))
    return SimTrace(T=params.T, time=np.arange(steps) * params.T, r=r, d=d, u=u, y=y,
                    dhat=dhat, xi=xi, observer_enabled=enabled)


def harmonic_amplitude(x, T: float, omega: float) -> float:
    """Least-squares amplitude of the sinusoid at ``omega`` (plus offset) in ``x``."""
    x = np.asarray(x, dtype=float)
    t = np.arange(x.size) * T
    if omega == 0:
        return float(abs(np.mean(x)))
    A = np.column_stack([np.cos(omega * t), np.sin(omega * t), np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(A, x, rcond=None)
    return float(math.hypot(coef[0], coef[1]))


@dataclass
class HarmonicMetric:
    index: int
    measured_db: float
    error: str | None = None


def predicted_attenuation_db(plan: PhiPlan, params: HyperParams, n: int) -> float:
    """``20 log10 |S~(e^{j n omega0 T})|``."""
    _, s, _, _ = loop_on_axis(plan, params, np.array([n * params.omega0 * params.T]), "dt")
    return float(20.0 * np.log10(np.abs(s[0])))


def suppression_metrics(trace: SimTrace, params: HyperParams, harmonic_indices, baseline: SimTrace,
                        discard: float = 0.5) -> list:
    """Attenuation of ``y`` at each ``n*omega0`` relative to ``baseline`` (dB).

    The first ``discard`` fraction of both traces is dropped as transient.
    """
    Lbar = int(round(params.L / params.T))
    if len(trace) < 10 * Lbar:
        raise InsufficientDataError("trace must span more than 10 periods")
    if not 0 <= discard < 1:
        raise ValueError("discard must lie in [0, 1)")
    if len(baseline) != len(trace):
        raise ValueError("baseline and trace lengths differ")
    start = int(discard * len(trace))
    y, y0 = trace.y[start:], baseline.y[start:]
    out = []
    nyquist = math.pi / params.T
    for n in harmonic_indices:
        w = n * params.omega0
        if w > nyquist:
            out.append(HarmonicMetric(n, float("nan"), f"harmonic {n} above Nyquist"))
            continue
        a, a0 = harmonic_amplitude(y, params.T, w), harmonic_amplitude(y0, params.T, w)
        if a0 == 0:
            out.append(HarmonicMetric(n, float("nan"), f"harmonic {n} absent from baseline"))
            continue
        if a == 0:
            out.append(HarmonicMetric(n, float("-inf")))
            continue
        out.append(HarmonicMetric(n, 20.0 * math.log10(a / a0)))
    return out
