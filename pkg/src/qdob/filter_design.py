"""Linear-phase low-pass cascade used inside the observer's Q-filter.

The cascade is ``l`` Blackman-windowed sinc stages.  Stage ``i`` has taps
``alpha_i(n)`` for ``n = -N..N`` spaced ``Ubar_i`` samples apart; the whole
filter is delayed by ``kappa`` samples so that its total latency equals one
disturbance period ``Lbar`` samples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

GAMMA_GRID_POINTS = 8193
GOLDEN_TOL = 1e-14


@dataclass(frozen=True)
class HyperParams:
    """User-facing design knobs of the observer.

    Frequencies are in rad/s, ``T`` in seconds.
    """

    T: float
    omega0: float
    omega_a: float
    omega_b: float
    rho: float
    l: int = 3
    n_max: int = 256

    def __post_init__(self):
        for name in ("T", "omega0", "omega_a", "omega_b"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigurationError(f"{name} must be a finite positive number, got {value!r}")
        if not math.isfinite(self.rho) or self.rho < 0:
            raise ConfigurationError(f"rho must be finite and >= 0, got {self.rho!r}")
        if self.rho >= math.pi / self.L:
            raise ConfigurationError(
                f"rho must satisfy rho < pi/L = {math.pi / self.L!r}, got {self.rho!r}"
            )
        if int(self.l) != self.l or self.l < 1:
            raise ConfigurationError(f"l must be a positive integer, got {self.l!r}")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ConfigurationError(f"n_max must be a positive integer, got {self.n_max!r}")
        if self.T >= self.L:
            raise ConfigurationError(f"T must be shorter than the period L = {self.L!r}")

    @property
    def L(self) -> float:
        """Disturbance period in seconds."""
        return 2.0 * math.pi / self.omega0

    @property
    def omega_c(self) -> float:
        return separation_gain(self)

    def key(self) -> str:
        """Stable identifier used to tag tables generated from these parameters."""
        vals = (self.T, self.omega0, self.omega_a, self.omega_b, self.rho, self.l, self.n_max)
        return "qdob:" + ",".join(repr(float(v)) for v in vals)


@dataclass(frozen=True)
class StageSpec:
    index: int
    U: float
    omega: float
    Ubar: int
    taps: np.ndarray = field(repr=False)
    gamma: float

    @property
    def half_taps(self) -> np.ndarray:
        """Normalized taps ``alpha(n)/gamma`` for ``n = 0..N``."""
        N = (len(self.taps) - 1) // 2
        return self.taps[N:] / self.gamma

    @property
    def order(self) -> int:
        return (len(self.taps) - 1) // 2


@dataclass(frozen=True)
class PhiPlan:
    stages: tuple
    N: int
    kappa: int
    Lbar: int
    params: HyperParams

    @property
    def l(self) -> int:
        return len(self.stages)

    @property
    def ubar(self) -> np.ndarray:
        return np.array([st.Ubar for st in self.stages], dtype=np.int64)

    @property
    def half_taps(self) -> np.ndarray:
        """``(l, N+1)`` array of normalized taps for ``n >= 0``."""
        return np.vstack([st.half_taps for st in self.stages])


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def blackman_weight(n, N: int):
    """Blackman window ``w(n, N)``; zero outside ``|n| <= N``."""
    n_arr = np.asarray(n, dtype=float)
    w = 0.42 + 0.5 * np.cos(n_arr * math.pi / N) + 0.08 * np.cos(2.0 * n_arr * math.pi / N)
    w = np.where(np.abs(n_arr) <= N, w, 0.0)
    return float(w) if np.ndim(n) == 0 else w


def ideal_lowpass_tap(n, omega_i: float, U_i: float):
    """Sampled ideal low-pass impulse response with spacing ``U_i``."""
    n_arr = np.asarray(n, dtype=float)
    safe = np.where(n_arr == 0, 1.0, n_arr)
    h = np.where(n_arr == 0, U_i * omega_i / math.pi, np.sin(safe * U_i * omega_i) / (safe * math.pi))
    return float(h) if np.ndim(n) == 0 else h


def separation_gain(params: HyperParams) -> float:
    """Observer gain ``omega_c = (2/L) tan(L rho / 2)``."""
    L = params.L
    if not 0 <= params.rho < math.pi / L:
        raise ConfigurationError(f"rho={params.rho!r} outside [0, pi/L)")
    return 2.0 / L * math.tan(L * params.rho / 2.0)


def stage_schedule(params: HyperParams):
    """Tap spacings and cutoffs of each stage.

    Returns ``(schedule, c)`` where ``schedule`` is a list of ``(U_i, omega_i)``.
    The first stage runs at the sampling time and every following stage is
    spaced at the Nyquist interval of its predecessor's cutoff.
    """
    l = params.l
    c = 0.5 * (params.T * params.omega_a / math.pi) ** (1.0 / l)
    schedule = []
    U = params.T
    for i in range(1, l + 1):
        if i > 1:
            U = math.pi / schedule[-1][1]
        omega = params.omega_a if i == l else 2.0 * c * math.pi / U
        schedule.append((U, omega))
    return schedule, c


def order_select(params: HyperParams, schedule) -> int:
    total = sum(U for U, _ in schedule)
    n_top = math.floor((params.L - params.T) / total)
    if n_top < 1:
        raise ConfigurationError(
            f"period too short for the cascade: (L - T)/sum(U) = {(params.L - params.T) / total:.6g} < 1"
        )
    return min(n_top, params.n_max)


def _amplitude(half_taps: np.ndarray, omega: np.ndarray) -> np.ndarray:
    n = np.arange(1, len(half_taps))
    return half_taps[0] + 2.0 * np.cos(np.multiply.outer(omega, n)) @ half_taps[1:]


def gamma_normalizer(taps, N: int | None = None) -> float:
    """Maximum over ``[0, pi]`` of the zero-phase amplitude of symmetric taps.

    ``taps`` may be the full symmetric array (length ``2N+1``) or, if ``N`` is
    given and ``len(taps) == N + 1``, only the ``n >= 0`` half.
    """
    taps = np.asarray(taps, dtype=float)
    if N is None:
        N = (len(taps) - 1) // 2
    half = taps if len(taps) == N + 1 else taps[N:]
    if N == 0:
        return float(half[0])

    grid = np.linspace(0.0, math.pi, GAMMA_GRID_POINTS)
    vals = _amplitude(half, grid)
    k = int(np.argmax(vals))
    best = float(vals[k])
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]

    def f(x):
        return float(_amplitude(half, np.array([x]))[0])

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > GOLDEN_TOL:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
    # golden section keeps the bracket endpoints out of play; the grid max already covers them
    return max(best, f1, f2, f(a), f(b))


def build_phi_plan(params: HyperParams) -> PhiPlan:
    """Resolve every derived quantity of the cascade from ``params``."""
    schedule, _ = stage_schedule(params)
    N = order_select(params, schedule)
    n = np.arange(-N, N + 1)
    window = blackman_weight(n, N)
    stages = []
    for i, (U, omega) in enumerate(schedule, start=1):
        taps = window * ideal_lowpass_tap(n, omega, U)
        # enforce bitwise symmetry regardless of libm behaviour for negative arguments
        taps = np.concatenate([taps[N:][::-1], taps[N + 1:]])
        gamma = gamma_normalizer(taps, N)
        Ubar = round_half_away(U / params.T)
        if Ubar < 1:
            raise ConfigurationError(f"stage {i}: rounded tap spacing U/T={U / params.T:.6g} is 0")
        taps.setflags(write=False)
        stages.append(StageSpec(index=i, U=U, omega=omega, Ubar=Ubar, taps=taps, gamma=gamma))
    Lbar = round_half_away(params.L / params.T)
    kappa = Lbar - N * sum(st.Ubar for st in stages)
    if kappa < 1:
        raise ConfigurationError(
            f"kappa = Lbar - N*sum(Ubar) = {kappa} < 1; lower n_max or change T/omega_a"
        )
    return PhiPlan(stages=tuple(stages), N=N, kappa=kappa, Lbar=Lbar, params=params)
