"""Hot numeric kernels with numba and pure-numpy implementations.

Set ``QDOB_DISABLE_NUMBA=1`` to force the numpy path (also used when numba
is not importable).  Both implementations are always importable under the
``*_numba`` / ``*_numpy`` names so they can be compared directly.
"""
from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("QDOB_DISABLE_NUMBA", "").lower() not in ("1", "true", "yes")

# re-anchor the rotation recurrence with libm cos/sin this often
_ANCHOR = 16
_CHUNK = 4096

SIM_OK = -1


# --------------------------------------------------------------------------
# cascade amplitude:  prod_i (h_i0 + 2 sum_n h_in cos(n Ubar_i theta))
# --------------------------------------------------------------------------

def cascade_amplitude_numpy(half_taps, ubar, theta):
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    out = np.ones(theta.shape[0])
    n = np.arange(1, half_taps.shape[1], dtype=np.float64)
    for start in range(0, theta.shape[0], _CHUNK):
        th = theta[start:start + _CHUNK]
        acc = np.ones(th.shape[0])
        for i in range(half_taps.shape[0]):
            c = np.cos(np.multiply.outer(th * ubar[i], n))
            acc *= half_taps[i, 0] + 2.0 * (c @ half_taps[i, 1:])
        out[start:start + _CHUNK] = acc
    return out


def _cascade_amplitude_py(half_taps, ubar, theta):
    m = theta.shape[0]
    l, n1 = half_taps.shape
    out = np.empty(m)
    for k in range(m):
        prod = 1.0
        for i in range(l):
            x = theta[k] * ubar[i]
            c1 = math.cos(x)
            s1 = math.sin(x)
            acc = 0.0
            c = 1.0
            s = 0.0
            for n in range(1, n1):
                if n % _ANCHOR == 0:
                    c = math.cos(n * x)
                    s = math.sin(n * x)
                else:
                    c, s = c * c1 - s * s1, s * c1 + c * s1
                acc += half_taps[i, n] * c
            prod *= half_taps[i, 0] + 2.0 * acc
        out[k] = prod
    return out


# --------------------------------------------------------------------------
# closed-loop observer recursion
# --------------------------------------------------------------------------

def _loop_py(d, r, num_p, den_p, num_o, den_o, delay_taps, ubar, kappa, wcl, enabled,
             u, y, xi, dhat, stage_hist):
    """Sequential observer loop; fills the output arrays in place.

    ``delay_taps[i, j]`` multiplies ``x_i[k - j*ubar[i]]``.  ``stage_hist[i]`` is
    the input history of stage ``i``; ``stage_hist[l]`` holds the cascade output.
    Returns ``SIM_OK`` or the index of the first non-finite step.
    """
    steps = d.shape[0]
    l = delay_taps.shape[0]
    ntap = delay_taps.shape[1]
    p0 = num_p[0]
    q0 = num_o[0]
    denom = 2.0 + wcl * q0 * p0
    for k in range(steps):
        y_rest = 0.0
        for i in range(1, num_p.shape[0]):
            if k - i >= 0:
                y_rest += num_p[i] * (u[k - i] + d[k - i])
        for i in range(1, den_p.shape[0]):
            if k - i >= 0:
                y_rest -= den_p[i] * y[k - i]
        xi_rest = 0.0
        for i in range(1, num_o.shape[0]):
            if k - i >= 0:
                xi_rest += num_o[i] * y[k - i]
        for i in range(1, den_o.shape[0]):
            if k - i >= 0:
                xi_rest -= den_o[i] * xi[k - i]

        if enabled:
            fb = stage_hist[l, k - kappa] if k - kappa >= 0 else 0.0
            e0 = q0 * p0 * (r[k] + d[k]) + q0 * y_rest + xi_rest - r[k]
            dh = (wcl * e0 - fb) / denom
        else:
            dh = 0.0
        dhat[k] = dh
        u[k] = r[k] - dh
        y[k] = p0 * (u[k] + d[k]) + y_rest
        xi[k] = q0 * y[k] + xi_rest
        if not math.isfinite(y[k]) or abs(y[k]) > 1e150:
            return k
        if enabled:
            e = xi[k] - u[k]
            stage_hist[0, k] = (wcl - 2.0) * dh - wcl * e
            for i in range(l):
                step = ubar[i]
                acc = 0.0
                for j in range(ntap):
                    idx = k - j * step
                    if idx < 0:
                        break
                    acc += delay_taps[i, j] * stage_hist[i, idx]
                stage_hist[i + 1, k] = acc
    return SIM_OK


@np.errstate(over="ignore", invalid="ignore")  # divergence is reported through the return value
def run_loop_numpy(d, r, num_p, den_p, num_o, den_o, delay_taps, ubar, kappa, wcl, enabled,
                   u, y, xi, dhat, stage_hist):
    steps = d.shape[0]
    l, ntap = delay_taps.shape
    p0 = float(num_p[0])
    q0 = float(num_o[0])
    denom = 2.0 + wcl * q0 * p0
    nb, na = num_p[1:][::-1], den_p[1:][::-1]
    ob, oa = num_o[1:][::-1], den_o[1:][::-1]
    mb, ma = len(nb), len(na)
    ob_len, oa_len = len(ob), len(oa)
    v = np.zeros(steps)  # u + d
    taps = [delay_taps[i] for i in range(l)]
    ubar = [int(x) for x in ubar]
    for k in range(steps):
        # dot products over the most recent samples, oldest first
        y_rest = 0.0
        if mb:
            lo = max(k - mb, 0)
            y_rest += float(np.dot(nb[mb - (k - lo):], v[lo:k]))
        if ma:
            lo = max(k - ma, 0)
            y_rest -= float(np.dot(na[ma - (k - lo):], y[lo:k]))
        xi_rest = 0.0
        if ob_len:
            lo = max(k - ob_len, 0)
            xi_rest += float(np.dot(ob[ob_len - (k - lo):], y[lo:k]))
        if oa_len:
            lo = max(k - oa_len, 0)
            xi_rest -= float(np.dot(oa[oa_len - (k - lo):], xi[lo:k]))

        if enabled:
            fb = stage_hist[l, k - kappa] if k >= kappa else 0.0
            e0 = q0 * p0 * (r[k] + d[k]) + q0 * y_rest + xi_rest - r[k]
            dh = (wcl * e0 - fb) / denom
        else:
            dh = 0.0
        dhat[k] = dh
        u[k] = r[k] - dh
        v[k] = u[k] + d[k]
        y[k] = p0 * v[k] + y_rest
        xi[k] = q0 * y[k] + xi_rest
        if not math.isfinite(y[k]) or abs(y[k]) > 1e150:
            return k
        if enabled:
            stage_hist[0, k] = (wcl - 2.0) * dh - wcl * (xi[k] - u[k])
            for i in range(l):
                window = stage_hist[i, k::-ubar[i]][:ntap]
                stage_hist[i + 1, k] = float(np.dot(taps[i][:window.shape[0]], window))
    return SIM_OK


if HAVE_NUMBA:
    cascade_amplitude_numba = njit(cache=True, nogil=True)(_cascade_amplitude_py)
    run_loop_numba = njit(cache=True, nogil=True)(_loop_py)
else:  # pragma: no cover
    cascade_amplitude_numba = None
    run_loop_numba = None


def cascade_amplitude(half_taps, ubar, theta):
    """Product of zero-phase stage amplitudes at normalized angles ``theta``.

    ``theta`` is in rad/sample (``omega * T``); stage ``i`` is evaluated at
    ``ubar[i] * theta``.
    """
    theta = np.ascontiguousarray(np.ravel(theta), dtype=np.float64)
    half_taps = np.ascontiguousarray(half_taps, dtype=np.float64)
    ubar = np.ascontiguousarray(ubar, dtype=np.int64)
    if USE_NUMBA:
        return cascade_amplitude_numba(half_taps, ubar, theta)
    return cascade_amplitude_numpy(half_taps, ubar, theta)


def run_loop(*args):
    if USE_NUMBA:
        return run_loop_numba(*args)
    return run_loop_numpy(*args)
