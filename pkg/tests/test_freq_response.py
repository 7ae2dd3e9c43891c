import math

import numpy as np
import pytest

from qdob.errors import EvaluationError, PoleProximityError
from qdob.filter_design import HyperParams, PhiPlan, StageSpec, build_phi_plan
from qdob.freq_response import (
    GridSpec,
    bode_table,
    default_grid,
    log_abs_sensitivity,
    loop_on_axis,
    open_loop_ct,
    open_loop_dt,
    phi_ct,
    phi_dt,
    phi_on_axis,
    sensitivity_pair,
)

from conftest import ROWS, WIDE_B, table_params, table_plan

# open-loop max |S~| - 1 of the wide-B rows stays positive (see the acceptance module)
PHASE_OVERSHOOT = "finite omega_b adds phase lag where |Phi|~1, pushing arg(Gamma) past 90 deg and |S| above 1"


def identity_plan(kappa=1):
    p = HyperParams(T=1e-3, omega0=1.0, omega_a=10.0, omega_b=100.0, rho=0.1)
    st = StageSpec(index=1, U=1e-3, omega=10.0, Ubar=1, taps=np.array([1.0]), gamma=1.0)
    return PhiPlan(stages=(st,), N=0, kappa=kappa, Lbar=kappa, params=p)


def test_identity_cascade():
    plan = identity_plan()
    assert phi_ct(plan, 0.0) == pytest.approx(1.0)
    assert phi_dt(plan, 1.0) == pytest.approx(1.0)
    assert phi_dt(plan, 2.0) == pytest.approx(0.5)


def test_dc_value(p1):
    params, plan = p1
    v = phi_ct(plan, 0.0)
    assert abs(v.imag) < 1e-15
    assert 0 < v.real <= 1


def test_fundamental_passband(p1):
    params, plan = p1
    assert abs(abs(phi_ct(plan, 1j * params.omega0)) - 1) < 1e-2


def test_phi_dt_zero():
    with pytest.raises(EvaluationError):
        phi_dt(identity_plan(), 0.0)


def test_phi_overflow(p1):
    _, plan = p1
    with pytest.raises(EvaluationError):
        phi_ct(plan, -1e5)


@pytest.mark.parametrize("row", ["P1", "P3", "P5"])
def test_ct_dt_consistency(row):
    params, plan = table_params(row), table_plan(row)
    w = np.linspace(0, math.pi / params.T, 257)[1:]
    a = phi_ct(plan, 1j * w)
    b = phi_dt(plan, np.exp(1j * w * params.T))
    assert np.max(np.abs(a - b)) < 1e-12
    # the fast path against the tap sums
    assert np.max(np.abs(phi_on_axis(plan, w * params.T) - a)) < 1e-12


def test_random_plan_ct_dt():
    rng = np.random.default_rng(7)
    p = HyperParams(T=1e-3, omega0=float(rng.uniform(1, 5)), omega_a=float(rng.uniform(5, 30)),
                    omega_b=50.0, rho=0.2, l=2, n_max=int(rng.integers(20, 60)))
    plan = build_phi_plan(p)
    assert abs(phi_dt(plan, np.exp(0.3j)) - phi_ct(plan, 0.3j / p.T)) < 1e-12


def test_circle_gain_bound(p1):
    _, plan = p1
    theta = np.linspace(0, math.pi, 100_001)
    assert np.max(np.abs(phi_on_axis(plan, theta))) <= 1 + 1e-12


def test_open_loop_zero_rho():
    p = HyperParams(T=1e-3, omega0=1.0, omega_a=10.0, omega_b=100.0, rho=0.0)
    plan = build_phi_plan(p)
    assert open_loop_ct(plan, p, 0.3j + 0.1) == 0
    assert open_loop_dt(plan, p, np.exp(0.3j)) == 0
    t = bode_table(plan, p, "dt", GridSpec(1e-3, math.pi, 500))
    assert np.all(t.s_vals == 1)


def test_open_loop_real_axis_rolloff(p1):
    params, plan = p1
    assert abs(open_loop_ct(plan, params, 1e6)) < 1e-3


def test_open_loop_between_harmonics(p1):
    params, plan = p1
    g = open_loop_ct(plan, params, 0.5j * params.omega0)
    s, _ = sensitivity_pair(g)
    assert abs(g) < 0.05
    assert abs(abs(s) - 1) < 0.05


def test_open_loop_dt_limit(p1):
    params, plan = p1
    wbT = params.omega_b * params.T
    expected = params.omega_c * params.L / 2 * wbT / (1 + wbT)
    assert open_loop_dt(plan, params, 1e4) == pytest.approx(expected, rel=1e-4)


def test_open_loop_dt_harmonic(p1):
    params, plan = p1
    assert abs(open_loop_dt(plan, params, np.exp(1j * params.omega0 * params.T))) > 100


def test_pole_errors(p1):
    params, plan = p1
    with pytest.raises(PoleProximityError):
        open_loop_ct(plan, params, -params.omega_b)
    with pytest.raises(PoleProximityError):
        open_loop_dt(plan, params, 1 / (1 + params.omega_b * params.T))
    with pytest.raises(PoleProximityError):
        open_loop_dt(identity_plan(), params, 1.0)


def test_sensitivity_pair():
    assert sensitivity_pair(0) == (1, 0)
    assert sensitivity_pair(1) == (0.5, 0.5)
    assert sensitivity_pair(complex(np.inf)) == (0, 1)
    with pytest.raises(EvaluationError):
        sensitivity_pair(-1)


@pytest.mark.parametrize("rep", ["ct", "dt"])
def test_conjugate_symmetry(p1, rep):
    params, plan = p1
    rng = np.random.default_rng(3)
    pts = rng.uniform(-0.5, 0.5, 20) + 1j * rng.uniform(0, 3, 20)
    if rep == "ct":
        g1, g2 = open_loop_ct(plan, params, pts), open_loop_ct(plan, params, pts.conj())
    else:
        z = np.exp(pts * params.T)
        g1, g2 = open_loop_dt(plan, params, z), open_loop_dt(plan, params, z.conj())
    assert np.allclose(g2, g1.conj(), rtol=1e-12, atol=0)


@pytest.mark.parametrize("row", list(ROWS))
@pytest.mark.parametrize("rep", ["ct", "dt"])
def test_unit_sum(row, rep):
    t = bode_table(table_plan(row), table_params(row), rep)
    assert t.unit_sum_error <= 1e-12
    assert np.all(np.diff(t.grid) > 0)
    assert len(t) == 20001


def test_default_grids(p1):
    params, _ = p1
    assert default_grid(params, "dt") == GridSpec(1e-4, math.pi, 20001, "log")
    g = default_grid(params, "ct")
    assert (g.start, g.stop) == (1e-4, 1e4)


def test_dt_grid_clipped(p1):
    params, plan = p1
    t = bode_table(plan, params, "dt", GridSpec(1e-3, 10.0, 1000))
    assert t.grid.max() <= math.pi


@pytest.mark.parametrize("row", ["P1", "P4"])
def test_phase_bound_conditional(row):
    """Wherever |arg Gamma| <= 90 deg the sensitivity gain is at most one."""
    params, plan = table_params(row), table_plan(row)
    for rep, top in (("dt", math.pi), ("ct", 100 * params.omega_b)):
        w = np.geomspace(1e-4 if rep == "dt" else 1e-4 * params.omega0, top, 100_001)
        g, s, _, flag = loop_on_axis(plan, params, w, rep)
        ok = ~flag & (np.abs(np.angle(g)) <= math.pi / 2)
        assert ok.sum() > 1000
        assert np.max(np.abs(s[ok])) <= 1 + 1e-12


@pytest.mark.xfail(strict=True, reason="upper band edges sit near -2.98 dB: the -3 dB edge of the ideal loop moves outward only as omega_b grows")
def test_p1_dt_suppression_bands(p1):
    params, plan = p1
    w = np.geomspace(1e-3, math.pi, 20001)
    db = 20 * np.log10(np.abs(loop_on_axis(plan, params, w, "dt")[1]))
    T = params.T
    n = 1
    while n * params.omega0 <= params.omega_a:
        band = (w >= (n * params.omega0 - params.rho) * T) & (w <= (n * params.omega0 + params.rho) * T)
        assert np.all(db[band] < -3.0), n
        n += 1


@pytest.mark.xfail(strict=True, reason=PHASE_OVERSHOOT)
def test_p1_ct_sensitivity_gain_bound(p1):
    params, plan = p1
    t = bode_table(plan, params, "ct")
    assert np.max(np.abs(t.s_vals)) <= 1 + 1e-9


def test_maximum_modulus_sampling(p1):
    params, plan = p1
    rng = np.random.default_rng(2024)
    s = rng.uniform(0, 1 / params.T, 100) + 1j * rng.uniform(-math.pi / params.T, math.pi / params.T, 100)
    s = np.where(s.real == 0, s + 1e-9, s)
    axis_max = np.max(np.abs(phi_on_axis(plan, np.linspace(0, math.pi, 200_001))))
    vals = np.abs(phi_ct(plan, s))
    assert np.all(vals < axis_max + 1e-9)
    # no pole proximity for Re s > 0
    assert np.all(np.abs(1 - phi_ct(plan, s)) > 1e-300)
    open_loop_ct(plan, params, s)


def test_log_abs_sensitivity_matches_table(p1):
    params, plan = p1
    w = np.geomspace(1e-3, math.pi, 777)
    s = loop_on_axis(plan, params, w, "dt")[1]
    assert np.allclose(log_abs_sensitivity(plan, params, w, "dt"), np.log(np.abs(s)), atol=1e-12)
