import pytest

from qdob.filter_design import HyperParams, build_phi_plan

# reference rows P1-P7: (omega0, omega_b, rho, rounded delta_ct, rounded delta_dt); T = 1 ms, omega_a = 10, l = 3, n_max = 256
ROWS = {
    "P1": (1.0, 100.0, 0.1, -51.0, -0.18),
    "P2": (1.0, 100.0, 0.25, -157.1, -0.55),
    "P3": (10.0, 400.0, 1.476, -314.2, -0.84),
    "P4": (1.0, 200.0, 0.25, -314.2, -0.97),
    "P5": (1.0, 0.1, 0.25, -0.16, -0.63e-3),
    "P6": (1.0, 0.5, 0.25, -0.79, -3.14e-3),
    "P7": (1.0, 1.0, 0.25, -1.57, -6.27e-3),
}
# rows where omega_b >= 10 * omega_a
WIDE_B = ("P1", "P2", "P3", "P4")


def table_params(row: str) -> HyperParams:
    w0, wb, rho, _, _ = ROWS[row]
    return HyperParams(T=1e-3, omega0=w0, omega_a=10.0, omega_b=wb, rho=rho, l=3, n_max=256)


_PLANS = {}


def table_plan(row: str):
    if row not in _PLANS:
        _PLANS[row] = build_phi_plan(table_params(row))
    return _PLANS[row]


@pytest.fixture(scope="session")
def p1():
    return table_params("P1"), table_plan("P1")


@pytest.fixture(scope="session")
def p2():
    return table_params("P2"), table_plan("P2")


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
