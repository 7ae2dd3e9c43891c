"""Command-line front end: ``qdob design|bode|integral|sim``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
import traceback
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bode_integral import convergence_report, integrate_ln_s_ct, integrate_ln_s_dt
from .errors import ConfigurationError, EvaluationError, QdobError, SimulationError
from .filter_design import HyperParams, build_phi_plan
from .freq_response import GridSpec, bode_table, default_grid
from .simulate import (
    DisturbanceSpec,
    NominalPlant,
    make_disturbance,
    predicted_attenuation_db,
    run_closed_loop,
    suppression_metrics,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

REQUIRED = ("omega0", "omega_b", "rho")
FLOAT_KEYS = {
    "T": 1e-3, "omega0": None, "omega_a": 10.0, "omega_b": None, "rho": None,
    "envelope_rate": 0.0, "envelope_depth": 0.0,
    "grid_min": None, "grid_max": None,
    "quad_tol": 1e-10, "W": None, "periods": 40.0, "discard": 0.5,
}
INT_KEYS = {"l": 3, "n_max": 256, "grid_count": None, "seed": 0}
STR_KEYS = {"grid_spacing": "log"}
LIST_KEYS = {"plant_num": "1", "plant_den": "1", "harmonics": "1:1:0"}


@dataclass
class RunConfig:
    hyperparams: HyperParams
    plant: NominalPlant
    disturbance: DisturbanceSpec
    grid_min: float | None
    grid_max: float | None
    grid_count: int | None
    grid_spacing: str
    quad_tol: float
    W: float | None
    periods: float
    discard: float
    seed: int
    out_dir: Path = Path(".")

    def grid(self, representation: str) -> GridSpec:
        base = default_grid(self.hyperparams, representation)
        return GridSpec(
            self.grid_min if self.grid_min is not None else base.start,
            self.grid_max if self.grid_max is not None else base.stop,
            self.grid_count if self.grid_count is not None else base.count,
            self.grid_spacing,
        )


def _finite(key, text):
    try:
        value = float(text)
    except ValueError:
        raise ConfigurationError(f"{key}: cannot parse {text!r} as a number") from None
    if not math.isfinite(value):
        raise ConfigurationError(f"{key}: value must be finite, got {text!r}")
    return value


def _float_list(key, text):
    return tuple(_finite(key, t) for t in text.split(",") if t.strip())


def _harmonics(text):
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        parts = item.split(":")
        if len(parts) != 3:
            raise ConfigurationError(f"harmonics: expected n:amplitude:phase, got {item!r}")
        n = _finite("harmonics", parts[0])
        if n != int(n) or n < 0:
            raise ConfigurationError(f"harmonics: index must be a nonnegative integer, got {parts[0]!r}")
        out.append((int(n), _finite("harmonics", parts[1]), _finite("harmonics", parts[2])))
    return tuple(out)


def parse_config(text: str) -> RunConfig:
    """Parse flat ``key = value`` text ('#' starts a comment)."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        known = FLOAT_KEYS.keys() | INT_KEYS.keys() | STR_KEYS.keys() | LIST_KEYS.keys()
        if key not in known:
            raise ConfigurationError(f"unknown key {key!r}")
        if key in raw:
            raise ConfigurationError(f"duplicate key {key!r}")
        raw[key] = value
    for key in REQUIRED:
        if key not in raw:
            raise ConfigurationError(f"required key {key} missing")

    vals = {}
    for key, default in FLOAT_KEYS.items():
        vals[key] = _finite(key, raw[key]) if key in raw else default
    for key, default in INT_KEYS.items():
        if key in raw:
            v = _finite(key, raw[key])
            if v != int(v):
                raise ConfigurationError(f"{key}: expected an integer, got {raw[key]!r}")
            vals[key] = int(v)
        else:
            vals[key] = default
    spacing = raw.get("grid_spacing", STR_KEYS["grid_spacing"])
    if spacing not in ("log", "linear"):
        raise ConfigurationError(f"grid_spacing: expected 'log' or 'linear', got {spacing!r}")

    try:
        params = HyperParams(T=vals["T"], omega0=vals["omega0"], omega_a=vals["omega_a"],
                             omega_b=vals["omega_b"], rho=vals["rho"], l=vals["l"], n_max=vals["n_max"])
    except ConfigurationError as exc:
        raise ConfigurationError(str(exc)) from None
    plant = NominalPlant(num_coeffs=_float_list("plant_num", raw.get("plant_num", LIST_KEYS["plant_num"])),
                         den_coeffs=_float_list("plant_den", raw.get("plant_den", LIST_KEYS["plant_den"])))
    disturbance = DisturbanceSpec(
        harmonics=_harmonics(raw.get("harmonics", LIST_KEYS["harmonics"])),
        envelope_rate=vals["envelope_rate"],
        envelope_depth=vals["envelope_depth"],
    )
    if disturbance.envelope_depth > 0 and not disturbance.envelope_rate < params.rho:
        raise ConfigurationError("envelope_rate: must be below rho")
    if vals["periods"] < 1:
        raise ConfigurationError("periods: must be >= 1")
    if not 0 <= vals["discard"] < 1:
        raise ConfigurationError("discard: must lie in [0, 1)")
    if vals["quad_tol"] <= 0:
        raise ConfigurationError("quad_tol: must be positive")
    if vals["W"] is not None and vals["W"] <= 0:
        raise ConfigurationError("W: must be positive")
    return RunConfig(
        hyperparams=params, plant=plant, disturbance=disturbance,
        grid_min=vals["grid_min"], grid_max=vals["grid_max"], grid_count=vals["grid_count"],
        grid_spacing=spacing, quad_tol=vals["quad_tol"], W=vals["W"], periods=vals["periods"],
        discard=vals["discard"], seed=vals["seed"],
    )


def fmt(x) -> str:
    """Shortest repr that round-trips to the same double."""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def cmd_design(cfg: RunConfig, out: Path, **_) -> int:
    p = cfg.hyperparams
    plan = build_phi_plan(p)
    write_csv(out / "design_stages.csv", ["i", "U", "omega", "Ubar", "gamma", "taps"],
              [(st.index, st.U, st.omega, st.Ubar, st.gamma, len(st.taps)) for st in plan.stages])
    summary = [("N", plan.N), ("kappa", plan.kappa), ("Lbar", plan.Lbar), ("omega_c", p.omega_c),
               ("L", p.L)]
    write_csv(out / "design_summary.csv", ["key", "value"], summary)
    print(" ".join(f"{k}={fmt(v)}" for k, v in summary))
    return EXIT_OK


def _db(x):
    with np.errstate(divide="ignore"):
        return 20.0 * np.log10(np.abs(x))


def cmd_bode(cfg: RunConfig, out: Path, representation: str = "dt", **_) -> int:
    p = cfg.hyperparams
    plan = build_phi_plan(p)
    table = bode_table(plan, p, representation, cfg.grid(representation))
    cols = [table.grid]
    header = ["freq"]
    for name, v in (("gamma", table.gamma_vals), ("s", table.s_vals), ("t", table.t_vals)):
        header += [f"{name}_re", f"{name}_im", f"{name}_db", f"{name}_deg"]
        cols += [v.real, v.imag, _db(v), np.degrees(np.angle(v))]
    header.append("flagged")
    cols.append(table.flagged)
    write_csv(out / f"bode_{representation}.csv", header, zip(*cols))
    print(f"rows={len(table)} flagged={int(np.count_nonzero(table.flagged))} "
          f"max_abs_S={fmt(np.max(np.abs(table.s_vals)))} unit_sum_error={fmt(table.unit_sum_error)}")
    return EXIT_OK


def cmd_integral(cfg: RunConfig, out: Path, representation: str = "dt", **_) -> int:
    """``partial`` is the full-circle value for ``dt`` (twice the half-range integral)."""
    p = cfg.hyperparams
    plan = build_phi_plan(p)
    if representation == "ct":
        sweep = integrate_ln_s_ct(plan, p, cfg.W, tol=cfg.quad_tol)
        partials = sweep.partials
    else:
        sweep = integrate_ln_s_dt(plan, p, tol=cfg.quad_tol)
        partials = 2.0 * sweep.partials
    report = convergence_report(sweep)
    target = sweep.target.value
    write_csv(out / f"integral_{representation}.csv", ["w", "partial", "target", "rel_error"],
              [(w, v, target, e) for w, v, e in zip(sweep.upper_limits, partials, report.errors)])
    print(f"representation={representation} target={fmt(target)} numeric={fmt(sweep.total)} "
          f"{report.mode}_error={fmt(report.final_error)} monotone={int(report.monotone)} "
          f"error_estimate={fmt(sweep.error_estimate)} unconverged_panels={sweep.n_unconverged}")
    return EXIT_OK


def cmd_sim(cfg: RunConfig, out: Path, **_) -> int:
    p = cfg.hyperparams
    plan = build_phi_plan(p)
    steps = int(round(cfg.periods * plan.Lbar))
    d = make_disturbance(cfg.disturbance, p, steps=steps)
    trace = run_closed_loop(cfg.plant, plan, p, d)
    baseline = run_closed_loop(cfg.plant, plan, p, d, enabled=False)
    cols = trace.columns()
    write_csv(out / "sim_trace.csv", list(cols), zip(*cols.values()))
    indices = sorted({h[0] for h in cfg.disturbance.harmonics})
    rows = []
    if len(trace) > 10 * plan.Lbar and indices:
        for m in suppression_metrics(trace, p, indices, baseline, discard=cfg.discard):
            pred = predicted_attenuation_db(plan, p, m.index) if m.error is None else float("nan")
            rows.append((m.index, pred, m.measured_db))
    write_csv(out / "sim_metrics.csv", ["harmonic", "predicted_db", "measured_db"], rows)
    print(f"steps={steps} harmonics={len(rows)}")
    for n, pred, meas in rows:
        print(f"  n={n} predicted_db={fmt(pred)} measured_db={fmt(meas)}")
    return EXIT_OK


COMMANDS = {"design": cmd_design, "bode": cmd_bode, "integral": cmd_integral, "sim": cmd_sim}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdob", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, type=Path, help="flat key = value file")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory")
    parser.add_argument("--representation", choices=("ct", "dt"), default="dt")
    parser.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = args.config.read_text(encoding="utf-8")
        cfg = parse_config(text)
        if args.seed is not None:
            cfg.seed = args.seed
        cfg.out_dir = args.out
        args.out.mkdir(parents=True, exist_ok=True)
    except (ConfigurationError, ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    np.random.seed(cfg.seed)
    try:
        return COMMANDS[args.command](cfg, args.out, representation=args.representation)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EvaluationError, SimulationError, ArithmeticError, QdobError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except Exception:  # keep the 0/2/3 exit-code contract
        traceback.print_exc()
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
