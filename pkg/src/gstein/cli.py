"""Command-line interface: ``gstein <command> [options]``.

Exit codes: 0 pass, 1 verification failure, 2 usage or configuration error,
3 numerical-contract violation (CFL, unbounded data, mass leakage).

Outputs are deterministic: floats are written with ``repr``, keys are sorted
and wall-clock time is only recorded with ``--timing``. Random numbers come
from Philox streams keyed by ``(seed, k)``: ``k`` is the Monte Carlo block
index, and ``k = 2**32 - 1`` is reserved for the self-test's random samples.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import testfns as tfn
from .gcore import (GParams, NumericalContractError, g_eval, g_inverse,
                    gaussian_measure)
from .gheat import (SolveConfig, default_config, dump_field_csv, field_value,
                    solve_g_heat)
from .oracle import LatticeConfig, tree_expectation
from .realize import realize, write_measure_csv
from .stein import (CONJECTURE_FLOOR, GAP_TOL, conjecture_gap,
                    negative_control, report_passes,
                    shw_supremum, stein_residual, verify_proposition_main)

SCHEMA = 1
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
COMMANDS = ("expectation", "solve", "realize", "stein-check", "eigen", "oracle",
            "selftest", "report")
OUTPUT_KEYS = ("json", "dump_grid", "out", "inputs")
AUX_STREAM = 2 ** 32 - 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs; serializes to canonical JSON."""

    command: str = "expectation"
    sigma_lo: float = 1.0
    sigma_hi: float = 2.0
    phi: str = "phi_beta"
    all: bool = False
    dx: float = 0.04
    dt: float | None = None
    t_max: float = 1.5
    x_max: float | None = None
    boundary: str = "freeze"
    seed: int = 0
    mc_paths: int = 0
    steps: int = 400
    stride: int = 1
    rho: float = 1.0
    sign: str = "plus"
    parity: str = "even"
    value0: float = 1.0
    n: int = 2000
    tol_scale: float = 1.0
    timing: bool = False
    json: str | None = None
    dump_grid: str | None = None
    out: str | None = None
    inputs: tuple = ()

    def to_dict(self, outputs: bool = True) -> dict:
        d = asdict(self)
        d["inputs"] = list(self.inputs)
        if not outputs:
            for k in OUTPUT_KEYS:
                d.pop(k)
        return d

    def canonical_json(self) -> str:
        return json.dumps({"schema": SCHEMA, **self.to_dict()}, sort_keys=True,
                          separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        schema = d.pop("schema", SCHEMA)
        if schema != SCHEMA:
            raise ConfigError(f"unsupported config schema {schema!r}")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        if "inputs" in d:
            d["inputs"] = tuple(d["inputs"] or ())
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def params(self) -> GParams:
        return GParams(self.sigma_lo, self.sigma_hi)

    def solve_config(self) -> SolveConfig:
        p = self.params()
        cfg = default_config(p, dx=self.dx, t_max=self.t_max, x_max=self.x_max,
                             boundary=self.boundary)
        if self.dt is not None:
            cfg = cfg.with_grid(dt=self.dt)
        return cfg

    def test_function(self, p: GParams | None = None):
        return tfn.by_name(self.phi, p or self.params())

    def validate(self) -> None:
        """Check everything that can be checked before computing.

        Raises ConfigError for bad settings and CFLError for an explicit step
        that breaks the monotonicity bound.
        """
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        for name in ("dx", "t_max", "tol_scale"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive number")
        for name in ("steps", "stride", "n"):
            if int(getattr(self, name)) != getattr(self, name) or getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.mc_paths < 0 or int(self.mc_paths) != self.mc_paths:
            raise ConfigError("mc_paths must be a nonnegative integer")
        if self.seed < 0 or int(self.seed) != self.seed:
            raise ConfigError("seed must be a nonnegative integer")
        try:
            p = self.params()
            cfg = self.solve_config()
        except NumericalContractError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if self.command == "eigen":
            if self.sign not in ("plus", "minus") or self.parity not in ("even", "odd"):
                raise ConfigError("sign must be plus|minus and parity even|odd")
            if p.sigma_lo <= 0.0:
                raise ConfigError("eigen needs sigma_lo > 0")
            return
        cfg.time_step(p)  # CFL
        if self.command in ("selftest",):
            return
        if self.command == "report" and not self.out:
            raise ConfigError("report needs --out DIR")
        for path in self.inputs:
            if not os.path.isfile(path):
                raise ConfigError(f"missing input {path}")
        if self.command == "stein-check" and self.all:
            if p.sigma_lo <= 0.0:
                raise ConfigError("the battery needs sigma_lo > 0")
            return
        try:
            self.test_function(p)
        except (KeyError, OSError, ValueError) as exc:
            raise ConfigError(f"cannot resolve --phi {self.phi!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _grid_info(cfg: SolveConfig, p: GParams) -> dict:
    dt, stride = cfg.time_step(p)
    g = cfg.grid
    return {"x_min": g.x_min, "x_max": g.x_max, "nx": g.nx, "dx": g.dx, "dt": dt,
            "t_max": g.t_max, "boundary": cfg.boundary}


class _Out:
    def __init__(self, rc: RunConfig):
        self.rc = rc
        self.t0 = time.perf_counter()

    def envelope(self, status: str, body: dict) -> dict:
        ms = (time.perf_counter() - self.t0) * 1e3 if self.rc.timing else None
        return {"schema": SCHEMA, "command": self.rc.command, "status": status,
                "config": self.rc.to_dict(outputs=False), **body, "runtime_ms": ms}

    def emit(self, status: str, body: dict, summary: str) -> int:
        text = dumps(self.envelope(status, body))
        if self.rc.json:
            with open(self.rc.json, "w") as fh:
                fh.write(text)
            print(summary)
        else:
            sys.stdout.write(text)
        return EXIT_OK if status == "pass" else EXIT_FAIL


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_expectation(rc: RunConfig) -> int:
    out = _Out(rc)
    p, cfg = rc.params(), rc.solve_config()
    phi = rc.test_function(p)
    fld = solve_g_heat(phi, p, cfg.with_grid(t_max=1.0))
    value = field_value(fld, 1.0, 0.0)
    body = {"phi": phi.name, "sigma_lo": p.sigma_lo, "sigma_hi": p.sigma_hi,
            "value": value, "grid": _grid_info(cfg, p)}
    return out.emit("pass", body, f"N_G[{phi.name}] = {value!r}")


def cmd_solve(rc: RunConfig) -> int:
    out = _Out(rc)
    p, cfg = rc.params(), rc.solve_config()
    phi = rc.test_function(p)
    fld = solve_g_heat(phi, p, cfg)
    u0 = fld.values[0]
    bound_ok = bool(np.all(fld.values <= u0.max() + 1e-12) and np.all(fld.values >= u0.min() - 1e-12))
    if rc.dump_grid:
        dump_field_csv(fld, rc.dump_grid, rc.stride)
    body = {"phi": phi.name, "grid": _grid_info(cfg, p), "stored_levels": len(fld.times),
            "level_spacing": float(fld.times[1] - fld.times[0]),
            "u_1_0": field_value(fld, 1.0, 0.0) if fld.times[-1] >= 1.0 else None,
            "max_principle": bound_ok}
    return out.emit("pass" if bound_ok else "fail", body,
                    f"solved {phi.name}: {len(fld.times)} stored levels")


def cmd_realize(rc: RunConfig) -> int:
    out = _Out(rc)
    p, cfg = rc.params(), rc.solve_config()
    phi = rc.test_function(p)
    res = realize(phi, p, cfg, mc_paths=rc.mc_paths, seed=rc.seed)
    m = res.measure
    tail = m.mass_outside(-6.0 * p.sigma_hi, 6.0 * p.sigma_hi)
    ok = res.gap <= GAP_TOL * rc.tol_scale and tail <= 1e-6
    if res.mc_gap is not None:
        ok &= res.mc_gap <= 1e-2 * rc.tol_scale
    if rc.out:
        write_measure_csv(m, rc.out)
    body = {"phi": phi.name, "n_g": res.n_g, "mu_phi": res.mu_phi, "gap": res.gap,
            "mass_drift": res.mass_drift, "leaked_mass": res.leaked_mass,
            "tail_mass_6sigma_hi": tail, "mean": m.mean(), "variance": m.variance(),
            "mc_paths": rc.mc_paths, "seed": rc.seed, "mc_gap": res.mc_gap,
            "grid": _grid_info(cfg, p)}
    return out.emit("pass" if ok else "fail", body,
                    f"{phi.name}: mu[phi] = {res.mu_phi!r}, gap = {res.gap:.3e}")


def _stein_one(phi, p, cfg, rc):
    res = realize(phi, p, cfg)
    rep = verify_proposition_main(phi, p, cfg, result=res)
    shw, members = shw_supremum(phi, p, res)
    entry = {"report": rep.to_dict(), "shw_supremum": shw, "shw_measures": members,
             "passed": report_passes(rep, rc.tol_scale)}
    if p.sigma_lo < p.sigma_hi:
        entry["negative_control"] = negative_control(phi, p)
    return entry


def cmd_stein_check(rc: RunConfig) -> int:
    out = _Out(rc)
    p, cfg = rc.params(), rc.solve_config()
    phis = tfn.standard_battery(p) if rc.all else [rc.test_function(p)]
    entries = [_stein_one(phi, p, cfg, rc) for phi in phis]
    ok = all(e["passed"] for e in entries)
    body = {"reports": entries, "grid": _grid_info(cfg, p)}
    failed = [e["report"]["phi_name"] for e in entries if not e["passed"]]
    return out.emit("pass" if ok else "fail", body,
                    "all reports pass" if ok else f"failing: {', '.join(failed)}")


def cmd_eigen(rc: RunConfig) -> int:
    out = _Out(rc)
    p = rc.params()
    x_max = rc.x_max if rc.x_max is not None else 10.0
    tf = tfn.eigen_solve(rc.rho, rc.sign, p, rc.parity, x_max, rc.n, value0=rc.value0)
    x, f, f1, f2 = tf.table
    if rc.out:
        tfn.write_csv(rc.out, x, f, f1, f2)
    inner = x[1:-1]
    r = np.abs(tfn.eigen_residual(tf, rc.rho, rc.sign, p, inner)) / (1.0 + np.abs(tf(inner)))
    worst = float(r.max())
    body = {"name": tf.name, "rho": rc.rho, "sign": rc.sign, "parity": rc.parity,
            "value0": rc.value0, "n": int(x.size - 1), "x_max": x_max,
            "max_relative_residual": worst}
    return out.emit("pass" if worst <= 1e-6 else "fail", body,
                    f"{tf.name}: max relative ODE residual {worst:.3e}")


def cmd_oracle(rc: RunConfig) -> int:
    out = _Out(rc)
    p, cfg = rc.params(), rc.solve_config()
    phi = rc.test_function(p)
    lat = LatticeConfig.for_params(p, n_steps=rc.steps)
    tree = tree_expectation(phi, p, lat)
    pde = field_value(solve_g_heat(phi, p, cfg.with_grid(t_max=1.0)), 1.0, 0.0)
    dev = abs(tree - pde)
    body = {"phi": phi.name, "steps": rc.steps, "tree": tree, "pde": pde, "deviation": dev,
            "lattice": {"h": lat.h, "nx": lat.nx, "x_max": lat.x_max}}
    return out.emit("pass" if dev <= 1e-2 * rc.tol_scale else "fail", body,
                    f"tree {tree!r}  pde {pde!r}  deviation {dev:.3e}")


def _suite_axioms(rc, p):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([rc.seed, AUX_STREAM])))
    a, b = rng.normal(0, 3, 1000), rng.normal(0, 3, 1000)
    lam = rng.uniform(0, 5, 1000)
    hi, lo = np.maximum(a, b), np.minimum(a, b)
    ok = bool(np.all(g_eval(hi, p) >= g_eval(lo, p)))
    ok &= bool(np.all(g_eval(a + b, p) <= g_eval(a, p) + g_eval(b, p) + 1e-12))
    ok &= bool(np.allclose(g_eval(lam * a, p), lam * g_eval(a, p), rtol=1e-13, atol=1e-13))
    if p.sigma_lo > 0:
        ok &= bool(np.allclose(g_inverse(g_eval(a, p), p), a, rtol=1e-12, atol=1e-12))
    return ok, {}


def _suite_closed_form(rc, p, cfg):
    if p.sigma_lo <= 0:
        return None, {"reason": "sigma_lo = 0"}
    phi = tfn.phi_beta_function(p)
    val = field_value(solve_g_heat(phi, p, cfg.with_grid(t_max=1.0)), 1.0, 0.0)
    exact = math.exp(-tfn.phi_beta_eigenvalue(p)) * float(phi(0.0))
    return abs(val - exact) <= 2e-3 * rc.tol_scale, {"value": val, "exact": exact}


def _battery(p):
    if p.sigma_lo > 0:
        return tfn.standard_battery(p)
    return [tfn.by_name(n, p) for n in ("cos", "gaussian_bump", "compact_bump",
                                          "clipped_quadratic", "smooth_step")]


def _suite_stein(rc, p, cfg, classical):
    worst_res = worst_id = 0.0
    ok = True
    for phi in _battery(p):
        rep = verify_proposition_main(phi, p, cfg, s_list=(0.0, 0.5, 1.0), with_conjecture=False)
        ok &= report_passes(rep, rc.tol_scale)
        worst_res = max(worst_res, abs(rep.residual))
        worst_id = max(worst_id, rep.identity_spread)
    if classical:
        ok &= worst_res <= 1e-3 and worst_id <= 1e-3
        g = gaussian_measure(p.sigma_lo)
        worst_ref = max(abs(stein_residual(g, phi, p)) for phi in _battery(p))
        ok &= worst_ref <= 1e-6
        return ok, {"max_residual": worst_res, "max_identity_spread": worst_id,
                    "max_reference_residual": worst_ref}
    return ok, {"max_residual": worst_res, "max_identity_spread": worst_id}


def _suite_conjecture(rc, p, cfg, classical):
    gaps = {phi.name: conjecture_gap(phi, p, cfg) for phi in _battery(p)}
    if classical:
        ok = all(abs(v) <= 2e-3 * rc.tol_scale for v in gaps.values())
    else:
        ok = all(v >= CONJECTURE_FLOOR * rc.tol_scale for v in gaps.values())
        ok &= max(gaps.values()) >= 0.01
    return ok, {"gaps": gaps}


def _suite_negative(rc, p, classical):
    if classical:
        return None, {"reason": "degenerate band"}
    vals = {phi.name: negative_control(phi, p) for phi in _battery(p)}
    return min(vals.values()) <= -0.05, {"residuals": vals}


def _suite_oracle(rc, p, cfg):
    lat = LatticeConfig.for_params(p, n_steps=rc.steps)
    dev = 0.0
    for phi in _battery(p):
        pde = field_value(solve_g_heat(phi, p, cfg.with_grid(t_max=1.0)), 1.0, 0.0)
        dev = max(dev, abs(tree_expectation(phi, p, lat) - pde))
    return dev <= 1e-2 * rc.tol_scale, {"max_deviation": dev}


def _suite_realization(rc, p, cfg):
    paths = rc.mc_paths or 100_000
    worst_gap = worst_tail = 0.0
    for phi in _battery(p):
        res = realize(phi, p, cfg)
        worst_gap = max(worst_gap, res.gap)
        worst_tail = max(worst_tail, res.measure.mass_outside(-6 * p.sigma_hi, 6 * p.sigma_hi))
    phi = _battery(p)[0]
    mc = realize(phi, p, cfg, mc_paths=paths, seed=rc.seed)
    ok = worst_gap <= GAP_TOL * rc.tol_scale and worst_tail <= 1e-6
    ok &= mc.mc_gap <= 1e-2 * rc.tol_scale
    return ok, {"max_gap": worst_gap, "max_tail_mass": worst_tail, "mc_phi": phi.name,
                "mc_paths": paths, "mc_gap": mc.mc_gap}


def cmd_selftest(rc: RunConfig) -> int:
    out = _Out(rc)
    p, cfg = rc.params(), rc.solve_config()
    classical = p.is_classical
    suites = [
        ("g_axioms", lambda: _suite_axioms(rc, p)),
        ("closed_form", lambda: _suite_closed_form(rc, p, cfg)),
        ("stein_residuals", lambda: _suite_stein(rc, p, cfg, classical)),
        ("conjecture_gap", lambda: _suite_conjecture(rc, p, cfg, classical)),
        ("negative_control", lambda: _suite_negative(rc, p, classical)),
        ("cross_oracle", lambda: _suite_oracle(rc, p, cfg)),
        ("realization", lambda: _suite_realization(rc, p, cfg)),
    ]
    results = {}
    first_fail = None
    for name, run in suites:
        ok, info = run()
        status = "skipped" if ok is None else ("pass" if ok else "fail")
        results[name] = {"status": status, **info}
        if status == "fail" and first_fail is None:
            first_fail = name
    body = {"suites": results, "first_failure": first_fail, "grid": _grid_info(cfg, p)}
    status = "pass" if first_fail is None else "fail"
    code = out.emit(status, body, "selftest passed" if first_fail is None
                    else f"selftest failed: {first_fail}")
    if first_fail is not None:
        print(f"first failing suite: {first_fail}", file=sys.stderr)
    return code


def _phi_beta_period(p: GParams, n: int = 721):
    beta = p.beta()
    a = -math.pi / (1.0 + beta)
    x = a + 2.0 * math.pi * np.arange(n) / (n - 1)
    return x, tfn.phi_beta(x, p)


def _write_columns(path, header, cols) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def cmd_report(rc: RunConfig) -> int:
    out = _Out(rc)
    p, cfg = rc.params(), rc.solve_config()
    if p.sigma_lo <= 0:
        raise ConfigError("report includes phi_beta and needs sigma_lo > 0")
    inputs = []
    for path in rc.inputs:
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: not JSON") from exc
        if not isinstance(data, dict) or data.get("schema") != SCHEMA:
            raise ConfigError(f"{path}: unsupported or missing schema")
        inputs.append({"file": os.path.basename(path), "content": data})
    os.makedirs(rc.out, exist_ok=True)
    phi = rc.test_function(p)
    res = realize(phi, p, cfg)
    rep = verify_proposition_main(phi, p, cfg, result=res)
    x, y = _phi_beta_period(p)
    _write_columns(os.path.join(rc.out, "phi_beta.csv"), ["x", "phi_beta"], [x, y])
    s, w = zip(*rep.w_values)
    _write_columns(os.path.join(rc.out, "w_table.csv"), ["s", "w"], [s, w])
    write_measure_csv(res.measure, os.path.join(rc.out, "measure.csv"))
    body = {"report": rep.to_dict(), "passed": report_passes(rep, rc.tol_scale),
            "inputs": inputs, "files": ["measure.csv", "phi_beta.csv", "report.json",
                                        "w_table.csv"]}
    env = out.envelope("pass" if body["passed"] else "fail", body)
    with open(os.path.join(rc.out, "report.json"), "w") as fh:
        fh.write(dumps(env))
    if rc.json:
        with open(rc.json, "w") as fh:
            fh.write(dumps(env))
    print(f"report bundle written to {rc.out}")
    return EXIT_OK if body["passed"] else EXIT_FAIL


HANDLERS = {"expectation": cmd_expectation, "solve": cmd_solve, "realize": cmd_realize,
            "stein-check": cmd_stein_check, "eigen": cmd_eigen, "oracle": cmd_oracle,
            "selftest": cmd_selftest, "report": cmd_report}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False, argument_default=S)
    common.add_argument("--sigma", nargs=2, type=float, metavar=("LO", "HI"))
    common.add_argument("--phi", metavar="NAME|@FILE")
    common.add_argument("--dx", type=float)
    common.add_argument("--dt", type=float)
    common.add_argument("--t-max", dest="t_max", type=float)
    common.add_argument("--xmax", dest="x_max", type=float)
    common.add_argument("--boundary", choices=("freeze", "linear_extrapolate"))
    common.add_argument("--seed", type=int)
    common.add_argument("--mc-paths", "--mc", dest="mc_paths", type=int)
    common.add_argument("--tol-scale", dest="tol_scale", type=float)
    common.add_argument("--json", metavar="PATH")
    common.add_argument("--config", metavar="PATH", help="JSON file mirroring RunConfig")
    common.add_argument("--timing", action="store_true", help="record runtime_ms")

    ap = argparse.ArgumentParser(prog="gstein", description="G-normal expectations and Stein checks")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("expectation", parents=[common], help="N_G[phi] from the G-heat solve")
    sp = sub.add_parser("solve", parents=[common], help="solve and optionally dump the field")
    sp.add_argument("--dump-grid", dest="dump_grid", metavar="PATH", default=S)
    sp.add_argument("--stride", type=int, default=S)
    sp = sub.add_parser("realize", parents=[common], help="maximizing measure")
    sp.add_argument("--out", metavar="PATH", default=S)
    sp = sub.add_parser("stein-check", parents=[common], help="verification report(s)")
    sp.add_argument("--all", action="store_true", default=S)
    sp = sub.add_parser("eigen", parents=[common], help="tabulate an eigenfunction")
    sp.add_argument("--rho", type=float, default=S)
    sp.add_argument("--sign", choices=("plus", "minus"), default=S)
    sp.add_argument("--parity", choices=("even", "odd"), default=S)
    sp.add_argument("--value0", type=float, default=S)
    sp.add_argument("--n", type=int, default=S)
    sp.add_argument("--out", metavar="PATH", default=S)
    sp = sub.add_parser("oracle", parents=[common], help="lattice recursion cross-check")
    sp.add_argument("--steps", type=int, default=S)
    sp = sub.add_parser("selftest", parents=[common], help="run every suite")
    sp.add_argument("--steps", type=int, default=S)
    sp = sub.add_parser("report", parents=[common], help="bundle JSON and CSV outputs")
    sp.add_argument("--out", metavar="DIR", default=S)
    sp.add_argument("--inputs", nargs="*", metavar="JSON", default=S)
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    given = dict(vars(ns))
    base = {}
    cfg_path = given.pop("config", None)
    if cfg_path is not None:
        try:
            with open(cfg_path) as fh:
                base = RunConfig.from_json(fh.read()).to_dict()
        except OSError as exc:
            raise ConfigError(f"cannot read config {cfg_path}: {exc}") from exc
    if "sigma" in given:
        given["sigma_lo"], given["sigma_hi"] = given.pop("sigma")
    base.update(given)
    return RunConfig.from_dict(base)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        rc = config_from_args(ns)
        rc.validate()
        return HANDLERS[rc.command](rc)
    except NumericalContractError as exc:
        print(f"error: numerical contract violated: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError, KeyError, OSError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
