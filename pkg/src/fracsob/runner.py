"""Experiment runners: one function per experiment id.

Each runner takes a resolved ``ExperimentConfig`` and returns
``(tables, checks, extra_files)``; ``run_config`` adds the config record and
the report and writes everything at the end, from a single writer.
"""

import math
import os

import numpy as np

from . import acceptance, constants, families, lab, reference, solver
from .config import (ConfigError, optional_float, optional_vector, parse_domain, parse_grid,
                     parse_ladder)
from .domains import HalfSpace, WholeSpace
from .fields import Grid
from .report import (Check, at_most, holds, quantity_csv, report_text, scan_csv, within,
                     write_outputs)


def _field(cfg, p):
    name = cfg.values.get("field") or "bump"
    center = optional_vector(cfg, "center", np.zeros(p.n))
    if len(center) != p.n:
        raise ConfigError(f"center must have {p.n} coordinates")
    radius = optional_float(cfg, "radius", 1.0)
    if name == "bump":
        return families.smooth_bump(p, center=center, radius=radius)
    if name == "hat":
        return families.hat(p, center=center, radius=radius)
    if name == "gaussian":
        return families.gaussian(p, width=radius, center=center)
    if name == "two_bump":
        return families.two_bump(p, radius=radius)
    if name == "bubble":
        return families.bubble(p, 1.0, center)
    if name == "envelope":
        return families.envelope(p)
    raise ConfigError(f"unknown field {name!r}")


def _exponent_check(tag, r, expected, rel, sign=-1.0):
    if r.fitted_exponent is None:
        return Check(tag, float("nan"), expected, f"rel {rel:g}; {r.reason}", False)
    return within(tag, sign * r.fitted_exponent, expected, rel=rel)


def run_constants(cfg):
    p = cfg.params()
    a, k, c0 = constants.a_const(p), constants.kappa(p), constants.c0(p)
    S = reference.reference_quotient(p)
    checks = [within("reference-vs-closed-form", S, reference.lieb_quotient(p), rel=1e-8)]
    if p.n == 1:
        checks.append(within("kappa-closed-form", k, 1 / p.sigma, abs_=1e-10))
    rows = [("a_const", a), ("kappa", k), ("c0", c0), ("reference_quotient", S)]
    return {"constants.csv": quantity_csv(rows, cfg.digest())}, checks


def run_scan_interior(cfg):
    p = cfg.params()
    d = parse_domain(cfg["domain"], p.n)
    r = lab.scan_interior(p, d, parse_ladder(cfg["ladder"]))
    if isinstance(d, WholeSpace):
        checks = [holds("whole-space-no-crossing", r.crossing is None, r.crossing, "none")]
    else:
        checks = [holds("interior-crossing", r.crossing is not None, r.crossing, "a ladder value")]
        if "models" in r.notes:
            m = r.notes["models"]
            checks.append(Check("interior-model-rms", m["log_rms"], m["power_rms"],
                                "log vs power", True))
        if p.n > 4 * p.sigma:
            checks.append(_exponent_check("interior-deficit-exponent", r, 2 * p.sigma, 0.2))
    return {"scan_interior.csv": scan_csv(r, cfg.digest())}, checks


def run_scan_boundary(cfg):
    p = cfg.params()
    d = parse_domain(cfg["domain"], p.n)
    lams = parse_ladder(cfg["ladder"])
    if (cfg.values.get("field") or "") == "envelope":
        r = lab.scan_boundary(p, d, families.envelope(p), lams)
        checks = [_exponent_check("boundary-deficit-exponent", r, 2 * p.sigma, 0.25)]
    else:
        g = parse_grid(cfg["theta_grid"], p.n)
        if not isinstance(g, Grid):
            raise ConfigError("scan-boundary needs theta_grid = LO HI SHAPE (or field = envelope)")
        st = solver.solve(solver.SolverConfig(p, HalfSpace(p.n), g, max_iter=4000))
        r = lab.scan_boundary(p, d, st, lams)
        checks = [holds(f"boundary-crossing-{r.notes['regime']}", r.crossing is not None,
                        r.crossing, "a ladder value above the support threshold")]
    return {"scan_boundary.csv": scan_csv(r, cfg.digest())}, checks


def run_translate(cfg):
    p = cfg.params()
    w = _field(cfg, p)
    r = lab.translated_limit(p, w, parse_ladder(cfg["ladder"]))
    checks = [at_most(f"translate-hardy-c{c:g}", e, 0.02)
              for c, e in zip(r.values, r.notes["hardy_rel_diff"])]
    checks.append(_exponent_check("translate-exponent", r, 2 * p.sigma, 0.15))
    return {"translate_limit.csv": scan_csv(r, cfg.digest())}, checks


def run_collapse(cfg):
    p = cfg.params()
    d = parse_domain(cfg["domain"], p.n)
    r = lab.collapse_scan(p, d, parse_ladder(cfg["ladder"]))
    checks = [holds("collapse-monotone", r.notes["strictly_monotone"])]
    if p.n == 1:
        checks.append(_exponent_check("collapse-exponent", r, 1 - 2 * p.sigma, 0.2, sign=1.0))
    return {"collapse.csv": scan_csv(r, cfg.digest())}, checks


def _solve(cfg):
    p = cfg.params()
    d = parse_domain(cfg["domain"], p.n)
    g = parse_grid(cfg["grid"], p.n)
    if not isinstance(g, Grid):
        raise ConfigError("solve needs grid = LO HI SHAPE")
    sc = solver.SolverConfig(p, d, g, max_iter=4000)
    return sc, solver.solve(sc)


def run_solve(cfg):
    sc, st = _solve(cfg)
    p = sc.params
    S = reference.reference_quotient(p)
    checks = [holds("solve-converged", st.status == "converged", st.status, "converged"),
              at_most("solve-el-residual", st.el_residual, 0.05),
              Check("solve-below-reference", st.quotient, S, "<", bool(st.quotient < S))]
    rows = [("quotient", st.quotient), ("el_residual", st.el_residual), ("iter", st.iter),
            ("status", st.status), ("reference", S)]
    path = cfg.values.get("checkpoint") or "checkpoint.txt"
    return {"solve.csv": quantity_csv(rows, cfg.digest())}, checks, [(path, sc, st)]


def run_envelope_fit(cfg):
    if cfg.values.get("checkpoint") and not cfg.values.get("grid"):
        p, grid, st, _ = solver.load_checkpoint(cfg["checkpoint"])
        d = HalfSpace(p.n)
    else:
        sc, st = _solve(cfg)
        p, d = sc.params, sc.domain
    fit = solver.envelope_fit(p, st, d)
    checks = [Check("envelope-two-sided", fit.c_lower, fit.c_upper, "0 < lower <= upper",
                    bool(0 < fit.c_lower <= fit.c_upper))]
    checks.append(holds("envelope-regime-flag", fit.proven_regime == (p.sigma > 0.5),
                        fit.proven_regime, p.sigma > 0.5))
    rows = [("c_lower", fit.c_lower), ("c_upper", fit.c_upper),
            ("boundary_exponent", fit.boundary_exponent), ("far_exponent", fit.far_exponent),
            ("fit_residual", fit.fit_residual), ("proven_regime", fit.proven_regime)]
    return {"envelope_fit.csv": quantity_csv(rows, cfg.digest())}, checks


def run_improved_sobolev(cfg):
    p = cfg.params()
    fields, grids = acceptance.sobolev_family(p)
    ratios = lab.improved_sobolev_ratio(p, fields, grids)
    names = ["bubble", "gaussian", "hat", "two_bump"]
    checks = [holds("sobolev-finite", all(math.isfinite(r) and r > 0 for r in ratios)),
              at_most("sobolev-spread", max(ratios) / min(ratios), 20.0)]
    return {"improved_sobolev.csv": quantity_csv(list(zip(names, ratios)), cfg.digest())}, checks


def run_straighten(cfg):
    p = cfg.params()
    if p.n != 2:
        raise ConfigError("straighten is implemented for n = 2")
    eps = optional_float(cfg, "epsilon", 0.1)
    delta = optional_float(cfg, "delta", 0.3)
    smap = lab.StraightenMap(lambda x: 0.05 * np.sum(x * x, axis=-1), eps, delta, 2,
                             phi_grad=lambda x: 0.1 * x)
    v = families.smooth_bump(p, center=(0.0, delta / 2), radius=delta / 2)
    g = parse_grid(cfg["grid"], 2)
    res = g if isinstance(g, int) else 48
    dist = lab.kernel_distortion(p, smap, 200, cfg.seed)
    checks = [at_most("straighten-kernel-distortion", float(np.max(dist)), eps)]
    rows = [("max_distortion", float(np.max(dist)))]
    if checks[0].passed:
        C = 10.0 * constants.kappa(p) * delta ** (-2 * p.sigma)
        lhs, low, high = lab.straighten_check(p, smap, v, resolution=res, C=C, seed=cfg.seed)
        checks += [Check("straighten-lower", lhs, low, ">=", bool(lhs >= low)),
                   Check("straighten-upper", lhs, high, "<=", bool(lhs <= high))]
        rows += [("C", C), ("lhs", lhs), ("rhs_low", low), ("rhs_high", high)]
    return {"straighten.csv": quantity_csv(rows, cfg.digest())}, checks


def run_green(cfg):
    p = cfg.params()
    pts = parse_ladder(cfg["ladder"]) if cfg.values.get("ladder") else acceptance.GREEN_POINTS
    xs = [(0.0,) * (p.n - 1) + (t,) for t in pts]
    r16 = lab.green_convolution_check(p, xs, 16)
    r32 = lab.green_convolution_check(p, xs, 32)
    drift = max(abs(a / b - 1) for a, b in zip(r16, r32))
    checks = [at_most("green-ratio-spread", max(r32) / min(r32), 10.0),
              at_most("green-self-convergence", drift, 0.05)]
    rows = [(f"ratio_xn{t:g}", r) for t, r in zip(pts, r32)]
    return {"green.csv": quantity_csv(rows, cfg.digest())}, checks


def run_verify(cfg, progress=None, numbers=None):
    outcomes = acceptance.run(numbers, seed=cfg.seed, progress=progress)
    tables, checks = {}, []
    for oc in outcomes:
        checks += oc.checks
        for name, text in oc.tables.items():
            tables[f"c{oc.number:02d}_{name}"] = f"# config_sha256={cfg.digest()}\n" + text
    summary = [(f"criterion_{oc.number}", "PASS" if oc.passed else "FAIL") for oc in outcomes]
    tables["summary.csv"] = quantity_csv(summary, cfg.digest())
    return tables, checks


RUNNERS = {
    "constants": run_constants,
    "scan-interior": run_scan_interior,
    "scan-boundary": run_scan_boundary,
    "translate-limit": run_translate,
    "collapse": run_collapse,
    "solve": run_solve,
    "envelope-fit": run_envelope_fit,
    "improved-sobolev": run_improved_sobolev,
    "straighten": run_straighten,
    "green-check": run_green,
    "verify-all": run_verify,
}


def run_config(cfg, progress=None, numbers=None):
    """Run one experiment and write its outputs; returns the list of checks.

    ``progress`` and ``numbers`` (a subset of criteria) apply to verify-all.
    """
    fn = RUNNERS[cfg.experiment]
    out = fn(cfg, progress, numbers) if fn is run_verify else fn(cfg)
    tables, checks = out[0], out[1]
    checkpoints = out[2] if len(out) > 2 else []
    files = dict(tables)
    files["config.txt"] = f"# config_sha256={cfg.digest()}\n" + cfg.resolved_text()
    files["report.txt"] = report_text(checks, cfg.digest(), header=[f"experiment={cfg.experiment}"])
    write_outputs(cfg.output, files)
    for path, sc, st in checkpoints:
        solver.save_checkpoint(os.path.join(cfg.output, path), sc, st)
    return checks
