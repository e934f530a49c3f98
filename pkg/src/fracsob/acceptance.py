"""The built-in acceptance suite behind ``fracsob verify``.

Each criterion returns its claim checks and the CSV tables it produced.
Tables are written with 17 significant digits, so a rerun in a fresh
process under a different worker count must reproduce them byte for byte;
the last criterion checks exactly that.
"""

import json
import math
import os
import subprocess
import sys
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import constants, families, forms, lab, parallel, reference, solver
from .domains import Ball, Box, HalfSpace, WholeSpace
from .fields import Grid, analytic, make_grid
from .params import make_params
from .report import Check, at_most, holds, quantity_csv, scan_csv, within

TITLES = {
    1: "constants",
    2: "gaussian energy identity",
    3: "bubble scale invariance",
    4: "bubble Euler-Lagrange residual",
    5: "hardy identity",
    6: "localization identity",
    7: "strict inequality for solved minimizers",
    8: "interior concentration scan",
    9: "translated bump limit",
    10: "boundary collapse",
    11: "improved sobolev ratio",
    12: "boundary straightening",
    13: "green convolution bound",
    14: "kelvin invariance",
    15: "determinism",
}


@dataclass
class Outcome:
    number: int
    checks: list
    tables: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def title(self):
        return TITLES[self.number]

    @property
    def passed(self):
        return bool(self.checks) and all(c.passed for c in self.checks)

    def summary(self):
        verdict = "PASS" if self.passed else "FAIL"
        return f"criterion {self.number:2d} ({self.title}): {verdict}"


def _qtable(pairs):
    return quantity_csv(pairs)


# ---------------------------------------------------------------- 1-6

def _a_const_quadrature(s):
    """1 / (2 int_R (1 - cos x) |x|^{-1-2s} dx), from the Fourier symbol |xi|^{2s}."""
    head = integrate.quad(lambda x: (1 - math.cos(x)) * x ** (-1 - 2 * s), 0, 1,
                          epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    osc = integrate.quad(lambda x: x ** (-1 - 2 * s), 1, np.inf, weight="cos", wvar=1.0,
                         epsabs=1e-12, limlst=100)[0]
    half_line = head + 1.0 / (2 * s) - osc
    return 1.0 / (4.0 * half_line)


def criterion_1(seed, workers):
    p = make_params(1, 0.25)
    s = p.sigma
    gamma_form = (2 ** (2 * s - 1) * math.pi ** -0.5 * math.gamma((1 + 2 * s) / 2)
                  / abs(math.gamma(-s)))
    a = constants.a_const(p)
    k = constants.kappa(p)
    c0 = constants.c0(p)
    S = reference.reference_quotient(p)
    checks = [
        within("kappa-closed-form", k, 1 / s, abs_=1e-10),
        within("a_const-gamma-formula", a, gamma_form, abs_=1e-10),
        within("a_const-fourier-quadrature", a, _a_const_quadrature(s), rel=1e-8),
        within("c0-value", c0, math.pi ** -0.25, abs_=1e-3),
        within("reference-vs-closed-form", S, reference.lieb_quotient(p), rel=1e-8),
    ]
    table = _qtable([("a_const", a), ("kappa", k), ("c0", c0), ("reference_quotient", S)])
    return checks, {"constants.csv": table}


def criterion_2(seed, workers):
    checks, rows = [], []
    for n, s in [(1, 0.25), (2, 0.4)]:
        p = make_params(n, s)
        lhs, rhs = forms.plancherel_check(p)
        checks.append(within(f"gaussian-energy-n{n}", lhs, rhs, rel=0.01))
        rows += [(f"lhs_n{n}", lhs), (f"rhs_n{n}", rhs)]
    checks.append(within("gaussian-rhs-gamma", rows[1][1], math.gamma(0.75), rel=1e-12))
    return checks, {"gaussian.csv": _qtable(rows)}


def criterion_3(seed, workers):
    checks, rows = [], []
    for n, s, L, N in [(1, 0.25, 16.0, 2048), (2, 0.4, 8.0, 96)]:
        p = make_params(n, s)
        qs = []
        for lam in (1.0, 2.0, 4.0):
            g = make_grid((-L / lam,) * n, (L / lam,) * n, (N,) * n)
            qs.append(forms.quotient(p, families.bubble(p, lam), WholeSpace(n), grid=g,
                                     estimate=False).quotient)
            rows.append((f"n{n}_lambda{lam:g}", qs[-1]))
        spread = (max(qs) - min(qs)) / min(qs)
        checks.append(at_most(f"bubble-scale-spread-n{n}", spread, 0.01))
    return checks, {"scale.csv": _qtable(rows)}


def criterion_4(seed, workers):
    checks, rows = [], []
    rng = np.random.default_rng(seed)
    for n, s in [(1, 0.25), (2, 0.4)]:
        p = make_params(n, s)
        pts = []
        while len(pts) < 20:
            x = rng.uniform(-2, 2, n)
            if np.linalg.norm(x) <= 2:
                pts.append(x)
        S = reference.reference_quotient(p)
        r = solver.pointwise_residuals(p, families.bubble(p), WholeSpace(n), S, np.array(pts))
        worst = float(np.max(np.abs(r)))
        checks.append(at_most(f"bubble-el-residual-n{n}", worst, 0.03))
        rows.append((f"max_residual_n{n}", worst))
    return checks, {"el_residual.csv": _qtable(rows)}


def criterion_5(seed, workers):
    checks, rows = [], []
    for n, s in [(1, 0.25), (2, 0.4)]:
        p = make_params(n, s)
        c = np.zeros(n)
        c[-1] = 2.0
        v = families.smooth_bump(p, center=c, radius=1.0)
        E = forms.energy(p, v, WholeSpace(n))
        rel = abs(forms.hardy_defect(p, v)) / E
        checks.append(at_most(f"hardy-defect-n{n}", rel, 0.02))
        rows.append((f"relative_defect_n{n}", rel))
    return checks, {"hardy.csv": _qtable(rows)}


def criterion_6(seed, workers):
    p = make_params(2, 0.4)
    v = families.smooth_bump(p, center=(0.0, 0.0), radius=1.0)
    angle = lambda x: 0.25 * math.pi * (1 + np.tanh(3 * x[..., 0]))
    chi1 = analytic("chi", lambda x: np.cos(angle(x)), 2)
    chi2 = analytic("chi", lambda x: np.sin(angle(x)), 2)
    d = Ball((0.0, 0.0), 1.0)
    grid = make_grid((-1.0, -1.0), (1.0, 1.0), (96, 96))
    rel = abs(forms.localization_defect(p, v, d, [chi1, chi2], grid=grid)) / forms.energy(p, v, d, grid)
    return [at_most("localization-defect", rel, 1e-3)], {"localization.csv": _qtable([("relative_defect", rel)])}


# ---------------------------------------------------------------- 7

SOLVE_SETUPS = {
    "halfline": (1, 0.2, ((0.0,), (40.0,), (512,))),
    "halfplane": (2, 0.45, ((-20.0, 0.0), (20.0, 40.0), (96, 96))),
}


def solved_minimizer(name):
    n, s, (lo, hi, shape) = SOLVE_SETUPS[name]
    p = make_params(n, s)
    cfg = solver.SolverConfig(p, HalfSpace(n), make_grid(lo, hi, shape), max_iter=4000)
    return cfg, solver.solve(cfg)


def criterion_7(seed, workers):
    checks, rows = [], []
    for name in SOLVE_SETUPS:
        cfg, st = solved_minimizer(name)
        p = cfg.params
        _, big = solver.truncation_bracket(cfg)
        quad = forms.quotient(p, st.u, cfg.domain, grid=st.u.grid).quad_error_estimate
        err = abs(st.quotient - big.quotient) + quad
        S = reference.reference_quotient(p)
        checks += [
            holds(f"{name}-converged", st.status == "converged", st.status, "converged"),
            Check(f"{name}-strict-below-reference", st.quotient, S - 3 * err,
                  f"< reference - 3 x {err:.3g}", bool(st.quotient < S - 3 * err)),
            at_most(f"{name}-el-residual", st.el_residual, 0.05),
        ]
        rows += [(f"{name}_quotient", st.quotient), (f"{name}_enlarged_quotient", big.quotient),
                 (f"{name}_error_bar", err), (f"{name}_reference", S),
                 (f"{name}_el_residual", st.el_residual)]
    return checks, {"solve.csv": _qtable(rows)}


# ---------------------------------------------------------------- 8-10

INTERIOR_LADDER = [2.0 ** k for k in range(8, 14)]


def criterion_8(seed, workers):
    d = Box((-6.0,), (6.0,))
    p = make_params(1, 0.2)
    r = lab.scan_interior(p, d, INTERIOR_LADDER, workers=workers)
    expo = float("nan") if r.fitted_exponent is None else -r.fitted_exponent
    checks = [
        holds("interior-crossing", r.crossing is not None, r.crossing, "a ladder value"),
        within("interior-deficit-exponent", expo, 2 * p.sigma, rel=0.2),
    ]
    p2 = make_params(1, 0.25)
    r2 = lab.scan_interior(p2, d, INTERIOR_LADDER, workers=workers)
    m = r2.notes.get("models", {})
    checks.append(Check("critical-log-model-rms", m.get("log_rms", float("nan")),
                        m.get("power_rms", float("nan")), "< power rms",
                        m.get("preferred") == "log"))
    return checks, {"scan_interior_s0.2.csv": scan_csv(r), "scan_interior_s0.25.csv": scan_csv(r2)}


def criterion_9(seed, workers):
    p = make_params(1, 0.25)
    w = families.smooth_bump(p, center=(0.0,), radius=1.0)
    r = lab.translated_limit(p, w, [4.0, 8.0, 16.0, 32.0])
    checks = [at_most(f"translate-hardy-c{c:g}", e, 0.02)
              for c, e in zip(r.values, r.notes["hardy_rel_diff"])]
    checks.append(holds("translate-gap-positive", all(g > 0 for g in r.gaps)))
    expo = float("nan") if r.fitted_exponent is None else -r.fitted_exponent
    checks.append(within("translate-exponent", expo, 2 * p.sigma, rel=0.15))
    return checks, {"translate_limit.csv": scan_csv(r)}


def criterion_10(seed, workers):
    p = make_params(1, 0.25)
    r = lab.collapse_scan(p, Box((-1.0,), (1.0,)), [0.025, 0.05, 0.1, 0.2])
    expo = float("nan") if r.fitted_exponent is None else r.fitted_exponent
    checks = [holds("collapse-monotone", r.notes["strictly_monotone"]),
              within("collapse-exponent", expo, 1 - 2 * p.sigma, rel=0.2)]
    return checks, {"collapse.csv": scan_csv(r)}


# ---------------------------------------------------------------- 11-14

def sobolev_family(p):
    L, N = 64.0, 8 * forms.DEFAULT_RESOLUTION[p.n]
    fields = [families.bubble(p), families.gaussian(p), families.hat(p), families.two_bump(p)]
    grids = [Grid((-L,) * p.n, (L,) * p.n, (N,) * p.n), None, None, None]
    return fields, grids


def criterion_11(seed, workers):
    p = make_params(1, 0.25)
    fields, grids = sobolev_family(p)
    ratios = lab.improved_sobolev_ratio(p, fields, grids)
    dil = [families.dilate(p, f, 2.0) for f in fields]
    dgrids = [None if g is None else g.scaled(0.5) for g in grids]
    ratios2 = lab.improved_sobolev_ratio(p, dil, dgrids)
    checks = [holds("sobolev-finite", all(math.isfinite(r) and r > 0 for r in ratios)),
              at_most("sobolev-spread", max(ratios) / min(ratios), 20.0)]
    names = ["bubble", "gaussian", "hat", "two_bump"]
    for nm, a, b in zip(names, ratios, ratios2):
        checks.append(within(f"sobolev-dilation-{nm}", b, a, rel=0.02))
    rows = [(nm, r) for nm, r in zip(names, ratios)] + [(nm + "_dilated", r) for nm, r in zip(names, ratios2)]
    return checks, {"improved_sobolev.csv": _qtable(rows)}


def straighten_setup():
    p = make_params(2, 0.4)
    smap = lab.StraightenMap(lambda x: 0.05 * np.sum(x * x, axis=-1), 0.1, 0.3, 2,
                             phi_grad=lambda x: 0.1 * x)
    v = families.smooth_bump(p, center=(0.0, 0.15), radius=0.15)
    return p, smap, v


def criterion_12(seed, workers):
    p, smap, v = straighten_setup()
    dist = lab.kernel_distortion(p, smap, 200, seed)
    checks = [holds("straighten-slope", smap.slope_ok(p), smap.slope_sup(), "within bounds"),
              at_most("straighten-kernel-distortion", float(np.max(dist)), smap.epsilon)]
    if not checks[-1].passed:
        return checks, {}
    C = 10.0 * constants.kappa(p) * smap.delta ** (-2 * p.sigma)
    lhs, low, high = lab.straighten_check(p, smap, v, resolution=48, C=C, seed=seed)
    checks += [Check("straighten-lower", lhs, low, ">=", bool(lhs >= low)),
               Check("straighten-upper", lhs, high, "<=", bool(lhs <= high))]
    # smallest constant for which both bounds would still hold
    E = 0.5 * (low + high)
    mass = (high - (1 + smap.epsilon) * E) / C
    needed = max(0.0, (1 - smap.epsilon) * E - lhs, lhs - (1 + smap.epsilon) * E) / mass
    checks.append(at_most("straighten-needed-C", needed, C))
    rows = [("C", C), ("C_needed", needed), ("lhs", lhs), ("half_space_energy", E),
            ("rhs_low", low), ("rhs_high", high), ("max_distortion", float(np.max(dist)))]
    return checks, {"straighten.csv": _qtable(rows)}


GREEN_POINTS = [1e-3, 1e-2, 0.1, 0.5]


def criterion_13(seed, workers):
    p = make_params(3, 0.6)
    xs = [(0.0, 0.0, t) for t in GREEN_POINTS]
    r16 = lab.green_convolution_check(p, xs, 16)
    r32 = lab.green_convolution_check(p, xs, 32)
    drift = max(abs(a / b - 1) for a, b in zip(r16, r32))
    checks = [at_most("green-ratio-spread", max(r32) / min(r32), 10.0),
              at_most("green-self-convergence", drift, 0.05)]
    rows = [(f"ratio_xn{t:g}", r) for t, r in zip(GREEN_POINTS, r32)]
    return checks, {"green.csv": _qtable(rows)}


def criterion_14(seed, workers):
    checks, rows = [], []
    for n, s, c in [(1, 0.25, (1.0,)), (2, 0.4, (0.0, 1.0))]:
        p = make_params(n, s)
        v = families.smooth_bump(p, center=c, radius=0.5)
        q1 = forms.quotient(p, v, HalfSpace(n), estimate=False).quotient
        q2 = forms.quotient(p, families.kelvin(p, v), HalfSpace(n), estimate=False).quotient
        checks.append(within(f"kelvin-invariance-n{n}", q2, q1, rel=0.03))
        rows += [(f"quotient_n{n}", q1), (f"kelvin_quotient_n{n}", q2)]
    return checks, {"kelvin.csv": _qtable(rows)}


# ---------------------------------------------------------------- 15

CRITERIA = {k: globals()[f"criterion_{k}"] for k in range(1, 15)}


def _fresh_tables(numbers, seed, workers):
    """Tables of the given criteria, computed in a fresh interpreter."""
    env = dict(os.environ, **{parallel.ENV_WORKERS: str(workers)})
    cmd = [sys.executable, "-m", "fracsob.acceptance", ",".join(map(str, numbers)), str(seed)]
    out = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True).stdout
    return {int(k): v for k, v in json.loads(out).items()}


def criterion_15(seed, workers, first=None):
    """Recompute tables in a fresh process under another worker count and compare bytes."""
    w = parallel.worker_count() if workers is None else int(workers)
    alt = 2 if w == 1 else 1
    numbers = sorted(first) if first else [8]
    if not first:
        first = {k: CRITERIA[k](seed, w)[1] for k in numbers}
    again = _fresh_tables(numbers, seed, alt)
    checks = []
    for k in numbers:
        ref, other = first[k], again.get(k, {})
        same = ref.keys() == other.keys() and all(ref[f] == other[f] for f in ref)
        checks.append(holds(f"determinism-criterion{k}-workers{w}-vs-{alt}", same))
    return checks, {}


def run(numbers=None, seed=0, workers=None, progress=None):
    """Run the selected criteria (all by default); returns a list of Outcomes."""
    numbers = sorted(set(range(1, 16) if numbers is None else numbers))
    outcomes, tables = [], {}
    for k in numbers:
        t0 = time.perf_counter()
        if k == 15:
            checks, out = criterion_15(seed, workers, tables or None)
        else:
            checks, out = CRITERIA[k](seed, workers)
            tables[k] = out
        oc = Outcome(k, checks, out, time.perf_counter() - t0)
        outcomes.append(oc)
        if progress is not None:
            progress(oc)
    return outcomes


if __name__ == "__main__":
    # worker entry for the determinism rerun: prints {criterion: tables} as JSON
    ks = [int(t) for t in sys.argv[1].split(",")]
    json.dump({k: CRITERIA[k](int(sys.argv[2]), None)[1] for k in ks}, sys.stdout)
