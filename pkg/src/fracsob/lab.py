"""Concentration scans, limit checks and auxiliary inequalities.

Every scan returns a ``ScanResult`` whose ladder is stored in increasing
order. Exponents are slopes of log(gap) against log(parameter); they are
reported only when the fit has R^2 >= 0.95.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate, signal, special

from . import constants, families, forms, parallel, reference
from .domains import Box, HalfBall, HalfSpace, WholeSpace
from .families import CutoffSpec
from .fields import Analytic, FieldError, Grid, Sampled, analytic, cubic_grid

MIN_QUALITY = 0.95


class LabError(ValueError):
    pass


class FitError(ValueError):
    pass


# ---------------------------------------------------------------- fits

def _check_ladder(params):
    x = np.asarray(params, dtype=float)
    if x.size < 2 or np.any(x <= 0):
        raise FitError("parameters must be positive")
    r = x[1:] / x[:-1]
    if not np.allclose(r, r[0], rtol=1e-6, atol=0):
        raise FitError("parameters must form a geometric ladder")
    return x


def _linfit(X, y):
    A = np.stack([X, np.ones_like(X)], axis=-1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(res ** 2)) / ss if ss > 0 else 1.0
    return float(coef[0]), float(coef[1]), r2, float(np.sqrt(np.mean(res ** 2)))


def _pairs(values):
    vals = sorted((float(a), float(b)) for a, b in values)
    if len(vals) < 4:
        raise FitError("need at least 4 points")
    x = _check_ladder([a for a, _ in vals])
    g = np.array([b for _, b in vals])
    if np.any(g <= 0):
        raise FitError("gaps must be positive")
    return x, g


def power_fit(values):
    """(slope, intercept, R^2, rms residual) of log gap against log param."""
    x, g = _pairs(values)
    return _linfit(np.log(x), np.log(g))


def log_corrected_fit(values):
    """Same for the model gap = C param^a log(param); needs params > 1."""
    x, g = _pairs(values)
    if np.any(x <= 1):
        raise FitError("log-corrected model needs parameters above 1")
    return _linfit(np.log(x), np.log(g / np.log(x)))


def fit_exponent(values):
    """Least-squares slope of log gap against log param, with its R^2.

    The slope is withheld (None) when R^2 < 0.95.
    """
    slope, _, r2, _ = power_fit(values)
    return (slope if r2 >= MIN_QUALITY else None), r2


def compare_models(values):
    """Pure power against log-corrected power, both two-parameter fits."""
    s1, _, q1, e1 = power_fit(values)
    s2, _, q2, e2 = log_corrected_fit(values)
    return {"power_exponent": s1, "power_quality": q1, "power_rms": e1,
            "log_exponent": s2, "log_quality": q2, "log_rms": e2,
            "preferred": "log" if e2 < e1 else "power"}


# ---------------------------------------------------------------- results

@dataclass
class ScanResult:
    parameter: str
    values: tuple
    quotients: tuple
    gaps: tuple
    fitted_exponent: Optional[float] = None
    fit_quality: float = float("nan")
    crossing: Optional[float] = None
    reason: Optional[str] = None
    reference: Optional[float] = None
    errors: tuple = ()
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size and np.any(np.diff(v) <= 0):
            raise LabError("sampled values must be strictly increasing")
        if self.fitted_exponent is not None and not self.fit_quality >= MIN_QUALITY:
            raise LabError("an exponent needs fit quality >= 0.95")

    @property
    def running_fit(self):
        """Slope over the first k points (raw, ungated); nan for k < 2."""
        out = []
        for k in range(1, len(self.values) + 1):
            x = np.asarray(self.values[:k], float)
            g = np.abs(np.asarray(self.gaps[:k], float))
            if k < 2 or np.any(g <= 0):
                out.append(float("nan"))
            else:
                out.append(_linfit(np.log(x), np.log(g))[0])
        return tuple(out)

    def rows(self):
        return list(zip(self.values, self.quotients, self.gaps, self.running_fit))


def _finish(parameter, values, quotients, gaps, *, crossing=None, reference=None, errors=(),
            notes=None, fit_mask=None, reason=None):
    notes = dict(notes or {})
    order = np.argsort(values)
    take = lambda seq: tuple(float(seq[i]) for i in order) if len(seq) else ()
    values, quotients, gaps, errors = take(values), take(quotients), take(gaps), take(errors)
    mask = np.ones(len(values), bool) if fit_mask is None else np.asarray(fit_mask)[order]
    g = np.asarray(gaps)
    sel = mask & np.isfinite(g)
    exponent, quality = None, float("nan")
    if reason is None:
        gs = g[sel]
        if gs.size >= 4 and (np.all(gs > 0) or np.all(gs < 0)):
            if np.all(gs < 0):
                notes["gap_sign"] = "negative (quotient above reference); fit on |gap|"
            pairs = list(zip(np.asarray(values)[sel], np.abs(gs)))
            try:
                exponent, quality = fit_exponent(pairs)
            except FitError as exc:
                reason = str(exc)
            else:
                if exponent is None:
                    reason = f"fit quality {quality:.4f} below {MIN_QUALITY}"
        else:
            reason = "fewer than 4 usable points of one sign"
    return ScanResult(parameter, values, quotients, gaps, exponent, quality, crossing, reason,
                      reference, errors, notes)


# ---------------------------------------------------------------- interior scan

def _interior_point(args):
    p, d, lam, center, h_eff, max_cells = args
    u = families.cutoff_bubble(p, lam, center=center)
    lo, hi = forms._intersect_box(u.support, d.bounds())
    N = int(math.ceil(float(np.max(hi - lo)) * lam / h_eff))
    N = min(N, max_cells)
    N += N % 2
    grid = cubic_grid(lo, hi, float(np.max(hi - lo)) / N)
    r = forms.quotient(p, u, d, grid=grid)
    return r.quotient, r.quad_error_estimate, grid.shape[0]


MAX_CELLS = {1: 1 << 21, 2: 512, 3: 96}


def scan_interior(p, d, lambdas, center=None, h_eff=0.05, reference_value=None, workers=None):
    """Quotient of the cut-off bubble eta U_lambda on d along a lambda ladder.

    The grid spacing is h_eff / lambda (capped per dimension), so every
    point sees the same resolution of the bubble core. A crossing is the
    first lambda whose quotient plus its error estimate lies below the
    whole-space reference; the fitted exponent is the slope of the gap.
    """
    center = np.zeros(p.n) if center is None else np.asarray(center, float)
    if not np.all(d.contains(center[None, :])) or float(d.boundary_distance(center[None, :])[0]) < 4.0:
        raise LabError("domain must contain the ball of radius 4 around the scan centre")
    lams = sorted(float(l) for l in lambdas)
    S = reference.reference_quotient(p) if reference_value is None else float(reference_value)
    jobs = [(p, d, lam, tuple(center), h_eff, MAX_CELLS.get(p.n, 64)) for lam in lams]
    out = parallel.ordered_map(_interior_point, jobs, workers)
    Q = [o[0] for o in out]
    err = [o[1] for o in out]
    gaps = [S - q for q in Q]
    crossing = next((lam for lam, q, e in zip(lams, Q, err) if q + e < S), None)
    notes = {"h_eff": h_eff, "cells": [o[2] for o in out],
             "complement_has_interior": not isinstance(d, WholeSpace)}
    res = _finish("lambda", lams, Q, gaps, crossing=crossing, reference=S, errors=err, notes=notes)
    pos = [(l, g) for l, g in zip(res.values, res.gaps) if g > 0]
    if len(pos) >= 4 and min(l for l, _ in pos) > 1:
        try:
            res.notes["models"] = compare_models(pos)
        except FitError:
            pass
    return res


# ---------------------------------------------------------------- boundary scan

def _inside_half_ball(d, n, radius=4.0, k=9):
    t = np.linspace(-1, 1, k)
    pts = np.stack(np.meshgrid(*([t] * n), indexing="ij"), axis=-1).reshape(-1, n)
    pts[:, -1] = np.abs(pts[:, -1])
    pts = pts[(np.linalg.norm(pts, axis=-1) < 1) & (pts[:, -1] > 1e-3)] * radius * 0.999
    return bool(np.all(d.contains(pts)))


def _check_boundary_geometry(p, d):
    b = d.bounds()
    if b is None or b[0][-1] < 0:
        raise LabError("domain must lie in the half-space")
    if not _inside_half_ball(d, p.n):
        raise LabError("domain must contain the half-ball of radius 4")
    probe = np.zeros((6, p.n))
    probe[:, -1] = 1.0
    probe[:, 0] = [5.0, 10.0, 100.0, 1e3, 1e4, 1e5]
    if np.all(d.contains(probe)):
        raise LabError("the half-space minus the domain must have interior")


def _stand_in_gap(p, d, theta, lam, eta, nr=16, nc=12):
    """2 int_d u^2 W / ||u||_p^2 for u = eta * theta_lambda, W the kernel mass of H \\ d.

    u = c^a F(r) in polar form (c = x_n/|x|), so the angular integral uses
    Gauss-Jacobi with weight c^{2a}; the norm's angular factor is exact.
    """
    n, s = p.n, p.sigma
    a = 2 * s - 1
    b = n + 2 * s - 2
    amp = lam ** p.half_exponent

    def F(r):
        return amp * (lam * r) ** a * (1 + lam * r) ** (-b) * families.cutoff_profile(r, eta)

    # radial panels in s = lam r, geometric, with breaks at the cutoff radii
    smax = eta.r2 * lam
    edges = [0.0] + [2.0 ** k for k in range(-4, 60) if 2.0 ** k < smax]
    edges = sorted(set(edges + [eta.r1 * lam, smax]))
    gx, gw = np.polynomial.legendre.leggauss(nr)
    rs, rw = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        rs.append(0.5 * (hi - lo) * (gx + 1) + lo)
        rw.append(0.5 * (hi - lo) * gw)
    r = np.concatenate(rs) / lam
    wr = np.concatenate(rw) / lam
    # c in (0, 1): weight c^{2a} via Gauss-Jacobi on t = 2c - 1
    tj, wj = special.roots_jacobi(nc, 0.0, 2 * a)
    c = 0.5 * (tj + 1)
    wc = wj * 0.5 ** (2 * a + 1)
    if n >= 3:
        wc = wc * (1 - c * c) ** ((n - 3) / 2)
    sph = constants.sphere_area(n - 1)
    R, Cc = np.meshgrid(r, c, indexing="ij")
    pts = np.zeros(R.shape + (n,))
    pts[..., -1] = R * Cc
    pts[..., 0] = R * np.sqrt(1 - Cc * Cc)
    W = -0.5 * forms.domain_potential(p, pts.reshape(-1, n), d, ambient=HalfSpace(n)).reshape(R.shape)
    Fr = F(r)
    two = 2.0 * sph * np.sum((wr * r ** (n - 1) * Fr ** 2)[:, None] * wc[None, :] * W)
    q = p.p_crit
    # int_0^1 c^{qa} (1-c^2)^{(n-3)/2} dc
    ang = integrate.quad(lambda t: t ** (q * a) * (1 - t * t) ** ((n - 3) / 2), 0, 1)[0]
    norm = (sph * ang * np.sum(wr * r ** (n - 1) * Fr ** q)) ** (1 / q)
    return two / norm ** 2


def scan_boundary(p, d, theta, lambdas, eta=CutoffSpec(), ndirs=None):
    """Quotient of eta * Theta_lambda on d against the half-space value.

    ``theta`` is a converged SolverState (its quotient is the comparison
    value) or the analytic envelope used as a stand-in. For the stand-in
    only the energy deficit 2 int u^2 W / ||u||^2 is computed, where W is the
    kernel mass of the removed region; no crossing is claimed then.
    Outside sigma > 1/2 with n >= 4 sigma the run is labelled exploratory.
    """
    _check_boundary_geometry(p, d)
    lams = sorted(float(l) for l in lambdas)
    proven = p.sigma > 0.5 and p.n >= 4 * p.sigma
    notes = {"regime": "proven" if proven else "exploratory"}
    if isinstance(theta, Analytic):
        if theta.family != "envelope" or p.n < 3:
            raise LabError("the analytic stand-in must be the envelope in n >= 3")
        gaps = [_stand_in_gap(p, d, theta, lam, eta) for lam in lams]
        notes["stand_in"] = "envelope; deficit only"
        return _finish("lambda", lams, [float("nan")] * len(lams), gaps, notes=notes)
    u = theta.u if hasattr(theta, "u") else theta
    if not isinstance(u, Sampled):
        raise LabError("theta must be a solver state or the envelope stand-in")
    Qh = float(theta.quotient)
    L = float(np.max(np.asarray(u.grid.hi)))
    threshold = L / eta.r1
    Q, fits = [], []
    for lam in lams:
        th = families.theta_rescale(p, u, lam)
        vals = np.asarray(th.values) * families.cutoff_profile(
            np.linalg.norm(th.grid.nodes(), axis=-1), eta)
        Q.append(forms.quotient(p, Sampled(th.grid, vals), d, grid=th.grid, ndirs=ndirs,
                                estimate=False).quotient)
        fits.append(lam >= threshold)
    gaps = [Qh - q for q in Q]
    crossing = next((lam for lam, q, ok in zip(lams, Q, fits) if ok and q < Qh), None)
    notes["support_fit_threshold"] = threshold
    notes["below_threshold"] = [lam for lam, ok in zip(lams, fits) if not ok]
    return _finish("lambda", lams, Q, gaps, crossing=crossing, reference=Qh, notes=notes,
                   fit_mask=fits)


# ---------------------------------------------------------------- translated bumps

def hardy_term(p, w, c):
    """kappa int w(x)^2 (x_n + c)^{-2 sigma} dx by adaptive quadrature."""
    lo, hi = (np.asarray(v, float) for v in w.support)
    n = p.n
    k = constants.kappa(p)

    def f(*x):
        pt = np.array(x[::-1])  # nquad passes innermost first
        return float(w(pt[None, :])[0]) ** 2 * (pt[-1] + c) ** (-2 * p.sigma)

    ranges = [(lo[a], hi[a]) for a in range(n)][::-1]
    tol = 1e-10 if n == 1 else 1e-7
    val = integrate.nquad(f, ranges, opts={"epsabs": 1e-13, "epsrel": tol, "limit": 100})[0]
    return k * val


def translated_limit(p, w, cs, resolution=None, oracle=True):
    """gap(c) = I_{R^n}[w] - I_{R^n_+}[w(. - c e_n)] along a ladder of shifts.

    The whole-space energy is translation invariant, so the gap is the
    Hardy term of the translate; ``notes['hardy']`` holds its independent
    quadrature.
    """
    if w.support is None:
        raise LabError("translated_limit needs a compactly supported field")
    cs = sorted(float(c) for c in cs)
    if w.support[0][-1] + cs[0] <= 0:
        raise LabError("smallest shift moves the support across the boundary")
    grid = forms.default_grid(p, w, WholeSpace(p.n), resolution)
    E_whole = forms.energy(p, w, WholeSpace(p.n), grid)
    Q, gaps, hardy = [], [], []
    for c in cs:
        wc = families.translated_bump(p, w, c)
        off = np.zeros(p.n)
        off[-1] = c
        gc = grid.shifted(off)
        r = forms.quotient(p, wc, HalfSpace(p.n), grid=gc, estimate=False)
        Q.append(r.quotient)
        gaps.append(E_whole - r.energy)
        if oracle:
            hardy.append(hardy_term(p, w, c))
    notes = {"whole_energy": E_whole}
    if oracle:
        notes["hardy"] = hardy
        notes["hardy_rel_diff"] = [abs(g / h - 1) for g, h in zip(gaps, hardy)]
    return _finish("c", cs, Q, gaps, notes=notes)


# ---------------------------------------------------------------- collapse

def collapse_scan(p, d, deltas, resolution=None, cells_per_delta=32):
    """Quotient of the collapse profile u_delta on a bounded domain d.

    The fitted exponent is the slope of the quotient itself against delta.
    """
    if p.sigma >= 0.5:
        raise LabError("the collapse scan needs sigma < 1/2")
    b = d.bounds()
    if b is None or not (np.all(np.isfinite(b[0])) and np.all(np.isfinite(b[1]))):
        raise LabError("the collapse scan needs a bounded domain")
    ds = sorted(float(x) for x in deltas)
    ext = float(np.max(np.asarray(b[1]) - np.asarray(b[0])))
    N = resolution or max(forms.DEFAULT_RESOLUTION[p.n], int(math.ceil(cells_per_delta * ext / ds[0])))
    N += N % 2
    Q, err = [], []
    for delta in ds:
        u = families.collapse_profile(p, d, delta)
        grid = cubic_grid(b[0], b[1], ext / N)
        r = forms.quotient(p, u, d, grid=grid)
        Q.append(r.quotient)
        err.append(r.quad_error_estimate)
    res = _finish("delta", ds, Q, Q, errors=err, notes={"cells": N})
    res.notes["strictly_monotone"] = bool(np.all(np.diff(res.quotients) > 0))
    return res


def collapse_energy_oracle(p, d, delta):
    """I_d[u_delta] for d = (a, b) in one dimension by direct quadrature.

    Whole-line double integral of the zero extension minus the exterior
    term 2 int u^2 ((x-a)^{-2s} + (b-x)^{-2s}) / (2s).
    """
    if p.n != 1 or not isinstance(d, Box):
        raise LabError("the collapse oracle is one-dimensional")
    a, b = float(d.lo[0]), float(d.hi[0])
    u = families.collapse_profile(p, d, delta)
    uf = lambda x: float(u(np.array([[x]]))[0])
    feats = [a + k * delta / 8 for k in (1, 3, 5, 7)] + [b - k * delta / 8 for k in (1, 3, 5, 7)]
    whole = reference.energy_oracle_1d(uf, p.sigma, (a, b), feats)
    s = p.sigma
    ext = lambda x: uf(x) ** 2 * ((x - a) ** (-2 * s) + (b - x) ** (-2 * s)) / (2 * s)
    pts = sorted(set(f for f in feats if a < f < b))
    cut = sum(integrate.quad(ext, lo, hi, epsabs=1e-13, epsrel=1e-11, limit=200)[0]
              for lo, hi in zip([a] + pts, pts + [b]))
    return whole - 2.0 * cut


# ---------------------------------------------------------------- improved Sobolev

T_LADDER = tuple(2.0 ** k for k in range(-12, 5))


def _heat_weights(h, t, size):
    sd = math.sqrt(2.0 * t)
    K = min(size - 1, int(math.ceil(8.0 * sd / h)) + 1)
    k = np.arange(-K, K + 1)
    z = 1.0 / (math.sqrt(2.0) * sd)
    return 0.5 * (special.erf((k + 0.5) * h * z) - special.erf((k - 0.5) * h * z))


def heat_max(values, grid, t):
    """max |e^{t Delta} u| over the nodes, u piecewise constant on the cells.

    Cell-averaged Gaussian weights make the flow exact for the
    piecewise-constant interpolant; the axes are treated one at a time.
    """
    v = np.asarray(values, float)
    for a in range(grid.n):
        w = _heat_weights(grid.spacing[a], t, grid.shape[a])
        shape = [1] * grid.n
        shape[a] = w.size
        v = signal.fftconvolve(v, w.reshape(shape), mode="same", axes=a)
    return float(np.max(np.abs(v)))


def besov_factor(p, values, grid, ladder=T_LADDER):
    """sup over the t ladder of t^{(n-2 sigma)/4} max |e^{t Delta} u|, and the maximising t."""
    best, tbest = -1.0, None
    e = (p.n - 2 * p.sigma) / 4.0
    for t in ladder:
        b = t ** e * heat_max(values, grid, t)
        if b > best:
            best, tbest = b, t
    return best, tbest


def sobolev_terms(p, f, grid=None, resolution=None, box=64.0):
    """Critical norm, whole-space energy and heat factor of one field."""
    if grid is None:
        if isinstance(f, Sampled) or f.support is not None:
            grid = forms.default_grid(p, f, WholeSpace(p.n), resolution)
        else:
            N = forms.DEFAULT_RESOLUTION[p.n] * 8 if resolution is None else int(resolution)
            grid = Grid(tuple([-box] * p.n), tuple([box] * p.n), tuple([N] * p.n))
    r = forms.quotient(p, f, WholeSpace(p.n), grid=grid, estimate=False)
    vals = forms._values(f, grid)
    B, t = besov_factor(p, vals, grid)
    return {"norm": r.lp_norm, "energy": r.energy, "besov": B, "t_star": t, "grid": grid}


def improved_sobolev_ratio(p, fields, grids=None, resolution=None):
    """||u||_p / (I[u]^{(n-2s)/(2n)} * besov^{2s/n}) for each field."""
    fields = list(fields)
    if not fields:
        raise LabError("empty field list")
    grids = [None] * len(fields) if grids is None else list(grids)
    out = []
    for f, g in zip(fields, grids):
        t = sobolev_terms(p, f, g, resolution)
        n, s = p.n, p.sigma
        out.append(t["norm"] / (t["energy"] ** ((n - 2 * s) / (2 * n)) * t["besov"] ** (2 * s / n)))
    return out


# ---------------------------------------------------------------- straightening

@dataclass(frozen=True)
class StraightenMap:
    """xi' = x', xi_n = x_n - phi(x') on the patch |x'| < 2 delta.

    ``phi`` maps points of shape (..., n-1) to heights; ``phi_grad`` is its
    gradient (optional; central differences otherwise).
    """
    phi: object
    epsilon: float
    delta: float
    n: int = 2
    phi_grad: object = None

    def forward(self, x):
        x = np.asarray(x, float)
        xi = x.copy()
        xi[..., -1] = x[..., -1] - self.phi(x[..., :-1])
        return xi

    def inverse(self, xi):
        xi = np.asarray(xi, float)
        x = xi.copy()
        x[..., -1] = xi[..., -1] + self.phi(xi[..., :-1])
        return x

    def patch_points(self, k=201):
        m = self.n - 1
        t = np.linspace(-2 * self.delta, 2 * self.delta, k if m == 1 else 41)
        pts = np.stack(np.meshgrid(*([t] * m), indexing="ij"), axis=-1).reshape(-1, m)
        return pts[np.linalg.norm(pts, axis=-1) < 2 * self.delta]

    def slope_sup(self):
        x = self.patch_points()
        if self.phi_grad is not None:
            g = np.asarray(self.phi_grad(x), float).reshape(x.shape)
        else:
            h = 1e-6
            g = np.empty_like(x)
            for a in range(x.shape[-1]):
                e = np.zeros(x.shape[-1])
                e[a] = h
                g[:, a] = (self.phi(x + e) - self.phi(x - e)) / (2 * h)
        return float(np.max(np.linalg.norm(g, axis=-1)))

    def slope_bounds(self, p):
        """Upper bounds for G + G^2 and for G, G = sup |grad phi|."""
        e = 2.0 / (p.n + 2 * p.sigma)
        return (1 - self.epsilon) ** (-e) - 1, 1 - (1 + self.epsilon) ** (-e)

    def slope_ok(self, p):
        G = self.slope_sup()
        b1, b2 = self.slope_bounds(p)
        return G + G * G <= b1 and G <= b2


def kernel_distortion(p, smap, pairs=200, seed=0):
    """|(|xi-eta| / |inv(xi) - inv(eta)|)^{n+2s} - 1| at random patch pairs."""
    rng = np.random.default_rng(seed)
    n, R = smap.n, 2 * smap.delta

    def draw(k):
        out = []
        while sum(len(o) for o in out) < k:
            x = rng.uniform(-R, R, size=(4 * k, n - 1))
            out.append(x[np.linalg.norm(x, axis=-1) < R])
        return np.concatenate(out)[:k]

    xi = np.concatenate([draw(pairs), rng.uniform(0, R, (pairs, 1))], axis=-1)
    eta = np.concatenate([draw(pairs), rng.uniform(0, R, (pairs, 1))], axis=-1)
    a = np.linalg.norm(xi - eta, axis=-1)
    b = np.linalg.norm(smap.inverse(xi) - smap.inverse(eta), axis=-1)
    return np.abs((a / b) ** (n + 2 * p.sigma) - 1.0)


def graph_complement_potential(p, phi, x):
    """-2 int_{y_n < phi(y')} |x - y|^{-2-2 sigma} dy for points above the graph, n = 2.

    The vertical integral is an incomplete beta function, leaving a
    one-dimensional adaptive quadrature in y'.
    """
    if p.n != 2:
        raise LabError("the graph potential is implemented for n = 2")
    m = (p.n + 2 * p.sigma) / 2
    B = special.beta(0.5, m - 0.5)

    def H(z):
        # int_z^inf (1 + s^2)^{-m} ds
        if z >= 0:
            return 0.5 * B * special.betainc(m - 0.5, 0.5, 1.0 / (1.0 + z * z))
        return 0.5 * B * (1.0 + special.betainc(0.5, m - 0.5, z * z / (1.0 + z * z)))

    out = []
    for x1, x2 in np.atleast_2d(np.asarray(x, float)):
        def g(y):
            a = abs(x1 - y)
            bz = x2 - float(phi(np.array([[y]]))[0])
            if a == 0:
                return bz ** (1 - 2 * m) / (2 * m - 1)
            return a ** (1 - 2 * m) * H(bz / a)

        pts = [x1 + t for t in (-4, -1, -0.25, 0.0, 0.25, 1, 4)]
        tot = integrate.quad(g, -np.inf, pts[0], epsabs=1e-13, epsrel=1e-10, limit=200)[0]
        tot += sum(integrate.quad(g, lo, hi, epsabs=1e-13, epsrel=1e-10, limit=200)[0]
                   for lo, hi in zip(pts[:-1], pts[1:]))
        tot += integrate.quad(g, pts[-1], np.inf, epsabs=1e-13, epsrel=1e-10, limit=200)[0]
        out.append(-2.0 * tot)
    return np.array(out)


def straighten_check(p, smap, v, resolution=None, C=None, pairs=200, seed=0):
    """(I_Omega[v o Phi], (1-eps) I_+[v] - C int v^2, (1+eps) I_+[v] + C int v^2).

    Omega is the epigraph of phi; v lives in the half-ball of radius delta.
    The slope condition and the pointwise kernel bound are checked first.
    ``C`` defaults to 10 kappa delta^{-2 sigma}.
    """
    n = p.n
    if smap.n != n:
        raise LabError("map and parameters disagree on the dimension")
    if not smap.slope_ok(p):
        raise LabError("slope condition violated for the requested epsilon")
    dist = kernel_distortion(p, smap, pairs, seed)
    if np.any(dist > smap.epsilon):
        raise LabError("pointwise kernel distortion bound fails")
    if v.support is None:
        raise LabError("v must be compactly supported")
    lo, hi = (np.asarray(t, float) for t in v.support)
    dl = smap.delta
    if lo[-1] < 0 or np.any(np.abs(np.concatenate([lo, hi])) > dl + 1e-12):
        raise LabError("v must be supported in the half-ball of radius delta")
    C = 10.0 * constants.kappa(p) * dl ** (-2 * p.sigma) if C is None else float(C)
    N = resolution or forms.DEFAULT_RESOLUTION[n]
    grid = cubic_grid(lo, hi, float(np.max(hi - lo)) / N)
    E_half = forms.energy(p, v, HalfSpace(n), grid)
    mass = grid.cell_volume * float(np.sum(forms._values(v, grid) ** 2))
    # v o Phi on the sheared box
    pv = smap.phi(smap.patch_points())
    vt = analytic("straightened", lambda x: v(smap.forward(x)), n,
                  support=(lo + np.r_[np.zeros(n - 1), min(0.0, pv.min())],
                           hi + np.r_[np.zeros(n - 1), max(0.0, pv.max())]))
    gt = cubic_grid(vt.support[0], vt.support[1], float(np.max(hi - lo)) / N)
    E_whole = forms.energy(p, vt, WholeSpace(n), gt)
    vals = forms._values(vt, gt)
    nodes = gt.nodes()
    live = vals != 0
    V = np.zeros(gt.shape)
    V[live] = graph_complement_potential(p, smap.phi, nodes[live])
    lhs = E_whole + gt.cell_volume * float(np.sum(vals[live] ** 2 * V[live]))
    eps = smap.epsilon
    return lhs, (1 - eps) * E_half - C * mass, (1 + eps) * E_half + C * mass


# ---------------------------------------------------------------- Green envelope

def _check_green(p):
    if not (p.sigma > 0.5 and p.n >= 2):
        raise LabError("the Green envelope needs sigma > 1/2 and n >= 2")


def green_envelope(p, x, y, shifted=False):
    """Shape of the half-space Green function (constants not fixed)."""
    _check_green(p)
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x[-1] <= 0 or y[-1] <= 0:
        raise LabError("points must lie in the half-space")
    r = float(np.linalg.norm(x - y))
    if r == 0:
        raise LabError("the envelope is singular at x = y")
    n, s = p.n, p.sigma
    if shifted:
        return r ** (-(n - 2 * s)) * min(1.0, r ** (-4 * s))
    return r ** (-(n - 2 * s)) * min(1.0, (x[-1] * y[-1]) ** (2 * s - 1) * r ** (-(4 * s - 2)))


def _green_ratio(p, xn, m):
    """J(x) / x_n^{2s-1} at x = x_n e_n, polar coordinates (r, c) around x.

    y_n = x_n + r c with c in (c_min, 1), c_min = max(-1, -x_n / r). For
    r > x_n the factor y_n^{2s-1} = r^{2s-1} (c - c_min)^{2s-1} goes into a
    Gauss-Jacobi weight; near r = 0 the kernel r^{1-2s} likewise. Beyond
    r_max the remainder is bounded analytically.
    """
    n, s = p.n, p.sigma
    a = 2 * s - 1
    sph = constants.sphere_area(n - 1)
    r_max = 1e4 * max(1.0, xn)
    edges = [0.0, 0.5 * xn]
    edges += [xn * (1 - 2.0 ** -k) for k in range(2, 9)] + [xn]
    edges += [xn * (1 + 2.0 ** -k) for k in range(8, 1, -1)] + [1.5 * xn, 2 * xn]
    r = 2 * xn
    while r < r_max:
        r *= 2
        edges.append(r)
    gl, glw = np.polynomial.legendre.leggauss(m)
    jr, jrw = special.roots_jacobi(m, 0.0, 1 - 2 * s)
    jc, jcw = special.roots_jacobi(m, 0.0, a)
    total = 0.0

    def radial_pieces(lo, hi):
        if lo == 0.0:
            # weight r^{1-2s} on (0, hi)
            return 0.5 * hi * (jr + 1), jrw * (0.5 * hi) ** (2 - 2 * s), True
        return 0.5 * (hi - lo) * (gl + 1) + lo, 0.5 * (hi - lo) * glw, False

    for lo, hi in zip(edges[:-1], edges[1:]):
        rr, wr, weighted = radial_pieces(lo, hi)
        for ri, wi in zip(rr, wr):
            kern = 1.0 if weighted else ri ** (1 - 2 * s)
            if ri > xn:
                cmin = -xn / ri
                c = cmin + 0.5 * (1 - cmin) * (jc + 1)
                # y_n^a = r^a (c - c_min)^a sits in the weight
                wc = jcw * (0.5 * (1 - cmin)) ** (a + 1) * ri ** a
                ynp = 1.0
            else:
                c = gl
                wc = glw
                ynp = (xn + ri * c) ** a
            yn = xn + ri * c
            rho2 = ri * ri * (1 - c * c)
            Y = np.sqrt(rho2 + yn * yn)
            g = ynp * (1 + Y) ** (-(n + 2 * s)) * (1 - c * c) ** ((n - 3) / 2)
            total += wi * kern * float(np.sum(wc * g))
    # r^{n-1} |y-x|^{-(n+2s-2)} = r^{1-2s}; volume sph r^{n-1} dr dc folded above
    total *= sph
    # tail r > r_max: |y| >= r/2, y_n <= 1.5 r
    e = n + 2 * s - 1
    tail = sph * 2.0 * 1.5 ** a * 2.0 ** (n + 2 * s) * r_max ** (-e) / e
    return total, tail


def green_convolution_check(p, xs, order=16):
    """J(x)/x_n^{2s-1} at each point; J the convolution of the envelope with the decay weight."""
    if p.n != 3 or not 0.5 < p.sigma <= 0.75:
        raise LabError("the convolution check needs n = 3 and sigma in (1/2, 3/4]")
    out = []
    for x in xs:
        x = np.asarray(x, float)
        if x[-1] <= 0 or np.linalg.norm(x) >= 1:
            raise LabError("points must lie in the upper unit half-ball")
        if np.linalg.norm(x[:-1]) > 0:
            raise LabError("points must lie on the symmetry axis x' = 0")
        val, _ = _green_ratio(p, float(x[-1]), order)
        out.append(val)
    return out


def green_tail_bounds(p, xs, order=16):
    return [_green_ratio(p, float(np.asarray(x)[-1]), order)[1] for x in xs]
