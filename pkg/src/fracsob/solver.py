"""Discrete minimisers of the Sobolev quotient by normalised gradient flow."""

import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import families, forms
from .domains import Box, HalfSpace, WholeSpace
from .fields import Grid, Sampled
from .params import make_params

CHECKPOINT_VERSION = "fracsob-checkpoint v1"


class SolverError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    params: object
    domain: object
    grid: Grid
    step: float = 1e-2
    max_iter: int = 20000
    tol_residual: float = 1e-3
    tol_quotient: float = 1e-12
    positivity: bool = True

    def __post_init__(self):
        if not (self.step > 0 and self.tol_residual > 0 and self.tol_quotient > 0):
            raise SolverError("step and tolerances must be positive")
        if self.max_iter < 1:
            raise SolverError("max_iter must be positive")
        b = self.domain.bounds()
        if b is not None:
            lo, hi = b
            if np.any(np.asarray(self.grid.lo) < lo - 1e-12) or np.any(np.asarray(self.grid.hi) > hi + 1e-12):
                raise SolverError("grid box must lie inside the domain's bounding box")


@dataclass
class SolverState:
    u: Sampled
    quotient: float
    el_residual: float
    iter: int
    status: str = "running"
    history: list = field(default_factory=list)


@dataclass(frozen=True)
class EnvelopeFit:
    c_lower: float
    c_upper: float
    boundary_exponent: float
    far_exponent: float
    fit_residual: float
    noise_floor: float
    proven_regime: bool
    points: int


def _normalize(form, u, q):
    norm = form.lp_power(u, q) ** (1.0 / q)
    if norm <= 0:
        raise SolverError("field vanishes on the domain")
    return u / norm


def init_guess(cfg, h0=1.0):
    """Bubble centred at height 1 times min(1, (x_n/h0)^beta), normalised.

    beta = 2 sigma - 1 for sigma > 1/2 (the boundary rate of positive
    solutions), beta = sigma otherwise (a heuristic; the rate is unknown).
    """
    p = cfg.params
    beta = 2 * p.sigma - 1 if p.sigma > 0.5 else p.sigma
    center = np.zeros(p.n)
    center[-1] = 1.0
    U = families.bubble(p, 1.0, center)
    x = cfg.grid.nodes()
    xn = x[..., -1]
    factor = np.minimum(1.0, np.maximum(xn, 0.0) / h0) ** beta
    form = forms.regional_form(p, cfg.grid, cfg.domain)
    u = np.where(form.mask, U(x) * factor, 0.0)
    return Sampled(cfg.grid, _normalize(form, u, p.p_crit))


def _residual(form, u, g, Q, p):
    m = form.mask
    rhs = Q * np.abs(u) ** (p.p_crit - 2) * u
    num = np.sqrt(np.sum(np.where(m, g - rhs, 0.0) ** 2))
    den = np.sqrt(np.sum(np.where(m, rhs, 0.0) ** 2))
    return float(num / den) if den > 0 else np.inf


def solve(cfg, u0=None, callback=None):
    """Normalised explicit gradient descent on the quotient with backtracking.

    Each step moves along -(g - Q |u|^{p-2} u), takes |u| when positivity is
    requested, renormalises to unit critical norm, and is accepted only if the
    quotient decreases; otherwise the step halves. After an accepted step the
    step grows by 1.25. Status is "converged" (residual tolerance met),
    "stalled" (decrease below tol_quotient) or "max_iter".
    """
    p = cfg.params
    q = p.p_crit
    form = forms.regional_form(p, cfg.grid, cfg.domain)
    hn = form.h ** p.n
    u = np.asarray((init_guess(cfg) if u0 is None else u0).values, dtype=float)
    u = _normalize(form, np.where(form.mask, u, 0.0), q)
    g = form.apply(u)
    Q = hn * float(np.sum(u * g))
    tau = cfg.step
    history = [Q]
    res = _residual(form, u, g, Q, p)
    status = "max_iter"
    it = 0
    while it < cfg.max_iter:
        if res < cfg.tol_residual:
            status = "converged"
            break
        direction = g - Q * np.abs(u) ** (q - 2) * u
        accepted = False
        for _ in range(60):
            v = u - tau * direction
            if cfg.positivity:
                v = np.abs(v)
            v = _normalize(form, np.where(form.mask, v, 0.0), q)
            gv = form.apply(v)
            Qv = hn * float(np.sum(v * gv))
            if Qv < Q:
                accepted = True
                break
            tau *= 0.5
        if not accepted:
            status = "stalled"
            break
        it += 1
        decrease = Q - Qv
        u, g, Q = v, gv, Qv
        history.append(Q)
        res = _residual(form, u, g, Q, p)
        tau *= 1.25
        if callback is not None:
            callback(it, Q, res)
        if decrease < cfg.tol_quotient * max(1.0, abs(Q)) and res >= cfg.tol_residual:
            status = "stalled"
            break
    if res < cfg.tol_residual:
        status = "converged"
    return SolverState(Sampled(cfg.grid, u), Q, res, it, status, history)


def el_residual(p, u, d, multiplier, points=None, ndirs=None):
    """Relative L^2 residual of g - multiplier * u^{(n+2s)/(n-2s)}.

    For sampled fields g is the discrete operator at every node of the
    domain; analytic fields are evaluated by adaptive quadrature at the given
    points.
    """
    if isinstance(u, Sampled):
        form = forms.regional_form(p, u.grid, d, ndirs)
        v = np.asarray(u.values)
        g = form.apply(v)
        return _residual(form, v, g, multiplier, p)
    if points is None:
        raise SolverError("analytic residual needs sample points")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    g = np.array([forms.apply_regional(p, u, d, x) for x in pts])
    rhs = multiplier * u(pts) ** p.el_power
    return float(np.linalg.norm(g - rhs) / np.linalg.norm(rhs))


def pointwise_residuals(p, u, d, multiplier, points):
    """(g(x) - m u^{el}) / (m u^{el}) at each point, by adaptive quadrature."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    g = np.array([forms.apply_regional(p, u, d, x) for x in pts])
    rhs = multiplier * u(pts) ** p.el_power
    return (g - rhs) / rhs


def truncation_bracket(cfg, factor=1.5, **kw):
    """Converged quotients on the box and on the box enlarged by ``factor``.

    The enlarged box keeps the lower face and spacing; its cells are added
    at the far sides.
    """
    s1 = solve(cfg, **kw)
    g = cfg.grid
    h = g.h
    lo = np.asarray(g.lo, float)
    hi = np.asarray(g.hi, float)
    c = 0.5 * (lo + hi)
    new_lo = c - factor * (c - lo)
    new_hi = c + factor * (hi - c)
    if isinstance(cfg.domain, HalfSpace):
        new_lo[-1] = lo[-1]
        new_hi[-1] = lo[-1] + factor * (hi[-1] - lo[-1])
    shape = tuple(int(round((b - a) / h)) for a, b in zip(new_lo, new_hi))
    new_hi = new_lo + np.asarray(shape) * h
    big = Grid(tuple(new_lo), tuple(new_hi), shape)
    cfg2 = SolverConfig(cfg.params, cfg.domain, big, cfg.step, cfg.max_iter, cfg.tol_residual,
                        cfg.tol_quotient, cfg.positivity)
    u0 = Sampled(big, families_resample(s1.u, big))
    s2 = solve(cfg2, u0=u0)
    return s1, s2


def families_resample(u, grid):
    """Nearest-cell transfer of a sampled field onto a grid with equal spacing."""
    return u(grid.nodes())


def envelope_fit(p, state, domain=None, noise=1e-6, strip=1.0, far_min=None):
    """Fit u ~ C x_n^alpha (1+|x|)^(-beta) on trusted nodes.

    The two exponents are fitted jointly by linear least squares in
    (1, log x_n, log(1+|x|)): near-boundary nodes (|x| <= strip) pin alpha,
    far nodes (|x| >= far_min, x_n/|x| >= 1/4) pin beta. Nodes below
    noise * max(u) and the two outermost cell layers of the box are dropped.
    c_lower, c_upper are min/max of u over the envelope with the exponents
    (2 sigma - 1, n + 2 sigma - 2).
    """
    u = state.u if isinstance(state, SolverState) else state
    g = u.grid
    x = g.nodes().reshape(-1, p.n)
    v = np.asarray(u.values).reshape(-1)
    floor = noise * float(np.max(np.abs(v)))
    r = np.linalg.norm(x, axis=-1)
    xn = x[:, -1]
    h = g.h
    edge = np.zeros(x.shape[0], dtype=bool)
    for a in range(p.n):
        edge |= x[:, a] > g.hi[a] - 2 * h
        if a < p.n - 1:
            edge |= x[:, a] < g.lo[a] + 2 * h
    ok = (v > floor) & (xn > 0) & ~edge
    if domain is not None:
        ok &= domain.contains(x)
    far_min = 0.25 * float(np.max(r[ok])) if far_min is None and ok.any() else (far_min or 0.0)
    near = ok & (r <= strip)
    far = ok & (r >= far_min) & (xn >= 0.25 * r)
    sel = near | far
    if near.sum() < 3 or far.sum() < 3:
        raise SolverError("insufficient trusted points for the envelope fit")
    A = np.stack([np.ones(sel.sum()), np.log(xn[sel]), -np.log1p(r[sel])], axis=-1)
    coef, *_ = np.linalg.lstsq(A, np.log(v[sel]), rcond=None)
    fit_res = float(np.sqrt(np.mean((A @ coef - np.log(v[sel])) ** 2)))
    env = xn[ok] ** (2 * p.sigma - 1) * (1 + r[ok]) ** (-(p.n + 2 * p.sigma - 2))
    ratio = v[ok] / env
    return EnvelopeFit(float(ratio.min()), float(ratio.max()), float(coef[1]), float(coef[2]),
                       fit_res, floor, p.sigma > 0.5, int(sel.sum()))


# ---------------------------------------------------------------- checkpoint

def _domain_tag(d):
    return repr(d).replace(" ", "")


def save_checkpoint(path, cfg, state):
    """Versioned text table: header lines, then node coordinates and values.

    Floats are written with 17 significant digits, so the file is
    independent of byte order and round-trips exactly.
    """
    g = cfg.grid
    lines = [f"# {CHECKPOINT_VERSION}",
             f"# n={cfg.params.n} sigma={cfg.params.sigma!r}",
             f"# domain={_domain_tag(cfg.domain)}",
             "# grid_lo=" + ",".join(repr(float(v)) for v in g.lo),
             "# grid_hi=" + ",".join(repr(float(v)) for v in g.hi),
             "# grid_shape=" + ",".join(str(int(v)) for v in g.shape),
             f"# iter={state.iter} status={state.status}",
             f"# quotient={state.quotient:.17g} el_residual={state.el_residual:.17g}",
             "# columns=" + ",".join([f"x{a + 1}" for a in range(g.n)] + ["value"])]
    x = g.nodes().reshape(-1, g.n)
    v = np.asarray(state.u.values).reshape(-1)
    buf = io.StringIO()
    buf.write("\n".join(lines) + "\n")
    for row, val in zip(x, v):
        buf.write(",".join(f"{c:.17g}" for c in row) + f",{val:.17g}\n")
    with open(path, "w", newline="\n") as fh:
        fh.write(buf.getvalue())


def load_checkpoint(path):
    """Read a checkpoint; returns (params, grid, state, domain_tag)."""
    with open(path) as fh:
        text = fh.read().splitlines()
    if not text or text[0] != f"# {CHECKPOINT_VERSION}":
        raise SolverError(f"unsupported checkpoint header: {text[0] if text else ''!r}")
    meta = {}
    rows = []
    for line in text[1:]:
        if line.startswith("#"):
            for item in line[1:].split():
                if "=" in item:
                    k, v = item.split("=", 1)
                    meta[k] = v
        elif line.strip():
            rows.append([float(t) for t in line.split(",")])
    p = make_params(int(meta["n"]), float(meta["sigma"]))
    lo = tuple(float(t) for t in meta["grid_lo"].split(","))
    hi = tuple(float(t) for t in meta["grid_hi"].split(","))
    shape = tuple(int(t) for t in meta["grid_shape"].split(","))
    grid = Grid(lo, hi, shape)
    vals = np.array([r[-1] for r in rows]).reshape(shape)
    state = SolverState(Sampled(grid, vals), float(meta["quotient"]), float(meta["el_residual"]),
                        int(meta["iter"]), meta.get("status", "loaded"))
    return p, grid, state, meta.get("domain")
