"""Explicit function families: bubbles, cutoffs, inversions, translates,
boundary-collapse profiles, critical rescalings and test profiles."""

from dataclasses import dataclass

import numpy as np

from . import constants
from .fields import Analytic, FieldError, Grid, Sampled, analytic


@dataclass(frozen=True)
class BubbleSpec:
    lam: float
    center: tuple
    c0: float


@dataclass(frozen=True)
class CutoffSpec:
    r1: float = 2.0
    r2: float = 3.0


def _box(center, r):
    c = np.asarray(center, dtype=float)
    return c - r, c + r


def bubble(p, lam=1.0, center=None):
    """U_lambda(x) = c0 (lambda / (1 + lambda^2 |x - center|^2))^{(n-2 sigma)/2}."""
    if not lam > 0:
        raise FieldError("lambda must be positive")
    center = (0.0,) * p.n if center is None else tuple(float(c) for c in center)
    c0 = constants.c0(p)
    a = p.half_exponent
    cvec = np.asarray(center)

    def f(x):
        r2 = np.sum((x - cvec) ** 2, axis=-1)
        return c0 * (lam / (1.0 + lam * lam * r2)) ** a

    return analytic("bubble", f, p.n, support=None, decay=p.n - 2 * p.sigma,
                    lam=float(lam), center=center, c0=c0, scale=1.0 / lam)


def bubble_spec(p, lam=1.0, center=None):
    center = (0.0,) * p.n if center is None else tuple(center)
    return BubbleSpec(float(lam), center, constants.c0(p))


def cutoff_profile(r, eta=CutoffSpec()):
    """Radial quintic ramp: 1 on [0, r1], 0 beyond r2, C^2 in between."""
    t = np.clip((np.asarray(r, dtype=float) - eta.r1) / (eta.r2 - eta.r1), 0.0, 1.0)
    return np.clip(1.0 - t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t), 0.0, 1.0)


def cutoff(p, eta=CutoffSpec(), center=None):
    cvec = np.zeros(p.n) if center is None else np.asarray(center, dtype=float)
    return analytic("cutoff", lambda x: cutoff_profile(np.linalg.norm(x - cvec, axis=-1), eta),
                    p.n, support=_box(cvec, eta.r2), r1=eta.r1, r2=eta.r2)


def cutoff_bubble(p, lam=1.0, eta=CutoffSpec(), center=None):
    """u_lambda = eta U_lambda, supported in the closed ball of radius r2."""
    U = bubble(p, lam, center)
    cvec = np.zeros(p.n) if center is None else np.asarray(center, dtype=float)

    def f(x):
        return cutoff_profile(np.linalg.norm(x - cvec, axis=-1), eta) * U(x)

    return analytic("cutoff_bubble", f, p.n, support=_box(cvec, eta.r2),
                    lam=float(lam), r1=eta.r1, r2=eta.r2, scale=1.0 / lam)


def _inverted_box(lo, hi, samples=64):
    """Bounding box of the inversion image of a box that avoids the origin."""
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    n = lo.size
    axes = [np.linspace(l, h, samples) for l, h in zip(lo, hi)]
    pts = []
    for a in range(n):
        for side in (lo[a], hi[a]):
            grids = [ax if b != a else np.array([side]) for b, ax in enumerate(axes)]
            pts.append(np.stack(np.meshgrid(*grids, indexing="ij"), axis=-1).reshape(-1, n))
    pts = np.concatenate(pts)
    if np.min(np.linalg.norm(pts, axis=-1)) == 0 or np.all((lo <= 0) & (hi >= 0)):
        return None
    img = pts / np.sum(pts * pts, axis=-1, keepdims=True)
    ext = img.max(axis=0) - img.min(axis=0)
    return img.min(axis=0) - 0.02 * ext, img.max(axis=0) + 0.02 * ext


def kelvin(p, f):
    """Inversion u_1(y) = |y|^{2 sigma - n} u(y / |y|^2), undefined at y = 0."""
    e = 2 * p.sigma - p.n

    def g(y):
        r2 = np.sum(y * y, axis=-1)
        if np.any(r2 == 0):
            raise FieldError("Kelvin transform is not defined at the origin")
        return r2 ** (e / 2.0) * f(y / r2[..., None])

    support = None
    if f.support is not None:
        support = _inverted_box(*f.support)
    return analytic("kelvin", g, p.n, support=support, decay=p.n - 2 * p.sigma, of=f.family)


def translated_bump(p, w, c):
    """x -> w(x', x_n - c); the translate must sit inside the open half-space."""
    if w.support is None:
        raise FieldError("translated_bump needs a compactly supported field")
    lo, hi = (np.asarray(v, float).copy() for v in w.support)
    lo[-1] += c
    hi[-1] += c
    if lo[-1] <= 0:
        raise FieldError("translated support would cross the boundary x_n = 0")
    shift = np.zeros(p.n)
    shift[-1] = c
    return analytic("translated", lambda x: w(x - shift), p.n, support=(lo, hi),
                    c=float(c), of=w.family)


def _ramp_integral(t):
    t = np.asarray(t, dtype=float)
    return np.where(t < 0.25, 0.0, np.where(t < 0.75, (t - 0.25) ** 2, 0.25 + (t - 0.75)))


def collapse_ramp(t):
    """Box-mollified clamp((t - 1/4)/(1/2), 0, 1), window 1/4.

    C^1 and piecewise quadratic: 0 for t <= 1/8, 1 for t >= 7/8, slope <= 2.
    """
    return 4.0 * (_ramp_integral(t + 0.125) - _ramp_integral(t - 0.125))


def inradius(d, samples=200):
    b = d.bounds()
    if b is None or not np.all(np.isfinite(b[0])) or not np.all(np.isfinite(b[1])):
        return np.inf
    axes = [np.linspace(l, h, samples if d.n == 1 else 60) for l, h in zip(*b)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d.n)
    return float(np.max(d.boundary_distance(pts)))


def collapse_profile(p, d, delta):
    """u_delta = 1 where dist(x, d^c) >= delta, C^1 ramp to 0 at the boundary."""
    if p.sigma >= 0.5:
        raise FieldError("the collapse family needs sigma < 1/2")
    if not 0 < delta < inradius(d):
        raise FieldError("delta must lie in (0, inradius)")

    def f(x):
        return collapse_ramp(d.boundary_distance(x) / delta)

    b = d.bounds()
    return analytic("collapse", f, p.n, support=None if b is None else (b[0], b[1]),
                    delta=float(delta))


def theta_rescale(p, theta, lam):
    """Theta_lambda(x) = lambda^{(n-2 sigma)/2} Theta(lambda x)."""
    if not lam > 0:
        raise FieldError("lambda must be positive")
    a = lam ** p.half_exponent
    if isinstance(theta, Sampled):
        g = theta.grid
        grid = Grid(tuple(np.asarray(g.lo) / lam), tuple(np.asarray(g.hi) / lam), g.shape)
        return Sampled(grid, a * np.asarray(theta.values))
    support = None
    if theta.support is not None:
        support = (np.asarray(theta.support[0]) / lam, np.asarray(theta.support[1]) / lam)
    return analytic("rescaled", lambda x: a * theta(lam * x), p.n, support=support,
                    decay=theta.decay, lam=float(lam), of=theta.family)


def dilate(p, f, lam):
    """Plain dilation x -> f(lam x) without amplitude factor."""
    support = None
    if f.support is not None:
        support = (np.asarray(f.support[0]) / lam, np.asarray(f.support[1]) / lam)
    return analytic("dilated", lambda x: f(lam * x), p.n, support=support, decay=f.decay,
                    lam=float(lam), of=f.family)


def envelope(p):
    """x_n^{2 sigma - 1} (1 + |x|)^{-(n + 2 sigma - 2)} on the half-space, 0 below."""
    a = 2 * p.sigma - 1
    b = p.n + 2 * p.sigma - 2

    def f(x):
        xn = x[..., -1]
        r = np.linalg.norm(x, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = np.where(xn > 0, np.abs(xn) ** a * (1 + r) ** (-b), 0.0)
        return v

    return analytic("envelope", f, p.n, support=None, decay=b)


def gaussian(p, width=1.0, center=None, support_radius=None):
    cvec = np.zeros(p.n) if center is None else np.asarray(center, float)
    R = 9.0 * width if support_radius is None else support_radius
    return analytic("gaussian",
                    lambda x: np.exp(-0.5 * np.sum((x - cvec) ** 2, axis=-1) / width ** 2),
                    p.n, support=_box(cvec, R), width=width)


def hat(p, center=None, radius=1.0):
    cvec = np.zeros(p.n) if center is None else np.asarray(center, float)
    return analytic("hat",
                    lambda x: np.maximum(0.0, 1.0 - np.linalg.norm(x - cvec, axis=-1) / radius),
                    p.n, support=_box(cvec, radius), radius=radius)


def smooth_bump(p, center=None, radius=1.0):
    """exp(1 - 1/(1 - |x-c|^2/r^2)) inside the ball, peak value 1."""
    cvec = np.zeros(p.n) if center is None else np.asarray(center, float)

    def f(x):
        t = np.sum((x - cvec) ** 2, axis=-1) / radius ** 2
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(t < 1, np.exp(1.0 - 1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)

    return analytic("bump", f, p.n, support=_box(cvec, radius), radius=radius,
                    center=tuple(cvec))


def two_bump(p, separation=8.0, radius=1.0):
    c = np.zeros(p.n)
    c[0] = separation / 2
    b1 = smooth_bump(p, c, radius)
    b2 = smooth_bump(p, -c, radius)
    lo = np.minimum(b1.support[0], b2.support[0])
    hi = np.maximum(b1.support[1], b2.support[1])
    return analytic("two_bump", lambda x: b1(x) + b2(x), p.n, support=(lo, hi),
                    separation=separation)


def product(p, f, g, family="product"):
    """Pointwise product; support is the intersection of the two boxes."""
    support = f.support if g.support is None else g.support
    if f.support is not None and g.support is not None:
        support = (np.maximum(f.support[0], g.support[0]), np.minimum(f.support[1], g.support[1]))
    return analytic(family, lambda x: f(x) * g(x), p.n, support=support)


__all__ = [
    "BubbleSpec", "CutoffSpec", "bubble", "bubble_spec", "cutoff_profile", "cutoff",
    "cutoff_bubble", "kelvin", "translated_bump", "collapse_ramp", "collapse_profile",
    "theta_rescale", "dilate", "envelope", "gaussian", "hat", "smooth_bump", "two_bump",
    "product", "inradius", "Analytic",
]
