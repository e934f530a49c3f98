"""Open regions of R^n with membership, boundary distance and ray slicing.

Every domain answers three vectorised questions:

* ``contains(x)``: open-set membership (points on the boundary are outside),
* ``boundary_distance(x)``: Euclidean distance to the complement,
* ``ray_intervals(x, dirs)``: the parameter set ``{t > 0 : x + t*dir in D}``
  as an array of half-open intervals with shape ``(m, k, J, 2)``.

Empty interval slots are stored as ``[inf, inf]`` so that any integral of a
decaying kernel over them vanishes without special casing.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

INF = np.inf


class DomainError(ValueError):
    pass


def _as_points(x, n):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != n:
        raise DomainError(f"point dimension {x.shape[-1]} does not match domain dimension {n}")
    return x


def _clip_interval(lo, hi):
    """Stack (lo, hi) into one interval slot, emptying degenerate ones."""
    lo = np.maximum(lo, 0.0)
    empty = ~(hi > lo)
    lo = np.where(empty, INF, lo)
    hi = np.where(empty, INF, hi)
    return np.stack([lo, hi], axis=-1)[..., None, :]


def _slab(x, dirs, axis, a, b):
    """Parameter range where a < x_axis + t dir_axis < b, per (point, dir)."""
    xa = x[:, None, axis]
    da = dirs[None, :, axis]
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (a - xa) / da
        t2 = (b - xa) / da
    lo = np.where(da > 0, t1, np.where(da < 0, t2, -INF))
    hi = np.where(da > 0, t2, np.where(da < 0, t1, INF))
    inside = (xa > a) & (xa < b)
    flat = da == 0
    lo = np.where(flat & ~inside, INF, lo)
    hi = np.where(flat & ~inside, -INF, hi)
    lo = np.where(np.isnan(lo), -INF, lo)
    hi = np.where(np.isnan(hi), INF, hi)
    return lo, hi


def subtract_intervals(A, B):
    """Set difference of interval lists, ``A \\ closure(B)``, slot-wise."""
    out = A
    for j in range(B.shape[-2]):
        c = B[..., j:j + 1, 0]
        d = B[..., j:j + 1, 1]
        a = out[..., 0]
        b = out[..., 1]
        left_hi = np.minimum(b, c)
        right_lo = np.maximum(a, d)
        left = np.stack([a, left_hi], axis=-1)
        right = np.stack([right_lo, b], axis=-1)
        pieces = np.concatenate([left, right], axis=-2)
        bad = ~(pieces[..., 1] > pieces[..., 0])
        pieces[bad] = INF
        out = _compact(pieces)
    return out


def _compact(I):
    """Drop slots that are empty in every (point, dir) cell."""
    keep = ~np.all(np.isinf(I[..., 0]), axis=tuple(range(I.ndim - 2)))
    if not keep.any():
        return I[..., :1, :]
    return I[..., keep, :]


class Domain:
    n: int

    def contains(self, x):
        raise NotImplementedError

    def boundary_distance(self, x):
        raise NotImplementedError

    def ray_intervals(self, x, dirs):
        raise NotImplementedError

    def distance_to(self, x):
        """Distance from x to the closure of the domain (0 inside)."""
        raise NotImplementedError

    def bounds(self):
        """Bounding box (lo, hi) or None for unbounded domains."""
        return None

    def check_inside(self, x):
        x = _as_points(x, self.n)
        if not np.all(self.contains(x)):
            raise DomainError("point lies outside the domain")
        return x


@dataclass(frozen=True)
class WholeSpace(Domain):
    n: int

    def contains(self, x):
        x = _as_points(x, self.n)
        return np.ones(x.shape[:-1], dtype=bool)

    def boundary_distance(self, x):
        x = _as_points(x, self.n)
        return np.full(x.shape[:-1], INF)

    def distance_to(self, x):
        x = _as_points(x, self.n)
        return np.zeros(x.shape[:-1])

    def ray_intervals(self, x, dirs):
        x = _as_points(x, self.n)
        m, k = x.shape[0], dirs.shape[0]
        out = np.empty((m, k, 1, 2))
        out[..., 0] = 0.0
        out[..., 1] = INF
        return out


@dataclass(frozen=True)
class HalfSpace(Domain):
    """The upper half-space {x_n > 0}."""
    n: int

    def contains(self, x):
        x = _as_points(x, self.n)
        return x[..., -1] > 0

    def boundary_distance(self, x):
        x = _as_points(x, self.n)
        return np.maximum(x[..., -1], 0.0)

    def distance_to(self, x):
        x = _as_points(x, self.n)
        return np.maximum(-x[..., -1], 0.0)

    def bounds(self):
        lo = np.full(self.n, -INF)
        lo[-1] = 0.0
        return lo, np.full(self.n, INF)

    def ray_intervals(self, x, dirs):
        x = _as_points(x, self.n)
        lo, hi = _slab(x, dirs, self.n - 1, 0.0, INF)
        return _clip_interval(lo, hi)


@dataclass(frozen=True)
class Ball(Domain):
    center: tuple
    radius: float

    def __post_init__(self):
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise DomainError("ball radius must be positive and finite")

    @property
    def n(self):
        return len(self.center)

    def contains(self, x):
        x = _as_points(x, self.n)
        return np.linalg.norm(x - np.asarray(self.center), axis=-1) < self.radius

    def boundary_distance(self, x):
        x = _as_points(x, self.n)
        return np.maximum(self.radius - np.linalg.norm(x - np.asarray(self.center), axis=-1), 0.0)

    def distance_to(self, x):
        x = _as_points(x, self.n)
        return np.maximum(np.linalg.norm(x - np.asarray(self.center), axis=-1) - self.radius, 0.0)

    def bounds(self):
        c = np.asarray(self.center, dtype=float)
        return c - self.radius, c + self.radius

    def _ray(self, x, dirs):
        y = x[:, None, :] - np.asarray(self.center)[None, None, :]
        b = np.einsum("mkn,kn->mk", y, dirs)
        c = np.sum(y * y, axis=-1) - self.radius ** 2
        disc = b * b - c
        s = np.sqrt(np.maximum(disc, 0.0))
        lo = np.where(disc > 0, -b - s, INF)
        hi = np.where(disc > 0, -b + s, -INF)
        return lo, hi

    def ray_intervals(self, x, dirs):
        x = _as_points(x, self.n)
        return _clip_interval(*self._ray(x, dirs))


@dataclass(frozen=True)
class Box(Domain):
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        if lo.shape != hi.shape or lo.ndim != 1 or not np.all(lo < hi):
            raise DomainError("box needs corners of equal length with lo < hi")

    @property
    def n(self):
        return len(self.lo)

    def contains(self, x):
        x = _as_points(x, self.n)
        return np.all((x > np.asarray(self.lo)) & (x < np.asarray(self.hi)), axis=-1)

    def boundary_distance(self, x):
        x = _as_points(x, self.n)
        d = np.minimum(x - np.asarray(self.lo), np.asarray(self.hi) - x)
        return np.maximum(d.min(axis=-1), 0.0)

    def distance_to(self, x):
        x = _as_points(x, self.n)
        ex = np.maximum(np.asarray(self.lo) - x, 0.0) + np.maximum(x - np.asarray(self.hi), 0.0)
        return np.linalg.norm(ex, axis=-1)

    def bounds(self):
        return np.asarray(self.lo, dtype=float), np.asarray(self.hi, dtype=float)

    def _ray(self, x, dirs):
        lo = np.full((x.shape[0], dirs.shape[0]), -INF)
        hi = np.full((x.shape[0], dirs.shape[0]), INF)
        for a in range(self.n):
            l, h = _slab(x, dirs, a, self.lo[a], self.hi[a])
            lo = np.maximum(lo, l)
            hi = np.minimum(hi, h)
        return lo, hi

    def ray_intervals(self, x, dirs):
        x = _as_points(x, self.n)
        return _clip_interval(*self._ray(x, dirs))

    def exit_time(self, x, dirs):
        """First parameter at which the ray from an interior point leaves the box."""
        return self._ray(_as_points(x, self.n), dirs)[1]


@dataclass(frozen=True)
class HalfBall(Domain):
    """B_r^+ = {|x| < r, x_n > 0}."""
    n: int
    radius: float

    def __post_init__(self):
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise DomainError("half-ball radius must be positive and finite")

    def contains(self, x):
        x = _as_points(x, self.n)
        return (np.linalg.norm(x, axis=-1) < self.radius) & (x[..., -1] > 0)

    def boundary_distance(self, x):
        x = _as_points(x, self.n)
        d = np.minimum(self.radius - np.linalg.norm(x, axis=-1), x[..., -1])
        return np.maximum(d, 0.0)

    def distance_to(self, x):
        x = _as_points(x, self.n)
        r = np.linalg.norm(x, axis=-1)
        rp = np.linalg.norm(x[..., :-1], axis=-1)
        up = np.maximum(r - self.radius, 0.0)
        down = np.hypot(x[..., -1], np.maximum(rp - self.radius, 0.0))
        return np.where(x[..., -1] >= 0, up, down)

    def bounds(self):
        lo = np.full(self.n, -float(self.radius))
        lo[-1] = 0.0
        return lo, np.full(self.n, float(self.radius))

    def ray_intervals(self, x, dirs):
        x = _as_points(x, self.n)
        lo, hi = Ball((0.0,) * self.n, self.radius)._ray(x, dirs)
        l2, h2 = _slab(x, dirs, self.n - 1, 0.0, INF)
        return _clip_interval(np.maximum(lo, l2), np.minimum(hi, h2))


@dataclass(frozen=True)
class GraphEpigraph(Domain):
    """{x : x_n > phi(x')}, optionally intersected with a bounding box.

    ``lipschitz`` is a caller-supplied bound on |grad phi| used for the
    certified boundary-distance lower bound and to place ray samples.
    """
    n: int
    phi: Callable
    lipschitz: float = 1.0
    box: Optional[Box] = None
    ray_samples: int = 512

    def _above(self, x):
        return x[..., -1] - self.phi(x[..., :-1])

    def contains(self, x):
        x = _as_points(x, self.n)
        ok = self._above(x) > 0
        if self.box is not None:
            ok &= self.box.contains(x)
        return ok

    def boundary_distance(self, x):
        x = _as_points(x, self.n)
        d = np.maximum(self._above(x), 0.0) / np.sqrt(1.0 + self.lipschitz ** 2)
        if self.box is not None:
            d = np.minimum(d, self.box.boundary_distance(x))
        return d

    def distance_to(self, x):
        x = _as_points(x, self.n)
        d = np.maximum(-self._above(x), 0.0) / np.sqrt(1.0 + self.lipschitz ** 2)
        if self.box is not None:
            d = np.maximum(d, self.box.distance_to(x))
        return d

    def bounds(self):
        return None if self.box is None else self.box.bounds()

    def ray_intervals(self, x, dirs):
        """Crossings located by sign changes on a compactified ray, then bisection."""
        x = _as_points(x, self.n)
        m, k = x.shape[0], dirs.shape[0]
        ns = self.ray_samples
        s = (np.arange(ns + 1) / ns)[:-1]
        s = np.append(s, 1.0 - 0.25 / ns)
        r = s / (1.0 - s)

        def g(t):
            pts = x[:, None, None, :] + t[..., None] * dirs[None, :, None, :]
            return self._above(pts)

        vals = g(np.broadcast_to(r, (m, k, r.size)))
        sign = vals > 0
        flips = sign[..., 1:] != sign[..., :-1]
        nflip = int(flips.sum(axis=-1).max()) if flips.size else 0
        edges = np.full((m, k, nflip), INF)
        if nflip:
            idx = np.argsort(~flips, axis=-1, kind="stable")[..., :nflip]
            valid = np.take_along_axis(flips, idx, axis=-1)
            a = r[idx]
            b = r[idx + 1]
            fa = np.take_along_axis(sign, idx, axis=-1)
            for _ in range(60):
                mid = 0.5 * (a + b)
                fm = g(mid) > 0
                same = fm == fa
                a = np.where(same, mid, a)
                b = np.where(same, b, mid)
            edges = np.where(valid, 0.5 * (a + b), INF)
        # the ray starts inside or outside; alternate from there
        start_in = sign[..., 0]
        pts = np.concatenate([np.zeros((m, k, 1)), edges, np.full((m, k, 1), INF)], axis=-1)
        pts = np.sort(pts, axis=-1)
        J = nflip // 2 + 1
        out = np.full((m, k, J + 1, 2), INF)
        for j in range(J + 1):
            i0 = 2 * j
            i_in = np.where(start_in, i0, i0 + 1)
            lo = np.take_along_axis(pts, np.minimum(i_in, pts.shape[-1] - 1)[..., None], -1)[..., 0]
            hi = np.take_along_axis(pts, np.minimum(i_in + 1, pts.shape[-1] - 1)[..., None], -1)[..., 0]
            okj = (i_in + 1 < pts.shape[-1]) & (hi > lo)
            out[..., j, 0] = np.where(okj, lo, INF)
            out[..., j, 1] = np.where(okj, hi, INF)
        out = _compact(out)
        if self.box is not None:
            lo, hi = self.box._ray(x, dirs)
            out = np.stack([np.maximum(out[..., 0], lo[..., None]),
                            np.minimum(out[..., 1], hi[..., None])], axis=-1)
            bad = ~(out[..., 1] > out[..., 0])
            out[bad] = INF
        return out


@dataclass(frozen=True)
class Difference(Domain):
    """Points of ``outer`` that are not in the closure of ``inner``."""
    outer: Domain
    inner: Domain

    @property
    def n(self):
        return self.outer.n

    def contains(self, x):
        x = _as_points(x, self.n)
        return self.outer.contains(x) & (self.inner.distance_to(x) > 0)

    def boundary_distance(self, x):
        x = _as_points(x, self.n)
        d = np.minimum(self.outer.boundary_distance(x), self.inner.distance_to(x))
        return np.where(self.contains(x), d, 0.0)

    def distance_to(self, x):
        # lower bound: exact outside the outer domain, zero inside it
        x = _as_points(x, self.n)
        return np.where(self.contains(x), 0.0, self.outer.distance_to(x))

    def bounds(self):
        return self.outer.bounds()

    def ray_intervals(self, x, dirs):
        return subtract_intervals(self.outer.ray_intervals(x, dirs), self.inner.ray_intervals(x, dirs))


def contains(d, x):
    """Open-set membership of a single point or an array of points."""
    return d.contains(x)


def boundary_distance(d, x):
    """Distance from interior points x to the complement of d."""
    x = np.asarray(x, dtype=float)
    if not np.all(d.contains(x)):
        raise DomainError("boundary_distance requires points inside the domain")
    return d.boundary_distance(x)
