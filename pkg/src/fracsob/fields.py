"""Cell-centred grids and the two field representations."""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class FieldError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centred tensor grid on the box [lo, hi]."""
    lo: tuple
    hi: tuple
    shape: tuple

    def __post_init__(self):
        if not (len(self.lo) == len(self.hi) == len(self.shape)):
            raise FieldError("grid lo/hi/shape must have equal length")
        if any(int(s) < 1 for s in self.shape):
            raise FieldError("grid resolution must be positive")
        if any(h <= l for l, h in zip(self.lo, self.hi)):
            raise FieldError("grid box must have positive extent")

    @property
    def n(self):
        return len(self.shape)

    @property
    def spacing(self):
        return tuple((h - l) / s for l, h, s in zip(self.lo, self.hi, self.shape))

    @property
    def h(self):
        """Common spacing; the energy quadrature needs isotropic cells."""
        sp = self.spacing
        if max(sp) - min(sp) > 1e-9 * max(sp):
            raise FieldError(f"grid cells are not cubic: spacings {sp}")
        return sp[0]

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    @property
    def size(self):
        return int(np.prod(self.shape))

    def axes(self):
        return [l + (np.arange(s) + 0.5) * (h - l) / s
                for l, h, s in zip(self.lo, self.hi, self.shape)]

    def nodes(self):
        """Node coordinates with shape ``shape + (n,)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def scaled(self, factor, center=None):
        """The grid mapped by x -> center + factor*(x - center)."""
        c = np.zeros(self.n) if center is None else np.asarray(center, dtype=float)
        lo = c + factor * (np.asarray(self.lo) - c)
        hi = c + factor * (np.asarray(self.hi) - c)
        return Grid(tuple(lo), tuple(hi), tuple(self.shape))

    def shifted(self, offset):
        off = np.asarray(offset, dtype=float)
        return Grid(tuple(np.asarray(self.lo) + off), tuple(np.asarray(self.hi) + off), tuple(self.shape))


def make_grid(lo, hi, shape):
    lo = tuple(float(v) for v in np.atleast_1d(lo))
    hi = tuple(float(v) for v in np.atleast_1d(hi))
    shape = tuple(int(v) for v in np.atleast_1d(shape))
    if len(shape) == 1 and len(lo) > 1:
        shape = shape * len(lo)
    return Grid(lo, hi, shape)


def cubic_grid(lo, hi, h):
    """Grid on [lo, hi] with spacing close to h and exactly cubic cells.

    The upper corner is moved outward so that every axis holds an integer
    number of cells of the same size.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    shape = np.maximum(np.ceil((hi - lo) / h - 1e-9).astype(int), 1)
    hi = lo + shape * h
    return Grid(tuple(lo), tuple(hi), tuple(int(s) for s in shape))


@dataclass(frozen=True)
class Analytic:
    """A pure function of position.

    ``support`` is a box (lo, hi) outside which the function vanishes, or None
    when the support is unbounded; ``decay`` is the exponent beta in
    |u(x)| <= C |x|^(-beta), used only for tail error bars.
    """
    family: str
    params: dict
    func: Callable = field(compare=False, repr=False)
    n: int = 1
    support: Optional[tuple] = None
    decay: Optional[float] = None

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise FieldError(f"point dimension {x.shape[-1]} does not match field dimension {self.n}")
        return np.asarray(self.func(x), dtype=float)


@dataclass(frozen=True)
class Sampled:
    grid: Grid
    values: np.ndarray = field(compare=False, repr=False)
    support_domain: object = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != tuple(self.grid.shape):
            raise FieldError(f"values of shape {v.shape} do not fit grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise FieldError("sampled values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self):
        return self.grid.n

    @property
    def support(self):
        return self.grid.lo, self.grid.hi

    def __call__(self, x):
        """Piecewise-constant evaluation (zero outside the grid box)."""
        x = np.asarray(x, dtype=float)
        g = self.grid
        idx = []
        inside = np.ones(x.shape[:-1], dtype=bool)
        for a in range(g.n):
            t = (x[..., a] - g.lo[a]) / g.spacing[a]
            i = np.floor(t).astype(int)
            inside &= (t >= 0) & (i < g.shape[a])
            idx.append(np.clip(i, 0, g.shape[a] - 1))
        return np.where(inside, self.values[tuple(idx)], 0.0)


def analytic(family, func, n, support=None, decay=None, **params):
    return Analytic(family, dict(params), func, n, support, decay)


def sample(f, g):
    """Node-wise evaluation of f on the grid g."""
    if f.n != g.n:
        raise FieldError(f"field dimension {f.n} does not match grid dimension {g.n}")
    if isinstance(f, Sampled):
        if f.grid == g:
            return f
        raise FieldError("resampling between different grids is not supported")
    return Sampled(g, f(g.nodes()))


def constant(value, n, support=None):
    return analytic("constant", lambda x: np.full(x.shape[:-1], float(value)), n,
                    support=support, value=value)
