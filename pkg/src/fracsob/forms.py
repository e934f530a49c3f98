"""Regional fractional forms on cell-centred grids.

The double integral

    I_D[u] = int_D int_D (u(x) - u(y))^2 |x - y|^{-n-2 sigma} dx dy

is discretised as a sum over ordered cell pairs. Pairs at lattice offset k get
the weight h^{n-2 sigma} W(k), where W(k) = |k|^{-n-2 sigma} far from the
diagonal and, for |k|_inf <= M, the moment-corrected value

    W(k) = |k|^{-2} int_{cell k} |z|^{2-n-2 sigma} dz,

which integrates (grad u . z)^2 |z|^{-n-2 sigma} over the partner cell for
locally linear u. The same-cell contribution (1/n) |grad u|^2 int_{cell 0}
|z|^{2-n-2 sigma} is carried by the nearest-neighbour pairs. The masked sums
are evaluated exactly by zero-padded FFT convolution.

Pairs with one point in the grid box G and the other in D \\ G are handled
along rays from each node: the kernel mass of D \\ G is sum over ray intervals
of (a^{-2 sigma} - b^{-2 sigma}) / (2 sigma).
"""

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import fft as sfft
from scipy import integrate

from . import constants, sphere
from .domains import Box, DomainError, HalfSpace, WholeSpace, subtract_intervals
from .fields import Analytic, Grid, Sampled, FieldError, cubic_grid

NEAR_RANGE = 8
DEFAULT_RESOLUTION = {1: 512, 2: 96, 3: 48}


class FormError(ValueError):
    pass


@dataclass(frozen=True)
class QuotientReport:
    energy: float
    lp_norm: float
    quotient: float
    quad_error_estimate: float


# ---------------------------------------------------------------- weights

@lru_cache(maxsize=None)
def self_cell_moment(n, s):
    """(1/n) int_{[-1/2,1/2]^n} |z|^{2-n-2s} dz by the pyramid decomposition."""
    alpha = 2.0 - n - 2.0 * s
    if n == 1:
        face = 0.5 ** alpha
    else:
        x, w = np.polynomial.legendre.leggauss(48)
        x, w = 0.5 * x, 0.5 * w
        pts = np.meshgrid(*([x] * (n - 1)), indexing="ij")
        ww = np.prod(np.meshgrid(*([w] * (n - 1)), indexing="ij"), axis=0)
        r2 = 0.25 + sum(p * p for p in pts)
        face = float(np.sum(ww * r2 ** (alpha / 2.0)))
    # 2n pyramids over the faces, each (1/2)/(2-2s) * face integral
    return face / (2.0 - 2.0 * s)


@lru_cache(maxsize=None)
def near_weights(n, s, M=NEAR_RANGE):
    """Moment-corrected weights on the offsets [-M, M]^n (zero at the origin)."""
    alpha = 2.0 - n - 2.0 * s
    x, w = np.polynomial.legendre.leggauss(12)
    x, w = 0.5 * x, 0.5 * w
    offs = np.arange(-M, M + 1)
    W = np.zeros((2 * M + 1,) * n)
    cell = np.stack(np.meshgrid(*([x] * n), indexing="ij"), axis=-1).reshape(-1, n)
    cw = np.prod(np.stack(np.meshgrid(*([w] * n), indexing="ij"), axis=-1), axis=-1).reshape(-1)
    for idx in np.ndindex(*W.shape):
        k = offs[list(idx)]
        k2 = float(np.dot(k, k))
        if k2 == 0:
            continue
        if n == 1:
            kk = abs(k[0])
            W[idx] = ((kk + 0.5) ** (2 - 2 * s) - (kk - 0.5) ** (2 - 2 * s)) / ((2 - 2 * s) * kk * kk)
        else:
            z = cell + k
            W[idx] = np.dot(cw, np.sum(z * z, axis=-1) ** (alpha / 2.0)) / k2
    m0 = self_cell_moment(n, s)
    for a in range(n):
        for sgn in (-1, 1):
            idx = [M] * n
            idx[a] += sgn
            W[tuple(idx)] += 0.5 * m0
    return W


@lru_cache(maxsize=6)
def _kernel_fft(n, s, shape, M):
    """FFT of the wrapped pair-weight array for linear convolution on ``shape``."""
    full = tuple(2 * N for N in shape)
    axes = []
    for N in shape:
        k = np.zeros(2 * N)
        k[:N] = np.arange(N)
        k[N + 1:] = np.arange(-N + 1, 0)
        axes.append(k)
    K = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    r2 = np.sum(K * K, axis=-1)
    with np.errstate(divide="ignore"):
        W = np.where(r2 > 0, r2 ** (-(n + 2 * s) / 2.0), 0.0)
    near = near_weights(n, s, M)
    Mn = [min(M, N - 1) for N in shape]
    sl_src = tuple(slice(M - m, M + m + 1) for m in Mn)
    block = near[sl_src]
    idx = np.ix_(*[np.r_[np.arange(0, m + 1), np.arange(2 * N - m, 2 * N)] for m, N in zip(Mn, shape)])
    reorder = np.ix_(*[np.r_[np.arange(m, 2 * m + 1), np.arange(0, m)] for m in Mn])
    W[idx] = block[reorder]
    return sfft.rfftn(W, s=full)


def convolve(kfft, arr):
    """Linear convolution of ``arr`` with the pair kernel, cropped to ``arr``."""
    shape = arr.shape
    full = tuple(2 * N for N in shape)
    out = sfft.irfftn(sfft.rfftn(arr, s=full) * kfft, s=full)
    return out[tuple(slice(0, N) for N in shape)]


# ---------------------------------------------------------------- rays

def _ray_kernel_mass(s, lo, hi):
    """(lo^{-2s} - hi^{-2s}) / (2s) summed over interval slots."""
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(np.isinf(lo), 0.0, lo ** (-2 * s))
        b = np.where(np.isinf(hi), 0.0, hi ** (-2 * s))
    val = np.where(hi > lo, a - b, 0.0)
    return val.sum(axis=-1) / (2 * s)


def _exterior_intervals(d, box, x, dirs):
    """Intervals of d along each ray that lie beyond the exit from ``box``."""
    I = d.ray_intervals(x, dirs)
    te = box.exit_time(x, dirs)[..., None]
    lo = np.maximum(I[..., 0], te)
    hi = I[..., 1]
    empty = ~(hi > lo)
    lo = np.where(empty, np.inf, lo)
    hi = np.where(empty, np.inf, hi)
    return lo, hi


def _chunks(m, k, budget=4_000_000):
    step = max(1, budget // max(k, 1))
    for i in range(0, m, step):
        yield slice(i, min(m, i + step))


def exterior_potential(p, x, d, box, ndirs=None):
    """int_{d \\ box} |x - y|^{-n-2 sigma} dy for points x inside the box."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    dirs, w = sphere.directions(p.n, ndirs)
    out = np.empty(x.shape[0])
    for sl in _chunks(x.shape[0], dirs.shape[0]):
        lo, hi = _exterior_intervals(d, box, x[sl], dirs)
        out[sl] = _ray_kernel_mass(p.sigma, lo, hi) @ w
    return out


def domain_potential(p, x, d, ambient=None, ndirs=None):
    """-2 int_{ambient \\ d} |x - y|^{-n-2 sigma} dy.

    With ambient = WholeSpace this is V_d, with ambient = HalfSpace it is W_d.
    """
    ambient = WholeSpace(p.n) if ambient is None else ambient
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[-1] != p.n:
        raise DomainError("point dimension does not match parameters")
    if not np.all(d.contains(x)):
        raise DomainError("domain_potential needs points inside d")
    dirs, w = sphere.directions(p.n, ndirs)
    out = np.empty(x.shape[0])
    for sl in _chunks(x.shape[0], dirs.shape[0]):
        A = ambient.ray_intervals(x[sl], dirs)
        B = d.ray_intervals(x[sl], dirs)
        C = subtract_intervals(A, B)
        out[sl] = -2.0 * (_ray_kernel_mass(p.sigma, C[..., 0], C[..., 1]) @ w)
    return out[0] if single else out


_GL_T = np.polynomial.legendre.leggauss(32)


def _ray_field_integral(p, f, x, d, box, ndirs=None):
    """int_{d \\ box} f(y) |x - y|^{-n-2 sigma} dy along rays from each x.

    On a ray interval [a, b) the substitution r = a t^{-1/(2 sigma)} turns
    r^{-1-2 sigma} dr into a^{-2 sigma}/(2 sigma) dt on t in [(a/b)^{2 sigma}, 1].
    """
    s = p.sigma
    dirs, w = sphere.directions(p.n, ndirs)
    tn, tw = _GL_T
    out = np.zeros(x.shape[0])
    budget = 2_000_000 // tn.size
    for sl in _chunks(x.shape[0], dirs.shape[0], budget):
        lo, hi = _exterior_intervals(d, box, x[sl], dirs)
        ok = np.isfinite(lo)
        a = np.where(ok, lo, 1.0)
        t0 = np.where(ok, np.where(np.isinf(hi), 0.0, (a / np.where(ok, hi, 1.0)) ** (2 * s)), 1.0)
        t = t0[..., None] + 0.5 * (1.0 - t0[..., None]) * (tn + 1.0)
        r = a[..., None] * t ** (-1.0 / (2 * s))
        pts = x[sl][:, None, None, None, :] + r[..., None] * dirs[None, :, None, None, :]
        vals = f(pts)
        inner = 0.5 * (1.0 - t0) * np.tensordot(vals, tw, axes=([-1], [0]))
        inner = np.where(ok, inner * a ** (-2 * s) / (2 * s), 0.0)
        out[sl] = inner.sum(axis=-1) @ w
    return out


def _ray_power_integral(p, f, center, d, box, q, decay=None, ndirs=None):
    """int_{d \\ box} |f|^q dy along rays from the box centre."""
    n = p.n
    dirs, w = sphere.directions(n, ndirs)
    lo, hi = _exterior_intervals(d, box, center[None, :], dirs)
    lo, hi = lo[0], hi[0]
    nu = 1.0 if decay is None else max(q * decay - n, 0.25)
    tn, tw = np.polynomial.legendre.leggauss(64)
    total = 0.0
    for i in range(dirs.shape[0]):
        for a, b in zip(lo[i], hi[i]):
            if not np.isfinite(a):
                continue
            t0 = 0.0 if np.isinf(b) else (a / b) ** nu
            t = t0 + 0.5 * (1.0 - t0) * (tn + 1.0)
            r = a * t ** (-1.0 / nu)
            jac = a / nu * t ** (-1.0 / nu - 1.0)
            vals = np.abs(f(center[None, :] + r[:, None] * dirs[i][None, :])) ** q
            total += w[i] * 0.5 * (1.0 - t0) * np.sum(tw * vals * r ** (n - 1) * jac)
    return total


# ---------------------------------------------------------------- form

def grid_box(grid):
    return Box(tuple(grid.lo), tuple(grid.hi))


class RegionalForm:
    """The discrete quadratic form of I_d on one grid.

    ``apply(u)`` returns g with g_i = 2 h^n sum_j K_ij (u_i - u_j) + 2 u_i P_i,
    where P_i is the kernel mass of d outside the grid box. Then
    I_d[u] = h^n sum_i u_i g_i and g is the discrete counterpart of the
    principal-value operator 2 int_d (u(x) - u(y)) |x-y|^{-n-2 sigma} dy.
    """

    def __init__(self, p, grid, d, ndirs=None, near=NEAR_RANGE):
        if grid.n != p.n or d.n != p.n:
            raise FormError("grid, domain and parameters disagree on the dimension")
        self.p, self.grid, self.d = p, grid, d
        self.h = grid.h
        self.ndirs = ndirs
        nodes = grid.nodes()
        self.mask = d.contains(nodes)
        self.kfft = _kernel_fft(p.n, p.sigma, tuple(grid.shape), near)
        m = self.mask.astype(float)
        self.Wm = convolve(self.kfft, m)
        self.box = grid_box(grid)
        P = np.zeros(grid.shape)
        if self.mask.any():
            P[self.mask] = exterior_potential(p, nodes[self.mask], d, self.box, ndirs)
        self.P = P
        self._nodes = nodes

    @property
    def nodes(self):
        return self._nodes

    def apply(self, u):
        m = self.mask
        um = np.where(m, u, 0.0)
        s = self.p.sigma
        g = 2.0 * self.h ** (-2 * s) * (um * self.Wm - convolve(self.kfft, um)) + 2.0 * um * self.P
        return np.where(m, g, 0.0)

    def energy(self, u):
        return self.h ** self.p.n * float(np.sum(np.where(self.mask, u, 0.0) * self.apply(u)))

    def lp_power(self, u, q):
        return self.h ** self.p.n * float(np.sum(np.abs(np.where(self.mask, u, 0.0)) ** q))

    def bilinear(self, u, v):
        """Discrete counterpart of the polarised form (symmetric by construction)."""
        return self.h ** self.p.n * float(np.sum(np.where(self.mask, v, 0.0) * self.apply(u)))


@lru_cache(maxsize=4)
def regional_form(p, grid, d, ndirs=None):
    return RegionalForm(p, grid, d, ndirs)


# ---------------------------------------------------------------- fields

def _intersect_box(a, b):
    if b is None:
        return np.asarray(a[0], float), np.asarray(a[1], float)
    lo = np.maximum(np.asarray(a[0], float), np.asarray(b[0], float))
    hi = np.minimum(np.asarray(a[1], float), np.asarray(b[1], float))
    return lo, hi


def default_grid(p, f, d, resolution=None):
    """Grid for evaluating f on d: the sample grid, or the support box of f."""
    if isinstance(f, Sampled):
        return f.grid
    if f.support is None:
        raise FormError("an analytic field with unbounded support needs an explicit grid")
    lo, hi = _intersect_box(f.support, d.bounds())
    if np.any(hi <= lo) or not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise FormError("support box and domain do not overlap in a bounded box")
    N = DEFAULT_RESOLUTION[p.n] if resolution is None else int(resolution)
    return cubic_grid(lo, hi, float(np.max(hi - lo)) / N)


def _values(f, grid):
    if isinstance(f, Sampled):
        if f.grid != grid:
            raise FieldError("sampled field lives on a different grid")
        return np.asarray(f.values)
    return f(grid.nodes())


def _needs_tail(f, grid):
    if not isinstance(f, Analytic):
        return False
    if f.support is None:
        return True
    lo, hi = f.support
    return bool(np.any(np.asarray(lo) < np.asarray(grid.lo) - 1e-12)
                or np.any(np.asarray(hi) > np.asarray(grid.hi) + 1e-12))


def _check(p, f, d):
    if f.n != p.n or d.n != p.n:
        raise FormError("field, domain and parameters disagree on the dimension")


def _energy_parts(p, f, d, grid, ndirs=None):
    form = regional_form(p, grid, d, ndirs)
    u = _values(f, grid)
    if not np.all(np.isfinite(u)):
        raise FieldError("non-finite samples")
    g = form.apply(u)
    if _needs_tail(f, grid):
        m = form.mask
        X = np.zeros(grid.shape)
        X[m] = _ray_field_integral(p, f, form.nodes[m], d, form.box, ndirs)
        g = g - 2.0 * np.where(m, X, 0.0)
    E = form.h ** p.n * float(np.sum(np.where(form.mask, u, 0.0) * g))
    return form, u, g, E


def energy(p, f, d, grid=None, resolution=None, ndirs=None):
    """Approximation of I_d[f] on a cell-centred grid."""
    _check(p, f, d)
    grid = default_grid(p, f, d, resolution) if grid is None else grid
    return _energy_parts(p, f, d, grid, ndirs)[3]


def lp_norm(p, f, d, exponent, grid=None, resolution=None, ndirs=None):
    """(int_d |f|^q)^{1/q} by cell quadrature plus a ray-quadrature tail."""
    _check(p, f, d)
    q = float(exponent)
    if q < 1:
        raise FormError("exponent must be >= 1")
    grid = default_grid(p, f, d, resolution) if grid is None else grid
    return _lp_power(p, f, d, q, grid, ndirs) ** (1.0 / q)


def _lp_power(p, f, d, q, grid, ndirs=None):
    mask = d.contains(grid.nodes())
    u = _values(f, grid)
    total = grid.cell_volume * float(np.sum(np.abs(np.where(mask, u, 0.0)) ** q))
    if _needs_tail(f, grid):
        c = 0.5 * (np.asarray(grid.lo) + np.asarray(grid.hi))
        total += _ray_power_integral(p, f, c, d, grid_box(grid), q, f.decay, ndirs)
    return total


def _coarse(f, grid):
    if any(N % 2 for N in grid.shape) or min(grid.shape) < 8:
        return None, None
    cg = Grid(grid.lo, grid.hi, tuple(N // 2 for N in grid.shape))
    if isinstance(f, Sampled):
        v = np.asarray(f.values)
        for a in range(grid.n):
            v = 0.5 * (np.take(v, np.arange(0, v.shape[a], 2), axis=a)
                       + np.take(v, np.arange(1, v.shape[a], 2), axis=a))
        return Sampled(cg, v), cg
    return f, cg


def quotient(p, f, d, grid=None, resolution=None, ndirs=None, estimate=True):
    """Energy over squared critical norm, with a quadrature error estimate.

    The estimate adds the change against the grid with doubled spacing and,
    for analytic fields reaching beyond the grid box, the tail bar
    Q * int_{d outside box} |f|^p (exact for extremals, where the operator
    equals Q f^{p-1}).
    """
    _check(p, f, d)
    grid = default_grid(p, f, d, resolution) if grid is None else grid
    _, _, _, E = _energy_parts(p, f, d, grid, ndirs)
    pc = p.p_crit
    norm = _lp_power(p, f, d, pc, grid, ndirs) ** (1.0 / pc)
    if norm <= 0:
        raise FormError("zero function has no quotient")
    Q = E / norm ** 2
    err = 0.0
    if estimate:
        if _needs_tail(f, grid):
            c = 0.5 * (np.asarray(grid.lo) + np.asarray(grid.hi))
            err += abs(Q) * _ray_power_integral(p, f, c, d, grid_box(grid), pc, f.decay, ndirs)
        fc, cg = _coarse(f, grid)
        if cg is not None:
            err += abs(quotient(p, fc, d, cg, ndirs=ndirs, estimate=False).quotient - Q)
    return QuotientReport(E, norm, Q, err)


# ---------------------------------------------------------------- identities

def kappa(p):
    return constants.kappa(p)


def hardy_defect(p, f, grid=None, resolution=None, ndirs=None):
    """I_{R^n}[f] - I_{R^n_+}[f] - kappa int_{x_n>0} f^2 x_n^{-2 sigma}.

    f must be supported in a box strictly inside the half-space; it is
    evaluated on that box (or the given grid) and extended by zero.
    """
    grid = default_grid(p, f, WholeSpace(p.n), resolution) if grid is None else grid
    if grid.lo[-1] <= 0:
        raise FormError("support touches the boundary of the half-space")
    E_whole = energy(p, f, WholeSpace(p.n), grid, ndirs=ndirs)
    E_half = energy(p, f, HalfSpace(p.n), grid, ndirs=ndirs)
    u = _values(f, grid)
    xn = grid.nodes()[..., -1]
    hardy = constants.kappa(p) * grid.cell_volume * float(np.sum(u * u * xn ** (-2 * p.sigma)))
    return E_whole - E_half - hardy


def localization_defect(p, f, d, partition, grid=None, resolution=None, tol=1e-12):
    """I_d[u] - sum_j I_d[chi_j u] + sum_j <u, (chi_j(x)-chi_j(y))^2 u>.

    The identity holds exactly for any symmetric pair weights, so the
    discrete defect is at rounding level.
    """
    _check(p, f, d)
    grid = default_grid(p, f, d, resolution) if grid is None else grid
    form = regional_form(p, grid, d)
    u = np.where(form.mask, _values(f, grid), 0.0)
    chis = [np.where(form.mask, _values(c, grid), 0.0) for c in partition]
    if not chis:
        raise FormError("empty partition")
    ssum = sum(c * c for c in chis)
    if np.max(np.abs(ssum - 1.0)[form.mask]) > tol:
        raise FormError("partition functions do not satisfy sum chi_j^2 = 1")
    total = form.energy(u)
    h, s, n = form.h, p.sigma, p.n
    for c in chis:
        total -= form.energy(c * u)
        # sum_ij W_ij u_i u_j (c_i - c_j)^2, interior pairs only
        Wu = convolve(form.kfft, u)
        Wcu = convolve(form.kfft, c * u)
        cross = 2.0 * np.sum(c * c * u * Wu) - 2.0 * np.sum(c * u * Wcu)
        total += h ** (n - 2 * s) * cross
    return total


def plancherel_check(p, resolution=None, half_width=7.0):
    """a * I[exp(-|x|^2/2)] against pi^{n/2} Gamma((n+2s)/2)/Gamma(n/2)."""
    from .fields import analytic
    L = half_width
    gauss = analytic("gaussian", lambda x: np.exp(-0.5 * np.sum(x * x, axis=-1)), p.n,
                     support=(np.full(p.n, -L), np.full(p.n, L)))
    N = DEFAULT_RESOLUTION[p.n] if resolution is None else int(resolution)
    grid = Grid(tuple([-L] * p.n), tuple([L] * p.n), tuple([N] * p.n))
    lhs = constants.a_const(p) * energy(p, gauss, WholeSpace(p.n), grid)
    return lhs, constants.plancherel_rhs(p)


# ---------------------------------------------------------------- operator

def apply_regional(p, f, d, x, normalized=False, grid=None, ndirs=None, length_scale=1.0,
                   epsrel=1e-10, angles=256):
    """2 PV int_d (f(x) - f(y)) |x - y|^{-n-2 sigma} dy at the point x.

    Sampled fields use the discrete operator of the energy at the grid node x
    (the exact gradient of the discrete form, whose self-cell moment plays
    the role of the Taylor correction of a symmetric exclusion cell).
    Analytic fields use symmetric second differences in polar coordinates
    around x, which removes the principal value:

        g(x) = int_0^inf r^{-1-2 sigma} int_{S^{n-1}} (2 f(x) - f~(x+r t) - f~(x-r t)) dt dr
               + V_d(x) f(x),

    with f~ = f 1_d. With ``normalized`` the value is multiplied by a_{n,sigma}.
    """
    _check(p, f, d)
    x = np.asarray(x, dtype=float)
    if not bool(d.contains(x)):
        raise DomainError("apply_regional needs x inside d")
    if isinstance(f, Sampled):
        grid = f.grid
        form = regional_form(p, grid, d, ndirs)
        g = form.apply(np.asarray(f.values))
        idx = tuple(int(round((x[a] - grid.lo[a]) / grid.spacing[a] - 0.5)) for a in range(p.n))
        node = grid.nodes()[idx]
        if np.max(np.abs(node - x)) > 1e-9 * max(1.0, grid.h):
            raise FormError("sampled apply_regional needs x at a grid node")
        val = g[idx]
    else:
        val = _apply_analytic(p, f, d, x, length_scale, epsrel, angles, ndirs)
    return val * constants.a_const(p) if normalized else val


def _apply_analytic(p, f, d, x, L, epsrel, angles, ndirs):
    n, s = p.n, p.sigma
    whole = isinstance(d, WholeSpace)
    ux = float(f(x[None, :])[0])

    def ft(y):
        v = f(y)
        return v if whole else np.where(d.contains(y), v, 0.0)

    # half-sphere rules carry twice the weight: each direction also stands
    # for its antipode in the symmetric difference
    if n == 1:
        dirs = np.array([[1.0]])
        w = np.array([2.0])
    elif n == 2:
        phi = np.pi * (np.arange(angles) + 0.5) / angles
        dirs = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        w = np.full(angles, 2 * np.pi / angles)
    else:
        dirs, w = sphere.directions(n, ndirs)

    def inner(r):
        y1 = x[None, :] + r * dirs
        y2 = x[None, :] - r * dirs
        return r ** (-1 - 2 * s) * float(np.dot(w, 2 * ux - ft(y1) - ft(y2)))

    breaks = [0.0] + [L * 2.0 ** k for k in range(-6, 9, 2)]
    if not whole:
        bd = float(d.boundary_distance(x))
        breaks = sorted(set(breaks + [bd]))
    total = 0.0
    with warnings.catch_warnings():
        # epsrel sits near the roundoff floor of the second differences
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for a, b in zip(breaks[:-1], breaks[1:]):
            total += integrate.quad(inner, a, b, epsabs=0, epsrel=epsrel, limit=400)[0]
        total += integrate.quad(inner, breaks[-1], np.inf, epsabs=0, epsrel=epsrel, limit=400)[0]
    if not whole:
        total += domain_potential(p, x, d, ndirs=ndirs) * ux
    return total
