"""Kernel normalisations and closed-form reference values."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special


@dataclass(frozen=True)
class KernelConstants:
    a_const: float
    kappa: float


def sphere_area(n):
    """Surface measure of the unit sphere S^{n-1} in R^n."""
    return 2.0 * np.pi ** (n / 2.0) / special.gamma(n / 2.0)


def a_const(p):
    """Normalisation making a * I[u] equal to int |xi|^{2 sigma} |u_hat|^2."""
    n, s = p.n, p.sigma
    return (2.0 ** (2 * s - 1) * np.pi ** (-n / 2.0) * special.gamma((n + 2 * s) / 2.0)
            / abs(special.gamma(-s)))


@lru_cache(maxsize=None)
def _kappa(n, s):
    if n == 1:
        return 1.0 / s
    # x_n^{2s} * 2 int_{y_n<0} |x-y|^{-n-2s} dy with x = e_n: the y_n integral
    # gives 2/(2s) t^{-2s} at t = 1, the transverse part a radial integral.
    f = lambda r: r ** (n - 2) * (1.0 + r * r) ** (-(n + 2 * s) / 2.0)
    radial = integrate.quad(f, 0.0, 1.0, epsabs=0, epsrel=1e-13)[0]
    radial += integrate.quad(f, 1.0, np.inf, epsabs=0, epsrel=1e-13)[0]
    return sphere_area(n - 1) * radial / s


def kappa(p):
    """Hardy constant kappa_{n,sigma} by the transverse reduction integral."""
    return _kappa(p.n, p.sigma)


def kernel_constants(p):
    return KernelConstants(a_const(p), kappa(p))


@lru_cache(maxsize=None)
def _c0(n, s):
    q = 2.0 * n / (n - 2 * s)
    # U_1^q = c0^q (1+r^2)^{-n}; radial quadrature, the infinite piece mapped
    # by quad's own tail transform.
    f = lambda r: r ** (n - 1) * (1.0 + r * r) ** (-n)
    total = integrate.quad(f, 0.0, 1.0, epsabs=0, epsrel=1e-13)[0]
    total += integrate.quad(f, 1.0, np.inf, epsabs=0, epsrel=1e-13)[0]
    total *= sphere_area(n)
    return total ** (-1.0 / q)


def c0(p):
    """Bubble normalisation making ||U_lambda||_{p_crit} = 1."""
    return _c0(p.n, p.sigma)


def plancherel_rhs(p):
    """int |xi|^{2 sigma} exp(-|xi|^2) dxi for the Gaussian exp(-|x|^2/2)."""
    n, s = p.n, p.sigma
    return np.pi ** (n / 2.0) * special.gamma((n + 2 * s) / 2.0) / special.gamma(n / 2.0)


def sharp_constant_fourier(p):
    """Sharp constant of int |xi|^{2s}|u_hat|^2 >= S ||u||_p^2 (Lieb's closed form)."""
    n, s = p.n, p.sigma
    return (2.0 ** (2 * s) * np.pi ** s * special.gamma((n + 2 * s) / 2.0)
            / special.gamma((n - 2 * s) / 2.0)
            * (special.gamma(n / 2.0) / special.gamma(n)) ** (2 * s / n))
