"""Direction quadratures on S^{n-1} for ray-sliced integrals."""

from functools import lru_cache

import numpy as np

DEFAULT_DIRECTIONS = {1: 2, 2: 512, 3: 48}


@lru_cache(maxsize=None)
def _directions(n, k):
    if n == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if n == 2:
        phi = 2 * np.pi * (np.arange(k) + 0.5) / k
        return np.stack([np.cos(phi), np.sin(phi)], axis=-1), np.full(k, 2 * np.pi / k)
    if n == 3:
        z, wz = np.polynomial.legendre.leggauss(k)
        kphi = 2 * k
        phi = 2 * np.pi * (np.arange(kphi) + 0.5) / kphi
        Z, P = np.meshgrid(z, phi, indexing="ij")
        rho = np.sqrt(1 - Z ** 2)
        dirs = np.stack([rho * np.cos(P), rho * np.sin(P), Z], axis=-1).reshape(-1, 3)
        w = (wz[:, None] * np.full(kphi, 2 * np.pi / kphi)[None, :]).reshape(-1)
        return dirs, w
    raise ValueError(f"no direction rule for n = {n}")


def directions(n, k=None):
    """Unit directions and weights summing to |S^{n-1}|.

    n = 1 uses the two signs, n = 2 a midpoint rule in the angle (spectrally
    accurate for smooth periodic integrands), n = 3 Gauss-Legendre in the
    polar cosine times a uniform azimuthal rule with 2k angles.
    """
    k = DEFAULT_DIRECTIONS[n] if k is None else int(k)
    d, w = _directions(n, k)
    return d.copy(), w.copy()
