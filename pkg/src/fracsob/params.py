"""Dimension/order pairs and the exponents derived from them."""

from dataclasses import dataclass


class ParamError(ValueError):
    pass


@dataclass(frozen=True)
class FracParams:
    n: int
    sigma: float

    @property
    def p_crit(self):
        """Critical Lebesgue exponent 2n/(n-2 sigma)."""
        return 2.0 * self.n / (self.n - 2.0 * self.sigma)

    @property
    def half_exponent(self):
        """Scaling exponent (n-2 sigma)/2 of the critical rescaling."""
        return 0.5 * (self.n - 2.0 * self.sigma)

    @property
    def el_power(self):
        """Power (n+2 sigma)/(n-2 sigma) on the right of the Euler-Lagrange equation."""
        return (self.n + 2.0 * self.sigma) / (self.n - 2.0 * self.sigma)


def make_params(n, sigma):
    """Validate (n, sigma) and return a FracParams.

    For n = 1 the order must stay below 1/2, otherwise any 0 < sigma < 1 is
    admissible.
    """
    if isinstance(n, bool) or int(n) != n:
        raise ParamError(f"dimension must be an integer, got {n!r}")
    n = int(n)
    sigma = float(sigma)
    if n < 1:
        raise ParamError(f"dimension must be >= 1, got {n}")
    if not 0.0 < sigma < 1.0:
        raise ParamError(f"sigma must lie in (0, 1), got {sigma}")
    if n == 1 and sigma >= 0.5:
        raise ParamError(f"n = 1 requires sigma < 1/2, got {sigma}")
    return FracParams(n, sigma)
