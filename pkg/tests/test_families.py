import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracsob import constants, families, forms
from fracsob.domains import Box, HalfSpace, WholeSpace
from fracsob.families import CutoffSpec
from fracsob.fields import FieldError, Sampled, make_grid
from fracsob.params import make_params

P1 = make_params(1, 0.25)
P2 = make_params(2, 0.4)


def test_bubble_peak_value():
    for lam in (1.0, 4.0):
        U = families.bubble(P1, lam)
        assert float(U(np.zeros((1, 1)))[0]) == pytest.approx(math.pi ** -0.25 * lam ** 0.25, rel=1e-12)


@pytest.mark.parametrize("lam", [1.0, 8.0])
def test_bubble_unit_norm(lam):
    g = make_grid((-32.0 / lam,), (32.0 / lam,), (4096,))
    assert forms.lp_norm(P1, families.bubble(P1, lam), WholeSpace(1), P1.p_crit, grid=g) == pytest.approx(1.0, abs=1e-3)


def test_bubble_rejects_bad_scale():
    with pytest.raises(FieldError):
        families.bubble(P1, 0.0)


@given(st.floats(0.0, 3.0))
def test_cutoff_profile_range(r):
    eta = CutoffSpec()
    v = float(families.cutoff_profile(r, eta))
    assert 0.0 <= v <= 1.0
    if r <= eta.r1:
        assert v == 1.0
    if r >= eta.r2:
        assert v == 0.0


def test_cutoff_profile_monotone():
    r = np.linspace(0, 3, 1001)
    assert np.all(np.diff(families.cutoff_profile(r)) <= 0)


def test_cutoff_bubble_support():
    eta = CutoffSpec()
    u = families.cutoff_bubble(P2, 4.0, eta)
    lo, hi = u.support
    assert np.allclose(lo, -eta.r2) and np.allclose(hi, eta.r2)
    x = np.array([[eta.r2 + 0.01, 0.0], [0.0, 0.0]])
    v = u(x)
    assert v[0] == 0.0 and v[1] == pytest.approx(float(families.bubble(P2, 4.0)(x[1:])[0]))


def test_kelvin_is_an_involution():
    rng = np.random.default_rng(0)
    for p in (P1, P2):
        f = families.gaussian(p, center=np.full(p.n, 0.7))
        kk = families.kelvin(p, families.kelvin(p, f))
        y = rng.uniform(-3, 3, size=(100, p.n))
        assert np.allclose(kk(y), f(y), rtol=1e-10, atol=1e-14)


def test_kelvin_preserves_half_space():
    v = families.smooth_bump(P2, center=(0.0, 1.0), radius=0.5)
    k = families.kelvin(P2, v)
    lo, hi = k.support
    assert lo[-1] > 0
    rng = np.random.default_rng(1)
    y = rng.uniform(-3, 3, size=(200, 2))
    y[:, 1] = -np.abs(y[:, 1]) - 1e-3
    assert np.all(k(y) == 0)


def test_kelvin_undefined_at_origin():
    k = families.kelvin(P1, families.hat(P1, center=(2.0,)))
    with pytest.raises(FieldError):
        k(np.zeros((1, 1)))


def test_translated_bump():
    w = families.smooth_bump(P1, center=(0.0,), radius=1.0)
    t = families.translated_bump(P1, w, 3.0)
    assert np.allclose(t.support[0], 2.0) and np.allclose(t.support[1], 4.0)
    assert float(t(np.array([[3.0]]))[0]) == pytest.approx(1.0)
    with pytest.raises(FieldError):
        families.translated_bump(P1, w, 0.5)


def test_collapse_ramp_values():
    t = np.array([0.0, 0.125, 0.5, 0.875, 1.0, 2.0])
    assert np.allclose(families.collapse_ramp(t), [0, 0, 0.5, 1, 1, 1])
    x = np.linspace(-1, 2, 3001)
    v = families.collapse_ramp(x)
    assert np.all(np.diff(v) >= 0)
    assert np.max(np.diff(v) / np.diff(x)) <= 2.0 + 1e-9


def test_collapse_profile():
    d = Box((-1.0,), (1.0,))
    u = families.collapse_profile(P1, d, 0.2)
    assert float(u(np.array([[0.0]]))[0]) == 1.0
    assert float(u(np.array([[0.99]]))[0]) == 0.0
    with pytest.raises(FieldError):
        families.collapse_profile(make_params(2, 0.6), Box((-1.0, -1.0), (1.0, 1.0)), 0.2)
    with pytest.raises(FieldError):
        families.collapse_profile(P1, d, 1.5)


@given(st.floats(0.25, 8.0))
def test_theta_rescale_preserves_critical_norm(lam):
    th = families.smooth_bump(P1, center=(2.0,), radius=1.0)
    r = families.theta_rescale(P1, th, lam)
    n0 = forms.lp_norm(P1, th, HalfSpace(1), P1.p_crit, resolution=256)
    n1 = forms.lp_norm(P1, r, HalfSpace(1), P1.p_crit, resolution=256)
    assert n1 == pytest.approx(n0, rel=1e-9)


def test_theta_rescale_hardy_moment_invariant():
    # int x_n^{-2s} Theta_lam^2 is scale invariant (exact change of variables)
    g = make_grid((0.0,), (8.0,), (800,))
    th = Sampled(g, families.smooth_bump(P1, center=(3.0,), radius=2.0)(g.nodes()))
    lam = 2.0
    r = families.theta_rescale(P1, th, lam)
    m = lambda f: f.grid.cell_volume * float(np.sum(f.values ** 2 * f.grid.nodes()[..., 0] ** -0.5))
    assert m(r) == pytest.approx(m(th), rel=1e-12)


def test_envelope_shape():
    p = make_params(3, 0.6)
    e = families.envelope(p)
    x = np.array([[0.0, 0.0, 0.01], [0.0, 0.0, -1.0], [0.0, 0.0, 100.0]])
    v = e(x)
    assert v[0] == pytest.approx(0.01 ** 0.2 * 1.01 ** -2.2)
    assert v[1] == 0.0
    assert v[2] == pytest.approx(100 ** 0.2 * 101 ** -2.2)


def test_gaussian_hat_two_bump():
    x = np.zeros((1, 2))
    assert float(families.gaussian(P2)(x)[0]) == 1.0
    assert float(families.hat(P2)(x)[0]) == 1.0
    tb = families.two_bump(P2, separation=8.0)
    assert float(tb(np.array([[4.0, 0.0]]))[0]) == pytest.approx(1.0)
    assert float(tb(x)[0]) == 0.0


def test_c0_normalises_bubble_in_three_dimensions():
    p = make_params(3, 0.6)
    assert constants.c0(p) > 0
    from fracsob import reference
    assert reference.bubble_norm(p) == pytest.approx(1.0, rel=1e-10)
