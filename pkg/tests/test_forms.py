import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracsob import families, forms, reference
from fracsob.domains import Ball, Box, DomainError, HalfSpace, WholeSpace
from fracsob.fields import Grid, Sampled, analytic, constant, make_grid
from fracsob.forms import FormError
from fracsob.params import make_params

P1 = make_params(1, 0.25)
P2 = make_params(2, 0.4)


def brute_energy(p, u, h, M=forms.NEAR_RANGE):
    """O(N^2) pair sum h^{n-2s} sum_{i,j} W(i-j) (u_i - u_j)^2 on a box domain."""
    n, s = p.n, p.sigma
    near = forms.near_weights(n, s, M)
    idx = list(np.ndindex(*u.shape))
    total = 0.0
    for i in idx:
        for j in idx:
            k = np.subtract(i, j)
            if not k.any():
                continue
            if np.max(np.abs(k)) <= M:
                w = near[tuple(k + M)]
            else:
                w = float(np.dot(k, k)) ** (-(n + 2 * s) / 2)
            total += w * (u[i] - u[j]) ** 2
    return h ** (n - 2 * s) * total


def box_grid(n, N):
    return make_grid((0.0,) * n, (1.0,) * n, (N,) * n)


arrays1 = st.lists(st.floats(-2, 2), min_size=6, max_size=30).map(np.array)


@given(arrays1)
def test_fft_energy_matches_pair_sum_1d(u):
    g = box_grid(1, u.size)
    d = Box((0.0,), (1.0,))
    E = forms.energy(P1, Sampled(g, u), d, g)
    ref = brute_energy(P1, u, g.h)
    assert E == pytest.approx(ref, rel=1e-9, abs=1e-10)


@settings(max_examples=10)
@given(st.integers(0, 2 ** 31))
def test_fft_energy_matches_pair_sum_2d(seed):
    u = np.random.default_rng(seed).normal(size=(7, 7))
    g = box_grid(2, 7)
    E = forms.energy(P2, Sampled(g, u), Box((0.0, 0.0), (1.0, 1.0)), g)
    assert E == pytest.approx(brute_energy(P2, u, g.h), rel=1e-9)


@given(arrays1, st.floats(-5, 5))
def test_energy_homogeneous_of_degree_two(u, alpha):
    g = box_grid(1, u.size)
    d = HalfSpace(1)
    E1 = forms.energy(P1, Sampled(g, u), d, g)
    E2 = forms.energy(P1, Sampled(g, alpha * u), d, g)
    assert E2 == pytest.approx(alpha * alpha * E1, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("d", [WholeSpace(1), HalfSpace(1), Box((0.2,), (0.7,))],
                         ids=lambda d: type(d).__name__)
@given(u=arrays1)
def test_energy_nonnegative(d, u):
    g = box_grid(1, u.size)
    assert forms.energy(P1, Sampled(g, u), d, g) >= -1e-12


@settings(max_examples=15)
@given(st.integers(0, 2 ** 31))
def test_energy_monotone_in_domain(seed):
    # u vanishes outside the smaller box, so the larger box only adds pairs
    g = make_grid((0.0, 0.0), (2.0, 2.0), (12, 12))
    small = Box((0.5, 0.5), (1.5, 1.5))
    rng = np.random.default_rng(seed)
    u = np.where(small.contains(g.nodes()), rng.normal(size=g.shape), 0.0)
    f = Sampled(g, u)
    E_small = forms.energy(P2, f, small, g)
    E_big = forms.energy(P2, f, Box((0.0, 0.0), (2.0, 2.0)), g)
    E_whole = forms.energy(P2, f, WholeSpace(2), g)
    assert E_small <= E_big + 1e-12 <= E_whole + 2e-12


def test_regional_form_symmetric():
    g = make_grid((-1.0, 0.0), (1.0, 2.0), (16, 16))
    form = forms.RegionalForm(P2, g, HalfSpace(2))
    rng = np.random.default_rng(3)
    u, v = rng.normal(size=g.shape), rng.normal(size=g.shape)
    assert form.bilinear(u, v) == pytest.approx(form.bilinear(v, u), rel=1e-10)
    assert form.bilinear(u, u) == pytest.approx(form.energy(u), rel=1e-12)


def test_constant_has_zero_energy_on_bounded_domain():
    g = make_grid((-1.0, -1.0), (1.0, 1.0), (32, 32))
    assert abs(forms.energy(P2, constant(1.0, 2), Ball((0.0, 0.0), 1.0), g)) < 1e-10


def test_translation_invariance():
    v0 = families.smooth_bump(P2, center=(0.0, 0.0), radius=1.0)
    v1 = families.smooth_bump(P2, center=(1.5, -0.5), radius=1.0)
    g0 = make_grid((-2.0, -2.0), (2.0, 2.0), (64, 64))
    g1 = make_grid((-0.5, -2.5), (3.5, 1.5), (64, 64))
    E0 = forms.energy(P2, v0, Box((-2.0, -2.0), (2.0, 2.0)), g0)
    E1 = forms.energy(P2, v1, Box((-0.5, -2.5), (3.5, 1.5)), g1)
    assert E1 == pytest.approx(E0, rel=1e-9)


def test_hat_energy_against_quadrature_oracle():
    hat = families.hat(P1)
    E = forms.energy(P1, hat, WholeSpace(1), resolution=1024)
    oracle = reference.energy_oracle_1d(lambda x: max(0.0, 1 - abs(x)), 0.25, (-1.0, 1.0), kinks=(0.0,))
    assert E == pytest.approx(oracle, rel=0.02)


def test_bubble_norm_is_one_on_grid():
    for lam in (1.0, 4.0, 16.0):
        g = make_grid((-16.0 / lam,), (16.0 / lam,), (2048,))
        nrm = forms.lp_norm(P1, families.bubble(P1, lam), WholeSpace(1), P1.p_crit, grid=g)
        assert nrm == pytest.approx(1.0, abs=1e-3)


def test_constant_norm_on_disk():
    g = make_grid((-1.0, -1.0), (1.0, 1.0), (256, 256))
    nrm = forms.lp_norm(P2, constant(1.0, 2), Ball((0.0, 0.0), 1.0), 2, grid=g)
    assert nrm == pytest.approx(math.sqrt(math.pi), rel=0.01)


def test_lp_norm_rejects_small_exponent():
    with pytest.raises(FormError):
        forms.lp_norm(P1, families.hat(P1), WholeSpace(1), 0.5)


@pytest.mark.parametrize("lam", [2.0, 5.0])
def test_quotient_invariant_under_critical_rescaling(lam):
    v = families.smooth_bump(P2, center=(0.0, 2.0), radius=1.0)
    q1 = forms.quotient(P2, v, HalfSpace(2), estimate=False).quotient
    q2 = forms.quotient(P2, families.theta_rescale(P2, v, lam), HalfSpace(2), estimate=False).quotient
    assert q2 == pytest.approx(q1, rel=0.01)


def test_quotient_report_consistent():
    r = forms.quotient(P1, families.smooth_bump(P1), Box((-2.0,), (2.0,)))
    assert r.quotient == pytest.approx(r.energy / r.lp_norm ** 2, rel=1e-14)
    assert r.quad_error_estimate >= 0


def test_quotient_of_zero_rejected():
    zero = analytic("zero", lambda x: 0.0 * x[..., 0], 1, support=((-1.0,), (1.0,)))
    with pytest.raises(FormError):
        forms.quotient(P1, zero, WholeSpace(1))


def test_dimension_mismatch_rejected():
    with pytest.raises(FormError):
        forms.energy(P2, families.hat(P1), WholeSpace(2))


# ---------------------------------------------------------------- potentials

def test_domain_potential_interval():
    # -2 * 2 int_4^inf t^{-3/2} dt = -4
    assert forms.domain_potential(P1, (0.0,), Box((-4.0,), (4.0,))) == pytest.approx(-4.0, rel=1e-10)


def test_domain_potential_vanishes_for_ambient():
    assert forms.domain_potential(P2, (0.3, 0.4), WholeSpace(2)) == 0.0
    assert forms.domain_potential(P2, (0.3, 0.4), HalfSpace(2), ambient=HalfSpace(2)) == 0.0


def test_domain_potential_half_space_is_hardy_weight():
    for t in (0.5, 1.0, 2.0):
        V = forms.domain_potential(P2, (0.0, t), HalfSpace(2))
        assert V == pytest.approx(-forms.kappa(P2) * t ** (-0.8), rel=1e-4)


@given(st.floats(0.05, 3.9))
def test_domain_potential_monotone_in_domain(x):
    inner = forms.domain_potential(P1, (x,), Box((0.0,), (4.0,)))
    outer = forms.domain_potential(P1, (x,), Box((-1.0,), (5.0,)))
    assert inner <= outer <= 0


def test_domain_potential_outside_rejected():
    with pytest.raises(DomainError):
        forms.domain_potential(P1, (5.0,), Box((-4.0,), (4.0,)))


# ---------------------------------------------------------------- identities

def test_hardy_defect_zero_field():
    zero = analytic("zero", lambda x: 0.0 * x[..., -1], 1, support=((1.0,), (2.0,)))
    assert forms.hardy_defect(P1, zero) == 0.0


def test_hardy_defect_small_for_bump():
    v = families.smooth_bump(P2, center=(0.0, 2.0), radius=1.0)
    rel = abs(forms.hardy_defect(P2, v)) / forms.energy(P2, v, WholeSpace(2))
    assert rel < 0.02


def test_hardy_defect_rejects_boundary_support():
    with pytest.raises(FormError):
        forms.hardy_defect(P1, families.smooth_bump(P1, center=(0.5,), radius=1.0))


def test_localization_single_partition():
    v = families.smooth_bump(P2, radius=1.0)
    one = constant(1.0, 2)
    g = make_grid((-1.0, -1.0), (1.0, 1.0), (48, 48))
    assert abs(forms.localization_defect(P2, v, WholeSpace(2), [one], grid=g)) < 1e-10


def test_localization_two_pieces():
    v = families.smooth_bump(P1, radius=1.0)
    c = analytic("c", lambda x: np.cos(x[..., 0]), 1)
    s = analytic("s", lambda x: np.sin(x[..., 0]), 1)
    d = Box((-1.0,), (1.0,))
    g = make_grid((-1.0,), (1.0,), (256,))
    rel = abs(forms.localization_defect(P1, v, d, [c, s], grid=g)) / forms.energy(P1, v, d, g)
    assert rel < 1e-10


def test_localization_rejects_bad_partition():
    v = families.smooth_bump(P1, radius=1.0)
    c = constant(math.sqrt(1.1), 1)
    g = make_grid((-1.0,), (1.0,), (64,))
    with pytest.raises(FormError):
        forms.localization_defect(P1, v, WholeSpace(1), [c], grid=g)


@pytest.mark.parametrize("p", [P1, P2], ids=["n1", "n2"])
def test_plancherel_check(p):
    lhs, rhs = forms.plancherel_check(p)
    assert lhs == pytest.approx(rhs, rel=0.01)


# ---------------------------------------------------------------- operator

def test_apply_regional_bubble_euler_lagrange():
    S = reference.reference_quotient(P1)
    U = families.bubble(P1)
    for x in (0.0, 0.7, 1.9):
        g = forms.apply_regional(P1, U, WholeSpace(1), np.array([x]))
        u = float(U(np.array([[x]]))[0])
        assert g == pytest.approx(S * u ** (P1.p_crit - 1), rel=1e-6)


def test_apply_regional_sampled_matches_form_gradient():
    g = make_grid((0.0,), (4.0,), (64,))
    v = Sampled(g, families.smooth_bump(P1, center=(2.0,))(g.nodes()))
    form = forms.RegionalForm(P1, g, HalfSpace(1))
    full = form.apply(v.values)
    x = g.nodes()[20]
    assert forms.apply_regional(P1, v, HalfSpace(1), x) == pytest.approx(full[20], rel=1e-12)
    with pytest.raises(FormError):
        forms.apply_regional(P1, v, HalfSpace(1), x + 0.01)


def test_apply_regional_rejects_outside_point():
    with pytest.raises(DomainError):
        forms.apply_regional(P1, families.hat(P1), HalfSpace(1), np.array([-0.5]))


def test_apply_regional_normalized_scales():
    U = families.bubble(P1)
    x = np.array([0.3])
    raw = forms.apply_regional(P1, U, WholeSpace(1), x)
    from fracsob import constants
    assert forms.apply_regional(P1, U, WholeSpace(1), x, normalized=True) == pytest.approx(
        raw * constants.a_const(P1), rel=1e-12)
