import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracsob import families, forms, lab, reference, solver
from fracsob.domains import Box, HalfBall, HalfSpace, WholeSpace
from fracsob.fields import make_grid
from fracsob.lab import FitError, LabError, ScanResult
from fracsob.params import make_params

P1 = make_params(1, 0.25)
P2 = make_params(2, 0.4)


# ---------------------------------------------------------------- fits

ladders = st.tuples(st.floats(1.5, 4.0), st.floats(1.1, 3.0), st.integers(4, 8))


@given(ladders, st.floats(0.05, 3.0), st.floats(0.01, 100.0))
def test_power_fit_recovers_exponent(lad, a, C):
    start, ratio, k = lad
    x = start * ratio ** np.arange(k)
    slope, icpt, r2, rms = lab.power_fit(list(zip(x, C * x ** -a)))
    assert slope == pytest.approx(-a, abs=1e-9)
    assert icpt == pytest.approx(math.log(C), abs=1e-8)
    assert r2 == pytest.approx(1.0, abs=1e-9)
    exp, q = lab.fit_exponent(list(zip(x, C * x ** -a)))
    assert exp == pytest.approx(-a, abs=1e-9)


@given(ladders, st.floats(-1.0, 1.0))
def test_log_fit_recovers_exponent(lad, a):
    start, ratio, k = lad
    x = start * ratio ** np.arange(k)
    pairs = list(zip(x, x ** a * np.log(x)))
    assert lab.log_corrected_fit(pairs)[0] == pytest.approx(a, abs=1e-9)
    assert lab.compare_models(pairs)["preferred"] == "log"


def test_compare_models_prefers_power_on_power_data():
    x = 2.0 ** np.arange(2, 8)
    m = lab.compare_models(list(zip(x, 3 * x ** -0.4)))
    assert m["preferred"] == "power" and m["power_rms"] < 1e-12


def test_fit_exponent_withholds_poor_fit():
    x = 2.0 ** np.arange(1, 7)
    g = np.array([1.0, 10.0, 1.0, 10.0, 1.0, 10.0])
    exp, q = lab.fit_exponent(list(zip(x, g)))
    assert exp is None and q < lab.MIN_QUALITY


@pytest.mark.parametrize("pairs", [
    [(1, 1), (2, 1), (4, 1)],
    [(1, 1), (2, 1), (3, 1), (5, 1)],
    [(1, 1), (2, -1), (4, 1), (8, 1)],
    [(0, 1), (1, 1), (2, 1), (3, 1)],
])
def test_fit_rejects_bad_input(pairs):
    with pytest.raises(FitError):
        lab.power_fit(pairs)


def test_log_fit_needs_params_above_one():
    with pytest.raises(FitError):
        lab.log_corrected_fit([(0.5, 1), (1, 1), (2, 1), (4, 1)])


# ---------------------------------------------------------------- scan results

def test_scan_result_invariants():
    with pytest.raises(LabError):
        ScanResult("lambda", (1.0, 1.0), (0, 0), (1, 1))
    with pytest.raises(LabError):
        ScanResult("lambda", (1.0, 2.0), (0, 0), (1, 1), fitted_exponent=1.0, fit_quality=0.5)
    r = ScanResult("lambda", (1.0, 2.0, 4.0), (0, 0, 0), (1.0, 0.5, 0.25))
    rf = r.running_fit
    assert math.isnan(rf[0]) and rf[1] == pytest.approx(-1.0) and rf[2] == pytest.approx(-1.0)
    assert len(r.rows()) == 3


@settings(max_examples=20)
@given(st.permutations([1.0, 2.0, 4.0, 8.0, 16.0]))
def test_finish_sorts_ladder(order):
    x = np.array(order)
    r = lab._finish("lambda", x, -x, x ** -0.5)
    assert r.values == (1.0, 2.0, 4.0, 8.0, 16.0)
    assert r.fitted_exponent == pytest.approx(-0.5)
    assert r.quotients == tuple(-v for v in r.values)


# ---------------------------------------------------------------- scans

def test_whole_space_scan_has_no_crossing():
    p = make_params(1, 0.2)
    r = lab.scan_interior(p, WholeSpace(1), [4.0, 8.0, 16.0, 32.0])
    assert r.crossing is None
    assert all(g < 0 for g in r.gaps)


def test_interior_scan_needs_room():
    with pytest.raises(LabError):
        lab.scan_interior(P1, Box((-3.0,), (3.0,)), [4.0, 8.0])


def test_boundary_scan_envelope_stand_in():
    p = make_params(3, 0.6)
    r = lab.scan_boundary(p, HalfBall(3, 4.0), families.envelope(p), [8.0, 16.0, 32.0, 64.0, 128.0, 256.0])
    assert r.crossing is None and r.notes["regime"] == "proven"
    assert all(g > 0 for g in r.gaps)
    assert -r.fitted_exponent == pytest.approx(2 * p.sigma, rel=0.25)


def test_boundary_scan_geometry_checks():
    p = make_params(3, 0.6)
    env = families.envelope(p)
    with pytest.raises(LabError):
        lab.scan_boundary(p, WholeSpace(3), env, [8.0])
    with pytest.raises(LabError):
        lab.scan_boundary(p, HalfSpace(3), env, [8.0])
    with pytest.raises(LabError):
        lab.scan_boundary(p, HalfBall(3, 4.0), families.gaussian(p), [8.0])


def test_boundary_scan_with_solved_profile():
    p = make_params(1, 0.25)
    cfg = solver.SolverConfig(p, HalfSpace(1), make_grid((0.0,), (16.0,), (128,)), max_iter=3000)
    st_ = solver.solve(cfg)
    r = lab.scan_boundary(p, Box((0.0,), (6.0,)), st_, [4.0, 8.0, 16.0, 32.0])
    assert r.notes["regime"] == "exploratory"
    assert r.notes["support_fit_threshold"] == pytest.approx(8.0)
    assert r.notes["below_threshold"] == [4.0]
    assert r.reference == st_.quotient
    assert r.crossing is None or r.crossing >= 8.0


def test_translated_limit_matches_hardy_term():
    w = families.smooth_bump(P1, center=(0.0,), radius=1.0)
    r = lab.translated_limit(P1, w, [2.0, 4.0, 8.0, 16.0])
    assert max(r.notes["hardy_rel_diff"]) < 1e-8
    assert -r.fitted_exponent == pytest.approx(2 * P1.sigma, rel=0.15)
    with pytest.raises(LabError):
        lab.translated_limit(P1, w, [0.5, 2.0])


def test_collapse_scan_preconditions():
    with pytest.raises(LabError):
        lab.collapse_scan(make_params(2, 0.6), Box((-1.0, -1.0), (1.0, 1.0)), [0.1])
    with pytest.raises(LabError):
        lab.collapse_scan(P1, HalfSpace(1), [0.1])


def test_collapse_energy_against_oracle():
    d = Box((-1.0,), (1.0,))
    oracle = lab.collapse_energy_oracle(P1, d, 0.1)
    g = make_grid((-1.0,), (1.0,), (2048,))
    E = forms.energy(P1, families.collapse_profile(P1, d, 0.1), d, g)
    assert E == pytest.approx(oracle, rel=0.01)


# ---------------------------------------------------------------- improved sobolev

def test_heat_max_constant_interior():
    g = make_grid((-8.0,), (8.0,), (512,))
    assert lab.heat_max(np.ones(512), g, 1e-3) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=20)
@given(st.integers(0, 2 ** 31), st.floats(1e-4, 10.0))
def test_heat_max_principle(seed, t):
    g = make_grid((-4.0, -4.0), (4.0, 4.0), (32, 32))
    u = np.random.default_rng(seed).normal(size=g.shape)
    assert lab.heat_max(u, g, t) <= np.max(np.abs(u)) + 1e-12


def test_improved_sobolev_dilation_invariant():
    f = families.gaussian(P1)
    r1 = lab.improved_sobolev_ratio(P1, [f])[0]
    r2 = lab.improved_sobolev_ratio(P1, [families.dilate(P1, f, 2.0)])[0]
    assert r2 == pytest.approx(r1, rel=0.02)
    with pytest.raises(LabError):
        lab.improved_sobolev_ratio(P1, [])


# ---------------------------------------------------------------- straightening

def flat_map(eps=0.1, delta=0.3):
    return lab.StraightenMap(lambda x: 0.0 * x[..., 0], eps, delta, 2, phi_grad=lambda x: 0.0 * x)


def test_straighten_map_inverse():
    m = lab.StraightenMap(lambda x: 0.05 * np.sum(x * x, axis=-1), 0.1, 0.3, 2)
    x = np.random.default_rng(0).uniform(-0.5, 0.5, size=(50, 2))
    assert np.allclose(m.inverse(m.forward(x)), x, atol=1e-15)
    assert m.slope_sup() == pytest.approx(0.0594, abs=1e-6)


def test_graph_potential_flat_is_hardy_weight():
    x = np.array([[0.0, 0.5], [0.3, 1.0]])
    V = lab.graph_complement_potential(P2, lambda y: 0.0 * y[..., 0], x)
    assert np.allclose(V, -forms.kappa(P2) * x[:, 1] ** (-0.8), rtol=1e-8)


def test_straighten_flat_equality():
    v = families.smooth_bump(P2, center=(0.0, 0.15), radius=0.15)
    m = flat_map()
    assert np.all(lab.kernel_distortion(P2, m) < 1e-12)
    lhs, low, high = lab.straighten_check(P2, m, v, resolution=32, C=0.0)
    E = 0.5 * (low + high)
    assert lhs == pytest.approx(E, rel=1e-3)


def test_straighten_rejects_steep_graph():
    v = families.smooth_bump(P2, center=(0.0, 0.15), radius=0.15)
    steep = lab.StraightenMap(lambda x: 2.0 * np.sum(x * x, axis=-1), 0.1, 0.3, 2)
    with pytest.raises(LabError):
        lab.straighten_check(P2, steep, v)


def test_straighten_rejects_large_support():
    v = families.smooth_bump(P2, center=(0.0, 1.0), radius=0.5)
    with pytest.raises(LabError):
        lab.straighten_check(P2, flat_map(), v)


# ---------------------------------------------------------------- green envelope

P3 = make_params(3, 0.6)


@settings(max_examples=30)
@given(st.tuples(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.01, 2)),
       st.tuples(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.01, 2)))
def test_green_envelope_symmetric(x, y):
    if np.linalg.norm(np.subtract(x, y)) < 1e-6:
        return
    a = lab.green_envelope(P3, x, y)
    assert a == pytest.approx(lab.green_envelope(P3, y, x), rel=1e-12)
    assert a > 0


def test_green_envelope_boundary_slope():
    y = (0.0, 0.0, 1.0)
    a = lab.green_envelope(P3, (0.5, 0.0, 1e-4), y)
    b = lab.green_envelope(P3, (0.5, 0.0, 1e-3), y)
    slope = math.log(b / a) / math.log(10.0)
    assert slope == pytest.approx(2 * P3.sigma - 1, abs=1e-3)


def test_green_preconditions():
    with pytest.raises(LabError):
        lab.green_envelope(make_params(3, 0.4), (0, 0, 1.0), (0, 0, 2.0))
    with pytest.raises(LabError):
        lab.green_envelope(P3, (0, 0, -1.0), (0, 0, 2.0))
    with pytest.raises(LabError):
        lab.green_convolution_check(make_params(2, 0.6), [(0.0, 0.5)])
    with pytest.raises(LabError):
        lab.green_convolution_check(P3, [(0.1, 0.0, 0.5)])


def test_green_ratio_converges():
    r16 = lab.green_convolution_check(P3, [(0.0, 0.0, 0.1)], 16)[0]
    r32 = lab.green_convolution_check(P3, [(0.0, 0.0, 0.1)], 32)[0]
    assert r16 == pytest.approx(r32, rel=1e-3)
    assert lab.green_tail_bounds(P3, [(0.0, 0.0, 0.1)])[0] < 1e-6 * r32
