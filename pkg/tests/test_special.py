import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erfcx

from fracbranch.errors import DomainError, PreconditionError
from fracbranch.grids import GridFunction
from fracbranch.special import caputo_l1, gamma_fn, mittag_leffler

from oracles import caputo_power, ml_quad_mp, ml_series_mp


# --------------------------------------------------------------------------
# gamma

def test_gamma_trivial_values():
    assert gamma_fn(1.0) == 1.0
    assert gamma_fn(5.0) == 24.0
    # closed form sqrt(pi), frozen from an arbitrary-precision evaluation
    assert gamma_fn(0.5) == pytest.approx(1.7724538509055160, rel=1e-15)


def test_gamma_accuracy_against_mpmath():
    xs = np.geomspace(0.1, 50.0, 60)
    for x in xs:
        ref = float(mpmath.gamma(mpmath.mpf(float(x))))
        assert gamma_fn(float(x)) == pytest.approx(ref, rel=1e-13)


@given(st.floats(min_value=0.1, max_value=40.0))
def test_gamma_recurrence(x):
    assert gamma_fn(x + 1.0) == pytest.approx(x * gamma_fn(x), rel=1e-12)


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_gamma_domain_errors(bad):
    with pytest.raises(DomainError):
        gamma_fn(bad)


# --------------------------------------------------------------------------
# Mittag-Leffler

def test_ml_trivial_values():
    assert mittag_leffler(0.7, 0.0) == 1.0
    assert mittag_leffler(1.0, -2.0) == pytest.approx(0.1353352832366127, rel=1e-14)


def test_ml_half_closed_form():
    # E_{1/2}(-1) = e * erfc(1), frozen from the closed form
    assert mittag_leffler(0.5, -1.0) == pytest.approx(0.42758357615580705, rel=1e-12)
    # dense sweep against the scaled-complementary-erfc identity
    for x in np.linspace(-50.0, 5.0, 111):
        ref = float(erfcx(-x))
        assert mittag_leffler(0.5, float(x)) == pytest.approx(ref, rel=1e-10)


def test_ml_reduces_to_exp():
    for x in np.linspace(-30.0, 5.0, 36):
        assert mittag_leffler(1.0, float(x)) == pytest.approx(
            math.exp(x), rel=1e-12
        )


@pytest.mark.parametrize("beta", [0.05, 0.2, 0.4, 0.6, 0.8, 0.9, 0.95])
def test_ml_accuracy_negative_domain(beta):
    for x in (-50.0, -20.0, -10.0, -5.0, -2.5, -1.6, -0.8, -0.2):
        ref = ml_quad_mp(beta, -x)
        assert mittag_leffler(beta, x) == pytest.approx(ref, rel=1e-10), (beta, x)


def test_ml_accuracy_near_one_and_positive():
    for beta, x in [(0.99, -30.0), (0.97, -12.0), (0.999, -0.01), (0.9, 2.0), (0.6, 4.5)]:
        ref = ml_series_mp(beta, x)
        assert mittag_leffler(beta, x) == pytest.approx(ref, rel=1e-10), (beta, x)


@given(
    beta=st.floats(min_value=0.05, max_value=1.0),
    x=st.floats(min_value=-50.0, max_value=0.0),
)
@settings(max_examples=60, deadline=None)
def test_ml_bounds_on_nonpositive_axis(beta, x):
    v = mittag_leffler(beta, x)
    assert 0.0 < v <= 1.0
    assert (v == 1.0) == (x == 0.0)


@pytest.mark.parametrize("beta", [0.1, 0.5, 0.8, 1.0])
def test_ml_monotone_decreasing_in_magnitude(beta):
    xs = np.linspace(-50.0, 0.0, 201)
    vals = [mittag_leffler(beta, float(x)) for x in xs]
    diffs = np.diff(vals)
    assert np.all(diffs >= -1e-13)


@pytest.mark.parametrize("bad_beta", [0.0, -0.3, 1.2, math.nan])
def test_ml_domain_errors(bad_beta):
    with pytest.raises(DomainError):
        mittag_leffler(bad_beta, -1.0)
    with pytest.raises(DomainError):
        mittag_leffler(0.5, math.inf)


# --------------------------------------------------------------------------
# L1 fractional derivative

def test_caputo_constant_is_zero():
    g = GridFunction(np.linspace(0.0, 2.0, 41), np.full(41, 3.25))
    out = caputo_l1(g, 0.4)
    assert np.allclose(out.values, 0.0)
    assert out.t_grid.size == 40


def test_caputo_linear_exact():
    # the scheme integrates piecewise-linear functions exactly
    t = np.linspace(0.0, 1.0, 101)
    out = caputo_l1(GridFunction(t, t), 0.5)
    expected = caputo_power(1.0, 0.5, out.t_grid)
    assert np.allclose(out.values, expected, rtol=1e-12)
    # frozen closed form at t = 1: 1/Gamma(1.5) = 2/sqrt(pi)
    assert out.values[-1] == pytest.approx(1.1283791670955126, rel=1e-12)


@pytest.mark.parametrize("beta", [0.3, 0.5, 0.8])
@pytest.mark.parametrize("p", [1.0, 2.0])
def test_caputo_power_rule_convergence(beta, p):
    def sup_err(n):
        t = np.linspace(0.0, 1.0, n + 1)
        out = caputo_l1(GridFunction(t, t**p), beta)
        mask = out.t_grid >= 0.5
        exact = caputo_power(p, beta, out.t_grid[mask])
        return float(np.max(np.abs(out.values[mask] - exact)))

    if p == 1.0:
        assert sup_err(100) < 1e-12
        return
    e1, e2 = sup_err(100), sup_err(200)
    rate = math.log2(e1 / e2)
    assert rate > (2.0 - beta) - 0.2, (beta, p, rate)


def test_caputo_eigenfunction_residual_shrinks():
    beta = 0.6

    def residual(n):
        t = np.linspace(0.0, 1.0, n + 1)
        f = np.array([mittag_leffler(beta, -float(s) ** beta) for s in t])
        out = caputo_l1(GridFunction(t, f), beta)
        mask = out.t_grid >= 0.5
        return float(np.max(np.abs(out.values[mask] + f[1:][mask])))

    r1, r2, r3 = residual(100), residual(200), residual(400)
    assert r1 > r2 > r3
    assert r3 < 1e-4


def test_caputo_errors():
    t = np.array([0.0, 0.1, 0.3, 0.35])
    with pytest.raises(PreconditionError):
        caputo_l1(GridFunction(t, np.zeros(4)), 0.5)
    g = GridFunction(np.linspace(0, 1, 11), np.zeros(11))
    for bad in (0.0, 1.0, 1.5):
        with pytest.raises(DomainError):
            caputo_l1(g, bad)
    with pytest.raises(PreconditionError):
        caputo_l1("not a grid", 0.5)
