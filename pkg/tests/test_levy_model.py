import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, special

from levylab.errors import DomainError, ParameterError, UnsupportedModelError
from levylab.models import (Kind, LevyModel, char_exponent, check_hypotheses, check_log_growth,
                            levy_density, radial_tail_mass, stable_constant, transition_cdf_tail,
                            transition_density)

STABLE = [LevyModel.alpha_stable(a) for a in (0.5, 1.0, 1.5)]
ALL_1D = STABLE + [LevyModel.tempered_stable(0.5, 1.0), LevyModel.tempered_stable(1.5, 2.0),
                   LevyModel.truncated_stable(1.0, 0.7)]


# --- Lévy density ----------------------------------------------------------


def test_cauchy_density_at_one():
    assert levy_density(LevyModel.alpha_stable(1.0), 1.0) == pytest.approx(1.0 / math.pi, rel=1e-14)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
@pytest.mark.parametrize("xi", [0.5, 1.0, 2.0])
def test_normalization_by_independent_quadrature(alpha, xi):
    # int (1 - cos(xi x)) nu(x) dx over the line, split at 1 to isolate the singularity
    m = LevyModel.alpha_stable(alpha)
    c = m.density_constant
    head, _ = integrate.quad(lambda x: (1 - math.cos(xi * x)) * x ** (-1 - alpha), 0, 1,
                             epsabs=1e-13, limit=200)
    tail_mass = 1.0 / alpha  # int_1^inf x^(-1-alpha)
    osc, _ = integrate.quad(lambda x: x ** (-1 - alpha), 1, math.inf, weight="cos", wvar=xi)
    total = 2 * c * (head + tail_mass - osc)
    assert total == pytest.approx(abs(xi) ** alpha, rel=1e-8)


def test_density_vanishes_at_infinity():
    for m in ALL_1D:
        vals = levy_density(m, np.array([1e2, 1e4, 1e6]))
        assert vals[-1] < 1e-8 and np.all(np.diff(vals) <= 0)


def test_truncated_density_is_zero_beyond_R():
    m = LevyModel.truncated_stable(1.2, 0.5)
    assert levy_density(m, 0.5000001) == 0.0
    assert levy_density(m, 0.49) > 0


@pytest.mark.parametrize("r", [0.0, -1.0])
def test_density_domain_error(r):
    with pytest.raises(DomainError):
        levy_density(LevyModel.alpha_stable(1.0), r)


def test_brownian_has_no_levy_density():
    with pytest.raises(UnsupportedModelError):
        levy_density(LevyModel.brownian(), 1.0)


@given(st.floats(1e-4, 50.0), st.floats(1e-4, 50.0), st.sampled_from(ALL_1D))
def test_density_nonincreasing(r1, r2, model):
    lo, hi = sorted((r1, r2))
    assert levy_density(model, lo) >= levy_density(model, hi)


def test_model_validation():
    with pytest.raises(ParameterError):
        LevyModel.alpha_stable(2.0)
    with pytest.raises(ParameterError):
        LevyModel.tempered_stable(1.0, 0.0)
    with pytest.raises(ParameterError):
        LevyModel.truncated_stable(1.0, -1.0)
    with pytest.raises(ParameterError):
        LevyModel.alpha_stable(1.0, dimension=3)


@pytest.mark.parametrize("model", ALL_1D + [LevyModel.brownian(), LevyModel.alpha_stable(0.7, 2, 2.5)])
def test_model_round_trip(model):
    assert LevyModel.from_dict(model.to_dict()) == model


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_stable_constant_in_two_dimensions(alpha):
    # 2 pi C int_0^inf (1 - J0(r)) r^(-1-alpha) dr = 1, integrated with mpmath
    mpmath.mp.dps = 20
    head = mpmath.quad(lambda r: (1 - mpmath.besselj(0, r)) * r ** (-1 - alpha), [0, 1])
    osc = mpmath.quadosc(lambda r: mpmath.besselj(0, r) * r ** (-1 - alpha), [1, mpmath.inf],
                         period=2 * mpmath.pi)
    radial = float(head + 1 / mpmath.mpf(alpha) - osc)
    # classical closed form of the radial integral; the quadrature confirms it
    closed = math.gamma(1 - alpha / 2) / (alpha * 2 ** alpha * math.gamma(1 + alpha / 2))
    assert radial == pytest.approx(closed, rel=1e-6)
    assert 2 * math.pi * stable_constant(2, alpha) * closed == pytest.approx(1.0, rel=1e-13)


# --- characteristic exponent -------------------------------------------------


def test_exponent_at_zero():
    for m in ALL_1D:
        assert char_exponent(m, 0.0) == 0.0


def test_cauchy_exponent():
    assert char_exponent(LevyModel.alpha_stable(1.0), 2.0) == 2.0


def test_tempered_exponent_against_high_precision_oracle():
    # psi(1) = 2 C int_0^inf (1 - cos x) x^(-3/2) e^(-x) dx, integrated with mpmath
    m = LevyModel.tempered_stable(0.5, 1.0)
    mpmath.mp.dps = 30
    f = lambda x: (1 - mpmath.cos(x)) * x ** mpmath.mpf(-1.5) * mpmath.exp(-x)
    oracle = 2 * m.density_constant * float(mpmath.quad(f, [0, 1, 10, mpmath.inf]))
    assert char_exponent(m, 1.0) == pytest.approx(oracle, rel=1e-8)


def test_truncated_exponent_against_direct_quadrature():
    m = LevyModel.truncated_stable(1.0, 0.7)
    c = m.density_constant
    val, _ = integrate.quad(lambda x: (1 - math.cos(3.0 * x)) * x ** -2.0, 0, 0.7, limit=200)
    assert char_exponent(m, 3.0) == pytest.approx(2 * c * val, rel=1e-8)


def test_two_dimensional_tempered_exponent_matches_radial_quadrature():
    m = LevyModel.tempered_stable(1.0, 1.0, dimension=2)
    c = m.density_constant
    mpmath.mp.dps = 20
    f = lambda r: (1 - mpmath.besselj(0, 2 * r)) * r ** -2 * mpmath.exp(-r)
    oracle = 2 * math.pi * c * float(mpmath.quad(f, [0, 1, 10, 60]))
    assert char_exponent(m, [2.0, 0.0]) == pytest.approx(oracle, rel=1e-7)
    assert char_exponent(m, [0.0, 2.0]) == pytest.approx(oracle, rel=1e-7)


def test_exponent_nonnegative_and_even_at_random_frequencies():
    rng = np.random.default_rng(5)
    xi = rng.standard_cauchy(1000)
    for m in STABLE + [LevyModel.brownian()]:
        v = char_exponent(m, xi)
        assert np.all(v >= 0)
        assert np.array_equal(v, char_exponent(m, -xi))


def _desingularized_oracle(model, k):
    # int (1 - K(k r)) nu(r) r^(d-1) dr with r = u^2, which removes the endpoint singularity
    d, a = model.dimension, mpmath.mpf(model.alpha)
    upper = model.R if model.R else 80 / model.theta
    damp = (lambda r: mpmath.exp(-model.theta * r)) if model.theta else (lambda r: 1)
    ker = (lambda z: 1 - mpmath.cos(z)) if d == 1 else (lambda z: 1 - mpmath.besselj(0, z))
    f = lambda u: ker(k * u * u) * (u * u) ** (-1 - a) * damp(u * u) * 2 * u
    pts = [mpmath.sqrt(x) for x in mpmath.linspace(0, upper, int(k * upper / 2) + 8)]
    area = 2 if d == 1 else 2 * mpmath.pi
    return float(area * model.density_constant * mpmath.quad(f, pts))


@pytest.mark.parametrize("model", [LevyModel.truncated_stable(1.5, 0.4),
                                   LevyModel.truncated_stable(1.5, 0.4, dimension=2),
                                   LevyModel.tempered_stable(1.5, 2.0, dimension=2)])
@pytest.mark.parametrize("k", [0.3, 31.0])
def test_quadrature_exponent_against_desingularized_oracle(model, k):
    mpmath.mp.dps = 30
    assert char_exponent(model, k) == pytest.approx(_desingularized_oracle(model, k), rel=1e-8)


def test_truncated_exponent_at_many_oscillations():
    # the tail holds a thousand oscillations over (1/k, R)
    m = LevyModel.truncated_stable(1.0, 0.7)
    mpmath.mp.dps = 20
    assert char_exponent(m, 100.0) == pytest.approx(_desingularized_oracle(m, 100.0), rel=1e-8)


@pytest.mark.parametrize("alpha, theta", [(0.5, 1.0), (1.0, 1.0), (1.5, 2.0), (0.999, 1.0)])
def test_tempered_closed_form_matches_quadrature(alpha, theta):
    from levylab.models import _psi_quadrature

    m = LevyModel.tempered_stable(alpha, theta)
    for k in (1e-5, 0.3, 1.0, 1e3, 1e6):
        assert char_exponent(m, k) == pytest.approx(_psi_quadrature(m, k), rel=1e-7)


@pytest.mark.parametrize("model", ALL_1D[3:] + [LevyModel.tempered_stable(1.0, 1.0, dimension=2)])
def test_exponent_is_quadratic_at_small_frequency(model):
    # psi(k) ~ k^2 / (2d) int |x|^2 nu(dx)
    from levylab.models import radial_moment

    d = model.dimension
    m2 = (2 if d == 1 else 2 * math.pi) * radial_moment(model, 0.0, math.inf, d + 1.0)
    for k in (1e-9, 1e-7, 1e-5):
        assert char_exponent(model, k) == pytest.approx(k * k * m2 / (2 * d), rel=1e-6)
    assert char_exponent(model, 1e-300) >= 0


@given(st.floats(-200.0, 200.0), st.sampled_from(ALL_1D[3:]))
def test_quadrature_exponent_nonnegative_and_even(xi, model):
    v = char_exponent(model, xi)
    assert v >= 0
    assert v == char_exponent(model, -xi)


# --- transition density --------------------------------------------------------


@pytest.mark.parametrize("x, expected", [(0.0, 1 / math.pi), (1.0, 1 / (2 * math.pi))])
def test_cauchy_transition_density(x, expected):
    # closed form t / (pi (t^2 + x^2)) at t = 1
    assert transition_density(LevyModel.alpha_stable(1.0), 1.0, x) == pytest.approx(expected, rel=1e-9)


def test_two_dimensional_cauchy_density():
    # t / (2 pi (t^2 + |x|^2)^(3/2))
    m = LevyModel.alpha_stable(1.0, dimension=2)
    for r in (0.0, 0.5, 2.0):
        exact = 1.0 / (2 * math.pi * (1 + r * r) ** 1.5)
        assert transition_density(m, 1.0, [r, 0.0]) == pytest.approx(exact, rel=1e-8)


def test_transition_density_errors():
    with pytest.raises(DomainError):
        transition_density(LevyModel.alpha_stable(1.0), 0.0, 0.0)


@pytest.mark.parametrize("model", STABLE + [LevyModel.tempered_stable(1.5, 2.0)])
def test_transition_density_symmetric_and_unimodal(model):
    xs = np.array([0.0, 0.1, 0.4, 1.0, 3.0])
    vals = np.array([transition_density(model, 0.5, x) for x in xs])
    mirror = np.array([transition_density(model, 0.5, -x) for x in xs])
    assert np.allclose(vals, mirror, rtol=1e-12, atol=0)
    assert np.all(np.diff(vals) <= 0) and np.all(vals > 0)


@pytest.mark.parametrize("model", STABLE)
def test_transition_density_integrates_to_one(model):
    t, L = 1.0, 4.0
    inner, _ = integrate.quad(lambda x: transition_density(model, t, x), 0, L, epsabs=1e-12,
                              epsrel=1e-12, limit=200)
    total = 2 * inner + transition_cdf_tail(model, t, L)
    assert abs(total - 1.0) < 1e-6


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_semigroup_property(alpha):
    m = LevyModel.alpha_stable(alpha)
    s, t, x = 0.4, 0.6, 0.3
    f = lambda y: transition_density(m, s, x - y) * transition_density(m, t, y)
    conv, _ = integrate.quad(f, -math.inf, math.inf, points=None, limit=400, epsabs=1e-10)
    assert conv == pytest.approx(transition_density(m, s + t, x), abs=1e-4)


def test_tail_probability_cauchy():
    # P(|X_1| > L) = 1 - (2/pi) arctan(L)
    for L in (0.5, 2.0):
        exact = 1 - 2 / math.pi * math.atan(L)
        assert transition_cdf_tail(LevyModel.alpha_stable(1.0), 1.0, L) == pytest.approx(exact, abs=1e-9)


def test_transition_density_refuses_failed_log_growth(monkeypatch):
    import levylab.models as models

    failing = models.LogGrowthReport(False, (), (), "forced")
    monkeypatch.setattr(models, "check_log_growth", lambda m: failing)
    with pytest.raises(UnsupportedModelError):
        transition_density(LevyModel.alpha_stable(1.0), 1.0, 0.0)


# --- log growth and hypotheses ------------------------------------------------------


def test_log_growth_examples():
    assert check_log_growth(LevyModel.alpha_stable(0.5)).ok
    assert check_log_growth(LevyModel.brownian()).ok
    rep = check_log_growth(lambda k: math.log1p(abs(k)))
    assert not rep.ok
    assert len(rep.ratios) == len(rep.frequencies) == 17
    assert rep.ratios[-1] == pytest.approx(1.0, abs=0.01)


def test_hypotheses_of_the_zoo():
    for m in ALL_1D + [LevyModel.alpha_stable(1.0, dimension=2)]:
        rep = check_hypotheses(m)
        assert rep.conforming, (m, rep)
    rep = check_hypotheses(LevyModel.brownian())
    assert not rep.conforming and "pure jump" in rep.violations()


def test_tail_mass_monotone_and_infinite_at_zero():
    for m in ALL_1D:
        masses = [radial_tail_mass(m, e) for e in (1.0, 0.1, 1e-3, 1e-6)]
        assert all(b >= a for a, b in zip(masses, masses[1:]))
        assert masses[-1] > 1e3 * masses[0] or m.alpha < 0.6


def test_kind_values():
    assert {k.value for k in Kind} == {"alpha_stable", "tempered_stable", "truncated_stable",
                                       "brownian_reference"}
