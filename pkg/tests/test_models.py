import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curveq.errors import DomainError, NotAttainableError, UnsupportedModelError
from curveq.models import DoseRange, Family, ModelSpec, evaluate, gradient, inverse
from curveq.scenarios import scenario1

EMAX = ModelSpec("emax")
LINEAR = ModelSpec("linear")


@pytest.mark.parametrize(
    "family, theta, d, expected",
    [
        ("emax", (1, 9.70, 6.70), 4.0, 1 + 9.70 * 4 / 10.70),
        ("linear", (0, 1), 2.0, 2.0),
        ("emax", (0.03, -5.17, 7.94), 0.0, 0.03),
        ("quadratic", (9, -11, 3), 2.0, -1.0),
        ("logistic", (0, 2, 1, 0.5), 1.0, 1.0),
        ("exponential", (1, 2, 1), 0.0, 1.0),
    ],
)
def test_evaluate_examples(family, theta, d, expected):
    assert evaluate(family, theta, d) == pytest.approx(expected, abs=1e-12)


def test_emax_top_dose_matches_rounded_value():
    assert round(EMAX.evaluate((1, 9.70, 6.70), 4.0), 2) == 4.63
    assert abs(EMAX.evaluate((1, 9.70, 6.70), 4.0) - 4.62) < 0.01


def test_emax_gradient_example():
    np.testing.assert_allclose(EMAX.gradient((0, 1, 1), 1.0), [1.0, 0.5, -0.25])


@pytest.mark.parametrize("d", [0.0, 0.5, 7.0])
def test_linear_gradient_is_design_row(d):
    np.testing.assert_array_equal(LINEAR.gradient((3.0, -2.0), d), [1.0, d])


def test_vector_shapes():
    d = np.linspace(0, 4, 7)
    assert EMAX.evaluate((1, 4, 2), d).shape == (7,)
    assert EMAX.gradient((1, 4, 2), d).shape == (7, 3)
    assert isinstance(EMAX.evaluate((1, 4, 2), 1.0), float)


def test_emax_pole_is_domain_error():
    with pytest.raises(DomainError):
        EMAX.evaluate((0, 1, -2), 2.0)


def test_wrong_parameter_length():
    with pytest.raises(DomainError):
        EMAX.evaluate((0, 1), 1.0)


def test_unknown_family():
    with pytest.raises(UnsupportedModelError):
        ModelSpec("hill")


@pytest.mark.parametrize(
    "family, theta, y, d",
    [("emax", (1, 4, 2), 2.6, 4 / 3), ("linear", (1, 0.8), 3.4, 3.0)],
)
def test_inverse_closed_form(family, theta, y, d):
    assert inverse(family, theta, y) == pytest.approx(d, rel=1e-12)


def test_inverse_at_asymptote_not_attainable():
    with pytest.raises(NotAttainableError):
        EMAX.inverse((1, 4, 2), 5.0)


def test_inverse_wrong_side_of_placebo():
    with pytest.raises(NotAttainableError):
        EMAX.inverse((1, 4, 2), 0.5)


def test_inverse_non_monotone_quadratic():
    with pytest.raises(UnsupportedModelError):
        ModelSpec("quadratic").inverse((9, -11, 3), 0.0, upper=3.0)


def test_inverse_gradient_matches_finite_difference():
    theta = np.array([1.0, 4.0, 2.0])
    g = EMAX.inverse_gradient(theta, 2.6)
    h = 1e-6
    fd = [
        (EMAX.inverse(theta + h * e, 2.6) - EMAX.inverse(theta - h * e, 2.6)) / (2 * h)
        for e in np.eye(3)
    ]
    np.testing.assert_allclose(g, fd, rtol=1e-6)


_THETAS = {
    "linear": st.tuples(st.floats(-5, 5), st.floats(0.1, 5)),
    "emax": st.tuples(st.floats(-5, 5), st.floats(0.1, 10), st.floats(0.05, 10)),
    "logistic": st.tuples(st.floats(-5, 5), st.floats(0.1, 10), st.floats(-2, 5), st.floats(0.1, 3)),
    "exponential": st.tuples(st.floats(-5, 5), st.floats(0.1, 5), st.floats(0.5, 5)),
}


@settings(max_examples=60, deadline=None)
@given(data=st.data(), family=st.sampled_from(sorted(_THETAS)), frac=st.floats(0.01, 0.95))
def test_inverse_round_trip(data, family, frac):
    theta = data.draw(_THETAS[family])
    spec = ModelSpec(family)
    y0 = spec.evaluate(theta, 0.0)
    y = y0 + frac * (spec.evaluate(theta, 4.0) - y0)
    d = spec.inverse(theta, y)
    assert abs(spec.evaluate(theta, d) - y) <= 1e-10 * max(1.0, abs(y))


@settings(max_examples=80, deadline=None)
@given(data=st.data(), family=st.sampled_from(sorted(_THETAS)), d=st.floats(0, 4))
def test_gradient_matches_central_difference(data, family, d):
    theta = np.asarray(data.draw(_THETAS[family]), dtype=float)
    spec = ModelSpec(family)
    g = spec.gradient(theta, d)
    fd = np.empty_like(theta)
    for j in range(theta.size):
        h = 1e-6 * max(1.0, abs(theta[j]))
        e = np.zeros_like(theta)
        e[j] = h
        fd[j] = (spec.evaluate(theta + e, d) - spec.evaluate(theta - e, d)) / (2 * h)
    assert np.max(np.abs(g - fd)) <= 1e-5 * max(1.0, np.max(np.abs(g)))


@pytest.mark.parametrize("family", [f.value for f in Family])
def test_dose_derivative_matches_central_difference(family):
    theta = {"linear": (1, 2), "quadratic": (1, 2, -0.3), "emax": (0, 3, 1.5),
             "logistic": (0, 3, 2, 0.7), "exponential": (0, 1, 2)}[family]
    spec = ModelSpec(family)
    d = np.linspace(0.1, 3.9, 9)
    h = 1e-6
    fd = (spec.evaluate(theta, d + h) - spec.evaluate(theta, d - h)) / (2 * h)
    np.testing.assert_allclose(spec.dose_derivative(theta, d), fd, rtol=1e-6, atol=1e-8)


@pytest.mark.parametrize("delta1", [1.0, 2.0, 3.0])
def test_scenario1_algebra(delta1):
    s = scenario1(delta1)
    grid = DoseRange(1, 3, 1001).grid()
    diff = s.model2.evaluate(s.theta2, grid) - s.model1.evaluate(s.theta1, grid)
    # curves meet at the boundary doses and differ most at d = 2
    assert diff[0] == pytest.approx(0, abs=1e-12)
    assert diff[-1] == pytest.approx(0, abs=1e-12)
    assert grid[np.argmax(np.abs(diff))] == pytest.approx(2.0)
    assert np.max(np.abs(diff)) == pytest.approx(delta1)
    assert s.true_max_diff == pytest.approx(delta1, rel=1e-9)


def test_dose_range_grid_and_refinement():
    r = DoseRange(0, 4, 5)
    np.testing.assert_array_equal(r.grid(), [0, 1, 2, 3, 4])
    fine = r.refined(4)
    assert fine.grid_points == 17
    assert set(r.grid()) <= set(fine.grid())
    with pytest.raises(DomainError):
        DoseRange(1, 1)


def test_monotonicity_checks():
    assert EMAX.is_monotone((0, 1, 1))
    assert not EMAX.is_monotone((0, 0, 1))
    assert ModelSpec("quadratic").is_monotone((0, 1, 0.1), upper=4)
    assert not ModelSpec("quadratic").is_monotone((0, 1, -0.5), upper=4)
    assert math.isfinite(ModelSpec("logistic").inverse((0, 2, 1, 0.5), 1.0))
