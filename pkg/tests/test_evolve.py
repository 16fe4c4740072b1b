import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad, solve_ivp

from parafreq.backgrounds import flat_circle, gaussian_soliton, ricci_eigenvalue, shrinking_sphere
from parafreq.errors import DegreeTooLarge, UnsupportedBackground
from parafreq.evolve import (
    Amplitude,
    caloric_combination,
    caloric_polynomial,
    heat_polynomial_coeffs,
    solve_heat,
    solve_perturbed,
)
from parafreq.randomize import random_solution
from parafreq.spectral import fourier_field, jet, laplacian, legendre_field, reference_nodes, synthesize


def test_heat_polynomials():
    np.testing.assert_array_equal(heat_polynomial_coeffs(0, 5.0), [1.0])
    # v_2 = x^2 + 2t, v_3 = x^3 + 6 x t
    np.testing.assert_array_equal(heat_polynomial_coeffs(2, 0.5), [1.0, 0.0, 1.0])
    np.testing.assert_array_equal(heat_polynomial_coeffs(3, -1.0), [0.0, -6.0, 0.0, 1.0])


def _heat_residual(sol, t, x, h):
    ut = (synthesize(sol.field_at(t + h), x) - synthesize(sol.field_at(t - h), x)) / (2 * h)
    return ut - jet(sol.field_at(t), x, t).lap


@pytest.mark.parametrize("degrees", [(0,), (2,), (3,), (5,), (8,), (2, 1), (1, 2, 2), (4, 4, 4)])
def test_caloric_residual(degrees):
    bg = gaussian_soliton(len(degrees), center=0.3)
    sol = caloric_polynomial(bg, degrees)
    t = -1.5
    x, _ = reference_nodes(bg, t, 5)
    res = _heat_residual(sol, t, x, 1e-5)
    # roundoff scale: the polynomial with absolute coefficients at |x|
    u = sol.field_at(t)
    scale = synthesize(type(u)(bg, np.abs(u.coeffs)), np.abs(x))
    assert np.max(np.abs(res) / scale) <= 1e-9


@given(st.integers(0, 2**31 - 1))
def test_mode_residual(seed):
    rng = np.random.default_rng(seed)
    cases = ((flat_circle(), np.linspace(0, 6, 11)), (shrinking_sphere(), np.linspace(-0.95, 0.95, 11)))
    for bg, x in cases:
        sol = random_solution(bg, rng, modes=5)
        a, b = sol.window
        t = 0.5 * (a + b)
        res = _heat_residual(sol, t, x, 1e-5 * (b - a))
        scale = np.sum(np.abs(sol.field_at(t).coeffs))
        assert np.max(np.abs(res)) <= 1e-9 * scale


def test_circle_mode_decay():
    bg = flat_circle()
    sol = solve_heat(bg, fourier_field(bg, [0.0, 1.0]), (-2.0, -1.0))
    assert sol.field_at(-1.0).coeffs[1, 0] == pytest.approx(math.exp(-1.0), rel=1e-15)
    # oracle: adaptive ODE integration of the mode equation a' = -a
    ode = solve_ivp(lambda t, y: -y, (-2.0, -1.0), [1.0], rtol=1e-12, atol=1e-14)
    assert sol.field_at(-1.0).coeffs[1, 0] == pytest.approx(ode.y[0, -1], rel=1e-9)
    const = solve_heat(bg, fourier_field(bg, [2.5]), (-2.0, -1.0))
    assert const.field_at(-1.3).coeffs[0, 0] == 2.5


def test_sphere_mode_decay():
    bg = shrinking_sphere(c0=4.0, t1=1.0)
    sol = solve_heat(bg, legendre_field(bg, [0.0, 1.0]), (-1.0, 0.5))
    ratio = sol.field_at(0.0).coeffs[1]
    assert ratio == pytest.approx(4 / 6, rel=1e-14)
    integral = quad(lambda s: 1 / bg.scale(s), -1.0, 0.0)[0]
    assert ratio == pytest.approx(math.exp(-2 * integral), rel=1e-12)


def test_sphere_gradient_evolution():
    # d/dt |grad u|^2 = 2 Ric(grad u, grad u) + 2 <grad u, grad du/dt>
    bg = shrinking_sphere()
    sol = solve_heat(bg, legendre_field(bg, [0.2, 1.0, -0.5, 0.3]), (-1.0, 0.5))
    t, h = 0.0, 1e-5
    x = np.linspace(-0.9, 0.9, 13)
    g2 = lambda s: jet(sol.field_at(s), x, s).grad_sq  # noqa: E731
    lhs = (g2(t + h) - g2(t - h)) / (2 * h)
    u = sol.field_at(t)
    J = jet(u, x, t)
    J_dot = jet(laplacian(u, t), x, t)
    rhs = 2 * ricci_eigenvalue(bg, t) * J.grad_sq + 2 * np.sum(J.grad * J_dot.grad, axis=1)
    np.testing.assert_allclose(lhs, rhs, atol=1e-6)


def test_perturbed_reductions():
    bg = flat_circle()
    u0 = fourier_field(bg, [0.3, 1.0, 0.0, -0.4], [0.0, 0.5, 0.7])
    w = (-2.0, -1.0)
    plain = solve_heat(bg, u0, w)
    same = solve_perturbed(bg, u0, 0.0, 0.0, w)
    np.testing.assert_allclose(same.field_at(-1.2).coeffs, plain.field_at(-1.2).coeffs, atol=1e-12)

    k, b0 = 2, 0.3
    sol = solve_perturbed(bg, fourier_field(bg, [0, 0, 1.0]), 0.0, b0, w)
    assert sol.field_at(-1.0).coeffs[k, 0] == pytest.approx(math.exp((-(k**2) + b0) * 1.0))

    a0 = 0.4
    sol = solve_perturbed(bg, fourier_field(bg, [0, 0, 1.0]), a0, 0.0, w)
    z = sol.field_at(-1.5).coeffs[k]
    assert math.hypot(*z) == pytest.approx(math.exp(-(k**2) * 0.5))
    assert math.atan2(-z[1], z[0]) == pytest.approx(a0 * k * 0.5)


@given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5), st.sampled_from(["constant", "sin", "cos"]))
def test_perturbed_equation_and_hypothesis(a0, b0, shape):
    bg = flat_circle()
    u0 = fourier_field(bg, [0.1, 1.0, -0.3], [0.0, 0.4, 0.8])
    sol = solve_perturbed(bg, u0, Amplitude(a0, shape), Amplitude(b0, shape), (-2.0, -1.0))
    x = np.linspace(0, 2 * math.pi, 23)
    t, h = -1.4, 1e-5
    J = jet(sol.field_at(t), x, t)
    ut = (synthesize(sol.field_at(t + h), x) - synthesize(sol.field_at(t - h), x)) / (2 * h)
    defect = ut - J.lap
    np.testing.assert_allclose(defect, synthesize(sol.heat_defect(t), x), atol=1e-7)
    exact = synthesize(sol.heat_defect(t), x)
    bound = sol.C_of_t(t) * (np.abs(J.grad[:, 0]) + np.abs(J.value))
    assert np.max(np.abs(exact) - bound) <= 1e-10


def test_generic_callable_amplitude():
    bg = flat_circle()
    u0 = fourier_field(bg, [0, 1.0])
    closed = solve_perturbed(bg, u0, Amplitude(0.2, "sin"), 0.0, (-2.0, -1.0))
    generic = solve_perturbed(bg, u0, lambda t: 0.2 * math.sin(t), 0.0, (-2.0, -1.0))
    np.testing.assert_allclose(closed.field_at(-1.1).coeffs, generic.field_at(-1.1).coeffs, atol=1e-12)


def test_errors():
    with pytest.raises(UnsupportedBackground):
        caloric_polynomial(flat_circle(), (2,))
    with pytest.raises(DegreeTooLarge):
        caloric_polynomial(gaussian_soliton(2), (7, 6))
    with pytest.raises(UnsupportedBackground):
        solve_perturbed(shrinking_sphere(), legendre_field(shrinking_sphere(), [1.0]), 0, 0, (-1, 0))
    with pytest.raises(ValueError):
        caloric_polynomial(gaussian_soliton(), (2,), (-1.0, 0.0))
    with pytest.raises(ValueError):
        Amplitude(1.0, "tan")
    mix = caloric_combination(gaussian_soliton(), {(1,): 1.0, (2,): 1.0})
    assert mix.heat_defect(-1.5).coeffs.sum() == 0.0
