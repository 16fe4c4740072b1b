import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from parafreq.backgrounds import flat_circle, gaussian_soliton, shrinking_sphere
from parafreq.errors import (
    BoundViolation,
    DualFormMismatch,
    MonotonicityViolation,
    NotStationary,
    ZeroSolution,
)
from parafreq.evolve import Amplitude, caloric_combination, caloric_polynomial, solve_heat, solve_perturbed
from parafreq.frequency import (
    I_prime_residual,
    backwards_bound_check,
    cauchy_schwarz_check,
    check_monotone,
    compute_D,
    compute_I,
    compute_U,
    corollary_bound_check,
    corollary_rhs,
    equality_case_residual,
    general_bounds_check,
    hessian_identity_residual,
    log_I_identity_residual,
    moments,
    trace,
)
from parafreq.kernel import kernel_at
from parafreq.randomize import random_solution
from parafreq.spectral import build_quadrature, fourier_field, legendre_field, monomial, poly_field
from parafreq.tolerances import tolerance


@pytest.fixture
def gauss():
    bg = gaussian_soliton(1, t1=0.0)
    return bg, kernel_at(bg, -1.0), build_quadrature(bg, -1.0, 12)


def test_I_D_U_examples(gauss):
    bg, kd, q = gauss
    one, x, v2 = monomial(bg, 0), monomial(bg, 1), poly_field(bg, [-2.0, 0.0, 1.0])
    assert compute_I(one, kd, q) == pytest.approx(1.0, abs=1e-14)
    assert compute_I(x, kd, q) == pytest.approx(2.0, abs=1e-13)
    assert compute_I(v2, kd, q) == pytest.approx(8.0, abs=1e-12)
    assert compute_D(one, kd, q) == 0.0
    assert compute_D(x, kd, q) == pytest.approx(-1.0, abs=1e-14)
    assert compute_D(v2, kd, q) == pytest.approx(-8.0, abs=1e-12)
    assert compute_U(2.0, -1.0) == -0.5
    assert compute_U(compute_I(v2, kd, q), compute_D(v2, kd, q)) == pytest.approx(-1.0, abs=1e-13)
    assert compute_U(1.0, 0.0) == 0.0
    with pytest.raises(ZeroSolution):
        compute_U(0.0, 0.0)


def test_dual_form_mismatch_on_coarse_quadrature():
    bg = gaussian_soliton(1, t1=0.0)
    kd = kernel_at(bg, -1.0)
    u = poly_field(bg, [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1.0])
    with pytest.raises(DualFormMismatch):
        compute_D(u, kd, build_quadrature(bg, -1.0, 4))


def test_circle_mixed_moments_against_theta_oracle():
    # oracle: mpmath quadrature against the theta-function kernel at tau = 1
    bg = flat_circle()
    kd = kernel_at(bg, -1.0)
    q = build_quadrature(bg, -1.0)
    u = fourier_field(bg, [0, 1.0], [0, 0, 0, 0.5])
    m = moments(u, kd, q)
    assert m.I == pytest.approx(0.63415781944436706115, rel=1e-12)
    assert m.grad_sq == pytest.approx(1.6158421805556331708, rel=1e-12)


def test_circle_single_mode_trace_against_oracle():
    bg = flat_circle()
    sol = solve_heat(bg, fourier_field(bg, [0, 0, 1.0]), (-2.0, -1.0))
    tr = trace(sol, 9)
    i = tr.index_of(-1.5)
    # oracle values from mpmath quadrature with the theta-function kernel, tau = 1.5
    assert tr.I[i] == pytest.approx(0.0091578194447128101522, rel=1e-11)
    assert tr.D[i] == pytest.approx(-0.054946916664128220849, rel=1e-11)
    assert tr.kappa[i] == 1.0
    assert tr.U[i] == pytest.approx(-5.9999999995469838547, rel=1e-11)
    assert log_I_identity_residual(tr) <= 1e-5
    assert I_prime_residual(tr) <= 1e-5
    check_monotone(tr)


def test_caloric_trace_is_constant():
    sol = caloric_polynomial(gaussian_soliton(1), (2,), (-2.0, -1.0))
    tr = trace(sol, 16, order=12)
    np.testing.assert_allclose(tr.U, -1.0, atol=1e-9)
    assert np.all(tr.Ecorr == 1.0)
    rep = check_monotone(tr)
    assert abs(rep.lhs) < 1e-12


def test_zero_solution_trace():
    bg = flat_circle()
    with pytest.raises(ZeroSolution):
        trace(solve_heat(bg, fourier_field(bg, [0.0]), (-2.0, -1.0)), 8)


def test_corrupted_trace():
    bg = flat_circle()
    tr = trace(solve_heat(bg, fourier_field(bg, [0, 1.0, 0.5]), (-2.0, -1.0)), 16, derivatives=False)
    U = tr.U.copy()
    U[7] = U[6] - 0.01
    with pytest.raises(MonotonicityViolation) as info:
        check_monotone(tr.with_U(U))
    assert info.value.report.detail["worst_interval"] == [tr.times[6], tr.times[7]]
    assert not check_monotone(tr.with_U(U), raise_on_fail=False).passed


def test_equality_case():
    bg = gaussian_soliton(1)
    for deg in (1, 2):
        sol = caloric_polynomial(bg, (deg,), (-2.0, -1.0))
        tr = trace(sol, 9, order=12)
        kd = kernel_at(bg, -1.0)
        assert equality_case_residual(sol.field_at(-1.0), kd, tr, -1.0) <= 1e-7
    mix = caloric_combination(bg, {(1,): 1.0, (2,): 1.0}, (-2.0, -1.0))
    tr = trace(mix, 9, order=12)
    t = tr.times[4]
    with pytest.raises(NotStationary):
        equality_case_residual(mix.field_at(t), kernel_at(bg, t), tr, t)


def _fd_hessian_sides(u, bg, t, n=4096):
    # oracle: periodic central differences on a dense grid and a Riemann sum
    L = bg.circle_length
    x = np.arange(n) * (L / n)
    h = L / n
    kd = kernel_at(bg, t)
    from parafreq.spectral import synthesize

    v = synthesize(u, x)
    K = kd.K(x)
    f = kd.f(x)
    d1 = (np.roll(v, -1) - np.roll(v, 1)) / (2 * h)
    d2 = (np.roll(v, -1) - 2 * v + np.roll(v, 1)) / h**2
    f1 = (np.roll(f, -1) - np.roll(f, 1)) / (2 * h)
    f2 = (np.roll(f, -1) - 2 * f + np.roll(f, 1)) / h**2
    Lu = d2 - f1 * d1
    w = K * h
    return np.dot(w, d2**2), np.dot(w, Lu**2 - f2 * d1**2)


def test_hessian_identity_examples(gauss):
    bg, kd, q = gauss
    assert hessian_identity_residual(monomial(bg, 1), kd, q) < 1e-14
    assert hessian_identity_residual(monomial(bg, 0, 2.0), kd, q) == 0.0
    c = flat_circle()
    rng = np.random.default_rng(7)
    u = fourier_field(c, rng.normal(size=6), rng.normal(size=6))
    kd = kernel_at(c, -0.7)
    q = build_quadrature(c, -0.7)
    m = moments(u, kd, q)
    lhs, rhs = _fd_hessian_sides(u, c, -0.7)
    assert m.hess_sq == pytest.approx(lhs, rel=1e-5)
    assert m.Lu_sq - m.ric_f == pytest.approx(rhs, rel=1e-5)
    assert hessian_identity_residual(u, kd, q) <= 1e-7


@given(st.integers(0, 2**31 - 1))
def test_hessian_identity_sphere(seed):
    bg = shrinking_sphere()
    u = legendre_field(bg, np.random.default_rng(seed).normal(size=9))
    assert hessian_identity_residual(u, kernel_at(bg, 0.0)) <= 1e-7


def test_log_I_identity_closed_form():
    bg = gaussian_soliton(1)
    tr = trace(caloric_polynomial(bg, (1,), (-2.0, -1.0)), 9, order=12)
    np.testing.assert_allclose(tr.I, 2 * tr.tau, rtol=1e-13)
    np.testing.assert_allclose(tr.logI_fd_prime, -1 / tr.tau, rtol=1e-6)
    assert log_I_identity_residual(tr) <= 1e-5
    tr = trace(caloric_polynomial(bg, (0,), (-2.0, -1.0)), 9, order=12)
    assert log_I_identity_residual(tr) <= 1e-9


def test_backwards_bound_examples():
    bg = gaussian_soliton(1)
    tr = trace(caloric_polynomial(bg, (1,), (-2.0, -1.0)), 65, order=12)
    rep = backwards_bound_check(tr)
    assert tr.I[-1] / tr.I[0] == pytest.approx(0.5, rel=1e-13)
    assert rep.rhs == pytest.approx(0.5 * tr.I[0], rel=1e-8)
    tr = trace(caloric_polynomial(bg, (0,), (-2.0, -1.0)), 9, order=12)
    assert backwards_bound_check(tr).lhs == pytest.approx(1.0)
    c = flat_circle()
    tr = trace(solve_heat(c, fourier_field(c, [0.2, 1.0, 0.0, 0.5]), (-2.0, -1.0)), 33)
    rep = backwards_bound_check(tr)
    assert rep.margin > 0 and rep.detail["ratio"] > 1.0


def test_backwards_bound_violation():
    c = flat_circle()
    tr = trace(solve_heat(c, fourier_field(c, [0.2, 1.0]), (-2.0, -1.0)), 9)
    bad = replace(tr, I=np.r_[tr.I[:-1], 1e-9 * tr.I[-1]])
    with pytest.raises(BoundViolation):
        backwards_bound_check(bad)


@pytest.mark.parametrize(
    "alpha,beta",
    [(0.0, 0.0), (0.0, Amplitude(0.1)), (Amplitude(0.2, "sin"), 0.0), (Amplitude(0.3), Amplitude(0.3, "cos"))],
)
def test_general_and_corollary_bounds(alpha, beta):
    c = flat_circle()
    u0 = fourier_field(c, [0.3, 1.0, -0.5], [0.0, 0.2, 0.4])
    tr = trace(solve_perturbed(c, u0, alpha, beta, (-2.0, -1.0)), 33)
    assert general_bounds_check(tr).passed
    rep = corollary_bound_check(tr)
    assert rep.margin > 0
    if alpha == 0.0 and beta == 0.0:
        back = backwards_bound_check(tr)
        assert rep.rhs == pytest.approx(back.rhs, rel=1e-14)


@given(
    st.floats(1e-3, 10.0),
    st.floats(-5.0, 0.0),
    st.floats(0.1, 5.0),
    st.floats(0.0, 2.0),
    st.floats(0.0, 2.0),
    st.floats(0.0, 3.0),
    st.floats(0.01, 3.0),
)
def test_corollary_rhs_nonincreasing_in_sup_C(I_a, U_a, tau_a, c1, dc, int_C2, J):
    lo = corollary_rhs(I_a, U_a, tau_a, c1, int_C2, J, 1.0)
    hi = corollary_rhs(I_a, U_a, tau_a, c1 + dc, int_C2, J, 1.0)
    assert hi <= lo * (1 + 1e-12)


@given(st.integers(0, 2**31 - 1))
def test_trace_invariants(seed):
    rng = np.random.default_rng(seed)
    for bg in (flat_circle(), shrinking_sphere()):
        tr = trace(random_solution(bg, rng, modes=4), 12)
        assert tr.Ecorr[0] == 1.0
        assert np.all(tr.U <= 1e-10)
        assert np.all(tr.I > 0)
        cauchy_schwarz_check(tr)
        check_monotone(tr)
        assert I_prime_residual(tr) <= 1e-5


def test_strict_monotonicity_for_mixtures():
    bg = gaussian_soliton(1)
    tr = trace(caloric_combination(bg, {(1,): 1.0, (3,): 0.2}, (-2.0, -1.0)), 16, order=12)
    assert np.min(np.diff(tr.U)) > 0


def test_sphere_trace_records_sign_convention():
    bg = shrinking_sphere()
    tr = trace(solve_heat(bg, legendre_field(bg, [0.1, 1.0, 0.3]), (-1.0, 0.5)), 9)
    assert np.any(tr.kappa > 1.0)
    assert tr.notes and "exp(+int_a^t (1-kappa)/tau)" in tr.notes[0]
    assert np.all(np.diff(tr.Ecorr) < 0)


def test_trace_determinism():
    c = flat_circle()
    sol = solve_heat(c, fourier_field(c, [0.3, 1.0, 0.5]), (-2.0, -1.0))
    a, b, p = trace(sol, 12), trace(sol, 12), trace(sol, 12, parallel=True)
    for name in ("I", "D", "U", "U_fd_prime"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
        np.testing.assert_array_equal(getattr(a, name), getattr(p, name))


def test_tolerance_scale(monkeypatch):
    monkeypatch.setenv("PARAFREQ_TOLERANCE_SCALE", "10")
    assert tolerance("monotone") == pytest.approx(1e-7)
    monkeypatch.setenv("PARAFREQ_TOLERANCE_SCALE", "-1")
    with pytest.raises(ValueError):
        tolerance("monotone")
    monkeypatch.delenv("PARAFREQ_TOLERANCE_SCALE")
    assert tolerance("monotone") == 1e-8
    assert math.isfinite(tolerance("corollary_bound"))
