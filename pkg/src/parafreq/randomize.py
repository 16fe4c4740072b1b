"""Seeded random heat solutions and fields for the property suites."""

from __future__ import annotations

import numpy as np

from .backgrounds import FlowBackground, Kind
from .evolve import HeatSolution, caloric_combination, solve_heat
from .kernel import kernel_at
from .spectral import build_quadrature, fourier_field, legendre_field, poly_field, synthesize

# quadrature order that integrates products of the random Gaussian-side fields exactly
GAUSSIAN_ORDER = 16


def default_window(bg: FlowBackground):
    if bg.kind is Kind.SPHERE:
        return (bg.t1 - 2.0, bg.t1 - 0.5)
    return (bg.t1 - 2.0, bg.t1 - 1.0)


def _degree_tuples(dim, max_total, rng, count):
    out = set()
    while len(out) < count:
        d = tuple(int(x) for x in rng.integers(0, max_total + 1, size=dim))
        if sum(d) <= max_total:
            out.add(d)
    return sorted(out)


def _unit_scale(bg, u, t):
    kd = kernel_at(bg, t)
    order = GAUSSIAN_ORDER if bg.kind is Kind.GAUSSIAN else None
    q = build_quadrature(bg, t, order, kernel=kd)
    return 1.0 / np.sqrt(q.integrate(synthesize(u, q) ** 2))


def random_solution(
    bg: FlowBackground, rng, window=None, max_degree=6, modes=8, normalize=False
) -> HeatSolution:
    """A random heat solution of ``bg`` on ``window``.

    Gaussian: mixture of up to four caloric polynomials of total degree <= max_degree.
    Circle: band-limited data with ``modes`` Fourier modes.
    Sphere: zonal data with ``modes`` Legendre modes.
    With ``normalize`` the solution has unit L^2(d nu) norm at the window start.
    """
    window = default_window(bg) if window is None else window
    a = window[0]
    if bg.kind is Kind.GAUSSIAN:
        count = int(rng.integers(1, 5))
        degrees = _degree_tuples(bg.dim, max_degree, rng, count)
        terms = {d: float(rng.normal()) for d in degrees}
        sol = caloric_combination(bg, terms, window)
        if normalize:
            k = _unit_scale(bg, sol.field_at(a), a)
            sol = caloric_combination(bg, {d: k * c for d, c in terms.items()}, window)
        return sol
    if bg.kind is Kind.CIRCLE:
        u0 = fourier_field(bg, rng.normal(size=modes + 1), rng.normal(size=modes + 1))
    else:
        u0 = legendre_field(bg, rng.normal(size=modes + 1))
    if normalize:
        u0 = type(u0)(bg, u0.coeffs * _unit_scale(bg, u0, a))
    return solve_heat(bg, u0, window)


def _make_field(bg, rng, max_degree, modes):
    if bg.kind is Kind.GAUSSIAN:
        c = np.zeros((max_degree + 1,) * bg.dim)
        for d in _degree_tuples(bg.dim, max_degree, rng, 6):
            c[d] = rng.normal()
        return poly_field(bg, c)
    if bg.kind is Kind.CIRCLE:
        return fourier_field(bg, rng.normal(size=modes + 1), rng.normal(size=modes + 1))
    return legendre_field(bg, rng.normal(size=modes + 1))


def random_field(bg: FlowBackground, rng, t=None, max_degree=6, modes=8):
    """A random (not necessarily caloric) field on ``bg``.

    With ``t`` given the field is scaled to unit norm in L^2(d nu) at that time.
    """
    u = _make_field(bg, rng, max_degree, modes)
    if t is None:
        return u
    return type(u)(bg, u.coeffs * _unit_scale(bg, u, t))
