"""Exact-in-time solutions of the (perturbed) heat equation.

* caloric polynomials on the Gaussian soliton,
* per-mode heat propagation on the circle and the zonal sphere,
* the drift/potential family du/dt = Delta u + alpha(t) u_x + beta(t) u on the
  circle, whose defect |(d/dt - Delta) u| is bounded by C(t)(|grad u| + |u|)
  with C = max(|alpha|, |beta|).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .backgrounds import FlowBackground, Kind
from .errors import DegreeTooLarge, UnsupportedBackground
from .spectral import (
    MAX_POLY_DEGREE,
    FourierField,
    LegendreField,
    PolyField,
    _fourier_der,
    zero_like,
)


@dataclass(frozen=True, eq=False)
class HeatSolution:
    bg: FlowBackground
    window: tuple
    generator: str
    evaluator: Callable = field(repr=False)
    C_of_t: Callable = field(repr=False, default=lambda t: 0.0)
    defect: Callable | None = field(repr=False, default=None)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        a, b = map(float, self.window)
        if not a < b:
            raise ValueError(f"empty window [{a}, {b}]")
        if not b < self.bg.t1:
            raise ValueError(f"window end {b} must precede t1={self.bg.t1}")
        object.__setattr__(self, "window", (a, b))

    def field_at(self, t):
        return self.evaluator(t)

    def heat_defect(self, t):
        """(d/dt - Delta) u at time t as a field; zero for exact heat solutions."""
        if self.defect is None:
            return zero_like(self.field_at(t))
        return self.defect(t)


def _default_window(bg, window):
    if window is None:
        return (bg.t1 - 2.0, bg.t1 - 1.0)
    return window


@functools.lru_cache(maxsize=None)
def _heat_table(k):
    # (powers of y, powers of s, integer weights k!/(j!(k-2j)!))
    j = np.arange(k // 2 + 1)
    w = [math.factorial(k) // (math.factorial(i) * math.factorial(k - 2 * i)) for i in j]
    return k - 2 * j, j, np.array(w, dtype=float)


def heat_polynomial_coeffs(k, s):
    """Coefficients in y of v_k(y, s) = sum_j k!/(j!(k-2j)!) y^(k-2j) s^j."""
    ypow, spow, w = _heat_table(k)
    c = np.zeros(k + 1)
    c[ypow] = w * float(s) ** spow
    return c


@functools.lru_cache(maxsize=None)
def _binomials(d):
    return np.array([[math.comb(j, m) for j in range(d + 1)] for m in range(d + 1)], dtype=float)


def _shift(c, x1):
    """Coefficients of p(x - x1) given those of p."""
    if x1 == 0.0:
        return c
    d = c.size - 1
    # out[m] = sum_j c[j] C(j, m) (-x1)^(j - m)
    e = np.arange(d + 1)
    expo = e[None, :] - e[:, None]
    powers = np.where(expo >= 0, (-x1) ** np.maximum(expo, 0), 0.0)
    return (_binomials(d) * powers) @ c


def _caloric_coeffs(bg, degrees, t):
    s = t - bg.t1
    factors = [_shift(heat_polynomial_coeffs(k, s), x1) for k, x1 in zip(degrees, bg.center)]
    out = factors[0]
    for f in factors[1:]:
        out = np.multiply.outer(out, f)
    return out


def _check_caloric(bg, degrees):
    if bg.kind is not Kind.GAUSSIAN:
        raise UnsupportedBackground("caloric polynomials live on the Gaussian soliton")
    degrees = tuple(int(k) for k in degrees)
    if len(degrees) != bg.dim:
        raise ValueError(f"need one degree per axis ({bg.dim}), got {degrees}")
    if min(degrees) < 0:
        raise ValueError("degrees must be non-negative")
    if sum(degrees) > MAX_POLY_DEGREE:
        raise DegreeTooLarge(f"total degree {sum(degrees)} exceeds {MAX_POLY_DEGREE}")
    return degrees


def caloric_polynomial(bg: FlowBackground, degrees, window=None) -> HeatSolution:
    """Tensor product of 1-d heat polynomials centered at (x1, t1).

    Each factor is v_k(x_i - x1_i, t - t1); the product solves the heat
    equation and is a drift-Laplacian eigenfunction at every time.
    """
    if isinstance(degrees, int):
        degrees = (degrees,)
    return caloric_combination(bg, {tuple(degrees): 1.0}, window)


def caloric_combination(bg: FlowBackground, terms, window=None) -> HeatSolution:
    """Linear combination ``{degrees: coefficient}`` of caloric polynomials."""
    terms = {_check_caloric(bg, d): float(c) for d, c in terms.items()}
    width = max(max(d) for d in terms) + 1

    def evaluate(t):
        c = np.zeros((width,) * bg.dim)
        for d, coef in terms.items():
            block = _caloric_coeffs(bg, d, t)
            c[tuple(slice(0, s) for s in block.shape)] += coef * block
        return PolyField(bg, c)

    window = _default_window(bg, window)
    return HeatSolution(bg, window, "caloric", evaluate, params={"terms": terms})


def solve_heat(bg: FlowBackground, u0, window) -> HeatSolution:
    """Exact heat flow of band-limited data given at the window start."""
    a, _ = window
    if bg.kind is Kind.GAUSSIAN:
        raise UnsupportedBackground("use caloric_polynomial on the Gaussian soliton")
    if bg.kind is Kind.CIRCLE:
        if not isinstance(u0, FourierField):
            raise TypeError("circle data must be a FourierField")
        xi2 = u0.wavenumbers() ** 2

        def evaluate(t):
            return FourierField(bg, np.exp(-xi2 * (t - a))[:, None] * u0.coeffs)

    else:
        if not isinstance(u0, LegendreField):
            raise TypeError("sphere data must be a LegendreField")
        ell = np.arange(u0.coeffs.size)
        lam = ell * (ell + 1)
        c_a = bg.scale(a)

        def evaluate(t):
            # int_a^t ds / c(s) = (1/2) log(c(a) / c(t))
            return LegendreField(bg, (bg.scale(t) / c_a) ** (lam / 2) * u0.coeffs)

    return HeatSolution(bg, window, "modes", evaluate, params={"initial": u0.coeffs.tolist()})


@dataclass(frozen=True)
class Amplitude:
    """Time profile ``amp * shape(t)`` with a closed-form antiderivative."""

    amp: float
    shape: str = "constant"

    def __post_init__(self):
        if self.shape not in ("constant", "sin", "cos"):
            raise ValueError(f"unknown amplitude shape {self.shape!r}")

    def __call__(self, t):
        if self.shape == "constant":
            return self.amp * np.ones_like(np.asarray(t, float))[()]
        return self.amp * (np.sin(t) if self.shape == "sin" else np.cos(t))

    def integral(self, a, t):
        if self.shape == "constant":
            return self.amp * (t - a)
        if self.shape == "sin":
            return self.amp * (math.cos(a) - math.cos(t))
        return self.amp * (math.sin(t) - math.sin(a))


def _as_amplitude(g):
    if isinstance(g, Amplitude):
        return g
    if isinstance(g, (int, float)):
        return Amplitude(float(g))
    return _Generic(g)


class _Generic:
    def __init__(self, fn):
        self.fn = fn

    def __call__(self, t):
        return self.fn(t)

    def integral(self, a, t):
        return quad(self.fn, a, t, epsabs=1e-14, epsrel=1e-13)[0]


def solve_perturbed(bg: FlowBackground, u0, alpha, beta, window) -> HeatSolution:
    """Exact solution of du/dt = Delta u + alpha(t) u_x + beta(t) u on the circle.

    ``alpha`` and ``beta`` are numbers, :class:`Amplitude` instances or plain
    callables (integrated numerically).
    """
    if bg.kind is not Kind.CIRCLE:
        raise UnsupportedBackground("perturbed solutions are defined on the circle only")
    if not isinstance(u0, FourierField):
        raise TypeError("circle data must be a FourierField")
    alpha = _as_amplitude(alpha)
    beta = _as_amplitude(beta)
    a, _ = window
    xi = u0.wavenumbers()
    z0 = u0.coeffs[:, 0] - 1j * u0.coeffs[:, 1]

    def evaluate(t):
        growth = -(xi**2) * (t - a) + 1j * xi * alpha.integral(a, t) + beta.integral(a, t)
        z = z0 * np.exp(growth)
        return FourierField(bg, np.stack([z.real, -z.imag], axis=1))

    def defect(t):
        u = evaluate(t)
        return FourierField(bg, alpha(t) * _fourier_der(u.coeffs, xi) + beta(t) * u.coeffs)

    def C_of_t(t):
        return float(max(abs(alpha(t)), abs(beta(t))))

    params = {"alpha": repr(alpha), "beta": repr(beta), "initial": u0.coeffs.tolist()}
    return HeatSolution(bg, window, "perturbed", evaluate, C_of_t, defect, params)
