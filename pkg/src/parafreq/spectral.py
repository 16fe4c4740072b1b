"""Spectral fields, weighted quadrature and nodal calculus.

Fields live in the natural basis of their background:

* :class:`PolyField` -- monomial coefficients on R^n, ``coeffs[i, j, k]``
  multiplies ``x**i * y**j * z**k`` (absolute coordinates).
* :class:`FourierField` -- ``coeffs[k] = (a_k, b_k)`` for
  ``a_k cos(xi_k x) + b_k sin(xi_k x)`` with ``xi_k = 2 pi k / L``.
* :class:`LegendreField` -- zonal series ``sum a_l P_l(cos theta)``.

Nodes are background coordinates: points of R^n as an ``(N, n)`` array, angle
x in [0, L) on the circle, and cos(theta) on the sphere.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from numpy.polynomial import hermite as H
from numpy.polynomial import legendre as Leg
from numpy.polynomial import polynomial as P

from .backgrounds import FlowBackground, Kind
from .errors import DegreeTooLarge, ReprMismatch

MAX_POLY_DEGREE = 12
DEFAULT_ORDER = {Kind.GAUSSIAN: 40, Kind.CIRCLE: 256, Kind.SPHERE: 64}


# --------------------------------------------------------------------------
# fields


@dataclass(frozen=True, eq=False)
class PolyField:
    bg: FlowBackground
    coeffs: np.ndarray

    def __post_init__(self):
        if self.bg.kind is not Kind.GAUSSIAN:
            raise ReprMismatch("polynomial fields live on the Gaussian soliton")
        c = np.asarray(self.coeffs, dtype=float)
        n = self.bg.dim
        if c.ndim != n:
            raise ReprMismatch(f"expected a {n}-d coefficient array, got {c.ndim}-d")
        d = max(c.shape) - 1
        c = _pad_to(c, (d + 1,) * n)
        if total_degree(c) > MAX_POLY_DEGREE:
            raise DegreeTooLarge(f"total degree {total_degree(c)} exceeds {MAX_POLY_DEGREE}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self):
        return total_degree(self.coeffs)


@dataclass(frozen=True, eq=False)
class FourierField:
    bg: FlowBackground
    coeffs: np.ndarray

    def __post_init__(self):
        if self.bg.kind is not Kind.CIRCLE:
            raise ReprMismatch("Fourier fields live on the circle")
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        if c.ndim != 2 or c.shape[1] != 2:
            raise ReprMismatch("Fourier coefficients are (cos, sin) pairs per mode")
        c = c.copy()
        c[0, 1] = 0.0
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def truncation(self):
        return self.coeffs.shape[0] - 1

    def wavenumbers(self):
        return 2 * np.pi * np.arange(self.coeffs.shape[0]) / self.bg.circle_length


@dataclass(frozen=True, eq=False)
class LegendreField:
    bg: FlowBackground
    coeffs: np.ndarray

    def __post_init__(self):
        if self.bg.kind is not Kind.SPHERE:
            raise ReprMismatch("Legendre fields live on the sphere")
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=float)).copy()
        if c.ndim != 1:
            raise ReprMismatch("Legendre coefficients are a flat list")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def truncation(self):
        return self.coeffs.shape[0] - 1


SpectralField = PolyField | FourierField | LegendreField


def total_degree(c):
    nz = np.argwhere(c != 0)
    return int(nz.sum(axis=1).max()) if len(nz) else 0


def _pad_to(c, shape):
    if c.shape == tuple(shape):
        return c
    out = np.zeros(shape)
    out[tuple(slice(0, s) for s in c.shape)] = c
    return out


def poly_field(bg, coeffs):
    return PolyField(bg, np.asarray(coeffs, dtype=float))


def monomial(bg, powers, coef=1.0):
    """``coef * prod x_i**powers[i]`` as a PolyField."""
    if isinstance(powers, int):
        powers = (powers,)
    d = max(max(powers), 0)
    c = np.zeros((d + 1,) * bg.dim)
    c[tuple(powers)] = coef
    return PolyField(bg, c)


def fourier_field(bg, cos=(), sin=()):
    """Build a FourierField from cosine and sine coefficient lists (mode 0 first)."""
    n = max(len(cos), len(sin), 1)
    c = np.zeros((n, 2))
    c[: len(cos), 0] = cos
    c[: len(sin), 1] = sin
    return FourierField(bg, c)


def legendre_field(bg, coeffs):
    return LegendreField(bg, coeffs)


def zero_like(u):
    return type(u)(u.bg, np.zeros_like(u.coeffs))


# --------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True, eq=False)
class WeightedQuadrature:
    """Nodes and positive weights integrating against d(nu) at time t.

    ``axes`` is set for tensor-product grids (Gaussian soliton); the flattened
    ``nodes`` then follow ``meshgrid(*axes, indexing="ij")`` order.
    """

    bg: FlowBackground
    t: float
    nodes: np.ndarray
    weights: np.ndarray
    order: int
    axes: tuple | None = None

    def integrate(self, values):
        return float(np.dot(self.weights, values))

    @functools.cached_property
    def poly_tables(self):
        if self.axes is not None:
            return tuple(_axis_tables(x) for x in self.axes), True
        pts = np.asarray(self.nodes, float)
        pts = pts.reshape(pts.shape[0], -1)
        return tuple(_axis_tables(pts[:, i]) for i in range(pts.shape[1])), False

    @property
    def mass(self):
        return float(self.weights.sum())


@functools.lru_cache(maxsize=64)
def _hermgauss(order):
    y, w = H.hermgauss(order)
    return y, w / math.sqrt(math.pi)


@functools.lru_cache(maxsize=64)
def _leggauss(order):
    return Leg.leggauss(order)


def reference_nodes(bg, t, order=None):
    """Quadrature nodes (without weights) for ``bg`` at time ``t``."""
    order = DEFAULT_ORDER[bg.kind] if order is None else order
    if bg.kind is Kind.GAUSSIAN:
        y, _ = _hermgauss(order)
        s = math.sqrt(4.0 * bg.tau(t))
        axes = tuple(x1 + s * y for x1 in bg.center)
        grid = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grid], axis=1), axes
    if bg.kind is Kind.CIRCLE:
        return np.arange(order) * (bg.circle_length / order), None
    x, _ = _leggauss(order)
    return x, None


def build_quadrature(bg: FlowBackground, t: float, order: int | None = None, kernel=None):
    """Quadrature for d(nu) = K dV at time ``t``.

    ``kernel`` may pass a prebuilt KernelData for the same time to avoid
    recomputing the conjugate heat kernel.
    """
    from .kernel import kernel_at

    order = DEFAULT_ORDER[bg.kind] if order is None else int(order)
    if order < 4:
        raise ValueError("quadrature order must be at least 4")
    bg.validate_time(t)
    nodes, axes = reference_nodes(bg, t, order)
    if bg.kind is Kind.GAUSSIAN:
        _, w = _hermgauss(order)
        weights = functools.reduce(np.multiply.outer, [w] * bg.dim).ravel()
        return WeightedQuadrature(bg, t, nodes, weights, order, axes)
    kd = kernel if kernel is not None else kernel_at(bg, t)
    K = kd.K(nodes)
    kd.check_positive(K)
    if bg.kind is Kind.CIRCLE:
        weights = K * (bg.circle_length / order)
    else:
        _, w = _leggauss(order)
        weights = K * (2 * np.pi * bg.scale(t)) * w
    return WeightedQuadrature(bg, t, nodes, weights, order)


# --------------------------------------------------------------------------
# evaluation and calculus


@functools.lru_cache(maxsize=128)
def _legendre_tables_cached(key, shape, deg):
    x = np.frombuffer(key).reshape(shape)
    V0 = Leg.legvander(x, deg)
    eye = np.eye(deg + 1)
    V1 = Leg.legvander(x, max(deg - 1, 0)) @ Leg.legder(eye)[: max(deg, 1)] if deg else 0 * V0
    V2 = Leg.legvander(x, max(deg - 2, 0)) @ Leg.legder(eye, 2)[: max(deg - 1, 1)] if deg > 1 else 0 * V0
    for V in (V0, V1, V2):
        V.setflags(write=False)
    return V0, V1, V2


def legendre_tables(x, deg):
    """P_l(x), P_l'(x), P_l''(x) for l = 0..deg, cached per node set."""
    x = np.ascontiguousarray(x, dtype=float)
    return _legendre_tables_cached(x.tobytes(), x.shape, int(deg))


def legendre_jet(coeffs, x):
    """Values and first two x-derivatives of a Legendre series at ``x``."""
    V0, V1, V2 = legendre_tables(x, coeffs.size - 1)
    return V0 @ coeffs, V1 @ coeffs, V2 @ coeffs


def _require(u, cls):
    if not isinstance(u, cls):
        raise ReprMismatch(f"expected {cls.__name__}, got {type(u).__name__}")


def _axis_tables(x, d=MAX_POLY_DEGREE):
    """Rows of x**p and its first two derivatives, p = 0..d."""
    V0 = np.vander(np.asarray(x, float), d + 1, increasing=True)
    p = np.arange(1, d + 1, dtype=float)
    V1 = np.zeros_like(V0)
    V1[:, 1:] = V0[:, :-1] * p
    V2 = np.zeros_like(V0)
    V2[:, 2:] = V0[:, :-2] * (p[1:] * p[:-1])
    return V0, V1, V2


def _poly_tables(where, n):
    """Per-axis Vandermonde tables and whether they describe a tensor grid."""
    if isinstance(where, WeightedQuadrature):
        return where.poly_tables
    pts = np.asarray(where, float).reshape(-1, n)
    return tuple(_axis_tables(pts[:, i]) for i in range(n)), False


def _poly_contract(c, tables, grid, orders):
    """Evaluate the mixed derivative of order ``orders`` (one entry per axis)."""
    m = c.shape[0]
    mats = [tab[k][:, :m] for tab, k in zip(tables, orders)]
    if c.ndim == 1:
        return mats[0] @ c
    if grid:
        # out[i, j, ...] = sum V0[i, a] V1[j, b] ... c[a, b, ...] via batched matmuls
        if c.ndim == 2:
            return (mats[0] @ c @ mats[1].T).ravel()
        A = (mats[0] @ c.reshape(m, m * m)).reshape(-1, m, m)
        return (mats[1] @ (A @ mats[2].T)).ravel()
    if c.ndim == 2:
        return np.sum((mats[0] @ c) * mats[1], axis=1)
    r = (mats[0] @ c.reshape(m, -1)).reshape(-1, m, m)
    return np.einsum("pjk,pj,pk->p", r, mats[1], mats[2])


def _poly_eval(c, where, orders=None):
    tables, grid = _poly_tables(where, c.ndim)
    return _poly_contract(c, tables, grid, orders or (0,) * c.ndim)


def _poly_der(c, axis, m=1):
    return _pad_to(P.polyder(c, m=m, axis=axis), c.shape)


def _fourier_eval(c, xi, x):
    ph = np.multiply.outer(np.asarray(x, float), xi)
    return np.cos(ph) @ c[:, 0] + np.sin(ph) @ c[:, 1]


def _fourier_der(c, xi):
    d = np.empty_like(c)
    d[:, 0] = xi * c[:, 1]
    d[:, 1] = -xi * c[:, 0]
    return d


def _nodes_of(where):
    return where.nodes if isinstance(where, WeightedQuadrature) else np.asarray(where, float)


def synthesize(u, nodes):
    """Pointwise values of ``u``; ``nodes`` may also be a WeightedQuadrature."""
    if isinstance(u, PolyField):
        return _poly_eval(u.coeffs, nodes)
    if isinstance(u, FourierField):
        return _fourier_eval(u.coeffs, u.wavenumbers(), _nodes_of(nodes))
    if isinstance(u, LegendreField):
        return legendre_tables(_nodes_of(nodes), u.coeffs.size - 1)[0] @ u.coeffs
    raise ReprMismatch(f"not a spectral field: {type(u).__name__}")


def laplacian(u, t):
    """Delta_{g(t)} u as a field of the same kind."""
    if isinstance(u, PolyField):
        c = u.coeffs
        return PolyField(u.bg, sum(_poly_der(c, i, 2) for i in range(c.ndim)))
    if isinstance(u, FourierField):
        xi = u.wavenumbers()
        return FourierField(u.bg, -(xi**2)[:, None] * u.coeffs)
    if isinstance(u, LegendreField):
        ell = np.arange(u.coeffs.size)
        return LegendreField(u.bg, -ell * (ell + 1) / u.bg.scale(t) * u.coeffs)
    raise ReprMismatch(f"not a spectral field: {type(u).__name__}")


class NodalJet(NamedTuple):
    """Nodal values of a field and its derivatives with respect to g(t).

    ``grad`` holds components in an orthonormal frame of g(t), shape (N, n);
    on the sphere the frame is (e_theta, e_phi).
    """

    value: np.ndarray
    grad: np.ndarray
    lap: np.ndarray
    hess_sq: np.ndarray

    @property
    def grad_sq(self):
        return np.sum(self.grad**2, axis=1)


def jet(u, where, t=None, hessian=True) -> NodalJet:
    """Evaluate ``u``, grad u, Delta u and |Hess u|^2 at nodes.

    ``where`` is a node array or a WeightedQuadrature (whose time is used when
    ``t`` is omitted). With ``hessian=False`` the Hessian norm is left as None,
    which saves the mixed derivatives on R^n.
    """
    if t is None:
        if not isinstance(where, WeightedQuadrature):
            raise ValueError("time is required when evaluating at raw nodes")
        t = where.t
    if isinstance(u, PolyField):
        c = u.coeffs
        n = c.ndim
        tables, grid = _poly_tables(where, n)

        def ev(*orders):
            return _poly_contract(c, tables, grid, orders)

        value = ev(*(0,) * n)
        unit = np.eye(n, dtype=int)
        grad = np.stack([ev(*unit[i]) for i in range(n)], axis=1)
        if not hessian:
            lap = sum(ev(*(2 * unit[i])) for i in range(n))
            return NodalJet(value, grad, lap, None)
        hess = np.empty((value.size, n, n))
        for i in range(n):
            for j in range(i, n):
                hij = ev(*(unit[i] + unit[j]))
                hess[:, i, j] = hij
                hess[:, j, i] = hij
        lap = np.trace(hess, axis1=1, axis2=2)
        return NodalJet(value, grad, lap, np.sum(hess**2, axis=(1, 2)))
    x = _nodes_of(where)
    if isinstance(u, FourierField):
        xi = u.wavenumbers()
        d1 = _fourier_der(u.coeffs, xi)
        d2 = _fourier_der(d1, xi)
        value = _fourier_eval(u.coeffs, xi, x)
        ux = _fourier_eval(d1, xi, x)
        uxx = _fourier_eval(d2, xi, x)
        return NodalJet(value, ux[:, None], uxx, uxx**2)
    if isinstance(u, LegendreField):
        c = u.bg.scale(t)
        value, ux, uxx = legendre_jet(u.coeffs, x)
        s2 = 1.0 - x**2
        u_theta = -np.sqrt(s2) * ux
        h_tt = (s2 * uxx - x * ux) / c
        h_pp = (-x * ux) / c
        grad = np.stack([u_theta / math.sqrt(c), np.zeros_like(x)], axis=1)
        return NodalJet(value, grad, h_tt + h_pp, h_tt**2 + h_pp**2)
    raise ReprMismatch(f"not a spectral field: {type(u).__name__}")


class Derivatives(NamedTuple):
    grad_sq: Callable[[np.ndarray], np.ndarray]
    laplacian: object


def differentiate(u, t) -> Derivatives:
    """|grad u|^2_{g(t)} as a nodal evaluator and Delta_{g(t)} u as a field."""
    if not isinstance(u, (PolyField, FourierField, LegendreField)):
        raise ReprMismatch(f"not a spectral field: {type(u).__name__}")
    return Derivatives(lambda nodes: jet(u, nodes, t).grad_sq, laplacian(u, t))


# --------------------------------------------------------------------------
# analysis (nodal values -> coefficients)


def analysis_nodes(bg, truncation, t=None):
    """Nodes on which :func:`analyze` expects values for a given truncation."""
    if bg.kind is Kind.CIRCLE:
        m = 2 * truncation + 2
        return np.arange(m) * (bg.circle_length / m)
    if bg.kind is Kind.SPHERE:
        return _leggauss(truncation + 1)[0]
    pts = _cheb_points(truncation)
    grid = np.meshgrid(*[pts] * bg.dim, indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=1)


def _cheb_points(d):
    return np.cos(np.pi * (np.arange(d + 1) + 0.5) / (d + 1))


def analyze(bg, values, truncation):
    """Coefficients of the field whose values at ``analysis_nodes`` are given."""
    values = np.asarray(values, float)
    if bg.kind is Kind.CIRCLE:
        m = 2 * truncation + 2
        spec = np.fft.rfft(values.reshape(m)) / m
        c = np.zeros((truncation + 1, 2))
        c[:, 0] = 2 * spec[: truncation + 1].real
        c[:, 1] = -2 * spec[: truncation + 1].imag
        c[0, 0] = spec[0].real
        return FourierField(bg, c)
    if bg.kind is Kind.SPHERE:
        x, w = _leggauss(truncation + 1)
        V = Leg.legvander(x, truncation)
        ell = np.arange(truncation + 1)
        return LegendreField(bg, (2 * ell + 1) / 2 * (V.T @ (w * values)))
    V = P.polyvander(_cheb_points(truncation), truncation)
    Vinv = np.linalg.inv(V)
    c = values.reshape((truncation + 1,) * bg.dim)
    for axis in range(bg.dim):
        c = np.moveaxis(np.tensordot(Vinv, c, axes=([1], [axis])), 0, axis)
    # roundoff can leave dust above the degree cap
    c[np.indices(c.shape).sum(axis=0) > MAX_POLY_DEGREE] = 0.0
    return PolyField(bg, c)
