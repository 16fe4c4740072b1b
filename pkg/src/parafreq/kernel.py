"""Conjugate heat kernel, potential f, drift Laplacian and the Bakry-Emery bound.

K solves dK/dt = -Delta K + R K and concentrates at (x1, t1). The potential is
recovered from K as f = -log K - (n/2) log(4 pi tau), and d(nu) = K dV.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .backgrounds import FlowBackground, Kind
from .errors import KernelNotPositive, NodeSingularity, TimeOutOfWindow
from .spectral import (
    DEFAULT_ORDER,
    FourierField,
    LegendreField,
    WeightedQuadrature,
    build_quadrature,
    jet,
    legendre_jet,
    legendre_tables,
    reference_nodes,
)

DEFAULT_SPHERE_MODES = 64
POLE_GUARD = 1e-8


def _wrap_images(L, tau):
    # omitted images are below exp(-40) relative to the dominant one
    M = 1
    while M * (M + 1) * L * L / (4.0 * tau) <= 40.0:
        M += 1
    return np.arange(-M, M + 1)


@dataclass(frozen=True, eq=False)
class KernelData:
    """The conjugate heat kernel of ``bg`` frozen at time ``t``.

    Evaluators take background nodes (see :mod:`parafreq.spectral`) and return
    nodal arrays; vector and tensor quantities are expressed in an orthonormal
    frame of g(t).
    """

    bg: FlowBackground
    t: float
    tau: float
    spectral_K: FourierField | LegendreField | None = None
    smoothing_eps: float | None = None

    @property
    def scale(self):
        return self.bg.scale(self.t)

    # -- circle helpers
    def _circle_offsets(self, x):
        L = self.bg.circle_length
        y = np.mod(np.asarray(x, float) - self.bg.center[0] + L / 2, L) - L / 2
        return y[:, None] + L * _wrap_images(L, self.tau)[None, :]

    # -- sphere helpers
    def _sphere_derivs(self, x):
        return legendre_jet(self.spectral_K.coeffs, x)

    def K(self, nodes):
        nodes = np.asarray(nodes, float)
        tau = self.tau
        if self.bg.kind is Kind.GAUSSIAN:
            n = self.bg.dim
            r2 = np.sum((nodes.reshape(-1, n) - np.asarray(self.bg.center)) ** 2, axis=1)
            return (4 * np.pi * tau) ** (-n / 2) * np.exp(-r2 / (4 * tau))
        if self.bg.kind is Kind.CIRCLE:
            Y = self._circle_offsets(nodes)
            return np.exp(-(Y**2) / (4 * tau)).sum(axis=1) / math.sqrt(4 * np.pi * tau)
        return legendre_tables(nodes, self.spectral_K.coeffs.size - 1)[0] @ self.spectral_K.coeffs

    def f(self, nodes):
        nodes = np.asarray(nodes, float)
        tau = self.tau
        if self.bg.kind is Kind.GAUSSIAN:
            n = self.bg.dim
            r2 = np.sum((nodes.reshape(-1, n) - np.asarray(self.bg.center)) ** 2, axis=1)
            return r2 / (4 * tau)
        if self.bg.kind is Kind.CIRCLE:
            return -logsumexp(-self._circle_offsets(nodes) ** 2 / (4 * tau), axis=1)
        K = self.K(nodes)
        self.check_positive(K)
        return -np.log(K) - math.log(4 * np.pi * tau)

    def grad_f(self, nodes):
        nodes = np.asarray(nodes, float)
        tau = self.tau
        if self.bg.kind is Kind.GAUSSIAN:
            n = self.bg.dim
            return (nodes.reshape(-1, n) - np.asarray(self.bg.center)) / (2 * tau)
        if self.bg.kind is Kind.CIRCLE:
            Y = self._circle_offsets(nodes)
            p = _softmax(-(Y**2) / (4 * tau))
            return (np.sum(p * Y, axis=1) / (2 * tau))[:, None]
        K, Kx, _ = self._sphere_derivs(nodes)
        self.check_positive(K)
        f_theta = np.sqrt(1 - nodes**2) * Kx / K  # -sin(theta) * f_x with f_x = -Kx/K
        return np.stack([f_theta / math.sqrt(self.scale), np.zeros_like(nodes)], axis=1)

    def hess_f(self, nodes):
        nodes = np.asarray(nodes, float)
        tau = self.tau
        if self.bg.kind is Kind.GAUSSIAN:
            n = self.bg.dim
            N = nodes.reshape(-1, n).shape[0]
            return np.broadcast_to(np.eye(n) / (2 * tau), (N, n, n)).copy()
        if self.bg.kind is Kind.CIRCLE:
            Y = self._circle_offsets(nodes)
            p = _softmax(-(Y**2) / (4 * tau))
            g = Y / (2 * tau)
            var = np.sum(p * g**2, axis=1) - np.sum(p * g, axis=1) ** 2
            return (1 / (2 * tau) - var)[:, None, None]
        K, Kx, Kxx = self._sphere_derivs(nodes)
        self.check_positive(K)
        fx = -Kx / K
        fxx = -Kxx / K + fx**2
        c = self.scale
        out = np.zeros((nodes.size, 2, 2))
        out[:, 0, 0] = ((1 - nodes**2) * fxx - nodes * fx) / c
        out[:, 1, 1] = (-nodes * fx) / c
        return out

    def ric_f(self, nodes):
        h = self.hess_f(nodes)
        if self.bg.kind is Kind.SPHERE:
            h = h + np.eye(2) / self.scale
        return h

    def check_positive(self, K):
        if np.any(~(np.asarray(K) > 0)):
            bad = int(np.sum(~(np.asarray(K) > 0)))
            raise KernelNotPositive(
                f"conjugate heat kernel is non-positive at {bad} node(s) at t={self.t}; "
                "raise the mode count or the smoothing time"
            )


def _softmax(a):
    a = a - a.max(axis=1, keepdims=True)
    e = np.exp(a)
    return e / e.sum(axis=1, keepdims=True)


def _guard(bg, eps_min):
    if eps_min is None:
        eps_min = 1e-3 * (bg.t1 - bg.t0) if bg.t0 is not None else 0.0
    return eps_min


def sphere_kernel_coeffs(bg, t, modes=DEFAULT_SPHERE_MODES):
    """Legendre coefficients of the zonal conjugate heat kernel at time ``t``.

    Starts from the heat-smoothed delta at t_ref = t1 - eps with unit mass and
    propagates each mode backwards in closed form.
    """
    eps = bg.smoothing_eps
    t_ref = bg.t1 - eps
    c_ref = bg.scale(t_ref)
    c_t = bg.scale(t)
    ell = np.arange(modes + 1, dtype=float)
    lam = ell * (ell + 1)
    log_init = np.log(2 * ell + 1) - math.log(4 * np.pi * c_ref) - lam * eps / bg.scale(bg.t1)
    # dK_l/dt = (l(l+1) + 2)/c K_l and int_t^{t_ref} ds/c = (1/2) log(c_t / c_ref)
    log_prop = -(lam + 2) / 2 * math.log(c_t / c_ref)
    return np.exp(log_init + log_prop)


def kernel_at(bg: FlowBackground, t: float, *, modes=None, eps_min=None, check_order=None):
    """KernelData for ``bg`` at ``t``.

    ``modes`` is the sphere truncation; positivity is checked at the nodes of
    the quadrature of order ``check_order`` (default order when omitted).
    """
    bg.validate_time(t)
    tau = bg.tau(t)
    guard = _guard(bg, eps_min)
    if tau <= guard:
        raise TimeOutOfWindow(f"tau={tau} is inside the guard band {guard} below t1")
    if bg.kind is Kind.GAUSSIAN:
        return KernelData(bg, t, tau)
    if bg.kind is Kind.CIRCLE:
        return KernelData(bg, t, tau, spectral_K=circle_kernel_fourier(bg, t))
    if tau < bg.smoothing_eps:
        raise TimeOutOfWindow(
            f"tau={tau} is shorter than the smoothing time {bg.smoothing_eps}"
        )
    modes = DEFAULT_SPHERE_MODES if modes is None else int(modes)
    coeffs = sphere_kernel_coeffs(bg, t, modes)
    kd = KernelData(
        bg, t, tau, spectral_K=LegendreField(bg, coeffs), smoothing_eps=bg.smoothing_eps
    )
    nodes, _ = reference_nodes(bg, t, check_order)
    kd.check_positive(kd.K(nodes))
    return kd


def circle_kernel_fourier(bg, t, tail=1e-17):
    """Fourier representation (1/L) sum_k exp(-xi_k^2 tau) cos(xi_k (x - x1))."""
    tau = bg.tau(t)
    L = bg.circle_length
    kmax = 1
    while math.exp(-((2 * np.pi * kmax / L) ** 2) * tau) > tail:
        kmax += 1
    xi = 2 * np.pi * np.arange(kmax + 1) / L
    amp = 2.0 / L * np.exp(-(xi**2) * tau)
    amp[0] = 1.0 / L
    x1 = bg.center[0]
    return FourierField(bg, np.stack([amp * np.cos(xi * x1), amp * np.sin(xi * x1)], axis=1))


def _where(kd, q):
    if q is None:
        return build_quadrature(kd.bg, kd.t, kernel=kd)
    return q


def drift_apply(kd: KernelData, u):
    """Nodal evaluator of L_f u = Delta u - <grad f, grad u>."""

    def evaluate(nodes):
        J = jet(u, nodes, kd.t)
        pts = nodes.nodes if isinstance(nodes, WeightedQuadrature) else nodes
        return J.lap - np.sum(kd.grad_f(pts) * J.grad, axis=1)

    return evaluate


def self_adjointness_residual(kd: KernelData, u, v, q: WeightedQuadrature | None = None):
    """|int (L_f u) v d(nu) + int <grad u, grad v> d(nu)|."""
    q = _where(kd, q)
    Ju = jet(u, q)
    Jv = jet(v, q)
    Lu = Ju.lap - np.sum(kd.grad_f(q.nodes) * Ju.grad, axis=1)
    return abs(q.integrate(Lu * Jv.value) + q.integrate(np.sum(Ju.grad * Jv.grad, axis=1)))


def bakry_emery_sup(kd: KernelData, nodes=None):
    """2 tau times the largest eigenvalue of Ric_f over the nodes (unclamped)."""
    bg = kd.bg
    if nodes is None:
        nodes, _ = reference_nodes(bg, kd.t)
    nodes = np.asarray(nodes, float)
    if bg.kind is Kind.SPHERE and np.any(np.abs(nodes) > 1 - POLE_GUARD):
        raise NodeSingularity("sphere node within 1e-8 of a pole")
    R = kd.ric_f(nodes)
    top = np.linalg.eigvalsh(R)[:, -1]
    return float(2 * kd.tau * top.max())


def kappa(bg: FlowBackground, t: float, kd: KernelData, nodes=None) -> float:
    """kappa(t) = max(1, 2 tau sup lambda_max(Ric_f))."""
    if bg.kind is Kind.GAUSSIAN:
        # shrinking soliton: Ric_f = g / (2 tau) exactly
        return 1.0
    return max(1.0, bakry_emery_sup(kd, nodes))


__all__ = [
    "DEFAULT_ORDER",
    "DEFAULT_SPHERE_MODES",
    "KernelData",
    "bakry_emery_sup",
    "circle_kernel_fourier",
    "drift_apply",
    "kappa",
    "kernel_at",
    "self_adjointness_residual",
    "sphere_kernel_coeffs",
]
