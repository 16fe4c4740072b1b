"""Ornstein-Uhlenbeck operator on the 1-d Gaussian soliton.

L_f u = u'' - (x - x1)/(2 tau) u' has eigenvalues -k/(2 tau), k = 0, 1, ...,
with the Hermite polynomials (rescaled to variance 2 tau) as eigenfunctions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import hermite_e as He
from numpy.polynomial import polynomial as P
from scipy.linalg import eigh

from .backgrounds import Kind, gaussian_soliton
from .errors import DegreeTooLarge, IllConditioned
from .kernel import kernel_at
from .spectral import WeightedQuadrature, build_quadrature

MAX_HERMITE_DEGREE = 20
MAX_GALERKIN_DEGREE = 20
MASS_COND_LIMIT = 1e12


@dataclass(frozen=True)
class HermitePoly:
    """h_k = exp(x^2) D^k exp(-x^2), ascending integer coefficients."""

    k: int
    coeffs: tuple

    def __call__(self, x):
        return P.polyval(np.asarray(x, float), np.array(self.coeffs, dtype=float))

    def derivative(self, m=1):
        c = list(self.coeffs)
        for _ in range(m):
            c = [j * c[j] for j in range(1, len(c))] or [0]
        return c


def hermite(k: int) -> HermitePoly:
    if k < 0:
        raise ValueError("degree must be non-negative")
    if k > MAX_HERMITE_DEGREE:
        raise DegreeTooLarge(f"Hermite degree {k} exceeds {MAX_HERMITE_DEGREE}")
    # h_{k+1} = h_k' - 2x h_k, exact in integers
    h = [1]
    for _ in range(k):
        nxt = [0] * (len(h) + 1)
        for j in range(1, len(h)):
            nxt[j - 1] += j * h[j]
        for j, c in enumerate(h):
            nxt[j + 1] -= 2 * c
        h = nxt
    return HermitePoly(k, tuple(h))


def _int_poly_add(*polys):
    out = [0] * max(len(p) for p in polys)
    for p in polys:
        for j, c in enumerate(p):
            out[j] += c
    return out


def hermite_ode_residual(h: HermitePoly) -> float:
    """Largest coefficient of v'' - 2x v' + 2k v, relative to the largest of v."""
    v = list(h.coeffs)
    d1 = h.derivative(1)
    d2 = h.derivative(2)
    x_d1 = [0] + [-2 * c for c in d1]
    res = _int_poly_add(d2, x_d1, [2 * h.k * c for c in v])
    return max(abs(c) for c in res) / max(abs(c) for c in v)


def _check_gaussian_1d(q: WeightedQuadrature, tau):
    bg = q.bg
    if bg.kind is not Kind.GAUSSIAN or bg.dim != 1:
        raise ValueError("Ornstein-Uhlenbeck checks need a 1-d Gaussian soliton quadrature")
    q_tau = bg.tau(q.t)
    if not math.isclose(q_tau, tau, rel_tol=1e-12):
        raise ValueError(f"quadrature is at tau={q_tau}, not tau={tau}")
    return kernel_at(bg, q.t)


def _l2(q, values):
    return math.sqrt(max(q.integrate(values**2), 0.0))


def ou_eigen_residual(k: int, tau: float, q: WeightedQuadrature) -> float:
    """||L_f p_k + k/(2 tau) p_k|| / ||p_k|| with p_k(x) = h_k((x - x1)/sqrt(4 tau))."""
    kd = _check_gaussian_1d(q, tau)
    h = hermite(k)
    s = math.sqrt(4 * tau)
    x = q.nodes.reshape(-1)
    z = (x - q.bg.center[0]) / s
    c = np.array(h.coeffs, dtype=float)
    p = P.polyval(z, c)
    p1 = P.polyval(z, P.polyder(c)) / s
    p2 = P.polyval(z, P.polyder(c, 2)) / s**2
    Lp = p2 - kd.grad_f(q.nodes)[:, 0] * p1
    return _l2(q, Lp + k / (2 * tau) * p) / _l2(q, p)


def commutator_residual(u_coeffs, tau: float, q: WeightedQuadrature) -> float:
    """||L_f(u') - (L_f u)' - u'/(2 tau)|| in L^2(d nu) for a polynomial u.

    ``u_coeffs`` are ascending monomial coefficients in x. (L_f u)' is expanded
    by the product rule with the kernel's own grad f and Hess f.
    """
    kd = _check_gaussian_1d(q, tau)
    c = np.atleast_1d(np.asarray(u_coeffs, float))
    x = q.nodes.reshape(-1)
    d = [P.polyval(x, P.polyder(c, m)) if m < c.size else np.zeros_like(x) for m in range(4)]
    gf = kd.grad_f(q.nodes)[:, 0]
    hf = kd.hess_f(q.nodes)[:, 0, 0]
    L_of_du = d[3] - gf * d[2]
    d_of_Lu = d[3] - hf * d[1] - gf * d[2]
    return _l2(q, L_of_du - d_of_Lu - d[1] / (2 * tau))


def _basis(z, N, basis):
    """Values and z-derivatives of the basis at the standard-normal nodes z."""
    if basis == "hermite":
        # He_i / sqrt(i!) is orthonormal for the standard normal law
        V = He.hermevander(z, N) / np.sqrt([math.factorial(i) for i in range(N + 1)])
        dV = np.zeros_like(V)
        dV[:, 1:] = V[:, :-1] * np.sqrt(np.arange(1, N + 1))
        return V, dV
    if basis == "monomial":
        V = np.vander(z, N + 1, increasing=True)
        dV = np.zeros_like(V)
        dV[:, 1:] = V[:, :-1] * np.arange(1, N + 1)
        return V, dV
    raise ValueError(f"unknown basis {basis!r}")


def galerkin_matrices(tau: float, N: int, basis: str = "hermite"):
    """Stiffness A_ij = -int <e_i', e_j'> d(nu) and mass M_ij = int e_i e_j d(nu)."""
    if N < 0:
        raise ValueError("N must be non-negative")
    if N > MAX_GALERKIN_DEGREE:
        raise DegreeTooLarge(f"Galerkin degree {N} exceeds {MAX_GALERKIN_DEGREE}")
    if not tau > 0:
        raise ValueError("tau must be positive")
    bg = gaussian_soliton(1, t1=0.0)
    q = build_quadrature(bg, -tau, order=max(N + 2, 4))
    sd = math.sqrt(2 * tau)
    z = q.nodes.reshape(-1) / sd
    V, dV = _basis(z, N, basis)
    w = q.weights
    M = (V * w[:, None]).T @ V
    G = dV / sd
    A = -(G * w[:, None]).T @ G
    return (A + A.T) / 2, (M + M.T) / 2


def galerkin_spectrum(tau: float, N: int, basis: str = "hermite") -> np.ndarray:
    """Eigenvalues of the weak-form drift Laplacian on polynomials of degree <= N.

    Sorted descending; they equal -j/(2 tau), j = 0..N.
    """
    A, M = galerkin_matrices(tau, N, basis)
    cond = np.linalg.cond(M)
    if cond > MASS_COND_LIMIT:
        raise IllConditioned(
            f"mass matrix condition number {cond:.2e} exceeds {MASS_COND_LIMIT:.0e}; "
            "use the hermite basis"
        )
    return np.sort(eigh(A, M, eigvals_only=True))[::-1]
