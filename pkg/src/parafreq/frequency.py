"""Frequency functionals I, D, U, their time traces, and the checkers.

With d(nu) the conjugate heat kernel measure at time t,

    I(t) = int u^2 d(nu)
    D(t) = -tau int |grad u|^2 d(nu) = tau int u L_f u d(nu)
    U(t) = Ecorr(t) D(t) / I(t),   Ecorr(t) = exp(int_a^t (1 - kappa)/tau)

Time derivatives are central differences with a dedicated small step
(``fd_step``) around every sample; accumulated integrals over the trace use
composite Simpson.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from .backgrounds import FlowBackground
from .errors import (
    BoundViolation,
    DualFormMismatch,
    MonotonicityViolation,
    NotStationary,
    ZeroSolution,
)
from .kernel import KernelData, kappa, kernel_at
from .spectral import WeightedQuadrature, build_quadrature, jet
from .tolerances import tolerance

log = logging.getLogger(__name__)

_TINY = np.finfo(float).tiny


# --------------------------------------------------------------------------
# single-time functionals


@dataclass(frozen=True)
class Moments:
    """Weighted integrals of one field at one time."""

    I: float
    grad_sq: float  # int |grad u|^2 d(nu)
    u_Lu: float  # int u L_f u d(nu)
    Lu_sq: float  # int (L_f u)^2 d(nu)
    hess_sq: float | None = None  # int |Hess u|^2 d(nu)
    ric_f: float | None = None  # int Ric_f(grad u, grad u) d(nu)


def moments(u, kd: KernelData, q: WeightedQuadrature, hessian=True) -> Moments:
    J = jet(u, q, hessian=hessian)
    Lu = J.lap - np.sum(kd.grad_f(q.nodes) * J.grad, axis=1)
    m = Moments(
        I=q.integrate(J.value**2),
        grad_sq=q.integrate(J.grad_sq),
        u_Lu=q.integrate(J.value * Lu),
        Lu_sq=q.integrate(Lu**2),
    )
    if not hessian:
        return m
    ric = np.einsum("pi,pij,pj->p", J.grad, kd.ric_f(q.nodes), J.grad)
    return replace(m, hess_sq=q.integrate(J.hess_sq), ric_f=q.integrate(ric))


def compute_I(u, kd: KernelData, q: WeightedQuadrature) -> float:
    return q.integrate(jet(u, q).value ** 2)


def _check_dual(D, D_dual, scale):
    tol = tolerance("dual_form") * (1.0 + scale)
    if abs(D - D_dual) > tol:
        raise DualFormMismatch(
            f"gradient form {D!r} and drift form {D_dual!r} of D differ by "
            f"{abs(D - D_dual):.3e} > {tol:.1e}; quadrature or truncation is too coarse"
        )


def compute_D(u, kd: KernelData, q: WeightedQuadrature, tau: float | None = None) -> float:
    """-tau int |grad u|^2 d(nu), cross-checked against tau int u L_f u d(nu)."""
    tau = kd.tau if tau is None else tau
    m = moments(u, kd, q, hessian=False)
    D = -tau * m.grad_sq
    _check_dual(D, tau * m.u_Lu, abs(D) + tau * m.I)
    return D


def compute_U(I: float, D: float, ecorr: float = 1.0) -> float:
    if not I > _TINY:
        raise ZeroSolution(f"I={I!r}: the solution vanishes, frequency undefined")
    return ecorr * D / I


# --------------------------------------------------------------------------
# traces


@dataclass(frozen=True, eq=False)
class FrequencyTrace:
    bg: FlowBackground
    window: tuple
    fd_step: float
    times: np.ndarray
    tau: np.ndarray
    I: np.ndarray
    D: np.ndarray
    kappa: np.ndarray
    Ecorr: np.ndarray
    U: np.ndarray
    U_fd_prime: np.ndarray
    logI_fd_prime: np.ndarray
    I_fd_prime: np.ndarray
    cs_gap: np.ndarray
    C: np.ndarray
    notes: tuple = field(default_factory=tuple)

    def __len__(self):
        return len(self.times)

    def index_of(self, t):
        i = int(np.argmin(np.abs(self.times - t)))
        if not math.isclose(self.times[i], t, rel_tol=0, abs_tol=1e-12 * (1 + abs(t))):
            raise ValueError(f"t={t} is not a trace sample")
        return i

    def with_U(self, U):
        """Copy with the frequency column replaced (used for negative controls)."""
        return replace(self, U=np.asarray(U, float))


@dataclass(frozen=True)
class _Sample:
    I: float
    D: float
    kappa: float
    cs_gap: float


def _sample(sol, t, order, kernel_modes):
    bg = sol.bg
    kd = kernel_at(bg, t, modes=kernel_modes, check_order=order)
    q = build_quadrature(bg, t, order, kernel=kd)
    u = sol.field_at(t)
    m = moments(u, kd, q, hessian=False)
    D = -kd.tau * m.grad_sq
    _check_dual(D, kd.tau * m.u_Lu, abs(D) + kd.tau * m.I)
    k = kappa(bg, t, kd, q.nodes)
    return _Sample(m.I, D, k, m.I * m.Lu_sq - m.u_Lu**2)


def trace(
    sol,
    samples: int = 64,
    *,
    order: int | None = None,
    kernel_modes: int | None = None,
    fd_step: float | None = None,
    derivatives: bool = True,
    parallel: bool = False,
) -> FrequencyTrace:
    """Sample I, D, kappa, Ecorr and U on a uniform grid over the window.

    Each sample is also evaluated at t +- fd_step for the derivative columns;
    ``derivatives=False`` skips that (the columns are then NaN) when only the
    frequency values are needed.
    """
    if samples < 8:
        raise ValueError("a trace needs at least 8 samples")
    a, b = sol.window
    h = 1e-5 * (b - a) if fd_step is None else float(fd_step)
    times = np.linspace(a, b, samples)
    offsets = (-h, 0.0, h) if derivatives else (0.0,)
    points = [t + dt for t in times for dt in offsets]

    def work(t):
        return _sample(sol, t, order, kernel_modes)

    if parallel:
        with ThreadPoolExecutor() as pool:
            res = list(pool.map(work, points))
    else:
        res = [work(t) for t in points]

    col = lambda rows, name: np.array([getattr(r, name) for r in rows])  # noqa: E731
    if derivatives:
        lo, mid, hi = res[0::3], res[1::3], res[2::3]
    else:
        mid = res
    I, D, kap = col(mid, "I"), col(mid, "D"), col(mid, "kappa")
    if np.any(~(I > _TINY)):
        raise ZeroSolution("the solution vanishes on the window; frequency undefined")
    tau = sol.bg.t1 - times

    rate = (1 - kap) / tau
    Ecorr = np.exp(cumulative_simpson(rate, x=times, initial=0.0))
    U = Ecorr * D / I

    # stencil values: Ecorr(t +- h) from the local trapezoid increment
    def shifted(rows, sign):
        Is, Ds, ks = col(rows, "I"), col(rows, "D"), col(rows, "kappa")
        rs = (1 - ks) / (tau - sign * h)
        Es = Ecorr * np.exp(sign * h * (rate + rs) / 2)
        return Is, Es * Ds / Is

    if derivatives:
        I_lo, U_lo = shifted(lo, -1)
        I_hi, U_hi = shifted(hi, +1)
    else:
        I_lo = I_hi = U_lo = U_hi = np.full_like(times, np.nan)
    C = np.array([sol.C_of_t(t) for t in times], dtype=float)

    notes = []
    if np.any(kap != 1.0):
        notes.append(
            "kappa exceeds 1 on this trace: the correction factor is "
            "exp(+int_a^t (1-kappa)/tau), which is <= 1; the opposite sign would exceed 1"
        )
    return FrequencyTrace(
        bg=sol.bg,
        window=(a, b),
        fd_step=h,
        times=times,
        tau=tau,
        I=I,
        D=D,
        kappa=kap,
        Ecorr=Ecorr,
        U=U,
        U_fd_prime=(U_hi - U_lo) / (2 * h),
        logI_fd_prime=(np.log(I_hi) - np.log(I_lo)) / (2 * h),
        I_fd_prime=(I_hi - I_lo) / (2 * h),
        cs_gap=col(mid, "cs_gap"),
        C=C,
        notes=tuple(notes),
    )


# --------------------------------------------------------------------------
# reports


@dataclass
class CheckReport:
    name: str
    passed: bool
    lhs: float
    rhs: float
    margin: float
    tolerance: float
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "lhs": _jsonable(self.lhs),
            "rhs": _jsonable(self.rhs),
            "margin": _jsonable(self.margin),
            "tolerance": _jsonable(self.tolerance),
            "detail": {k: _jsonable(v) for k, v in self.detail.items()},
        }


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer, int)) and not isinstance(v, bool):
        return int(v)
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _finish(report, exc_type, raise_on_fail, message):
    if not report.passed and raise_on_fail:
        raise exc_type(message, report)
    return report


def _notes(tr):
    return {"notes": list(tr.notes)} if tr.notes else {}


# --------------------------------------------------------------------------
# checkers


def check_monotone(tr: FrequencyTrace, tol: float | None = None, raise_on_fail=True):
    """U(t_{i+1}) >= U(t_i) - tol with tol = 1e-8 (1 + |U(a)|)."""
    base = tolerance("monotone") if tol is None else tol
    tol_abs = base * (1 + abs(tr.U[0]))
    diffs = np.diff(tr.U)
    i = int(np.argmin(diffs))
    report = CheckReport(
        "monotone",
        bool(diffs[i] >= -tol_abs),
        float(diffs[i]),
        -tol_abs,
        float(diffs[i] + tol_abs),
        tol_abs,
        {"worst_interval": [float(tr.times[i]), float(tr.times[i + 1])], **_notes(tr)},
    )
    return _finish(
        report,
        MonotonicityViolation,
        raise_on_fail,
        f"U decreases by {-diffs[i]:.3e} on [{tr.times[i]}, {tr.times[i + 1]}]",
    )


def equality_case_residual(u, kd: KernelData, tr: FrequencyTrace, t: float, q=None) -> float:
    """Relative L^2(d nu) distance of u from the eigenfunction L_f u = c(t) u.

    Only meaningful where U is stationary; c(t) = U / (Ecorr tau).
    """
    i = tr.index_of(t)
    tol = tolerance("stationary")
    if abs(tr.U_fd_prime[i]) > tol:
        raise NotStationary(
            f"U'({t}) = {tr.U_fd_prime[i]:.3e} is not stationary (tolerance {tol:.0e})",
            CheckReport("equality_case", False, float(tr.U_fd_prime[i]), 0.0, -1.0, tol),
        )
    q = build_quadrature(kd.bg, kd.t, kernel=kd) if q is None else q
    c = tr.U[i] / (tr.Ecorr[i] * tr.tau[i])
    J = jet(u, q)
    Lu = J.lap - np.sum(kd.grad_f(q.nodes) * J.grad, axis=1)
    num = q.integrate((Lu - c * J.value) ** 2)
    den = q.integrate(J.value**2)
    if not den > _TINY:
        raise ZeroSolution("equality case needs a nonzero solution")
    return math.sqrt(max(num, 0.0) / den)


def hessian_identity_residual(u, kd: KernelData, q: WeightedQuadrature | None = None) -> float:
    """|int |Hess u|^2 - int (|L_f u|^2 - Ric_f(grad u, grad u))| in d(nu)."""
    q = build_quadrature(kd.bg, kd.t, kernel=kd) if q is None else q
    m = moments(u, kd, q)
    return abs(m.hess_sq - (m.Lu_sq - m.ric_f))


def log_I_identity_residual(tr: FrequencyTrace) -> float:
    """max over interior samples of |(log I)' - 2 U / (Ecorr tau)|."""
    s = slice(1, len(tr) - 1)
    rhs = 2 * tr.U / (tr.Ecorr * tr.tau)
    return float(np.max(np.abs(tr.logI_fd_prime[s] - rhs[s])))


def I_prime_residual(tr: FrequencyTrace) -> float:
    """max over interior samples of |I' - 2 D / tau| / (1 + |I|)."""
    s = slice(1, len(tr) - 1)
    return float(np.max(np.abs(tr.I_fd_prime[s] - 2 * tr.D[s] / tr.tau[s]) / (1 + np.abs(tr.I[s]))))


def _inverse_tau_integral(tr):
    return float(simpson(1.0 / (tr.Ecorr * tr.tau), x=tr.times))


def backwards_bound_check(tr: FrequencyTrace, raise_on_fail=True):
    """I(b) >= I(a) exp(2 U(a) int_a^b Ecorr^-1 tau^-1 dt), up to a factor 1 - 1e-6."""
    J = _inverse_tau_integral(tr)
    rhs = tr.I[0] * math.exp(2 * tr.U[0] * J)
    slack = tolerance("backwards_bound")
    lhs = float(tr.I[-1])
    report = CheckReport(
        "backwards_bound",
        lhs >= rhs * (1 - slack),
        lhs,
        rhs,
        lhs - rhs,
        slack,
        {"ratio": lhs / rhs if rhs > 0 else math.inf, "inverse_tau_integral": J, **_notes(tr)},
    )
    return _finish(report, BoundViolation, raise_on_fail, f"I(b)={lhs!r} < bound {rhs!r}")


def _C_values(tr, C):
    if C is None:
        return tr.C
    if callable(C):
        return np.array([C(t) for t in tr.times], dtype=float)
    return np.broadcast_to(np.asarray(C, float), tr.times.shape)


def general_bounds_check(tr: FrequencyTrace, C=None, raise_on_fail=True):
    """The three derivative bounds for a defect bounded by C(t)(|grad u| + |u|).

    (i)   (log I)' >= (2 + C) U / (Ecorr tau) - 3 C
    (ii)  U' >= C^2 (U - tau)
    (iii) C^2 >= (log(tau(a) - U))'
    """
    Cv = _C_values(tr, C)
    tau_a = tr.tau[0]
    slack = tolerance("general_bounds") * (1 + np.abs(tr.U) + tau_a)
    m1 = tr.logI_fd_prime - ((2 + Cv) * tr.U / (tr.Ecorr * tr.tau) - 3 * Cv)
    m2 = tr.U_fd_prime - Cv**2 * (tr.U - tr.tau)
    m3 = Cv**2 - (-tr.U_fd_prime / (tau_a - tr.U))
    s = slice(1, len(tr) - 1)
    margins = np.stack([m1[s] + slack[s], m2[s] + slack[s], m3[s] + slack[s]])
    which, j = np.unravel_index(np.argmin(margins), margins.shape)
    worst = float(margins[which, j])
    idx = j + 1
    lhs_rhs = [
        (tr.logI_fd_prime[idx], (2 + Cv[idx]) * tr.U[idx] / (tr.Ecorr[idx] * tr.tau[idx]) - 3 * Cv[idx]),
        (tr.U_fd_prime[idx], Cv[idx] ** 2 * (tr.U[idx] - tr.tau[idx])),
        (Cv[idx] ** 2, -tr.U_fd_prime[idx] / (tau_a - tr.U[idx])),
    ][which]
    report = CheckReport(
        "general_bounds",
        worst >= 0,
        float(lhs_rhs[0]),
        float(lhs_rhs[1]),
        worst,
        float(slack[idx]),
        {
            "inequality": int(which) + 1,
            "sample": int(idx),
            "t": float(tr.times[idx]),
            "min_margin_per_inequality": [float(m.min()) for m in margins],
            **_notes(tr),
        },
    )
    return _finish(
        report,
        BoundViolation,
        raise_on_fail,
        f"inequality ({int(which) + 1}) fails at t={tr.times[idx]} by {-worst:.3e}",
    )


def corollary_rhs(I_a, U_a, tau_a, sup_C, int_C2, inv_tau_integral, length):
    """Lower bound for I(b) obtained by integrating the derivative bounds."""
    U_floor = (U_a - tau_a) * math.exp(int_C2) + tau_a
    return I_a * math.exp((2 + sup_C) * U_floor * inv_tau_integral - 3 * length * sup_C)


def corollary_bound_check(tr: FrequencyTrace, C=None, raise_on_fail=True):
    Cv = _C_values(tr, C)
    a, b = tr.times[0], tr.times[-1]
    sup_C = float(np.max(Cv))
    int_C2 = float(simpson(Cv**2, x=tr.times))
    J = _inverse_tau_integral(tr)
    rhs = corollary_rhs(tr.I[0], tr.U[0], tr.tau[0], sup_C, int_C2, J, b - a)
    slack = tolerance("corollary_bound")
    lhs = float(tr.I[-1])
    report = CheckReport(
        "corollary_bound",
        lhs >= rhs * (1 - slack),
        lhs,
        rhs,
        lhs - rhs,
        slack,
        {"sup_C": sup_C, "int_C2": int_C2, "inverse_tau_integral": J, **_notes(tr)},
    )
    return _finish(report, BoundViolation, raise_on_fail, f"I(b)={lhs!r} < bound {rhs!r}")


def cauchy_schwarz_check(tr: FrequencyTrace, raise_on_fail=True):
    """I int (L_f u)^2 - (int u L_f u)^2 >= -tol at every sample."""
    tol = tolerance("cauchy_schwarz")
    i = int(np.argmin(tr.cs_gap))
    report = CheckReport(
        "cauchy_schwarz", bool(tr.cs_gap[i] >= -tol), float(tr.cs_gap[i]), -tol,
        float(tr.cs_gap[i] + tol), tol, {"t": float(tr.times[i])},
    )
    return _finish(report, BoundViolation, raise_on_fail, "Cauchy-Schwarz gap is negative")
