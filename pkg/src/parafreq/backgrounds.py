"""Closed-form Ricci flow backgrounds.

Three model flows are supported:

* ``GAUSSIAN``: flat R^n (n <= 3) with the Gaussian shrinker potential.
* ``CIRCLE``: the flat circle of length L, a static flow.
* ``SPHERE``: the round S^2 shrinking as g(t) = (c0 - 2t) g_round, restricted
  to zonal functions about the north pole.

Every flow also fixes the space-time center (x1, t1) of the conjugate heat
kernel, so backwards time is tau(t) = t1 - t.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import TimeOutOfWindow, UnsupportedBackground


class Kind(str, enum.Enum):
    GAUSSIAN = "gaussian"
    CIRCLE = "circle"
    SPHERE = "sphere"


@dataclass(frozen=True)
class FlowBackground:
    kind: Kind
    dim: int = 1
    t1: float = 0.0
    center: tuple = (0.0,)
    circle_length: float = 2 * math.pi
    initial_scale: float = 4.0
    # sphere only: heat-smoothing time of the initial delta
    smoothing_eps: float = 1e-3
    # start of the flow; only used for the default kernel guard
    t0: float | None = None

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        center = self.center
        if isinstance(center, (int, float)):
            center = (float(center),)
        object.__setattr__(self, "center", tuple(float(c) for c in center))
        if kind is Kind.GAUSSIAN:
            if not 1 <= self.dim <= 3:
                raise ValueError(f"Gaussian soliton dimension must be 1..3, got {self.dim}")
            if len(self.center) == 1 and self.dim > 1:
                object.__setattr__(self, "center", self.center * self.dim)
            if len(self.center) != self.dim:
                raise ValueError("center must have one coordinate per dimension")
        elif kind is Kind.CIRCLE:
            if self.dim != 1:
                raise ValueError("the flat circle is one-dimensional")
            if not self.circle_length > 0:
                raise ValueError("circle_length must be positive")
            if len(self.center) != 1:
                raise ValueError("circle center is a single coordinate")
        else:
            if self.dim != 2:
                raise ValueError("the shrinking sphere is two-dimensional")
            if not self.initial_scale > 0:
                raise ValueError("initial_scale must be positive")
            if not self.t1 < self.initial_scale / 2:
                raise ValueError(
                    f"t1={self.t1} must precede extinction at c0/2={self.initial_scale / 2}"
                )
            if not self.smoothing_eps > 0:
                raise ValueError("smoothing_eps must be positive")
            # zonal fields: the kernel center is the north pole
            object.__setattr__(self, "center", (1.0,))

    def tau(self, t):
        return self.t1 - t

    def scale(self, t):
        """Conformal factor of g(t) relative to the reference metric."""
        if self.kind is Kind.SPHERE:
            return self.initial_scale - 2.0 * t
        return 1.0

    def validate_time(self, t):
        if not t < self.t1:
            raise TimeOutOfWindow(f"t={t} is not before the kernel time t1={self.t1}")
        if self.kind is Kind.SPHERE and not self.scale(t) > 0:
            raise TimeOutOfWindow(f"sphere is extinct at t={t}")


def gaussian_soliton(dim=1, t1=0.0, center=0.0, t0=None):
    return FlowBackground(Kind.GAUSSIAN, dim=dim, t1=t1, center=center, t0=t0)


def flat_circle(length=2 * math.pi, t1=0.0, center=0.0, t0=None):
    return FlowBackground(Kind.CIRCLE, dim=1, t1=t1, center=center, circle_length=length, t0=t0)


def shrinking_sphere(c0=4.0, t1=1.0, eps=1e-3, t0=None):
    return FlowBackground(
        Kind.SPHERE, dim=2, t1=t1, initial_scale=c0, smoothing_eps=eps, t0=t0
    )


@dataclass(frozen=True)
class GeometrySnapshot:
    t: float
    tau: float
    scale: float
    scalar_curvature: float


def geometry(bg: FlowBackground, t: float) -> GeometrySnapshot:
    bg.validate_time(t)
    scale = bg.scale(t)
    # Ric(g_round) = g_round on S^2, so R = 2/c for g = c g_round
    R = 2.0 / scale if bg.kind is Kind.SPHERE else 0.0
    return GeometrySnapshot(t=t, tau=bg.tau(t), scale=scale, scalar_curvature=R)


def ricci_eigenvalue(bg: FlowBackground, t: float) -> float:
    """Ric = lambda g(t); constant in space for every model flow."""
    return 1.0 / bg.scale(t) if bg.kind is Kind.SPHERE else 0.0


def laplace_eigenvalue(bg: FlowBackground, mode: int, t: float) -> float:
    if mode < 0:
        raise ValueError("mode must be non-negative")
    bg.validate_time(t)
    if bg.kind is Kind.CIRCLE:
        return -((2 * math.pi * mode / bg.circle_length) ** 2)
    if bg.kind is Kind.SPHERE:
        return -mode * (mode + 1) / bg.scale(t)
    raise UnsupportedBackground(
        "the Gaussian soliton has continuous spectrum; use polynomial calculus"
    )
