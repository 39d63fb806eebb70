"""Doubly-exponential (exp-sinh) quadrature on [0, inf) in mpmath precision.

The substitution t = exp(pi/2 * sinh(u)) turns integrands that decay
super-exponentially along a ray into ones that decay doubly exponentially in
u, after which the trapezoid rule converges geometrically in 1/h.  The mesh
is halved until two successive levels agree.
"""

from __future__ import annotations

from typing import Callable, Sequence

import mpmath

from .errors import QuadratureError

__all__ = ["exp_sinh", "ExpSinhResult"]


class ExpSinhResult:
    __slots__ = ("values", "errors", "levels", "nodes")

    def __init__(self, values, errors, levels, nodes):
        self.values = values
        self.errors = errors
        self.levels = levels
        self.nodes = nodes

    def __repr__(self):
        return f"ExpSinhResult(levels={self.levels}, nodes={self.nodes})"


def _node(u):
    half_pi = mpmath.pi / 2
    t = mpmath.exp(half_pi * mpmath.sinh(u))
    w = half_pi * mpmath.cosh(u) * t
    return t, w


def exp_sinh(
    f: Callable[[object], Sequence[object]],
    count: int,
    *,
    tol=None,
    max_level: int = 14,
    u_limit: float = 12.0,
) -> ExpSinhResult:
    """Integrate the vector-valued ``f`` (length ``count``) over [0, inf).

    ``f(t)`` returns ``count`` values, so that a whole family of integrands
    (e.g. all moments t**p g(t)) shares one set of nodes.  Raises
    :class:`QuadratureError` when the tail fails to decay or two successive
    levels never agree.  Convergence is relative to the larger of |integral|
    and the integral of |f|.
    """
    eps = mpmath.mpf(2) ** (-mpmath.mp.prec)
    tol = mpmath.mpf(2) ** (-mpmath.mp.prec + 12) if tol is None else mpmath.mpf(tol)

    def weighted(u):
        t, w = _node(u)
        return [w * v for v in f(t)]

    # find the u-range where any integrand still matters, scanning on h = 1/8
    step = mpmath.mpf(1) / 8
    center = weighted(mpmath.mpf(0))
    scale = max(abs(v) for v in center) or mpmath.mpf(1)
    peak = scale

    def extent(direction):
        nonlocal peak
        u = mpmath.mpf(0)
        last = None
        while True:
            u += direction * step
            if abs(u) > u_limit:
                raise QuadratureError(
                    f"integrand not negligible at u={mpmath.nstr(u, 5)}: "
                    "ray does not decay (outside its Stokes sector?)"
                )
            vals = weighted(u)
            mag = max(abs(v) for v in vals)
            if not mpmath.isfinite(mag):
                raise QuadratureError("integrand overflowed along the ray")
            peak = max(peak, mag)
            if mag <= eps * peak and (last is None or mag <= last):
                return u
            last = mag

    u_hi = extent(+1)
    u_lo = extent(-1)

    h = mpmath.mpf(1) / 2
    k_lo = int(mpmath.floor(u_lo / h))
    k_hi = int(mpmath.ceil(u_hi / h))
    sums = [mpmath.mpc(0)] * count
    # L1 sums: convergence is judged against the integral of |f|, so that
    # integrals that cancel to nearly zero still terminate
    l1 = [mpmath.mpf(0)] * count
    nodes = 0
    for k in range(k_lo, k_hi + 1):
        for j, v in enumerate(weighted(k * h)):
            sums[j] += v
            l1[j] += abs(v)
        nodes += 1
    estimate = [h * s for s in sums]

    for level in range(1, max_level + 1):
        h /= 2
        k_lo = int(mpmath.floor(u_lo / h))
        k_hi = int(mpmath.ceil(u_hi / h))
        start = k_lo if k_lo % 2 else k_lo + 1
        for k in range(start, k_hi + 1, 2):
            for j, v in enumerate(weighted(k * h)):
                sums[j] += v
                l1[j] += abs(v)
            nodes += 1
        new = [h * s for s in sums]
        errs = [abs(a - b) for a, b in zip(new, estimate)]
        estimate = new
        if all(e <= tol * max(abs(v), h * a, eps) for e, v, a in zip(errs, new, l1)):
            return ExpSinhResult(new, errs, level, nodes)
    raise QuadratureError(
        f"exp-sinh quadrature did not converge after {max_level} levels "
        f"(worst relative change {mpmath.nstr(max(e / max(abs(v), eps) for e, v in zip(errs, new)), 3)})"
    )
