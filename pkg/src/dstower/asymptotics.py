"""Factorial growth of G_n: Richardson extrapolation, linearized generating
functions, and growth models used for asymptotic closure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Number
from typing import Sequence

import mpmath
import numpy as np
from scipy.integrate import solve_ivp

from .errors import BracketError, ContractViolation
from .quadrature import exp_sinh
from .solver import roots_univariate, select_physical
from .tower import (
    TheorySpec,
    eliminate_univariate,
    generate_tower,
    get_theory,
    higher_greens_from_seed,
    tower_for_order,
)

__all__ = [
    "ExtrapolationReport",
    "GrowthModel",
    "GrowthRateEstimate",
    "richardson",
    "ratio_sequence",
    "exact_sequence",
    "richardson_rate",
    "largest_root_limit",
    "linearization_zero",
    "growth_rate_analytic",
    "linearization_curve",
    "asymptotic_value",
    "fit_growth_model",
    "default_growth_model",
]


# -- Richardson ------------------------------------------------------------

@dataclass(frozen=True)
class ExtrapolationReport:
    """Richardson limit of a sequence a_n = L + a_1/n + a_2/n^2 + ...

    ``estimates`` holds the order-k limit computed from successive windows
    ending at the last term; ``differences`` are their successive changes and
    ``uncertainty`` is the last such change together with the gap to the
    order k-1 estimate, whichever is larger.
    """

    sequence: tuple
    start: int
    order: int
    limit: object
    estimates: tuple
    differences: tuple
    lower_order_limit: object
    uncertainty: object


def _richardson_at(seq, start: int, k: int, j0: int):
    """Order-k estimate from terms seq[j0 .. j0+k]."""
    N = start + j0
    total = mpmath.mpf(0)
    for j in range(k + 1):
        w = Fraction((-1) ** (k + j) * (N + j) ** k, math.factorial(j) * math.factorial(k - j))
        total += seq[j0 + j] * mpmath.mpf(w.numerator) / w.denominator
    return total


def richardson(seq: Sequence, k: int, *, start: int = 1, windows: int = 4) -> ExtrapolationReport:
    """Order-``k`` Richardson extrapolation of ``seq`` (seq[0] is term n=start).

    Annihilates the 1/n, ..., 1/n^k corrections exactly.
    """
    if not isinstance(k, int) or k < 1:
        raise ContractViolation("Richardson order must be an integer >= 1")
    values = []
    for v in seq:
        if isinstance(v, (bool, str)) or not isinstance(v, (Number, mpmath.mpf, mpmath.mpc)):
            raise ContractViolation(f"non-numeric sequence entry {v!r}")
        values.append(mpmath.mpmathify(v))
    if len(values) <= k:
        raise ContractViolation(f"need more than k={k} terms, got {len(values)}")
    last = len(values) - k - 1
    firsts = list(range(max(0, last - windows + 1), last + 1))
    estimates = [_richardson_at(values, start, k, j0) for j0 in firsts]
    diffs = [b - a for a, b in zip(estimates, estimates[1:])]
    lower = _richardson_at(values, start, k - 1, len(values) - k) if k > 1 else values[-1]
    limit = estimates[-1]
    unc = max([abs(diffs[-1])] if diffs else [mpmath.mpf(0)])
    unc = max(unc, abs(limit - lower) if k > 1 else unc)
    return ExtrapolationReport(tuple(values), start, k, limit, tuple(estimates), tuple(diffs), lower, unc)


# -- exact sequences and ratio statistics ---------------------------------------

def exact_sequence(theory: TheorySpec | str, n_max: int, precision: int = 768) -> dict:
    """Exact ``{n: G_n}`` for n <= n_max, forward-substituted from closed-form seeds.

    The seeds come from the Gamma-function references (or quadrature for
    theories with several seeds); the tower then runs at ``precision`` bits,
    which absorbs the cancellation among factorially large terms.
    """
    from .oracle import closed_form_reference, exact_greens

    theory = get_theory(theory) if isinstance(theory, str) else theory
    with mpmath.workprec(precision):
        if theory.seed_count == 1:
            (seed,) = theory.seed_indices
            seeds = {seed: closed_form_reference(theory, precision=precision)}
        else:
            g = exact_greens(theory, max(theory.seed_indices), precision=precision)
            seeds = {s: g[s] for s in theory.seed_indices}
        count = n_max - theory.power + 2
        if theory.parity_symmetric:
            count = sum(1 for k in range(theory.power - 1, n_max + 1) if k % 2 == 0)
        tower = generate_tower(theory, max(count, 1))
        return higher_greens_from_seed(tower, seeds)


def ratio_sequence(theory: TheorySpec | str, greens: dict) -> tuple[list, int, int]:
    """Ratio statistic whose limit is r**power.

    Parity theories: rho_n = |G_{2n+2}| / (|G_{2n}| (2n+1)(2n)) -> r^2.
    Otherwise:       rho_n = |G_{n+1}| / (|G_n| n) -> r.
    Returns ``(sequence, first n, power)``.
    """
    theory = get_theory(theory) if isinstance(theory, str) else theory
    top = max(greens)
    if theory.parity_symmetric:
        seq = []
        n = 1
        while 2 * n + 2 <= top:
            seq.append(abs(greens[2 * n + 2]) / (abs(greens[2 * n]) * (2 * n + 1) * (2 * n)))
            n += 1
        return seq, 1, 2
    seq = [abs(greens[n + 1]) / (abs(greens[n]) * n) for n in range(1, top)]
    return seq, 1, 1


@dataclass(frozen=True)
class GrowthRateEstimate:
    theory: str
    method: str
    r: object
    x0: object = None
    report: ExtrapolationReport | None = None
    diagnostics: tuple = ()

    def to_dict(self, digits: int = 15) -> dict:
        out = {"theory": self.theory, "method": self.method, "r": mpmath.nstr(self.r, digits)}
        if self.x0 is not None:
            out["x0"] = mpmath.nstr(self.x0, digits)
        if self.report is not None:
            out["richardson_order"] = self.report.order
            out["uncertainty"] = mpmath.nstr(self.report.uncertainty, 3)
            out["estimates"] = [mpmath.nstr(e, digits) for e in self.report.estimates]
        out["diagnostics"] = list(self.diagnostics)
        return out


# chosen so that each estimate is well inside its tolerance (see tests)
_RICHARDSON_DEFAULTS = {
    "hermitian_quartic": (80, 12),
    "pt_cubic": (80, 12),
    "pt_quartic": (80, 12),
}


def richardson_rate(theory: TheorySpec | str, n_max: int | None = None, k: int | None = None,
                    precision: int = 768) -> GrowthRateEstimate:
    """Growth rate r from Richardson extrapolation of the exact ratio statistic."""
    theory = get_theory(theory) if isinstance(theory, str) else theory
    dn, dk = _RICHARDSON_DEFAULTS.get(theory.name, (40, 6))
    n_max = dn if n_max is None else n_max
    k = dk if k is None else k
    with mpmath.workprec(precision):
        greens = exact_sequence(theory, n_max, precision)
        seq, start, power = ratio_sequence(theory, greens)
        rep = richardson(seq, k, start=start)
        r = mpmath.root(rep.limit, power)
    return GrowthRateEstimate(theory.name, "richardson", r, report=rep,
                              diagnostics=(f"n_max={n_max}", f"k={k}", f"statistic limit r^{power}"))


def largest_root_limit(n_max: int = 40, k: int = 5, n_min: int = 2) -> ExtrapolationReport:
    """Richardson limit of the largest positive zero of P_n (hermitian quartic).

    This is where zero-closure truncation converges as n grows; compare it
    with the exact G_2 to see the bias that asymptotic closure removes.
    """
    theory = get_theory("hermitian_quartic")
    if n_min < theory.min_order or n_max - n_min < k:
        raise ContractViolation(f"need {theory.min_order} <= n_min and more than k={k} orders")
    tower = tower_for_order(theory, n_max)
    seq = []
    for n in range(n_min, n_max + 1):
        best = select_physical(roots_univariate(eliminate_univariate(tower, n)), "largest_real", index=2)
        if not best.roots:
            raise ContractViolation(f"P_{n} has no positive real zero")
        seq.append(mpmath.re(best.roots[0][0]))
    with mpmath.workprec(256):
        return richardson(seq, k, start=n_min)


# -- linearized generating functions ----------------------------------------------

def _quartic_y(x, prec: int):
    """(2 sqrt2 / Gamma(1/4)) * int_0^inf cos(x t) exp(-t^4/4) dt."""
    with mpmath.workprec(prec):
        x = mpmath.mpf(x)
        res = exp_sinh(lambda t: [mpmath.cos(x * t) * mpmath.exp(-t**4 / 4)], 1)
        return mpmath.re(res.values[0]) * 2 * mpmath.sqrt(2) / mpmath.gamma(mpmath.mpf(1) / 4)


def _bisect(f, a, b, fa, fb, tol, max_iter=200):
    for _ in range(max_iter):
        if abs(b - a) <= tol:
            break
        m = (a + b) / 2
        fm = f(m)
        if fm == 0:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b, fb = m, fm
    return (a + b) / 2


def _scan(f, start, stop, step):
    trace = []
    x = start
    fx = f(x)
    trace.append((float(x), float(fx)))
    while x < stop:
        nx = x + step
        fn = f(nx)
        trace.append((float(nx), float(fn)))
        if (fn > 0) != (fx > 0) or fn == 0:
            return x, nx, fx, fn, trace
        x, fx = nx, fn
    raise BracketError(f"no sign change on [{start}, {stop}]", trace)


def _ode_solution(theory: TheorySpec, x_max: float):
    """Dense solution of the linear ODE, exact initial data, DOP853 near machine precision."""
    if theory.name == "pt_cubic":
        # w(x) = Ai(-x): w'' = -x w
        ai0 = 1 / (3 ** (2 / 3) * math.gamma(2 / 3))
        dai0 = -1 / (3 ** (1 / 3) * math.gamma(1 / 3))
        y0 = [ai0, -dai0]

        def rhs(x, y):
            return [y[1], -x * y[0]]
    else:
        # y''' = x y with y(0) = 1, y'(0) = 0, y''(0) = -G_2
        g2 = 2 * math.gamma(0.75) / math.gamma(0.25)
        y0 = [1.0, 0.0, -g2]

        def rhs(x, y):
            return [y[1], y[2], x * y[0]]

    return solve_ivp(rhs, (0.0, x_max), y0, method="DOP853", rtol=3e-14, atol=1e-16,
                     dense_output=True)


def linearization_zero(theory: TheorySpec | str, precision: int = 96, method: str | None = None,
                       x_max: float = 8.0, tol=1e-20):
    """Smallest positive zero x0 of the linearizing solution.

    Quartic: y(x) from the cosine transform (``method="quadrature"``, default)
    or from the ODE y''' = x y (``method="ode"``).  Cubic: Ai(-x) from the ODE
    u'' = -x u with Airy initial data.  The zero is bracketed on a coarse
    scan and bisected; a failed bracket raises :class:`BracketError` with the
    scan trace.
    """
    theory = get_theory(theory) if isinstance(theory, str) else theory
    if theory.name not in ("hermitian_quartic", "pt_cubic"):
        raise ContractViolation(f"no linearization is known for {theory.name}")
    if method is None:
        method = "quadrature" if theory.name == "hermitian_quartic" else "ode"
    if method == "quadrature":
        if theory.name != "hermitian_quartic":
            raise ContractViolation("the cosine-transform route is specific to the quartic theory")
        with mpmath.workprec(precision):
            f = lambda x: _quartic_y(x, precision)  # noqa: E731
            a, b, fa, fb, _ = _scan(f, mpmath.mpf(0), mpmath.mpf(x_max), mpmath.mpf(1) / 4)
            return _bisect(f, a, b, fa, fb, max(mpmath.mpf(tol), mpmath.mpf(2) ** (-precision + 8)))
    if method == "ode":
        sol = _ode_solution(theory, x_max)
        f = lambda x: float(sol.sol(x)[0])  # noqa: E731
        a, b, fa, fb, _ = _scan(f, 0.0, x_max, 0.05)
        return mpmath.mpf(_bisect(f, a, b, fa, fb, 1e-15))
    raise ContractViolation(f"unknown method {method!r}")


def growth_rate_analytic(theory: TheorySpec | str, precision: int = 96, method: str | None = None):
    """r = 1/x0 from the linearized generating function."""
    x0 = linearization_zero(theory, precision, method)
    with mpmath.workprec(precision):
        return 1 / x0


def linearization_curve(theory: TheorySpec | str, xs) -> np.ndarray:
    """Samples of the linearizing solution (quartic y(x), cubic Ai(-x)) at ``xs >= 0``."""
    theory = get_theory(theory) if isinstance(theory, str) else theory
    if theory.name not in ("hermitian_quartic", "pt_cubic"):
        raise ContractViolation(f"no linearization is known for {theory.name}")
    xs = np.asarray(xs, dtype=float)
    if xs.size and xs.min() < 0:
        raise ContractViolation("the linearizing solution is sampled on x >= 0 (it is even for the quartic)")
    sol = _ode_solution(theory, float(xs.max()) if xs.size else 1.0)
    return sol.sol(xs)[0]


# -- growth models ------------------------------------------------------------------

@dataclass(frozen=True)
class GrowthModel:
    """Factorial law for G_n used as an asymptotic closure.

    ``phase``: ``"alternating"`` for C r^{2n} (-1)^{n+1} (2n-1)! at index 2n,
    ``"minus_i"`` for C (n-1)! (-i)^n r^n at index n.
    """

    theory: str
    amplitude: object
    rate: object
    phase: str
    diagnostics: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.phase not in ("alternating", "minus_i"):
            raise ContractViolation(f"unknown phase rule {self.phase!r}")
        if not mpmath.mpmathify(self.rate) > 0:
            raise ContractViolation("growth rate must be positive")

    @property
    def factorial_form(self) -> str:
        return "(2n-1)!" if self.phase == "alternating" else "(n-1)!"

    def log_magnitude(self, k: int):
        """log |G_k| predicted by the model (finite for any k)."""
        r = mpmath.mpmathify(self.rate)
        return mpmath.log(abs(mpmath.mpmathify(self.amplitude))) + k * mpmath.log(r) + mpmath.loggamma(k)

    def value(self, k: int):
        """Predicted G_k.  Odd k of a parity theory give 0."""
        if k < 1:
            raise ContractViolation("Green's index must be >= 1")
        amp = mpmath.mpmathify(self.amplitude)
        if self.phase == "alternating":
            if k % 2:
                return mpmath.mpc(0)
            n = k // 2
            phase = 1 if n % 2 else -1
        else:
            phase = [1, -1j, -1, 1j][k % 4]
        # magnitude via logs; mpmath exponents are unbounded, so no overflow
        mag = mpmath.exp(k * mpmath.log(mpmath.mpmathify(self.rate)) + mpmath.loggamma(k))
        return mpmath.mpc(amp * phase * mag)

    def to_dict(self, digits: int = 15) -> dict:
        amp = mpmath.mpc(self.amplitude)
        return {
            "theory": self.theory,
            "amplitude": [mpmath.nstr(amp.real, digits), mpmath.nstr(amp.imag, digits)],
            "rate": mpmath.nstr(self.rate, digits),
            "phase": self.phase,
            "factorial_form": self.factorial_form,
        }


def asymptotic_value(model: GrowthModel, n: int):
    """The model's predicted G_n."""
    return model.value(n)


_PHASES = {"hermitian_quartic": "alternating", "pt_cubic": "minus_i", "pt_quartic": "minus_i"}
_AMPLITUDES = {"hermitian_quartic": 2, "pt_cubic": -1, "pt_quartic": -1}


def default_growth_model(theory: TheorySpec | str, precision: int = 96) -> GrowthModel:
    """The stated law with its asymptotic amplitude.

    r comes from the linearization where one exists, else from Richardson.
    """
    theory = get_theory(theory) if isinstance(theory, str) else theory
    if theory.name not in _PHASES:
        raise ContractViolation(f"no growth law for {theory.name}")
    if theory.name in ("hermitian_quartic", "pt_cubic"):
        r = growth_rate_analytic(theory, precision)
        src = "analytic"
    else:
        r = richardson_rate(theory).r
        src = "richardson"
    return GrowthModel(theory.name, _AMPLITUDES[theory.name], r, _PHASES[theory.name],
                       diagnostics=(f"rate from {src}",))


def fit_growth_model(theory: TheorySpec | str, greens: dict, rate=None) -> GrowthModel:
    """Amplitude fitted to the two largest available orders.

    The per-order amplitudes C_n = G_n / law_n are extrapolated linearly in 1/n.
    """
    theory = get_theory(theory) if isinstance(theory, str) else theory
    base = default_growth_model(theory) if rate is None else GrowthModel(
        theory.name, _AMPLITUDES[theory.name], rate, _PHASES[theory.name])
    unit = GrowthModel(theory.name, 1, base.rate, base.phase)
    keys = sorted(k for k in greens if unit.value(k) != 0)
    if len(keys) < 2:
        raise ContractViolation("need two nonzero orders to fit an amplitude")
    k1, k2 = keys[-2], keys[-1]
    c1 = greens[k1] / unit.value(k1)
    c2 = greens[k2] / unit.value(k2)
    amp = (k2 * c2 - k1 * c1) / (k2 - k1)
    return GrowthModel(theory.name, amp, base.rate, base.phase,
                       diagnostics=(f"amplitude fitted from G_{k1}, G_{k2}",))
