"""Exact Green's functions from contour integrals in the Stokes sectors.

Moments gamma_p / Z are ratios of integrals of phi**p exp(-L) along a
contour made of two rays from the origin; cumulants follow from the usual
moment recursion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import mpmath

from .errors import ContractViolation, QuadratureError
from .quadrature import exp_sinh
from .tower import TheorySpec, get_theory

__all__ = [
    "ContourSpec",
    "MomentTable",
    "sector_centers",
    "moment",
    "moment_table",
    "moments_to_connected",
    "connected_to_moments",
    "exact_greens",
    "closed_form_reference",
    "SECTOR_CHOICES",
    "reference_index",
    "contour_for",
]


def sector_centers(theory: TheorySpec) -> list[float]:
    """Angles in (-pi, pi] where exp(-L) decays fastest along a ray."""
    arg = float(mpmath.arg(theory.coupling.to_mpc()))
    m = theory.power
    out = []
    for k in range(m):
        th = (-arg + 2 * math.pi * k) / m
        th = math.atan2(math.sin(th), math.cos(th))
        out.append(th)
    return sorted(out)


def _decay_rate(theory: TheorySpec, angle: float):
    """Re of (lambda/m) e^{i m angle}; positive inside a Stokes sector."""
    lam = theory.coupling.to_mpc()
    return mpmath.re(lam * mpmath.expj(theory.power * mpmath.mpf(angle))) / theory.power


@dataclass(frozen=True)
class ContourSpec:
    """Contour entering along ``ray_angles[0]`` and leaving along ``ray_angles[1]``."""

    theory: TheorySpec
    ray_angles: tuple[float, float]

    def __post_init__(self):
        a, b = self.ray_angles
        if math.isclose(math.cos(a), math.cos(b)) and math.isclose(math.sin(a), math.sin(b)):
            raise ContractViolation("contour rays coincide; the integral vanishes")

    @classmethod
    def default(cls, theory: TheorySpec) -> "ContourSpec":
        if theory.sector_pair is None:
            raise ContractViolation(f"{theory.name} has no default sector pair")
        return cls(theory, theory.sector_pair)

    def check(self):
        for th in self.ray_angles:
            if _decay_rate(self.theory, th) <= 0:
                raise QuadratureError(
                    f"ray at angle {th:.6f} lies outside every Stokes sector of {self.theory.name}"
                )


@dataclass(frozen=True)
class MomentTable:
    """Normalised moments gamma_p / Z for p = 0..P with quadrature error estimates."""

    theory: TheorySpec
    contour: ContourSpec
    values: tuple
    errors: tuple
    precision: int

    @property
    def max_order(self) -> int:
        return len(self.values) - 1


def _ray_integrals(theory: TheorySpec, angle: float, count: int):
    """Integrals of phi**p exp(-L) along the ray phi = t e^{i angle}, p < count."""
    m = theory.power
    direction = mpmath.expj(mpmath.mpf(angle))
    c = theory.coupling.to_mpc() * direction**m / m

    def integrand(t):
        g = mpmath.exp(-c * t**m)
        out = []
        for _ in range(count):
            out.append(g)
            g = g * t
        return out

    res = exp_sinh(integrand, count)
    phases = []
    ph = direction
    for _ in range(count):
        phases.append(ph)
        ph = ph * direction
    return [v * p for v, p in zip(res.values, phases)], [e for e in res.errors]


@lru_cache(maxsize=64)
def moment_table(theory: TheorySpec, contour: ContourSpec | None, max_order: int,
                 precision: int = 256) -> MomentTable:
    """All normalised moments up to ``max_order`` on ``contour`` (cached)."""
    contour = ContourSpec.default(theory) if contour is None else contour
    if contour.theory != theory:
        raise ContractViolation("contour belongs to a different theory")
    contour.check()
    with mpmath.workprec(precision + 32):
        count = max_order + 1
        vin, ein = _ray_integrals(theory, contour.ray_angles[0], count)
        vout, eout = _ray_integrals(theory, contour.ray_angles[1], count)
        raw = [b - a for a, b in zip(vin, vout)]
        err = [x + y for x, y in zip(ein, eout)]
        z = raw[0]
        if abs(z) <= err[0]:
            raise QuadratureError("partition function vanishes on this contour")
        values = [r / z for r in raw]
        # first-order propagation of the numerator and Z errors
        errors = [(e + abs(v) * err[0]) / abs(z) for v, e in zip(values, err)]
        values[0] = mpmath.mpc(1)
        errors[0] = mpmath.mpf(0)
    return MomentTable(theory, contour, tuple(values), tuple(errors), precision)


def moment(theory: TheorySpec, contour: ContourSpec | None, p: int, precision: int = 256):
    """gamma_p / Z along ``contour``."""
    if p < 0:
        raise ContractViolation("moment order must be >= 0")
    return moment_table(theory, contour, p, precision).values[p]


def moments_to_connected(table, n_max: int) -> list:
    """Connected Green's functions ``[G_1, ..., G_n_max]`` from normalised moments.

    ``table`` is a :class:`MomentTable` or a plain sequence gamma_0..gamma_P.
    """
    gam = table.values if isinstance(table, MomentTable) else list(table)
    if len(gam) <= n_max:
        raise ContractViolation(f"moments only reach p={len(gam) - 1}, need {n_max}")
    prec = table.precision if isinstance(table, MomentTable) else mpmath.mp.prec
    with mpmath.workprec(max(prec, mpmath.mp.prec)):
        gam = [mpmath.mpmathify(g) / gam[0] for g in gam]
        G = [None]
        for n in range(1, n_max + 1):
            acc = gam[n]
            for k in range(1, n):
                acc -= comb(n - 1, k - 1) * G[k] * gam[n - k]
            G.append(acc)
    return G[1:]


def connected_to_moments(greens, n_max: int) -> list:
    """Inverse of :func:`moments_to_connected`: ``[gamma_0, ..., gamma_n_max]``."""
    G = [None] + list(greens)
    gam = [mpmath.mpmathify(1)]
    for n in range(1, n_max + 1):
        acc = G[n]
        for k in range(1, n):
            acc = acc + comb(n - 1, k - 1) * G[k] * gam[n - k]
        gam.append(acc)
    return gam


def exact_greens(theory: TheorySpec, n_max: int, contour: ContourSpec | None = None,
                 precision: int | None = None) -> dict:
    """``{n: G_n}`` for n <= n_max.  Defaults to 512 bits beyond n = 20."""
    if precision is None:
        precision = 512 if n_max > 20 else 256
    table = moment_table(theory, contour, n_max, precision)
    with mpmath.workprec(precision):
        G = moments_to_connected(table, n_max)
    return {n + 1: g for n, g in enumerate(G)}


def reference_index(theory: TheorySpec) -> int:
    """The Green's function that root comparisons are made against."""
    return 2 if theory.parity_symmetric else 1


# (theory, choice) -> (incoming ray, outgoing ray) at sector centres, in units of pi
SECTOR_CHOICES: dict[tuple[str, str], tuple[Fraction, Fraction]] = {
    ("hermitian_quartic", "real"): (Fraction(1), Fraction(0)),
    ("pt_cubic", "pt"): (Fraction(-5, 6), Fraction(-1, 6)),
    ("pt_quartic", "pt"): (Fraction(-3, 4), Fraction(-1, 4)),
    ("pt_quintic", "pt_upper"): (Fraction(9, 10), Fraction(1, 10)),
    ("pt_quintic", "pt_lower"): (Fraction(-7, 10), Fraction(-3, 10)),
    ("hermitian_sextic", "real"): (Fraction(1), Fraction(0)),
    ("hermitian_sextic", "rotated_plus"): (Fraction(-2, 3), Fraction(1, 3)),
    ("hermitian_sextic", "rotated_minus"): (Fraction(-1, 3), Fraction(2, 3)),
}

_DEFAULT_CHOICE = {
    "hermitian_quartic": "real",
    "pt_cubic": "pt",
    "pt_quartic": "pt",
    "pt_quintic": "pt_lower",
    "hermitian_sextic": "real",
}


def _ray_ratio(m: int, p: int, angles) -> object:
    """gamma_p/Z for exp(-phi^m/m) on sector-centre rays, via Gamma functions."""
    a, b = (mpmath.expjpi(mpmath.mpf(x.numerator) / x.denominator) for x in angles)
    phase = (b ** (p + 1) - a ** (p + 1)) / (b - a)
    return phase * mpmath.power(m, mpmath.mpf(p) / m) * mpmath.gamma(mpmath.mpf(p + 1) / m) / mpmath.gamma(mpmath.mpf(1) / m)


def closed_form_reference(theory: TheorySpec | str, choice: str | None = None,
                          precision: int = 128):
    """Closed-form G_1 (or G_2 for parity theories) for a named sector pair.

    Uses the printed Gamma-function formulas where they exist; the quintic and
    the rotated sextic pairs use the same Gamma ratio evaluated on their rays.
    """
    if isinstance(theory, str):
        theory = get_theory(theory)
    choice = _DEFAULT_CHOICE.get(theory.name) if choice is None else choice
    key = (theory.name, choice)
    if key not in SECTOR_CHOICES:
        raise ContractViolation(f"no reference sector pair {choice!r} for {theory.name}")
    with mpmath.workprec(precision):
        g = mpmath.gamma
        if key == ("hermitian_quartic", "real"):
            val = 2 * g(mpmath.mpf(3) / 4) / g(mpmath.mpf(1) / 4)
        elif key == ("pt_cubic", "pt"):
            val = -1j * mpmath.cbrt(3) * g(mpmath.mpf(2) / 3) / g(mpmath.mpf(1) / 3)
        elif key == ("pt_quartic", "pt"):
            val = -2j * mpmath.sqrt(mpmath.pi) / g(mpmath.mpf(1) / 4)
        elif theory.name == "hermitian_sextic":
            base = mpmath.cbrt(6) * mpmath.sqrt(mpmath.pi) / g(mpmath.mpf(1) / 6)
            turn = {"real": 0, "rotated_plus": 1, "rotated_minus": -1}[choice]
            val = base * mpmath.expj(2 * mpmath.pi * turn / 3)
        else:
            val = _ray_ratio(theory.power, reference_index(theory), SECTOR_CHOICES[key])
        return +mpmath.mpc(val)


def contour_for(theory: TheorySpec, choice: str) -> ContourSpec:
    key = (theory.name, choice)
    if key not in SECTOR_CHOICES:
        raise ContractViolation(f"no sector pair {choice!r} for {theory.name}")
    return ContourSpec(theory, tuple(float(x) * math.pi for x in SECTOR_CHOICES[key]))
