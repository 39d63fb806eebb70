"""Leading-order Dyson-Schwinger truncation of quartic quantum mechanics.

In one dimension the first nontrivial DS equation, truncated by dropping the
connected four-point function, is a free propagator equation with a
renormalized mass fixed self-consistently by the equal-time two-point
function ``G_2(0) = 1/(2M)``.

Hermitian ``+phi^4/4``::

    M^2 = 3 G_2(0)

PT-symmetric ``-phi^4/4`` (nonzero one-point function)::

    M^2 = -3 (G_1^2 + G_2(0)),    3 G_1 G_2(0) + G_1^3 = 0
"""

from __future__ import annotations

from dataclasses import dataclass, field

import mpmath

from .errors import ContractViolation

__all__ = ["D1LeadingResult", "REFERENCE_GAPS", "d1_leading_mass", "d1_residuals"]

# E_1 - E_0 of H = p^2/2 + x^4/4 and H = p^2/2 - x^4/4, as quoted (not computed here)
REFERENCE_GAPS = {"hermitian": mpmath.mpf("1.088"), "pt": mpmath.mpf("1.796")}


@dataclass(frozen=True)
class D1LeadingResult:
    """Self-consistent leading-order mass and its intermediates.

    Attributes
    ----------
    tag : str
        ``"hermitian"`` or ``"pt"``.
    mass : mpf
        Renormalized mass M > 0.
    g2_zero : mpf
        Equal-time propagator ``1/(2M)``.
    g1 : mpc or None
        One-point function, only present in the PT case.
    reference_gap : mpf
        Quoted gap ``E_1 - E_0`` used as the comparison value.
    percent_error : mpf
        ``100 (M - gap) / gap``.
    """

    tag: str
    mass: object
    g2_zero: object
    g1: object
    reference_gap: object
    percent_error: object
    residuals: tuple = field(default=())

    def to_dict(self, digits: int = 15) -> dict:
        def fmt(v):
            if v is None:
                return None
            v = mpmath.mpmathify(v)
            if isinstance(v, mpmath.mpc):
                return {"re": mpmath.nstr(v.real, digits), "im": mpmath.nstr(v.imag, digits)}
            return mpmath.nstr(v, digits)

        return {
            "theory": self.tag,
            "M": fmt(self.mass),
            "G2(0)": fmt(self.g2_zero),
            "G1": fmt(self.g1),
            "reference_gap": fmt(self.reference_gap),
            "reference_source": "quoted constant",
            "percent_error": fmt(self.percent_error),
            "max_residual": fmt(max((abs(r) for r in self.residuals), default=0)),
        }


def d1_residuals(tag: str, mass, g2_zero, g1=None) -> tuple:
    """Residuals of the defining algebraic system at the given values."""
    if tag == "hermitian":
        return (mass**2 - 3 * g2_zero, g2_zero - 1 / (2 * mass))
    if tag == "pt":
        return (
            mass**2 + 3 * (g1**2 + g2_zero),
            3 * g1 * g2_zero + g1**3,
            g2_zero - 1 / (2 * mass),
        )
    raise ContractViolation(f"unknown D=1 theory {tag!r}; choose 'hermitian' or 'pt'")


def d1_leading_mass(tag: str, precision: int = 128) -> D1LeadingResult:
    """Solve the leading D=1 truncation in closed form.

    Parameters
    ----------
    tag : {"hermitian", "pt"}
    precision : int
        Working precision in bits.

    Notes
    -----
    Hermitian: eliminating ``G_2(0)`` gives ``M^3 = 3/2``.  PT: the branch
    with ``G_1 != 0`` forces ``G_1^2 = -3 G_2(0)``, hence ``M^2 = 6 G_2(0)``
    and ``M^3 = 3``.  The PT one-point function is taken on the negative
    imaginary axis, the same branch as the zero-dimensional PT quartic.
    """
    if tag not in REFERENCE_GAPS:
        raise ContractViolation(f"unknown D=1 theory {tag!r}; choose 'hermitian' or 'pt'")
    with mpmath.workprec(precision):
        if tag == "hermitian":
            mass = mpmath.cbrt(mpmath.mpf(3) / 2)
            g2 = 1 / (2 * mass)
            g1 = None
        else:
            mass = mpmath.cbrt(mpmath.mpf(3))
            g2 = 1 / (2 * mass)
            g1 = mpmath.mpc(0, -mpmath.sqrt(3 * g2))
        gap = REFERENCE_GAPS[tag]
        pct = 100 * (mass - gap) / gap
        res = d1_residuals(tag, mass, g2, g1)
    return D1LeadingResult(tag, +mass, +g2, g1, gap, +pct, tuple(res))
