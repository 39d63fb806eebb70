"""Exact polynomial algebra in the Green's-function symbols G_1, G_2, ...

Coefficients live in the Gaussian rationals Q(i).  Everything here is
immutable and exact; numeric conversion is left to the callers.
"""

from __future__ import annotations

import re
from functools import lru_cache
from math import comb
from typing import Iterable, Mapping

import gmpy2
import mpmath
from gmpy2 import mpq

from .errors import ContractViolation

__all__ = [
    "GaussianRational",
    "Monomial",
    "MultiPoly",
    "I",
    "poly_add",
    "poly_mul",
    "complete_bell",
    "j_derivative",
    "substitute",
    "parse_poly",
    "green",
    "const",
]

_MPQ = type(mpq(0))


def _to_mpq(value) -> mpq:
    if isinstance(value, _MPQ):
        return value
    if isinstance(value, str):
        return mpq(value.strip())
    if isinstance(value, float):
        # floats are dyadic, so this is exact
        return mpq(value)
    return mpq(value)


class GaussianRational:
    """Exact complex number ``re + im*i`` with rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = _to_mpq(re)
        self.im = _to_mpq(im)

    @classmethod
    def _raw(cls, re: mpq, im: mpq) -> "GaussianRational":
        obj = cls.__new__(cls)
        obj.re = re
        obj.im = im
        return obj

    @classmethod
    def coerce(cls, value) -> "GaussianRational":
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, complex):
            return cls(value.real, value.imag)
        if isinstance(value, (mpmath.mpc, mpmath.mpf)):
            return cls.from_mpmath(value)
        return cls(value)

    @classmethod
    def from_mpmath(cls, value) -> "GaussianRational":
        """Exact rational image of an mpmath number (mpf values are dyadic)."""
        z = mpmath.mpmathify(value)
        if isinstance(z, mpmath.mpc):
            return cls(_mpf_to_mpq(z.real), _mpf_to_mpq(z.imag))
        return cls(_mpf_to_mpq(z), 0)

    # -- predicates -------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.re and not self.im

    def is_real(self) -> bool:
        return not self.im

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, GaussianRational):
            if isinstance(other, (int, _MPQ)):
                return GaussianRational._raw(self.re + other, self.im)
            other = GaussianRational.coerce(other)
        return GaussianRational._raw(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational._raw(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-GaussianRational.coerce(other))

    def __rsub__(self, other):
        return GaussianRational.coerce(other) + (-self)

    def __mul__(self, other):
        if not isinstance(other, GaussianRational):
            if isinstance(other, (int, _MPQ)):
                return GaussianRational._raw(self.re * other, self.im * other)
            other = GaussianRational.coerce(other)
        a, b, c, d = self.re, self.im, other.re, other.im
        if not b and not d:
            return GaussianRational._raw(a * c, b)
        return GaussianRational._raw(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def conjugate(self):
        return GaussianRational._raw(self.re, -self.im)

    def norm(self) -> mpq:
        return self.re * self.re + self.im * self.im

    def inverse(self):
        n = self.norm()
        if not n:
            raise ZeroDivisionError("GaussianRational division by zero")
        return GaussianRational._raw(self.re / n, -self.im / n)

    def __truediv__(self, other):
        return self * GaussianRational.coerce(other).inverse()

    def __rtruediv__(self, other):
        return GaussianRational.coerce(other) * self.inverse()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        result = ONE
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # -- comparison / hashing --------------------------------------------
    def __eq__(self, other):
        try:
            other = GaussianRational.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        if not self.im:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return not self.is_zero()

    # -- conversion -------------------------------------------------------
    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def to_mpc(self):
        """Round to the current mpmath working precision."""
        re = mpmath.mpf(self.re.numerator) / self.re.denominator
        if not self.im:
            return mpmath.mpc(re, 0)
        im = mpmath.mpf(self.im.numerator) / self.im.denominator
        return mpmath.mpc(re, im)

    def __str__(self):
        if not self.im:
            return _fmt_q(self.re)
        if not self.re:
            return f"{_fmt_q(self.im)}*i"
        sign = "+" if self.im > 0 else "-"
        return f"({_fmt_q(self.re)}{sign}{_fmt_q(abs(self.im))}*i)"

    def __repr__(self):
        return f"GaussianRational({_fmt_q(self.re)!r}, {_fmt_q(self.im)!r})"


def _fmt_q(q: mpq) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def _mpf_to_mpq(x) -> mpq:
    sign, man, exp, _ = mpmath.mpf(x)._mpf_
    if not man:
        if exp:
            raise ContractViolation(f"cannot represent {x} exactly")
        return mpq(0)
    man = -gmpy2.mpz(man) if sign else gmpy2.mpz(man)
    if exp >= 0:
        return mpq(man << exp, 1)
    return mpq(man, gmpy2.mpz(1) << (-exp))


ZERO = GaussianRational(0, 0)
ONE = GaussianRational(1, 0)
I = GaussianRational(0, 1)


class Monomial(tuple):
    """Product of Green's functions, stored as sorted ``(index, exponent)`` pairs.

    Zero exponents are never stored; the empty monomial is the constant 1.
    """

    __slots__ = ()

    def __new__(cls, pairs: Iterable[tuple[int, int]] = ()):
        return super().__new__(cls, pairs)

    @classmethod
    def from_dict(cls, exponents: Mapping[int, int]) -> "Monomial":
        for n, e in exponents.items():
            if n < 1 or e < 0:
                raise ValueError(f"bad factor G_{n}^{e}")
        return cls(sorted((n, e) for n, e in exponents.items() if e))

    @classmethod
    def var(cls, n: int, e: int = 1) -> "Monomial":
        return cls.from_dict({n: e})

    def as_dict(self) -> dict[int, int]:
        return dict(self)

    def total_degree(self) -> int:
        return sum(e for _, e in self)

    def weighted_degree(self) -> int:
        return sum(n * e for n, e in self)

    def exponent(self, n: int) -> int:
        for k, e in self:
            if k == n:
                return e
        return 0

    def indices(self) -> tuple[int, ...]:
        return tuple(n for n, _ in self)

    def __mul__(self, other: "Monomial") -> "Monomial":
        if not other:
            return self
        if not self:
            return other
        d = dict(self)
        for n, e in other:
            d[n] = d.get(n, 0) + e
        return Monomial(sorted(d.items()))

    def without(self, n: int) -> "Monomial":
        return Monomial(p for p in self if p[0] != n)

    def sort_key(self):
        # grlex: higher total degree first, then lexicographic on exponent
        # vectors with the lowest Green's index most significant
        return (-self.total_degree(), tuple((n, -e) for n, e in self))

    def __str__(self):
        if not self:
            return "1"
        return "*".join(f"G{n}" if e == 1 else f"G{n}^{e}" for n, e in self)

    def __repr__(self):
        return f"Monomial({tuple(self)!r})"


_CONST = Monomial()


class MultiPoly:
    """Polynomial in the symbols G_n over the Gaussian rationals.

    The term map never stores zero coefficients, so equal polynomials have
    identical maps.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, object] | None = None):
        clean: dict[Monomial, GaussianRational] = {}
        if terms:
            for mono, coeff in terms.items():
                c = GaussianRational.coerce(coeff)
                if c:
                    key = mono if isinstance(mono, Monomial) else Monomial(mono)
                    clean[key] = c
        self._terms = clean
        self._hash = None

    @classmethod
    def _wrap(cls, terms: dict) -> "MultiPoly":
        # terms must already be clean
        obj = cls.__new__(cls)
        obj._terms = terms
        obj._hash = None
        return obj

    @classmethod
    def constant(cls, value) -> "MultiPoly":
        return cls({_CONST: value})

    @classmethod
    def var(cls, n: int, power: int = 1) -> "MultiPoly":
        return cls({Monomial.var(n, power): ONE})

    @property
    def terms(self) -> dict[Monomial, GaussianRational]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self.sorted_terms())

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def sorted_terms(self) -> list[tuple[Monomial, GaussianRational]]:
        return sorted(self._terms.items(), key=lambda kv: kv[0].sort_key())

    def coefficient(self, mono: Monomial | Mapping[int, int]) -> GaussianRational:
        if not isinstance(mono, Monomial):
            mono = Monomial.from_dict(mono)
        return self._terms.get(mono, ZERO)

    def constant_term(self) -> GaussianRational:
        return self._terms.get(_CONST, ZERO)

    def indices(self) -> set[int]:
        out: set[int] = set()
        for mono in self._terms:
            out.update(mono.indices())
        return out

    def max_index(self) -> int:
        return max(self.indices(), default=0)

    def total_degree(self) -> int:
        return max((m.total_degree() for m in self._terms), default=0)

    def degree_in(self, n: int) -> int:
        return max((m.exponent(n) for m in self._terms), default=0)

    # -- ring operations --------------------------------------------------
    def __add__(self, other):
        other = _as_poly(other)
        out = dict(self._terms)
        for mono, c in other._terms.items():
            s = out.get(mono)
            if s is None:
                out[mono] = c
            else:
                s = s + c
                if s:
                    out[mono] = s
                else:
                    del out[mono]
        return MultiPoly._wrap(out)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly._wrap({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) + (-self)

    def __mul__(self, other):
        if isinstance(other, MultiPoly):
            return _mul(self, other)
        c = GaussianRational.coerce(other)
        if not c:
            return MultiPoly._wrap({})
        return MultiPoly._wrap({m: v * c for m, v in self._terms.items()})

    def __rmul__(self, other):
        return self * other

    def __truediv__(self, other):
        inv = GaussianRational.coerce(other).inverse()
        return self * inv

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        result = MultiPoly.constant(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, MultiPoly):
            return self._terms == other._terms
        try:
            return self._terms == _as_poly(other)._terms
        except (TypeError, ValueError):
            return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # -- structural helpers ----------------------------------------------
    def filter(self, keep) -> "MultiPoly":
        """Keep the terms whose monomial satisfies ``keep``."""
        return MultiPoly._wrap({m: c for m, c in self._terms.items() if keep(m)})

    def monic_in(self, n: int) -> "MultiPoly":
        """Divide by the coefficient of the highest power of G_n (univariate use)."""
        lead = self.leading_coefficient(n)
        if not lead:
            raise ValueError("zero polynomial has no leading coefficient")
        return self / lead

    def leading_coefficient(self, n: int) -> GaussianRational:
        d = self.degree_in(n)
        return self._terms.get(Monomial.var(n, d) if d else _CONST, ZERO)

    def univariate_coeffs(self, n: int) -> list[GaussianRational]:
        """Coefficients ``[c_0, c_1, ..., c_d]`` of a polynomial in G_n alone."""
        extra = self.indices() - {n}
        if extra:
            raise ValueError(f"not univariate in G_{n}: also contains {sorted(extra)}")
        d = self.degree_in(n)
        coeffs = [ZERO] * (d + 1)
        for mono, c in self._terms.items():
            coeffs[mono.exponent(n)] = c
        return coeffs

    def evaluate(self, values: Mapping[int, object]):
        """Numeric value at ``values[n]`` for each G_n (mpmath arithmetic)."""
        total = mpmath.mpc(0)
        powers: dict[tuple[int, int], object] = {}
        for mono, c in self._terms.items():
            term = c.to_mpc()
            for n, e in mono:
                key = (n, e)
                p = powers.get(key)
                if p is None:
                    p = powers[key] = mpmath.mpmathify(values[n]) ** e
                term *= p
            total += term
        return total

    def coefficient_scale(self, values: Mapping[int, object]):
        """Sum of |term| at ``values``; used to make residuals relative."""
        total = mpmath.mpf(0)
        for mono, c in self._terms.items():
            term = abs(c.to_mpc())
            for n, e in mono:
                term *= abs(mpmath.mpmathify(values[n])) ** e
            total += term
        return total

    def to_string(self) -> str:
        """Canonical text form, e.g. ``-12*G2*G4 - 6*G2^3``."""
        if not self._terms:
            return "0"
        parts: list[str] = []
        for mono, c in self.sorted_terms():
            neg = False
            if not c.im and c.re < 0:
                neg, c = True, -c
            elif not c.re and c.im < 0:
                neg, c = True, -c
            if not mono:
                body = str(c)
            elif c == ONE:
                body = str(mono)
            else:
                body = f"{c}*{mono}"
            if not parts:
                parts.append(("-" if neg else "") + body)
            else:
                parts.append(("- " if neg else "+ ") + body)
        return " ".join(parts)

    def __str__(self):
        return self.to_string()

    def __repr__(self):
        return f"MultiPoly({self.to_string()!r})"


def _as_poly(value) -> MultiPoly:
    if isinstance(value, MultiPoly):
        return value
    return MultiPoly.constant(value)


def _mul(a: MultiPoly, b: MultiPoly) -> MultiPoly:
    if len(a._terms) > len(b._terms):
        a, b = b, a
    out: dict[Monomial, GaussianRational] = {}
    bt = list(b._terms.items())
    for ma, ca in a._terms.items():
        for mb, cb in bt:
            m = ma * mb
            c = ca * cb
            s = out.get(m)
            out[m] = c if s is None else s + c
    return MultiPoly._wrap({m: c for m, c in out.items() if c})


def green(n: int, power: int = 1) -> MultiPoly:
    """The polynomial G_n**power."""
    return MultiPoly.var(n, power)


def const(value) -> MultiPoly:
    return MultiPoly.constant(value)


def poly_add(a: MultiPoly, b: MultiPoly) -> MultiPoly:
    return a + b


def poly_mul(a: MultiPoly, b: MultiPoly) -> MultiPoly:
    return a * b


@lru_cache(maxsize=None)
def complete_bell(k: int) -> MultiPoly:
    """Complete Bell polynomial B_k(G_1, ..., G_k).

    This is the k-th moment expressed through the cumulants G_n, built from
    ``B_k = sum_{j<k} C(k-1, j) B_j G_{k-j}`` with ``B_0 = 1``.
    """
    if k < 0:
        raise ContractViolation("complete_bell needs k >= 0")
    if k == 0:
        return MultiPoly.constant(1)
    total = MultiPoly()
    for j in range(k):
        total = total + complete_bell(j) * green(k - j) * comb(k - 1, j)
    return total


def j_derivative(p: MultiPoly) -> MultiPoly:
    """d/dJ applied through the shift rule dG_n/dJ = G_{n+1}."""
    out: dict[Monomial, GaussianRational] = {}
    for mono, c in p.items():
        base = dict(mono)
        for n, e in mono:
            d = dict(base)
            if e == 1:
                del d[n]
            else:
                d[n] = e - 1
            d[n + 1] = d.get(n + 1, 0) + 1
            m = Monomial(sorted(d.items()))
            v = c * e
            s = out.get(m)
            out[m] = v if s is None else s + v
    return MultiPoly._wrap({m: c for m, c in out.items() if c})


def substitute(p: MultiPoly, n: int, replacement: MultiPoly) -> MultiPoly:
    """Replace every G_n in ``p`` by ``replacement``.

    The replacement may only involve indices below ``n``; anything else
    would make repeated elimination cyclic.
    """
    replacement = _as_poly(replacement)
    bad = [k for k in replacement.indices() if k >= n]
    if bad:
        raise ContractViolation(f"cyclic substitution: replacement for G_{n} contains G_{bad}")
    powers: dict[int, MultiPoly] = {0: MultiPoly.constant(1)}
    result = MultiPoly()
    untouched: dict[Monomial, GaussianRational] = {}
    for mono, c in p.items():
        e = mono.exponent(n)
        if not e:
            untouched[mono] = c
            continue
        if e not in powers:
            powers[e] = replacement ** e
        rest = MultiPoly._wrap({mono.without(n): c})
        result = result + rest * powers[e]
    return result + MultiPoly._wrap(untouched)


# -- parsing of the canonical text form ----------------------------------

_Q = r"\d+(?:/\d+)?"
_TERM_RE = re.compile(
    rf"""^(?:
        \((?P<cre>-?{_Q})(?P<csign>[+-])(?P<cim>{_Q})\*i\)   # (a+b*i)
      | (?P<im>{_Q})\*i                                     # b*i
      | (?P<re>{_Q})                                         # a
      | i
    )?(?:\*?(?P<mono>G\d+(?:\^\d+)?(?:\*G\d+(?:\^\d+)?)*))?$""",
    re.VERBOSE,
)


def parse_poly(text: str) -> MultiPoly:
    """Inverse of :meth:`MultiPoly.to_string`."""
    text = text.strip()
    if text == "0":
        return MultiPoly()
    tokens = re.split(r"\s+([+-])\s+", text)
    signs = ["+"] + tokens[1::2]
    bodies = tokens[0::2]
    terms: dict[Monomial, GaussianRational] = {}
    for sign, body in zip(signs, bodies):
        if body.startswith("-"):
            sign = "-" if sign == "+" else "+"
            body = body[1:]
        m = _TERM_RE.match(body)
        if not m or not body:
            raise ValueError(f"cannot parse term {body!r}")
        if m.group("cre") is not None:
            im = mpq(m.group("cim"))
            c = GaussianRational(m.group("cre"), im if m.group("csign") == "+" else -im)
        elif m.group("im") is not None:
            c = GaussianRational(0, m.group("im"))
        elif m.group("re") is not None:
            c = GaussianRational(m.group("re"))
        elif body.startswith("i"):
            c = I
        else:
            c = ONE
        exps: dict[int, int] = {}
        if m.group("mono"):
            for factor in m.group("mono").split("*"):
                idx, _, e = factor[1:].partition("^")
                exps[int(idx)] = exps.get(int(idx), 0) + int(e or 1)
        if sign == "-":
            c = -c
        mono = Monomial.from_dict(exps)
        terms[mono] = terms.get(mono, ZERO) + c
    return MultiPoly(terms)
