"""Dyson-Schwinger towers for L = (lambda/m) phi^m - J phi in zero dimensions.

The master relation is ``lambda * B_{m-1}(G_1, ..., G_{m-1}) = J`` where
B is the complete Bell polynomial.  Differentiating d times with respect to
J and setting J = 0 gives the equation that introduces G_{m-1+d}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import mpmath

from .errors import ContractViolation, ResourceLimitError
from .symbolic import (
    GaussianRational,
    I,
    Monomial,
    MultiPoly,
    complete_bell,
    green,
    j_derivative,
)

__all__ = [
    "TheorySpec",
    "DsTower",
    "TruncatedSystem",
    "THEORIES",
    "get_theory",
    "generate_tower",
    "tower_for_order",
    "seed_expressions",
    "eliminate_univariate",
    "truncate",
    "higher_greens_from_seed",
]

_PI = math.pi


@dataclass(frozen=True)
class TheorySpec:
    """A monomial theory ``(coupling/power) * phi**power``.

    ``sector_pair`` holds the (incoming, outgoing) ray angles of the default
    integration contour used by the exact oracle.
    """

    name: str
    power: int
    coupling: GaussianRational
    parity_symmetric: bool = False
    sector_pair: tuple[float, float] | None = None

    def __post_init__(self):
        if self.power < 2:
            raise ContractViolation("interaction power must be >= 2")
        if self.parity_symmetric and self.power % 2:
            raise ContractViolation("parity symmetry needs an even power")
        if not GaussianRational.coerce(self.coupling):
            raise ContractViolation("coupling must be nonzero")

    @property
    def seed_indices(self) -> tuple[int, ...]:
        """Green's functions never eliminated by the tower (G_1 .. G_{m-2})."""
        seeds = range(1, self.power - 1)
        if self.parity_symmetric:
            return tuple(k for k in seeds if k % 2 == 0)
        return tuple(seeds)

    @property
    def seed_count(self) -> int:
        return len(self.seed_indices)

    def top_index(self, order: int) -> int:
        """Index of the highest Green's function kept at truncation ``order``.

        Parity theories count orders in G_2 degree (order n keeps G_{2n});
        the others count in G_1 degree (order n keeps G_n).
        """
        return 2 * order if self.parity_symmetric else order

    def discarded_indices(self, order: int) -> tuple[int, ...]:
        top = self.top_index(order)
        step = 2 if self.parity_symmetric else 1
        return tuple(top - step * j for j in range(self.seed_count))[::-1]

    @property
    def min_order(self) -> int:
        """Lowest order whose discarded Green's functions are all non-seeds."""
        n = 1
        while True:
            discarded = self.discarded_indices(n)
            if not discarded or min(discarded) > max(self.seed_indices, default=0):
                return n
            n += 1

    def is_odd_zero(self, n: int) -> bool:
        return self.parity_symmetric and n % 2 == 1


def _theory(name, power, coupling, parity=False, sectors=None) -> TheorySpec:
    return TheorySpec(name, power, GaussianRational.coerce(coupling), parity, sectors)


THEORIES: dict[str, TheorySpec] = {
    t.name: t
    for t in (
        _theory("hermitian_quartic", 4, 1, True, (_PI, 0.0)),
        _theory("pt_cubic", 3, I, False, (-5 * _PI / 6, -_PI / 6)),
        _theory("pt_quartic", 4, -1, False, (-3 * _PI / 4, -_PI / 4)),
        _theory("pt_quintic", 5, -I, False, (-7 * _PI / 10, -3 * _PI / 10)),
        _theory("hermitian_sextic", 6, 1, True, (_PI, 0.0)),
        # same Lagrangian without imposing G_odd = 0 before truncation
        _theory("hermitian_sextic_full", 6, 1, False, (_PI, 0.0)),
        # Gaussian test theory: no seeds, all G_k fixed
        _theory("free", 2, 1, False, (_PI, 0.0)),
    )
}


def get_theory(name: str) -> TheorySpec:
    try:
        return THEORIES[name]
    except KeyError:
        raise ContractViolation(
            f"unknown theory {name!r}; choose from {sorted(THEORIES)}"
        ) from None


# J-derivative chains of B_{m-1}; these depend only on the power m
_DERIVATIVES: dict[int, list[MultiPoly]] = {}


def _bell_derivative(power: int, d: int, max_terms: int) -> MultiPoly:
    chain = _DERIVATIVES.setdefault(power, [complete_bell(power - 1)])
    while len(chain) <= d:
        nxt = j_derivative(chain[-1])
        if len(nxt) > max_terms:
            raise ResourceLimitError(
                f"derivative {len(chain)} of B_{power - 1} has {len(nxt)} terms "
                f"(budget {max_terms})"
            )
        chain.append(nxt)
    return chain[d]


@dataclass(frozen=True)
class DsTower:
    """First few DS equations of a theory.

    ``equations[j]`` is a polynomial E with E = 0, normalised so that its top
    Green's function ``top_indices[j]`` appears linearly with coefficient 1.
    """

    theory: TheorySpec
    equations: tuple[MultiPoly, ...]
    top_indices: tuple[int, ...]
    _by_top: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_by_top", dict(zip(self.top_indices, self.equations)))

    def __len__(self):
        return len(self.equations)

    @property
    def max_index(self) -> int:
        return self.top_indices[-1] if self.top_indices else 0

    def equation(self, top: int) -> MultiPoly:
        try:
            return self._by_top[top]
        except KeyError:
            raise KeyError(f"tower has no equation introducing G_{top}") from None

    def rhs(self, top: int) -> MultiPoly:
        """Right side of ``G_top = ...``."""
        return green(top) - self.equation(top)


def generate_tower(theory: TheorySpec, n_equations: int, *, max_terms: int = 2_000_000) -> DsTower:
    """The first ``n_equations`` nontrivial DS equations of ``theory``."""
    if n_equations < 1:
        raise ContractViolation("need at least one equation")
    lam = theory.coupling
    inv_lam = lam.inverse()
    eqs: list[MultiPoly] = []
    tops: list[int] = []
    d = 0
    while len(eqs) < n_equations:
        raw = _bell_derivative(theory.power, d, max_terms)
        eq = raw - inv_lam if d == 1 else raw
        if theory.parity_symmetric:
            eq = eq.filter(lambda mono: all(n % 2 == 0 for n, _ in mono))
        top = theory.power - 1 + d
        d += 1
        if eq.is_zero():
            continue
        assert eq.coefficient(Monomial.var(top)) == 1
        eqs.append(eq)
        tops.append(top)
    return DsTower(theory, tuple(eqs), tuple(tops))


def tower_for_order(theory: TheorySpec, order: int) -> DsTower:
    """A tower long enough to truncate at ``order``."""
    top = theory.top_index(order)
    first = theory.power - 1
    if top < first:
        raise ContractViolation(f"order {order} is below the first equation of {theory.name}")
    count = top - first + 1
    if theory.parity_symmetric:
        count = sum(1 for k in range(first, top + 1) if k % 2 == 0)
    return generate_tower(theory, max(count, 1))


def seed_expressions(tower: DsTower, upto: int | None = None) -> dict[int, MultiPoly]:
    """Every G_k (k <= upto) as an exact polynomial in the seed Green's functions."""
    theory = tower.theory
    upto = tower.max_index if upto is None else upto
    if upto > tower.max_index:
        raise ContractViolation(f"tower only reaches G_{tower.max_index}")
    expr: dict[int, MultiPoly] = {}
    for k in range(1, upto + 1):
        if theory.is_odd_zero(k):
            expr[k] = MultiPoly()
        elif k in theory.seed_indices:
            expr[k] = green(k)
    memo: dict[Monomial, MultiPoly] = {Monomial(): MultiPoly.constant(1)}

    def value(mono: Monomial) -> MultiPoly:
        got = memo.get(mono)
        if got is not None:
            return got
        n, e = mono[-1]
        rest = Monomial(mono[:-1] + ((n, e - 1),)) if e > 1 else Monomial(mono[:-1])
        got = memo[mono] = value(rest) * expr[n]
        return got

    for top in tower.top_indices:
        if top > upto:
            break
        total = MultiPoly()
        for mono, c in tower.rhs(top).items():
            total = total + value(mono) * c
        expr[top] = total
    return expr


def eliminate_univariate(tower: DsTower, order: int) -> MultiPoly:
    """Monic polynomial in the single seed whose zeros close the tower at ``order``."""
    theory = tower.theory
    if theory.seed_count != 1:
        raise ContractViolation(
            f"{theory.name} has {theory.seed_count} seeds; use truncate() instead"
        )
    (seed,) = theory.seed_indices
    top = theory.top_index(order)
    if top <= seed:
        raise ContractViolation(f"order {order} is below the first truncation")
    return seed_expressions(tower, top)[top].monic_in(seed)


@dataclass(frozen=True)
class TruncatedSystem:
    """Square polynomial system in the seeds obtained by closing the tower."""

    theory: TheorySpec
    order: int
    closure: str
    unknowns: tuple[int, ...]
    equations: tuple[MultiPoly, ...]
    discarded: tuple[int, ...]
    closure_values: tuple = ()

    def __post_init__(self):
        if len(self.equations) != len(self.unknowns):
            raise ContractViolation("truncated system is not square")


def _closure_values(closure, discarded):
    if isinstance(closure, str):
        if closure == "zero":
            return "zero", [mpmath.mpc(0)] * len(discarded)
        raise ContractViolation(
            f"closure {closure!r} needs data: pass a GrowthModel or a mapping of exact values"
        )
    if hasattr(closure, "value"):
        return "asymptotic", [mpmath.mpmathify(closure.value(k)) for k in discarded]
    if isinstance(closure, Mapping):
        missing = [k for k in discarded if k not in closure]
        if missing:
            raise ContractViolation(f"exact closure lacks values for G_{missing}")
        return "exact", [mpmath.mpmathify(closure[k]) for k in discarded]
    raise ContractViolation(f"unsupported closure {closure!r}")


def truncate(tower: DsTower, order: int, closure="zero") -> TruncatedSystem:
    """Close the tower at ``order``.

    ``closure`` is ``"zero"``, a growth model (anything with ``value(k)``)
    for asymptotic closure, or a mapping ``{k: G_k}`` of exact values.
    """
    theory = tower.theory
    if order < theory.min_order:
        raise ContractViolation(
            f"{theory.name} needs order >= {theory.min_order}, got {order}"
        )
    discarded = theory.discarded_indices(order)
    tag, values = _closure_values(closure, discarded)
    expr = seed_expressions(tower, theory.top_index(order))
    eqs = []
    for k, v in zip(discarded, values):
        eqs.append(expr[k] - GaussianRational.from_mpmath(v))
    return TruncatedSystem(
        theory=theory,
        order=order,
        closure=tag,
        unknowns=theory.seed_indices,
        equations=tuple(eqs),
        discarded=discarded,
        closure_values=tuple(values),
    )


def higher_greens_from_seed(tower: DsTower, seeds: Mapping[int, object]) -> dict[int, object]:
    """Forward-substitute numeric seed values up the tower.

    Returns ``{k: G_k}`` for every k up to the tower's top index, evaluated in
    the current mpmath precision.
    """
    theory = tower.theory
    missing = [s for s in theory.seed_indices if s not in seeds]
    if missing:
        raise ContractViolation(f"missing seed values for G_{missing}")
    values: dict[int, object] = {}
    for k in range(1, tower.max_index + 1):
        if theory.is_odd_zero(k):
            values[k] = mpmath.mpc(0)
        elif k in theory.seed_indices:
            values[k] = mpmath.mpmathify(seeds[k])
    for top in tower.top_indices:
        values[top] = tower.rhs(top).evaluate(values)
    return values
