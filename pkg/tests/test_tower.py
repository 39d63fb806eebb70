from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dstower.errors import ContractViolation
from dstower.symbolic import I, MultiPoly, const, green, parse_poly
from dstower.tower import (
    THEORIES,
    eliminate_univariate,
    generate_tower,
    get_theory,
    higher_greens_from_seed,
    seed_expressions,
    tower_for_order,
    truncate,
)

QUARTIC = get_theory("hermitian_quartic")
CUBIC = get_theory("pt_cubic")
PT_QUARTIC = get_theory("pt_quartic")


def _variables(p):
    return {n for m, _ in p.items() for n, _ in m}


def _rhs_all(theory, count):
    tw = generate_tower(theory, count)
    return {top: tw.rhs(top) for top in tw.top_indices}


def test_quartic_tower_golden():
    rhs = _rhs_all(QUARTIC, 4)
    assert rhs[4] == parse_poly("-3*G2^2 + 1")
    assert rhs[6] == parse_poly("-12*G2*G4 - 6*G2^3")
    assert rhs[8] == parse_poly("-18*G2*G6 - 30*G4^2 - 60*G2^2*G4")
    assert rhs[10] == parse_poly("-24*G2*G8 - 168*G4*G6 - 126*G2^2*G6 - 420*G2*G4^2")


def test_cubic_tower_golden():
    rhs = _rhs_all(CUBIC, 4)
    assert rhs[2] == -green(1, 2)
    assert rhs[3] == green(1) * green(2) * -2 - MultiPoly.constant(I)
    assert rhs[4] == parse_poly("-2*G2^2 - 2*G1*G3")
    assert rhs[5] == parse_poly("-6*G2*G3 - 2*G1*G4")


def test_pt_quartic_tower_golden():
    rhs = _rhs_all(PT_QUARTIC, 3)
    assert rhs[3] == parse_poly("-G1^3 - 3*G1*G2")
    assert rhs[4] == parse_poly("-3*G1*G3 - 3*G2^2 - 3*G1^2*G2 - 1")
    assert rhs[5] == parse_poly("-3*G1*G4 - 9*G2*G3 - 3*G1^2*G3 - 6*G1*G2^2")


def _P(*coeffs):
    # coefficients from the top power down, as Fractions
    n = len(coeffs) - 1
    p = MultiPoly()
    for k, c in enumerate(coeffs):
        if c:
            p = p + green(2, n - k) * Fraction(c) if n - k else p + const(Fraction(c))
    return p


def test_quartic_elimination_low_orders():
    tw = tower_for_order(QUARTIC, 5)
    assert eliminate_univariate(tw, 2) == _P(1, 0, Fraction(-1, 3))
    assert eliminate_univariate(tw, 3) == _P(1, 0, Fraction(-2, 5), 0)
    assert eliminate_univariate(tw, 5) == _P(1, 0, Fraction(-2, 3), 0, Fraction(193, 1890), 0)


def test_quartic_p4_constant_term():
    # exact elimination gives 1/21 as the constant term of P_4; a printed
    # 1/2 would not be consistent with the equations above
    tw = tower_for_order(QUARTIC, 4)
    assert eliminate_univariate(tw, 4) == _P(1, 0, Fraction(-8, 15), 0, Fraction(1, 21))
    # independent check: substitute by hand from the golden equations
    x = green(2)
    g4 = const(1) - x * x * 3
    g6 = x * g4 * -12 - x * x * x * 6
    g8 = x * g6 * -18 - g4 * g4 * 30 - x * x * g4 * 60
    assert g8.monic_in(2) == _P(1, 0, Fraction(-8, 15), 0, Fraction(1, 21))


@given(st.integers(2, 14))
def test_quartic_polynomials_are_even_or_odd(n):
    p = eliminate_univariate(tower_for_order(QUARTIC, n), n)
    degrees = {dict(m).get(2, 0) for m, _ in p.items()}
    assert max(degrees) == n
    assert all((d - n) % 2 == 0 for d in degrees)
    assert all(c.im == 0 for _, c in p.items())


@given(st.integers(3, 16))
def test_cubic_polynomials_have_threefold_structure(n):
    # only powers x^(n - 3j) appear, so the roots are closed under x -> w x
    p = eliminate_univariate(tower_for_order(CUBIC, n), n)
    assert all((n - dict(m).get(1, 0)) % 3 == 0 for m, _ in p.items())


@pytest.mark.parametrize("name", ["hermitian_quartic", "pt_cubic", "pt_quartic", "pt_quintic",
                                  "hermitian_sextic", "hermitian_sextic_full"])
def test_underdetermination_bookkeeping(name):
    # each truncation leaves exactly as many equations as seeds
    theory = get_theory(name)
    order = theory.min_order + 3
    tw = tower_for_order(theory, order)
    sys_ = truncate(tw, order)
    assert len(sys_.equations) == len(sys_.unknowns) == theory.seed_count
    assert len(sys_.discarded) == theory.seed_count
    assert max(sys_.discarded) == theory.top_index(order)
    for eq in sys_.equations:
        assert _variables(eq) <= set(theory.seed_indices)


def test_seed_counts_and_leading_orders():
    expected = {
        "hermitian_quartic": ((2,), 2),
        "pt_cubic": ((1,), 2),
        "pt_quartic": ((1, 2), 4),
        "pt_quintic": ((1, 2, 3), 6),
        "hermitian_sextic": ((2, 4), 4),
    }
    for name, (seeds, order) in expected.items():
        theory = get_theory(name)
        assert theory.seed_indices == seeds
        assert theory.min_order == order
    # cubic order 2 is the degenerate G_1^2 = 0; order 3 is the first useful one
    cubic = tower_for_order(CUBIC, 3)
    assert eliminate_univariate(cubic, 2) == green(1, 2)
    assert eliminate_univariate(cubic, 3) == green(1, 3) - MultiPoly.constant(I * Fraction(1, 2))


def test_parity_filter_removes_odd_greens():
    tw = generate_tower(get_theory("hermitian_sextic"), 5)
    for eq in tw.equations:
        assert all(k % 2 == 0 for k in _variables(eq))
    full = generate_tower(get_theory("hermitian_sextic_full"), 10)
    assert any(k % 2 for eq in full.equations for k in _variables(eq))


@given(st.integers(3, 12))
def test_truncation_matches_elimination(n):
    tw = tower_for_order(CUBIC, n)
    (eq,) = truncate(tw, n).equations
    assert eq.monic_in(1) == eliminate_univariate(tw, n)


def test_higher_greens_reproduce_seed_expressions():
    tw = tower_for_order(PT_QUARTIC, 9)
    expr = seed_expressions(tw)
    with mpmath.workprec(200):
        seeds = {1: mpmath.mpc("0.3", "-1.1"), 2: mpmath.mpc("-0.2", "0.05")}
        values = higher_greens_from_seed(tw, seeds)
        for k, poly in expr.items():
            assert abs(poly.evaluate(seeds) - values[k]) < 1e-40 * max(1, abs(values[k]))


def test_free_theory_is_fully_determined():
    # Gaussian cumulants: G_2 = 1, everything else 0
    free = THEORIES["free"]
    tw = generate_tower(free, 6)
    values = higher_greens_from_seed(tw, {})
    assert tw.top_indices == (1, 2, 3, 4, 5, 6)
    assert {k: complex(v) for k, v in values.items()} == {1: 0, 2: 1, 3: 0, 4: 0, 5: 0, 6: 0}


def test_truncate_contract_violations():
    tw = tower_for_order(PT_QUARTIC, 6)
    with pytest.raises(ContractViolation):
        truncate(tw, 3)
    with pytest.raises(ContractViolation):
        truncate(tw, 6, closure="asymptotic")
    with pytest.raises(ContractViolation):
        truncate(tw, 6, closure={5: 1})
    with pytest.raises(ContractViolation):
        get_theory("cubic")


def test_exact_closure_recovers_exact_seed():
    # closing with exact G_5, G_6 leaves the exact seeds as a solution
    from dstower.oracle import exact_greens

    with mpmath.workprec(256):
        g = exact_greens(PT_QUARTIC, 6)
        tw = tower_for_order(PT_QUARTIC, 6)
        sys_ = truncate(tw, 6, closure={5: g[5], 6: g[6]})
        for eq in sys_.equations:
            assert abs(eq.evaluate({1: g[1], 2: g[2]})) < mpmath.mpf(10) ** -60
