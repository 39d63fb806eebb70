import json
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dstower.errors import ContractViolation
from dstower.oracle import closed_form_reference
from dstower.solver import (
    RootSet,
    SolverConfig,
    nearest_root,
    roots_univariate,
    select_physical,
    solve_system,
    solve_truncation,
)
from dstower.symbolic import GaussianRational, MultiPoly, const, green, parse_poly
from dstower.tower import eliminate_univariate, get_theory, tower_for_order, truncate

CUBIC = get_theory("pt_cubic")
PT_QUARTIC = get_theory("pt_quartic")
with mpmath.workprec(256):
    OMEGA = mpmath.expjpi(mpmath.mpf(2) / 3)


@pytest.fixture(autouse=True)
def _working_precision():
    # roots come back at 256 bits; compare them at that precision too
    with mpmath.workprec(256):
        yield


def _set_distance(a, b):
    """Largest distance from a point of one set to the nearest point of the other."""
    with mpmath.workprec(256):
        d1 = max(min(abs(x - y) for y in b) for x in a)
        d2 = max(min(abs(x - y) for x in a) for y in b)
        return max(d1, d2)


gauss_roots = st.builds(
    lambda a, b: GaussianRational(Fraction(a, 7), Fraction(b, 5)),
    st.integers(-20, 20), st.integers(-20, 20),
)


@given(st.lists(gauss_roots, min_size=1, max_size=8, unique=True))
def test_planted_univariate_roots(planted):
    p = const(1)
    for r in planted:
        p = p * (green(1) - MultiPoly.constant(r))
    rs = roots_univariate(p)
    assert rs.complete and not rs.failed
    got = [z for (z,) in rs.roots]
    want = [r.to_mpc() for r in planted]
    assert len(got) == len(want)
    assert _set_distance(got, want) < 1e-20


def test_multiple_and_zero_roots():
    x = green(1)
    p = x * x * x * (x - const(1)) * (x - const(1)) * (x + const(2))
    rs = roots_univariate(p)
    mult = {complex(z).real: m for (z,), m in zip(rs.roots, rs.multiplicities)}
    assert mult == {0.0: 3, 1.0: 2, -2.0: 1}
    assert rs.count_with_multiplicity() == rs.expected == 6


def test_coefficient_list_input_and_contracts():
    rs = roots_univariate([-2, 0, 1])
    assert sorted(float(z.real) for (z,) in rs.roots) == pytest.approx([-2 ** 0.5, 2 ** 0.5], abs=1e-30)
    with pytest.raises(ContractViolation):
        roots_univariate([5])
    with pytest.raises(ContractViolation):
        select_physical(rs, "nearest")
    with pytest.raises(ContractViolation):
        select_physical(rs, "bogus")


def test_quartic_largest_real_root():
    tw = tower_for_order(get_theory("hermitian_quartic"), 2)
    rs = roots_univariate(eliminate_univariate(tw, 2))
    best = select_physical(rs, "largest_real", index=2)
    assert best.tags == ["largest_real"]
    assert abs(best.roots[0][0] - 1 / mpmath.sqrt(3)) < 1e-40


@pytest.mark.parametrize("order,value", [
    (4, "-0.693361"), (5, "-0.746900"), (6, "-0.712564"), (7, "-0.739871"), (8, "-0.712368"),
])
def test_cubic_nearest_roots(order, value):
    exact = closed_form_reference(CUBIC)
    rs = solve_truncation(truncate(tower_for_order(CUBIC, order), order))
    z = nearest_root(rs, exact)
    assert abs(z - mpmath.mpc(0, value)) < 1e-5


def test_cubic_order_ten_has_an_off_axis_pair():
    exact = closed_form_reference(CUBIC)
    rs = solve_truncation(truncate(tower_for_order(CUBIC, 10), 10))
    pair = select_physical(rs, "nearest", reference=exact)
    assert pair.tags == ["off_axis", "off_axis"]
    (a,), (b,) = pair.roots
    assert abs(a - mpmath.mpc("-0.016050", "-0.717367")) < 1e-5
    assert abs(b - mpmath.mpc("0.016050", "-0.717367")) < 1e-5
    # order 10 still has a root on the negative imaginary axis, just farther away
    on_axis = select_physical(rs, "pt_axis")
    assert on_axis.tags and set(on_axis.tags) == {"pt_axis"}
    assert all(abs(z - exact) > abs(a - exact) for (z,) in on_axis.roots)


@settings(max_examples=10)
@given(st.integers(3, 30))
def test_cubic_cloud_threefold_symmetry(n):
    rs = solve_truncation(truncate(tower_for_order(CUBIC, n), n))
    vals = rs.values()
    assert _set_distance(vals, [OMEGA * z for z in vals]) < 1e-25


def test_solver_is_deterministic():
    sys_ = truncate(tower_for_order(PT_QUARTIC, 7), 7)
    a = solve_truncation(sys_).to_json()
    b = solve_truncation(sys_).to_json()
    assert a == b


def test_rootset_round_trip():
    rs = solve_truncation(truncate(tower_for_order(PT_QUARTIC, 6), 6))
    back = RootSet.from_dict(json.loads(rs.to_json(digits=40)))
    assert back.unknowns == rs.unknowns and back.expected == rs.expected
    assert back.multiplicities == rs.multiplicities and back.tags == rs.tags
    for r, s in zip(rs.roots, back.roots):
        assert max(abs(x - y) for x, y in zip(r, s)) < 1e-35


def test_linear_system():
    rs = solve_system([parse_poly("G1 - 3"), parse_poly("G2 + 2*G1")], unknowns=(1, 2))
    assert len(rs.roots) == 1 and rs.complete
    x, y = rs.roots[0]
    assert abs(x - 3) < 1e-40 and abs(y + 6) < 1e-40


def test_planted_two_variable_system():
    eqs = [parse_poly("G1^2 - 3*G1 + 2"), parse_poly("G2^2 - 2*G2 - 3")]
    rs = solve_system(eqs, unknowns=(1, 2))
    got = sorted((round(float(x.real)), round(float(y.real))) for x, y in rs.roots)
    assert got == [(1, -1), (1, 3), (2, -1), (2, 3)]
    assert max(rs.residuals) < 1e-30


def test_singular_origin_is_adopted_with_weighted_multiplicity():
    # G_2 = G_1^2 leaves G_1^3 (2 G_1 - 1) = 0: origin of multiplicity 3 plus one simple root
    eqs = [parse_poly("G2 - G1^2"), parse_poly("G2^2 + G1^4 - G1^3")]
    rs = solve_system(eqs, unknowns=(1, 2))
    assert rs.expected == 4 and rs.complete
    tagged = dict(zip(rs.tags, zip(rs.roots, rs.multiplicities)))
    origin, mult = tagged["singular"]
    assert all(v == 0 for v in origin) and mult == 3
    (x, y), _ = tagged["none"]
    assert abs(x - 0.5) < 1e-40 and abs(y - 0.25) < 1e-40


def test_pt_quartic_leading_order():
    rs = solve_truncation(truncate(tower_for_order(PT_QUARTIC, 4), 4))
    assert rs.complete
    pt = select_physical(rs, "pt_axis")
    target = mpmath.mpc(0, -mpmath.root(mpmath.mpf(3) / 2, 4))
    assert any(abs(z - target) < 1e-30 for z in pt.values())
    vals = rs.values()
    assert _set_distance(vals, [mpmath.mpc(0, 1) * z for z in vals]) < 1e-25


@pytest.mark.parametrize("order", [6, 9])
def test_pt_quartic_cloud_fourfold_symmetry(order):
    rs = solve_truncation(truncate(tower_for_order(PT_QUARTIC, order), order))
    assert rs.complete
    vals = rs.values()
    assert _set_distance(vals, [mpmath.mpc(0, 1) * z for z in vals]) < 1e-20


def test_sextic_three_clusters():
    # each sector pair's G_2 is approached by its own root family, equally well
    theory = get_theory("hermitian_sextic")
    rs = solve_truncation(truncate(tower_for_order(theory, 8), 8))
    assert rs.complete
    errors = []
    for choice in ("real", "rotated_plus", "rotated_minus"):
        ref = closed_form_reference(theory, choice)
        errors.append(abs(nearest_root(rs, ref, 2) - ref) / abs(ref))
    assert errors[0] == pytest.approx(0.0818779612, abs=1e-9)
    assert max(errors) - min(errors) < 1e-12


def test_config_overrides():
    cfg = SolverConfig().with_overrides(precision_bits=128, seed=7)
    assert cfg.precision_bits == 128 and cfg.seed == 7
    with pytest.raises((ContractViolation, TypeError)):
        SolverConfig().with_overrides(bogus=1)
