import math

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dstower.errors import ContractViolation, QuadratureError
from dstower.oracle import (
    ContourSpec,
    closed_form_reference,
    connected_to_moments,
    contour_for,
    exact_greens,
    moment,
    moments_to_connected,
    sector_centers,
)
from dstower.tower import get_theory, higher_greens_from_seed, tower_for_order

# quadrature reference values for G_1 or G_2 on each named sector pair
CASES = [
    ("hermitian_quartic", "real", 2, mpmath.mpc("0.675978240067285")),
    ("pt_cubic", "pt", 1, mpmath.mpc(0, "-0.729011132947227")),
    ("pt_quartic", "pt", 1, mpmath.mpc(0, "-0.977741067446924")),
    ("pt_quintic", "pt_upper", 1, mpmath.mpc(0, "0.412008933217")),
    ("pt_quintic", "pt_lower", 1, mpmath.mpc(0, "-1.07865339083")),
    ("hermitian_sextic", "real", 2, mpmath.mpc("0.578616519668")),
    ("hermitian_sextic", "rotated_plus", 2, mpmath.mpc("-0.289308259834", "0.501096605082")),
    ("hermitian_sextic", "rotated_minus", 2, mpmath.mpc("-0.289308259834", "-0.501096605082")),
]


@pytest.mark.parametrize("name,choice,index,value", CASES)
def test_quadrature_matches_closed_form(name, choice, index, value):
    theory = get_theory(name)
    g = exact_greens(theory, index, contour=contour_for(theory, choice), precision=160)
    ref = closed_form_reference(theory, choice)
    assert abs(g[index] - ref) < 1e-30
    assert abs(g[index] - value) < 1e-11


def test_rotated_sextic_is_real_value_times_cube_root_of_unity():
    real = closed_form_reference("hermitian_sextic", "real")
    plus = closed_form_reference("hermitian_sextic", "rotated_plus")
    with mpmath.workprec(128):
        assert abs(plus - real * mpmath.expjpi(mpmath.mpf(2) / 3)) < 1e-30
        # so the real part is exactly -G_2/2
        assert abs(plus.real + real.real / 2) < 1e-30


def test_sector_centres():
    cubic = sector_centers(get_theory("pt_cubic"))
    assert cubic == pytest.approx([-5 * math.pi / 6, -math.pi / 6, math.pi / 2])
    quartic = sector_centers(get_theory("hermitian_quartic"))
    assert quartic == pytest.approx([-math.pi / 2, 0, math.pi / 2, math.pi])


def test_contour_outside_sector_is_rejected():
    cubic = get_theory("pt_cubic")
    with pytest.raises(QuadratureError):
        moment(cubic, ContourSpec(cubic, (math.pi, 0.0)), 1)
    with pytest.raises(ContractViolation):
        ContourSpec(cubic, (0.5, 0.5))
    with pytest.raises(ContractViolation):
        contour_for(cubic, "real")


def test_parity_contour_gives_vanishing_odd_cumulants():
    g = exact_greens(get_theory("hermitian_quartic"), 9, precision=160)
    for k in (1, 3, 5, 7, 9):
        assert abs(g[k]) < 1e-40


def test_pt_contour_gives_pt_phases():
    # PT symmetry: G_n real for even n, imaginary for odd n
    g = exact_greens(get_theory("pt_cubic"), 12, precision=160)
    for k, v in g.items():
        small = abs(v.imag) if k % 2 == 0 else abs(v.real)
        assert small < 1e-30 * max(1, abs(v))


@given(st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=9))
def test_moment_cumulant_round_trip(cumulants):
    n = len(cumulants)
    with mpmath.workprec(160):
        greens = [mpmath.mpc(c) for c in cumulants]
        moments = connected_to_moments(greens, n)
        back = moments_to_connected(moments, n)
    scale = max(1, max(abs(m) for m in moments))
    for a, b in zip(greens, back):
        assert abs(a - b) < 1e-35 * scale


def test_gaussian_moments():
    # cumulants (0, 1, 0, 0, ...) are the standard normal: moments (2k-1)!!
    moments = connected_to_moments([0, 1] + [0] * 6, 8)
    evens = [moments[k] for k in (2, 4, 6, 8)]
    assert [int(m) for m in evens] == [1, 3, 15, 105]


def test_quartic_high_cumulants():
    g = exact_greens(get_theory("hermitian_quartic"), 22)
    assert float(g[20].real) == pytest.approx(-4278841318.74, rel=1e-11)
    assert float(g[22].real) == pytest.approx(301366607265.0, rel=1e-11)


def test_cubic_high_cumulants_three_routes():
    # quadrature, tower forward-substitution from the Gamma-form G_1, and
    # Taylor coefficients of the generating function x Ai'(-x)/Ai(-x)
    cubic = get_theory("pt_cubic")
    with mpmath.workprec(512):
        quad = exact_greens(cubic, 15, precision=512)
        g1 = closed_form_reference(cubic, precision=512)
        tower = higher_greens_from_seed(tower_for_order(cubic, 15), {1: g1})
        # Z(J) is proportional to Ai(iJ), so G_n = i^n (log Ai)^(n)(0)
        airy = mpmath.taylor(lambda x: mpmath.log(mpmath.airyai(x)), 0, 15)
        for k in (1, 14, 15):
            via_airy = mpmath.mpc(0, 1) ** k * airy[k] * mpmath.factorial(k)
            assert abs(quad[k] - tower[k]) < mpmath.mpf(10) ** -100 * abs(quad[k])
            assert abs(quad[k] - via_airy) < mpmath.mpf(10) ** -60 * abs(quad[k])
    assert complex(quad[14]) == pytest.approx(42692.808566519744, rel=1e-14)
    assert complex(quad[15]) == pytest.approx(-255589.02324767778j, rel=1e-14)


def test_printed_cubic_cumulants_come_from_truncated_g1():
    # forward-substituting the 8-digit G_1 reproduces the printed G_14, G_15
    cubic = get_theory("pt_cubic")
    with mpmath.workprec(256):
        tower = higher_greens_from_seed(tower_for_order(cubic, 15),
                                        {1: mpmath.mpc(0, "-0.72901113")})
    assert complex(tower[14]).real == pytest.approx(42692.806116, abs=2e-6)
    assert complex(tower[15]).imag == pytest.approx(-255589.034701, abs=2e-6)
