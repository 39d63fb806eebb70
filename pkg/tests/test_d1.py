import mpmath
import pytest

from dstower.d1 import REFERENCE_GAPS, d1_leading_mass, d1_residuals
from dstower.errors import ContractViolation


def test_hermitian_mass():
    res = d1_leading_mass("hermitian")
    assert abs(res.mass - mpmath.mpf("1.14471424255333")) < 1e-13
    assert abs(res.percent_error - mpmath.mpf("5.2127")) < 1e-3
    assert res.g1 is None


def test_pt_mass_and_one_point_function():
    res = d1_leading_mass("pt")
    assert abs(res.mass - mpmath.mpf("1.44224957030741")) < 1e-13
    assert abs(res.percent_error - mpmath.mpf("-19.6966")) < 1e-3
    assert abs(res.g1 - mpmath.mpc(0, "-1.01982445132775")) < 1e-13
    assert abs(res.g2_zero - mpmath.mpf("0.346680637175317")) < 1e-14


@pytest.mark.parametrize("tag", ["hermitian", "pt"])
def test_closed_form_solves_the_system(tag):
    res = d1_leading_mass(tag, precision=200)
    with mpmath.workprec(200):
        assert max(abs(r) for r in res.residuals) < mpmath.mpf(10) ** -55


def test_newton_from_a_rough_guess_lands_on_the_closed_form():
    # solve the PT system numerically, independently of the elimination
    with mpmath.workprec(128):
        def f(m, g2, g1):
            return d1_residuals("pt", m, g2, g1)

        m, g2, g1 = mpmath.findroot(f, (mpmath.mpf("1.4"), mpmath.mpf("0.3"), mpmath.mpc(0, -1)))
        exact = d1_leading_mass("pt")
        assert abs(m - exact.mass) < 1e-30
        assert abs(g1 - exact.g1) < 1e-30

        def h(m, g2):
            return d1_residuals("hermitian", m, g2)

        m, _ = mpmath.findroot(h, (mpmath.mpf(1), mpmath.mpf("0.5")))
        assert abs(m - d1_leading_mass("hermitian").mass) < 1e-30


def test_reference_gaps_and_contracts():
    assert set(REFERENCE_GAPS) == {"hermitian", "pt"}
    with pytest.raises(ContractViolation):
        d1_leading_mass("sextic")
    with pytest.raises(ContractViolation):
        d1_residuals("sextic", 1, 1)
    d = d1_leading_mass("pt").to_dict()
    assert d["reference_source"] == "quoted constant"
    assert float(d["percent_error"]) == pytest.approx(-19.6966, abs=1e-3)
