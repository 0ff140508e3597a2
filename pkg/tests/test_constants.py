import math

import pytest

from noptimal.constants import (
    euler_gamma,
    field_constants,
    gamma_euler_kronecker,
    l_series_at_one,
    paper_constant,
    residue_rho,
)
from noptimal.counting import principal_ideal_sum
from noptimal.ring import get_field


def test_residue_examples():
    assert residue_rho(get_field(-1)).value == pytest.approx(math.pi / 4, rel=1e-14)
    assert residue_rho(get_field(2)).value == pytest.approx(2 * math.log(1 + math.sqrt(2)) / math.sqrt(8))
    assert residue_rho(get_field(1)).value == 1


@pytest.mark.parametrize("d", [-1, 2, -3])
def test_residue_matches_ideal_count(d):
    k = get_field(d)
    res = principal_ideal_sum(k, 10**5, 0)
    assert res.ratio == pytest.approx(1, abs=0.02)
    assert principal_ideal_sum(k, 10**4, 0).ratio == pytest.approx(1, abs=0.01)


def test_residue_against_l_value():
    # the residue is L(1, chi) for quadratic fields
    for d in (-1, -5, 2, 3, 6, -23):
        k = get_field(d)
        L = l_series_at_one(k.disc).L1
        assert residue_rho(k).value == pytest.approx(L.value, abs=10 * L.error + 1e-12)


def test_gamma_values():
    assert euler_gamma().value == pytest.approx(0.5772156649015329, abs=1e-12)
    assert gamma_euler_kronecker(get_field(1)).value == pytest.approx(0.577216, abs=1e-6)
    assert gamma_euler_kronecker(get_field(-1)).value == pytest.approx(0.822826, abs=1e-4)


@pytest.mark.parametrize("d", [1, -1, 2, -3, 5, -7, 13])
def test_dual_routes_agree(d):
    c = field_constants(get_field(d))
    assert abs(c.gamma_k.value - c.secondary_gamma_k) < 1e-4
    assert abs(c.L1.value - c.secondary_L1) < 1e-6


def test_paper_constant():
    pc = paper_constant(get_field(-1))
    assert pc.value == pytest.approx(-2.43876, abs=1e-3)
    assert pc.value == pytest.approx(-math.log(2) - 1.5 - (gamma_euler_kronecker(get_field(-1)).value
                                                          - euler_gamma().value), abs=1e-9)
    assert paper_constant(get_field(1)).value == -1.5


@pytest.mark.parametrize("D", [-4, 8, -3, 5, -23])
def test_error_bounds_are_honest(D):
    q = abs(D)
    full = l_series_at_one(D, periods=200_000 // q)
    half = l_series_at_one(D, periods=100_000 // q)
    assert abs(full.L1.value - half.L1.value) <= full.L1.error + half.L1.error
    assert abs(full.L1prime.value - half.L1prime.value) <= full.L1prime.error + half.L1prime.error


def test_constants_bundle_serializes():
    d = field_constants(get_field(-1)).to_dict()
    assert set(d["routes"]) == {"primary", "secondary"}
    assert d["rho"]["value"] > 0
