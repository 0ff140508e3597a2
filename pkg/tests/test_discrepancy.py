import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noptimal.discrepancy import (
    Surd,
    count_many,
    count_region,
    discrepancy,
    exact_recount,
    find_bad_dilate,
    main_term,
    max_discrepancy_lower,
    period_cell_sample,
    reduce_shift,
)
from noptimal.measures import minimize_energy
from noptimal.regions import Box, Disk, Polygon, unit_measure_disk
from noptimal.ring import get_field

QI, Q2, Q3, QQ = get_field(-1), get_field(2), get_field(-3), get_field(1)
UNIT_DISK = Disk((0.0, 0.0), 1.0)


def _brute_count(k, U, t, v, R=30):
    """Enumerate coefficients directly and test membership point by point."""
    t = np.asarray(t, float)
    v = np.asarray(v, float)
    n = 0
    for a in range(-R, R + 1):
        for b in range(-R, R + 1):
            x = np.asarray(k.embed_many(np.array([a]), np.array([b]))[0])
            if k.is_imaginary:
                z = complex(*(x - v)) / complex(*t)
                y = np.array([z.real, z.imag])
            else:
                y = (x - v) / t
            n += bool(U.contains(y[None, :])[0])
    return n


def test_unit_disk_count_and_discrepancy():
    assert count_region(QI, UNIT_DISK, 1, 0) == 5
    assert discrepancy(QI, UNIT_DISK, 1, 0) == pytest.approx(5 - math.pi, abs=1e-15)
    rc = exact_recount(QI, UNIT_DISK, 1, 0)
    assert rc.count == 5 and rc.exact
    # four of the five points sit on the circle, so v = 0 is not a stable value
    assert not rc.stable


def test_empty_and_null_regions():
    assert count_region(QI, Box((0.2, 0.2), (0.2, 0.2), closed=False), 1, 0) == 0
    point = Box((0.0, 0.0), (0.0, 0.0))
    assert main_term(QI, point, 1) == 0
    assert discrepancy(QI, point, 1, 0) == count_region(QI, point, 1, 0) == 1


def test_real_quadratic_box_against_brute_force():
    B = Box((-1.0, -1.0), (1.0, 1.0))
    for t in [(2.0, 0.5), (3.0, 1.5), (5.0, 0.7)]:
        assert count_region(Q2, B, t, (0.0, 0.0)) == _brute_count(Q2, B, t, (0.0, 0.0))
        assert exact_recount(Q2, B, t, (0.1, -0.2)).count == count_region(Q2, B, t, (0.1, -0.2))


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([-1, -3, 2, 5]), st.floats(0.4, 3.0), st.floats(-1.0, 1.0),
       st.floats(-2, 2), st.floats(-2, 2), st.sampled_from(["disk", "box", "polygon"]))
def test_float_and_exact_routes_agree(d, t1, t2, v1, v2, kind):
    k = get_field(d)
    if not k.is_imaginary and abs(t2) < 0.05:
        t2 = 0.5
    U = {"disk": Disk((0.1, -0.2), 0.8), "box": Box((-0.7, -0.3), (0.5, 0.9)),
         "polygon": Polygon(((-0.8, -0.5), (0.9, -0.4), (0.2, 0.8)))}[kind]
    t, v = (t1, t2), (v1, v2)
    rc = exact_recount(k, U, t, v)
    assert rc.exact
    assert rc.count == count_region(k, U, t, v) == _brute_count(k, U, t, v, R=12)


def test_surd_sign():
    m = 2
    assert Surd(3, -2, m).sign() == 1  # 3 - 2 sqrt 2 > 0
    assert Surd(-3, 2, m).sign() == -1
    assert Surd(1, -1, m).sign() == -1
    assert Surd(0, 0, m).sign() == 0
    assert Surd(4, -2, 4).sign() == 0


def test_mean_discrepancy_is_zero():
    rng = np.random.default_rng(0)
    U = unit_measure_disk(QI)
    vs = period_cell_sample(QI, rng, 10_000)
    D = count_many(QI, U, (3.0, 1.0), vs) - main_term(QI, U, (3.0, 1.0))
    assert abs(D.mean()) <= 3 * D.std() / math.sqrt(len(D))


def test_shift_periodicity():
    rng = np.random.default_rng(1)
    for k in (QI, Q2, Q3):
        U = unit_measure_disk(k)
        for _ in range(350):
            t = rng.uniform(0.5, 3, 2)
            v = rng.uniform(-2, 2, 2)
            a, b = rng.integers(-6, 7, 2)
            x = k.embed_many(np.array([a]), np.array([b]))[0]
            assert discrepancy(k, U, t, v) == discrepancy(k, U, t, v + x)


def test_reduce_shift_is_a_translate():
    rng = np.random.default_rng(2)
    for k in (QI, Q2, QQ):
        U = unit_measure_disk(k) if k.degree == 2 else Box((0.0,), (1.0,))
        for _ in range(20):
            v = rng.uniform(-5, 5, 1 if k.degree == 1 else 2)
            assert count_region(k, U, 2.3, v) == count_region(k, U, 2.3, reduce_shift(k, v))


@pytest.mark.parametrize("k", [QI, Q2])
def test_covolume_sanity(k):
    th = 0.3
    if k.is_imaginary:
        t, norm = (100 * math.cos(th), 100 * math.sin(th)), 1e4
    else:
        t, norm = (100 * math.exp(th), 100 * math.exp(-th)), 1e4
    FB = Box((0.0, 0.0), (1.0, 1.0))
    ratio = count_region(k, FB, t, 0) / norm
    assert ratio == pytest.approx(FB.paper_measure(k) / math.sqrt(abs(k.disc)), rel=0.01)


def test_lower_bound_examples():
    lb = max_discrepancy_lower(QI, UNIT_DISK, 1.0, 512)
    assert lb.value >= 5 - math.pi - 1e-12
    assert lb.witness.N - lb.witness.main_term == pytest.approx(lb.witness.D)
    tiny = Disk((0.0, 0.0), 0.05)
    assert max_discrepancy_lower(QI, tiny, 1.0, 256).value < 1


def test_lower_bound_grows_with_budget():
    U = unit_measure_disk(QI)
    vals = [max_discrepancy_lower(QI, U, (2.7, 0.4), b, seed=3).value for b in (16, 128, 1024)]
    assert vals[0] <= vals[1] <= vals[2]


def test_bad_dilate_for_unit_disk():
    r = find_bad_dilate(QI, unit_measure_disk(QI), budget=10**6)
    w = r.witness
    assert w is not None and w.exact_recount and w.stable
    assert abs(w.D) > 1 + 1e-6
    # recount from the emitted JSON alone
    data = json.loads(w.to_json())
    assert set(data) >= {"t", "v", "N", "main_term", "D"}
    assert count_region(QI, unit_measure_disk(QI), data["t"], data["v"]) == data["N"]


def test_bad_dilate_for_real_minimizer():
    U = minimize_energy(Q2, 96).grid.as_region()
    r = find_bad_dilate(Q2, U, budget=50_000)
    assert r.witness is not None and r.witness.stable and abs(r.witness.D) > 1


def test_fundamental_box_at_unit_dilation():
    # a fundamental cell tiles V under O_k, so for generic v it holds one lattice point
    U = Box((0.0, 0.0), (1.0, 1.0))
    rng = np.random.default_rng(4)
    for v in rng.uniform(-3, 3, (200, 2)):
        assert discrepancy(QI, U, 1.0, v) == pytest.approx(0.0, abs=1e-12)


def test_fundamental_box_has_bad_dilates():
    # other dilations of the same cell do exceed 1
    s = math.sqrt(0.5)
    r = find_bad_dilate(QI, Box((0.0, 0.0), (s, s)), budget=20_000)
    assert r.witness is not None and abs(r.witness.D) > 1


def test_search_refuses_rationals_and_exhausts_honestly():
    with pytest.raises(ValueError):
        find_bad_dilate(QQ, Box((0.0,), (1.0,)))
    r = find_bad_dilate(QI, Disk((0.0, 0.0), 0.01), budget=64)
    assert r.exhausted or abs(r.witness.D) > 1
    assert r.to_dict()["status"] in ("found", "exhausted")


def test_invalid_dilation():
    with pytest.raises(ValueError):
        count_region(Q2, UNIT_DISK, (1.0, 0.0), 0)
