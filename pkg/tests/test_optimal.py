import itertools
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noptimal.errors import CapExceededError, ParseError
from noptimal.optimal import (
    canonical_form,
    certify_brute_force,
    certify_n_optimal,
    certify_via_volume,
    cylinder_hull,
    is_almost_uniform,
    lower_volume_bound_check,
    minimal_enclosing_circle,
    pairwise_log_bound,
    recount_witness,
    search_n_optimal,
    volume,
)
from noptimal.ring import RingElement, factor_rational_prime, get_field, units_in_box

E = RingElement
Q, QI = get_field(1), get_field(-1)


def ints(*xs):
    return [E(x, 0) for x in xs]


def test_is_almost_uniform_examples():
    two = factor_rational_prime(Q, 2)[0]
    res = is_almost_uniform(Q, ints(0, 1, 2, 3), two, 1)
    assert res.ok and sorted(res.histogram.values()) == [2, 2]
    res = is_almost_uniform(Q, ints(0, 2), two, 1)
    assert not res.ok and res.max_count == 2 and res.min_count == 0
    P = factor_rational_prime(QI, 2)[0]
    res = is_almost_uniform(QI, [E(0, 0), E(1, 0), E(1, 1)], P, 1)
    assert res.ok and sorted(res.histogram.values()) == [1, 2]
    with pytest.raises(CapExceededError):
        is_almost_uniform(QI, [E(0, 0)], P, 40, cap=10**6)


def test_certify_examples():
    assert certify_n_optimal(Q, ints(0, 1, 2, 3, 4, 5)).optimal
    assert certify_n_optimal(QI, [E(0, 0), E(1, 0), E(1, 1)]).optimal
    v = certify_n_optimal(Q, ints(0, 1, 3))
    assert v.status == "fails"
    w = v.witness
    assert w.prime.p == 3 and w.exponent == 1
    assert (w.crowded_count, w.sparse_count) == (2, 0)
    assert recount_witness(Q, ints(0, 1, 3), w) == 2
    with pytest.raises(ValueError):
        certify_n_optimal(Q, ints(0, 0))


def test_volume_examples():
    assert volume(Q, ints(0, 1, 2)).ideal.norm == 4
    assert volume(Q, ints(0, 1, 2)).generator == E(-4, 0)
    assert volume(Q, ints(5)).ideal.is_unit_ideal()
    vol = volume(QI, [E(0, 0), E(1, 0), E(1, 1)])
    assert vol.ideal.norm == 4 and QI.abs_norm(vol.generator) == 4
    assert QI.exact_div(vol.generator, E(0, 2)) in set(QI.torsion)
    with pytest.raises(ValueError):
        volume(Q, ints(1, 1))


def test_certify_via_volume_examples():
    assert certify_via_volume(Q, ints(0, 1, 2))
    assert certify_via_volume(QI, [E(0, 0), E(1, 0), E(1, 1)])
    assert not certify_via_volume(Q, ints(0, 1, 3))
    assert volume(Q, ints(0, 1, 3)).ideal.norm == 36


def test_lower_volume_bound():
    r = lower_volume_bound_check(Q, ints(0, 2, 4))
    assert r.holds and math.exp(r.log_volume) == pytest.approx(256)
    assert lower_volume_bound_check(Q, ints(3)).holds
    rng = random.Random(11)
    for _ in range(500):
        size = rng.randint(1, 6)
        F = set()
        while len(F) < size:
            F.add(E(rng.randint(-10, 10), rng.randint(-10, 10)))
        assert lower_volume_bound_check(QI, list(F)).holds


def _random_set(rng, k, size, box=6):
    S = set()
    while len(S) < size:
        S.add(E(rng.randint(-box, box), rng.randint(-box, box) if k.degree == 2 else 0))
    return list(S)


@pytest.mark.parametrize("d", [1, -1, 2, -3])
def test_routes_agree_random(d):
    k = get_field(d)
    rng = random.Random(d)
    for _ in range(300):
        S = _random_set(rng, k, rng.randint(2, 6))
        assert certify_n_optimal(k, S).optimal == certify_via_volume(k, S)


@pytest.mark.parametrize("d", [-1, 2, -3, 5])
def test_certifiers_invariant_under_affine_unit_maps(d):
    k = get_field(d)
    rng = random.Random(100 + d)
    units = units_in_box(k, 2)
    base = [S for S in (_random_set(rng, k, rng.randint(2, 5), 3) for _ in range(60))]
    base += [S for S in search_n_optimal(k, 2, 3).sets]
    for i in range(100):
        S = base[i % len(base)]
        u = rng.choice(units)
        c = E(rng.randint(-9, 9), rng.randint(-9, 9))
        T = [k.add(k.mul(u, x), c) for x in S]
        assert certify_n_optimal(k, T).optimal == certify_n_optimal(k, S).optimal
        assert certify_via_volume(k, T) == certify_via_volume(k, S)


@pytest.mark.parametrize("d", [1, -1, 2, -3, -7])
def test_witness_soundness(d):
    k = get_field(d)
    rng = random.Random(d + 50)
    for _ in range(200):
        S = _random_set(rng, k, rng.randint(2, 6))
        v = certify_n_optimal(k, S)
        if not v.optimal:
            assert recount_witness(k, S, v.witness) >= 2


@pytest.mark.parametrize("d", [1, -1, 2, -3])
def test_finite_reduction_matches_brute_force(d):
    k = get_field(d)
    rng = random.Random(d + 99)
    for _ in range(60):
        S = _random_set(rng, k, rng.randint(2, 6), 4)
        assert certify_n_optimal(k, S).optimal == certify_brute_force(k, S, 10**4 if k.degree == 1 else 400)


def test_brute_force_catches_large_prime_powers():
    # 0 and 1024 collide mod 2^10; only the finite list with exponent 11 sees it
    S = ints(0, 1, 1024)
    assert not certify_n_optimal(Q, S).optimal
    assert not certify_brute_force(Q, S, 10**4)


def test_search_examples():
    assert search_n_optimal(get_field(7), 2, 8).sets == []
    res = search_n_optimal(Q, 3, 10)
    assert res.complete
    assert any(set(canonical_form(Q, S)) == set(canonical_form(Q, ints(0, 1, 2, 3))) for S in res.sets)
    raw = search_n_optimal(QI, 2, 4, normalize=False)
    assert any(set(S) == {E(0, 0), E(1, 0), E(1, 1)} for S in raw.sets)
    norm = search_n_optimal(QI, 2, 4)
    target = canonical_form(QI, [E(0, 0), E(1, 0), E(1, 1)])
    assert [canonical_form(QI, S) for S in norm.sets] == [target]


@pytest.mark.parametrize("d, expect", [(-2, False), (-11, False), (7, False), (-1, True),
                                       (-3, True), (2, True), (3, True), (5, True), (-7, True), (17, True)])
def test_two_optimal_existence_pattern(d, expect):
    assert bool(search_n_optimal(get_field(d), 2, 5).sets) == expect


def test_search_results_certified_and_resumable():
    full = search_n_optimal(QI, 3, 3)
    assert full.complete
    for S in full.sets:
        assert certify_n_optimal(QI, S).optimal and certify_via_volume(QI, S)
    part = search_n_optimal(QI, 3, 3, node_cap=50)
    assert not part.complete and part.resume_token
    collected = {canonical_form(QI, S) for S in part.sets}
    token = part.resume_token
    while token:
        nxt = search_n_optimal(QI, 3, 3, node_cap=50, resume_token=token)
        collected |= {canonical_form(QI, S) for S in nxt.sets}
        token = nxt.resume_token
    assert collected == {canonical_form(QI, S) for S in full.sets}
    with pytest.raises(ParseError):
        search_n_optimal(QI, 2, 3, resume_token=token or "{bad")


def test_pairwise_log_bound():
    assert pairwise_log_bound(Q, ints(*range(11))) == pytest.approx(0.0)
    assert pairwise_log_bound(Q, ints(0, 1)) == 0.0
    assert pairwise_log_bound(QI, [E(0, 0), E(1, 0), E(1, 1)]) == pytest.approx(math.log(2) - math.log(2))


def test_cylinder_hull():
    h = cylinder_hull(Q, ints(*range(11)))
    assert h.volume == pytest.approx(10) and h.ratio == pytest.approx(10 / 11)
    assert cylinder_hull(Q, ints(4)).volume == 0
    h = cylinder_hull(QI, [E(0, 0), E(1, 0), E(1, 1)])
    assert h.cylinder.radii[0] == pytest.approx(math.sqrt(0.5))
    h2 = cylinder_hull(get_field(2), [E(0, 0), E(1, 1)])
    assert h2.volume == pytest.approx(abs(1 + math.sqrt(2)) * abs(1 - math.sqrt(2)))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(-20, 20), st.integers(-20, 20)), min_size=1, max_size=25))
def test_minimal_enclosing_circle_against_pair_and_triple_oracle(pts):
    (cx, cy), r = minimal_enclosing_circle(pts)
    assert all(math.dist((cx, cy), p) <= r + 1e-7 for p in pts)
    # the optimum is never worse than the best diametral circle of any covering pair
    best = math.inf
    for p, q in itertools.combinations_with_replacement(set(pts), 2):
        c = ((p[0] + q[0]) / 2, (p[1] + q[1]) / 2)
        rr = math.dist(c, p)
        if all(math.dist(c, s) <= rr + 1e-9 for s in pts):
            best = min(best, rr)
    assert r <= best + 1e-7
