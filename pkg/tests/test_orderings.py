import math
import random

import pytest

from noptimal.errors import InvariantError
from noptimal.orderings import (
    AMBIENT,
    FactoredIdeal,
    factorial_norm_log,
    factorial_product_squared,
    generalized_factorial,
    legendre_exponent,
    p_ordering,
    revlex_key,
)
from noptimal.ring import RingElement, factor_rational_prime, get_field, primes_up_to_norm

E = RingElement


def test_p_ordering_examples():
    Q = get_field(1)
    two = factor_rational_prime(Q, 2)[0]
    assert p_ordering(Q, AMBIENT, two, 4).valuations[4] == 3
    k = get_field(-1)
    P = factor_rational_prime(k, 2)[0]
    assert p_ordering(k, AMBIENT, P, 2).valuations[2] == 1
    assert p_ordering(k, [E(3, 4)], P, 0).valuations == (0,)


def test_set_too_small():
    Q = get_field(1)
    with pytest.raises(ValueError):
        p_ordering(Q, [E(0, 0), E(1, 0)], factor_rational_prime(Q, 2)[0], 2)


def test_tie_break_independence_random():
    rng = random.Random(7)
    for _ in range(200):
        d = rng.choice([1, -1, 2, -3, 5, 7])
        k = get_field(d)
        n = rng.randint(0, 8)
        pts = set()
        while len(pts) < n + 1 + rng.randint(0, 5):
            pts.add(E(rng.randint(-9, 9), rng.randint(-9, 9) if k.degree == 2 else 0))
        P = rng.choice(primes_up_to_norm(k, 25))
        a = p_ordering(k, pts, P, n, check_tie_break=True)
        b = p_ordering(k, pts, P, n, key=revlex_key, check_tie_break=False)
        assert a.valuations == b.valuations
        assert a.valuations[0] == 0


def test_tie_break_mismatch_is_reported(monkeypatch):
    # a deliberately broken valuation makes the two tie-break orders disagree
    import noptimal.orderings as mod
    Q = get_field(1)
    P = factor_rational_prime(Q, 2)[0]
    real = mod.valuation

    def skewed(k, x, P):
        v = real(k, x, P)
        return v if v is mod.INF else v + 3 * (x[0] > 0)

    monkeypatch.setattr(mod, "valuation", skewed)
    with pytest.raises(InvariantError):
        p_ordering(Q, [E(0, 0), E(1, 0), E(2, 0), E(-1, 0)], P, 2)


@pytest.mark.parametrize("p", [2, 3, 5, 7, 11, 13])
def test_ambient_rational_matches_legendre(p):
    Q = get_field(1)
    (P,) = factor_rational_prime(Q, p)
    vals = p_ordering(Q, AMBIENT, P, 60).valuations
    assert list(vals) == [legendre_exponent(p, n) for n in range(61)]


@pytest.mark.parametrize("d", [-1, -3, 2, 5, 7, -5])
def test_ambient_quadratic_closed_form(d):
    # v(P, n) = sum_j floor(n / N(P)^j) for the whole ring of integers
    k = get_field(d)
    for P in primes_up_to_norm(k, 20):
        vals = p_ordering(k, AMBIENT, P, 20).valuations
        assert list(vals) == [legendre_exponent(P.norm, n) for n in range(21)]


def test_generalized_factorial_examples():
    Q = get_field(1)
    assert generalized_factorial(Q, 0).is_unit_ideal()
    assert generalized_factorial(Q, 4).norm == 24
    assert all(generalized_factorial(Q, n).norm == math.factorial(n) for n in range(15))
    k = get_field(-1)
    f2 = generalized_factorial(k, 2)
    assert f2.norm == 2 and len(f2.exponents) == 1
    assert f2.exponents[0][0].kind == "ramified"


@pytest.mark.parametrize("d", [-1, 2, -3, 3])
def test_factorial_prime_support(d):
    k = get_field(d)
    for n in range(1, 25):
        for P, e in generalized_factorial(k, n).exponents:
            assert P.norm <= n and e > 0


def test_factorial_product_squared():
    Q = get_field(1)
    assert factorial_product_squared(Q, 2).norm == 4
    expected = 1
    for m in range(7):
        expected *= math.factorial(m) ** 2
    assert factorial_product_squared(Q, 6).norm == expected


def test_factorial_norm_log():
    Q = get_field(1)
    assert factorial_norm_log(Q, 10).log_norm == pytest.approx(math.log(math.factorial(10)))
    assert factorial_norm_log(Q, 1).log_norm == 0
    k = get_field(-1)
    logs = [factorial_norm_log(k, n).log_norm for n in range(1, 30)]
    assert all(a <= b for a, b in zip(logs, logs[1:]))
    ratios = [factorial_norm_log(k, n).excess_ratio for n in range(2, 30)]
    # bounded excess over n log n
    assert max(ratios) < 2


def test_factored_ideal_algebra():
    k = get_field(-1)
    a = generalized_factorial(k, 5)
    b = generalized_factorial(k, 3)
    assert (a * b).norm == a.norm * b.norm
    assert (a**3).norm == a.norm**3
    with pytest.raises(ValueError):
        FactoredIdeal.from_dict({a.exponents[0][0]: -1})
