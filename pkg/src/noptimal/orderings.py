"""Greedy p-orderings, the invariants v_S(P, n) and generalized factorials."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

from sympy import primerange

from .errors import InvariantError
from .ring import (
    INF,
    PrimeIdeal,
    QuadraticField,
    RingElement,
    factor_rational_prime,
    prime_power,
    valuation,
)

AMBIENT = "ambient"


@dataclass(frozen=True)
class POrderingResult:
    sequence: tuple[RingElement, ...]
    valuations: tuple[int, ...]
    modulus_exponent: int | None = None  # L used for ambient candidates


@dataclass(frozen=True)
class FactoredIdeal:
    """A product of prime ideals; exponents are positive."""

    exponents: tuple[tuple[PrimeIdeal, int], ...] = ()

    @classmethod
    def from_dict(cls, exps: dict) -> "FactoredIdeal":
        items = [(P, e) for P, e in exps.items() if e]
        if any(e < 0 for _, e in items):
            raise ValueError("negative exponent in an integral ideal")
        return cls(tuple(sorted(items, key=lambda item: item[0].sort_key)))

    def as_dict(self) -> dict:
        return dict(self.exponents)

    @property
    def norm(self) -> int:
        out = 1
        for P, e in self.exponents:
            out *= P.norm**e
        return out

    def log_norm(self) -> float:
        return math.fsum(e * math.log(P.norm) for P, e in self.exponents)

    def is_unit_ideal(self) -> bool:
        return not self.exponents

    def __mul__(self, other: "FactoredIdeal") -> "FactoredIdeal":
        out = self.as_dict()
        for P, e in other.exponents:
            out[P] = out.get(P, 0) + e
        return FactoredIdeal.from_dict(out)

    def __pow__(self, n: int) -> "FactoredIdeal":
        return FactoredIdeal.from_dict({P: e * n for P, e in self.exponents})


def lex_key(x: RingElement):
    return (x[0], x[1])


def revlex_key(x: RingElement):
    return (-x[0], -x[1])


def _greedy(k, candidates, P, n, key):
    """Greedy minimisation over a fixed candidate list."""
    cands = sorted(set(RingElement(*c) for c in candidates), key=key)
    cost = {c: 0 for c in cands}
    seq, vals = [], []
    for _ in range(n + 1):
        best, best_val = None, INF
        for c in cands:
            v = cost[c]
            if v is not INF and (best_val is INF or v < best_val):
                best, best_val = c, v
        if best is None:
            raise ValueError("set too small for the requested length")
        seq.append(best)
        vals.append(best_val)
        for c in cands:
            if cost[c] is INF:
                continue
            v = valuation(k, k.sub(best, c), P)
            cost[c] = INF if v is INF else cost[c] + v
    return seq, vals


def p_ordering(k: QuadraticField, S, P: PrimeIdeal, n: int,
               key: Callable = lex_key, check_tie_break: bool = True) -> POrderingResult:
    """A P-ordering of length n+1 in S (a finite set, or AMBIENT for O_k).

    Ties are broken by the smallest ``key``.  With ``check_tie_break`` the
    run is repeated under the reversed order and the valuation lists must
    agree.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    ambient = isinstance(S, str) and S == AMBIENT
    if not ambient:
        S = [RingElement(*s) for s in S]
        if len(set(S)) < n + 1:
            raise ValueError(f"S has fewer than n+1 = {n + 1} distinct elements")
        result = POrderingResult(*map(tuple, _greedy(k, S, P, n, key)))
        candidates = S
    else:
        result, candidates, _ = _ambient(k, P, n, key)
    if check_tie_break:
        other_key = revlex_key if key is lex_key else lex_key
        other = _greedy(k, candidates, P, n, other_key)[1]
        if tuple(other) != result.valuations:
            raise InvariantError(f"p-ordering valuations depend on tie-breaking at {P.describe()}")
    return result


def _ambient(k, P, n, key):
    # Greedy prefixes are almost uniform mod every P^j, so a minimiser can
    # always be taken in a class mod P^L not yet used once N(P)^L > n.
    L = 1
    while P.norm**L <= n:
        L += 1
    reps = list(prime_power(k, P, L).representatives())
    seq, vals = _greedy(k, reps, P, n, key)
    return POrderingResult(tuple(seq), tuple(vals), L), reps, L


@lru_cache(maxsize=4096)
def ambient_valuations(k: QuadraticField, P: PrimeIdeal, n: int) -> tuple[int, ...]:
    """(v_{O_k}(P, m) for m = 0..n) from one ambient greedy run."""
    return p_ordering(k, AMBIENT, P, n, check_tie_break=False).valuations


def _primes_with_norm_at_most(k: QuadraticField, n: int):
    for p in primerange(2, n + 1):
        for P in factor_rational_prime(k, int(p)):
            if P.norm <= n:
                yield P


@lru_cache(maxsize=4096)
def generalized_factorial(k: QuadraticField, n: int) -> FactoredIdeal:
    """n!_k as a factored ideal: exponent of P is v_{O_k}(P, n)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    exps = {}
    for P in _primes_with_norm_at_most(k, n):
        v = ambient_valuations(k, P, n)[n]
        if v:
            exps[P] = v
    return FactoredIdeal.from_dict(exps)


@lru_cache(maxsize=512)
def factorial_product_squared(k: QuadraticField, n: int) -> FactoredIdeal:
    """prod_{m=0}^{n} (m!_k)^2."""
    exps = {}
    for P in _primes_with_norm_at_most(k, n):
        vals = ambient_valuations(k, P, n)
        total = 2 * sum(vals)
        if total:
            exps[P] = total
    return FactoredIdeal.from_dict(exps)


@dataclass(frozen=True)
class FactorialLog:
    log_norm: float
    excess_ratio: float  # (log N(n!_k) - n log n)/n


def factorial_norm_log(k: QuadraticField, n: int) -> FactorialLog:
    if n < 1:
        raise ValueError("n must be at least 1")
    norm = generalized_factorial(k, n).norm
    value = math.log(norm)
    return FactorialLog(value, (value - n * math.log(n)) / n)


def legendre_exponent(p: int, n: int) -> int:
    """sum_{j>=1} floor(n / p^j)."""
    total, q = 0, p
    while q <= n:
        total += n // q
        q *= p
    return total
