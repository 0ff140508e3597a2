"""Exact arithmetic in the ring of integers of a quadratic field (or of Z).

An element is a pair ``(a, b)`` meaning ``a + b*w`` where ``w = sqrt(d)``
for ``d = 2, 3 mod 4`` and ``w = (1 + sqrt(d))/2`` for ``d = 1 mod 4``.
The minimal polynomial of ``w`` is ``X^2 - t X - m`` with
``(t, m) = (0, d)`` or ``(1, (d - 1)/4)``.  ``d = 1`` encodes Q itself,
in which case ``b`` is always zero.

The space V is R x R for real quadratic fields (coordinates are the two
real embeddings), C for imaginary quadratic fields, and R for Q.  Volumes
on a complex coordinate follow the convention that the measure is twice
the planar Lebesgue measure, so O_k has covolume sqrt(|disc|).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np
from sympy import factorint, isprime, jacobi_symbol
from sympy.ntheory import sqrt_mod

from .errors import CapExceededError, ParseError

MAX_ABS_D = 10**6
DEFAULT_RESIDUE_CAP = 10**6
DEFAULT_ENUM_CAP = 5 * 10**7


class RingElement(NamedTuple):
    a: int
    b: int = 0


ZERO = RingElement(0, 0)
ONE = RingElement(1, 0)
W = RingElement(0, 1)


class _Infinity:
    """Valuation of zero.  Compares above every integer; refuses arithmetic."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("valuation-infinity")

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True

    def _refuse(self, *_):
        raise TypeError("arithmetic with the valuation of zero is undefined")

    __add__ = __radd__ = __sub__ = __rsub__ = __mul__ = __rmul__ = _refuse


INF = _Infinity()


def _is_squarefree(d: int) -> bool:
    return all(e == 1 for e in factorint(abs(d)).values())


def kronecker_symbol(D: int, n: int) -> int:
    """Kronecker symbol (D/n) for n >= 0 and D = 0, 1 mod 4."""
    if n == 0:
        return 1 if abs(D) == 1 else 0
    result = 1
    while n % 2 == 0:
        n //= 2
        if D % 2 == 0:
            return 0
        result *= 1 if D % 8 in (1, 7) else -1
    if n == 1:
        return result
    return result * jacobi_symbol(D % n, n)


class QuadraticField:
    """The field Q(sqrt d) together with the invariants of its ring of integers."""

    def __init__(self, d: int):
        if not isinstance(d, (int, np.integer)) or d == 0:
            raise ParseError(f"d must be a nonzero integer, got {d!r}")
        d = int(d)
        if abs(d) > MAX_ABS_D:
            raise CapExceededError(f"|d| = {abs(d)} exceeds the supported bound {MAX_ABS_D}")
        if d != 1 and not _is_squarefree(d):
            raise ParseError(f"d = {d} is not squarefree")
        self.d = d
        if d == 1:
            self.degree, self.disc, self.t, self.m = 1, 1, 0, 0
            self.signature = (1, 0)
        else:
            self.degree = 2
            if d % 4 == 1:
                self.disc, self.t, self.m = d, 1, (d - 1) // 4
            else:
                self.disc, self.t, self.m = 4 * d, 0, d
            self.signature = (2, 0) if d > 1 else (0, 1)
        self.torsion_units = {-1: 4, -3: 6}.get(d, 2)

    # identity -------------------------------------------------------------
    def __eq__(self, other):
        return isinstance(other, QuadraticField) and other.d == self.d

    def __hash__(self):
        return hash(("QuadraticField", self.d))

    def __repr__(self):
        return f"QuadraticField({self.d})"

    @property
    def spec(self) -> str:
        if self.d == 1:
            return "Q"
        if self.d == -1:
            return "Q(i)"
        return f"Q(sqrt:{self.d})"

    @property
    def is_rational(self) -> bool:
        return self.d == 1

    @property
    def is_real(self) -> bool:
        return self.d > 1

    @property
    def is_imaginary(self) -> bool:
        return self.d < 0

    @property
    def omega_description(self) -> str:
        if self.d == 1:
            return "Z (no generator)"
        if self.t == 1:
            return f"w = (1 + sqrt({self.d}))/2"
        return f"w = sqrt({self.d})"

    # embeddings of w --------------------------------------------------------
    @cached_property
    def omega_real(self) -> tuple[float, float]:
        r = math.sqrt(self.d)
        return ((1 + r) / 2, (1 - r) / 2) if self.t == 1 else (r, -r)

    @cached_property
    def omega_complex(self) -> complex:
        r = math.sqrt(-self.d)
        return complex(0.5, r / 2) if self.t == 1 else complex(0.0, r)

    # arithmetic -----------------------------------------------------------
    def add(self, x, y) -> RingElement:
        return RingElement(x[0] + y[0], x[1] + y[1])

    def sub(self, x, y) -> RingElement:
        return RingElement(x[0] - y[0], x[1] - y[1])

    def neg(self, x) -> RingElement:
        return RingElement(-x[0], -x[1])

    def mul(self, x, y) -> RingElement:
        a, b = x
        c, e = y
        be = b * e
        return RingElement(a * c + be * self.m, a * e + b * c + be * self.t)

    def scale(self, x, c: int) -> RingElement:
        return RingElement(x[0] * c, x[1] * c)

    def conj(self, x) -> RingElement:
        return RingElement(x[0] + x[1] * self.t, -x[1])

    def norm(self, x) -> int:
        a, b = x
        if self.degree == 1:
            return a
        return a * a + a * b * self.t - b * b * self.m

    def abs_norm(self, x) -> int:
        return abs(self.norm(x))

    def trace(self, x) -> int:
        if self.degree == 1:
            return x[0]
        return 2 * x[0] + x[1] * self.t

    def exact_div(self, x, y) -> RingElement | None:
        """Return x / y when it lies in O_k, else None.  y must be nonzero."""
        n = self.norm(y)
        if n == 0:
            raise ZeroDivisionError("division by zero element")
        num = self.mul(x, self.conj(y)) if self.degree == 2 else RingElement(x[0], 0)
        if num[0] % n or num[1] % n:
            return None
        return RingElement(num[0] // n, num[1] // n)

    def power(self, x, e: int) -> RingElement:
        if e < 0:
            raise ValueError("negative power of a general element")
        result, base = ONE, RingElement(*x)
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    def is_unit(self, x) -> bool:
        return abs(self.norm(x)) == 1

    def unit_inverse(self, u) -> RingElement:
        n = self.norm(u)
        if abs(n) != 1:
            raise ValueError(f"{u} is not a unit")
        if self.degree == 1:
            return RingElement(u[0], 0)
        return self.scale(self.conj(u), n)

    def embed(self, x) -> tuple:
        """Coordinates of x in V: (s1, s2) real, (z,) complex, (a,) for Q."""
        a, b = x
        if self.degree == 1:
            return (float(a),)
        if self.is_imaginary:
            return (a + b * self.omega_complex,)
        w1, w2 = self.omega_real
        s1, s2 = a + b * w1, a + b * w2
        # the smaller embedding loses digits to cancellation; recover it from the norm
        n = self.norm(x)
        if abs(s1) >= abs(s2) and s1 != 0:
            s2 = n / s1
        elif s2 != 0:
            s1 = n / s2
        return (s1, s2)

    def embed_many(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Float coordinates of many elements: shape (m, 2) or (m, 1) for Q.

        For imaginary fields the two columns are real and imaginary parts.
        """
        a_int, b_int = np.asarray(a), np.asarray(b)
        a = a_int.astype(float)
        b = b_int.astype(float)
        if self.degree == 1:
            return a[:, None]
        if self.is_imaginary:
            w = self.omega_complex
            return np.stack([a + b * w.real, b * w.imag], axis=1)
        w1, w2 = self.omega_real
        s1, s2 = a + b * w1, a + b * w2
        if len(a):
            # recover the smaller conjugate from the exact norm
            n = self.norm_many(a_int, b_int)
            swap = np.abs(s1) >= np.abs(s2)
            with np.errstate(divide="ignore", invalid="ignore"):
                s2 = np.where(swap & (s1 != 0), n / s1, s2)
                s1 = np.where(~swap & (s2 != 0), n / s2, s1)
        return np.stack([s1, s2], axis=1)

    def norm_many(self, a, b) -> np.ndarray:
        """Norms of many elements as floats, computed exactly in integers."""
        a = np.asarray(a)
        b = np.asarray(b)
        if self.degree == 1:
            return a.astype(float)
        big = max(int(np.abs(a).max(initial=0)), int(np.abs(b).max(initial=0)))
        if big * big * (2 + abs(self.m)) < 2**62:
            ai, bi = a.astype(np.int64), b.astype(np.int64)
            return (ai * ai + ai * bi * self.t - bi * bi * self.m).astype(float)
        ai, bi = a.astype(object), b.astype(object)
        return (ai * ai + ai * bi * self.t - bi * bi * self.m).astype(float)

    # unit group -----------------------------------------------------------
    @cached_property
    def fundamental_unit(self) -> RingElement | None:
        if not self.is_real:
            return None
        return _fundamental_unit(self)

    @cached_property
    def regulator(self) -> float:
        if not self.is_real:
            return 0.0
        return math.log(self.embed(self.fundamental_unit)[0])

    @cached_property
    def unit_norm(self) -> int:
        """N(eps) for real fields; +1 otherwise."""
        return self.norm(self.fundamental_unit) if self.is_real else 1

    @cached_property
    def torsion_generator(self) -> RingElement:
        if self.torsion_units == 2:
            return RingElement(-1, 0)
        # w = i for d = -1, and w = (1 + sqrt(-3))/2 is a primitive sixth root
        return W

    @cached_property
    def torsion(self) -> tuple[RingElement, ...]:
        out, u = [], ONE
        for _ in range(self.torsion_units):
            out.append(u)
            u = self.mul(u, self.torsion_generator)
        return tuple(out)

    def unit_power(self, e: int) -> RingElement:
        """eps**e for any integer e (real fields only)."""
        eps = self.fundamental_unit
        if eps is None:
            raise ValueError("field has no fundamental unit")
        if e >= 0:
            return self.power(eps, e)
        return self.power(self.unit_inverse(eps), -e)

    @cached_property
    def class_number(self) -> int:
        if self.d == 1:
            return 1
        if self.disc < 0:
            return _class_number_negative(self.disc)
        narrow = _narrow_class_number_positive(self.disc)
        return narrow if self.unit_norm == -1 else narrow // 2

    @cached_property
    def covolume(self) -> float:
        return math.sqrt(abs(self.disc))


@lru_cache(maxsize=None)
def get_field(d: int) -> QuadraticField:
    return QuadraticField(d)


_FIELD_RE = re.compile(r"^\s*Q\s*(?:\(\s*(i|sqrt\s*:\s*(-?\d+))\s*\))?\s*$")


def parse_field(spec: str) -> QuadraticField:
    """Parse "Q", "Q(i)" or "Q(sqrt:D)"."""
    match = _FIELD_RE.match(spec)
    if not match:
        raise ParseError(f"cannot parse field spec {spec!r}")
    if match.group(1) is None:
        return get_field(1)
    if match.group(1) == "i":
        return get_field(-1)
    return get_field(int(match.group(2)))


_W_ONLY = re.compile(r"^([+-]?)(\d*)\*?w$")
_A_AND_W = re.compile(r"^([+-]?\d+)([+-]{1,2})(\d*)\*?w$")
_A_ONLY = re.compile(r"^[+-]?\d+$")


def parse_element(text: str) -> RingElement:
    """Parse "a+b*w", "a", "b*w", "a-w", "3+-2*w" and similar."""
    s = str(text).replace(" ", "")
    if _A_ONLY.match(s):
        return RingElement(int(s), 0)
    match = _W_ONLY.match(s)
    if match:
        b = int(match.group(2)) if match.group(2) else 1
        return RingElement(0, -b if match.group(1) == "-" else b)
    match = _A_AND_W.match(s)
    if match:
        b = int(match.group(3)) if match.group(3) else 1
        if match.group(2).count("-") % 2:
            b = -b
        return RingElement(int(match.group(1)), b)
    raise ParseError(f"cannot parse element {text!r}")


def format_element(x, k: QuadraticField | None = None) -> str:
    if k is not None and k.degree == 1:
        return str(x[0])
    return f"{x[0]}+{x[1]}*w"


# ---------------------------------------------------------------------------
# fundamental unit and class number


def _fundamental_unit(k: QuadraticField) -> RingElement:
    # continued fraction of w1 = (P + sqrt D)/Q, exact integer recurrences
    if k.t == 1:
        P, Q, D = 1, 2, k.d
    else:
        P, Q, D = 0, 1, k.d
    s = math.isqrt(D)
    h_prev, h = 0, 1
    q_prev, q = 1, 0
    for _ in range(10**7):
        a = (P + s) // Q
        h, h_prev = a * h + h_prev, h
        q, q_prev = a * q + q_prev, q
        x = RingElement(h, -q)
        if q > 0 and abs(k.norm(x)) == 1:
            # x is tiny in the first embedding; its inverse is the unit > 1
            eps = k.unit_inverse(x)
            if k.embed(eps)[0] < 0:
                eps = k.neg(eps)
            return eps
        P = a * Q - P
        Q = (D - P * P) // Q
    raise CapExceededError("continued fraction did not reach a unit")


def _class_number_negative(disc: int) -> int:
    count = 0
    a = 1
    while 3 * a * a <= -disc:
        for b in range(-a + 1, a + 1):
            if (b - disc) % 2:
                continue
            num = b * b - disc
            if num % (4 * a):
                continue
            c = num // (4 * a)
            if c < a or (c == a and b < 0):
                continue
            count += 1
        a += 1
    return count


def _narrow_class_number_positive(disc: int) -> int:
    s = math.isqrt(disc)
    reduced = set()
    for b in range(1, s + 1):
        if (b - disc) % 2:
            continue
        ac = (b * b - disc) // 4  # negative
        n = -ac
        for a0 in range(1, math.isqrt(n) + 1):
            if n % a0:
                continue
            for pos in {a0, n // a0}:
                if not (s - b + 1 <= 2 * pos <= s + b):
                    continue
                for a in (pos, -pos):
                    reduced.add((a, b, ac // a))
    seen = set()
    cycles = 0
    for form in sorted(reduced):
        if form in seen:
            continue
        cycles += 1
        f = form
        while f not in seen:
            seen.add(f)
            a, b, c = f
            two_c = 2 * abs(c)
            lo = s - two_c + 1
            b2 = lo + ((-b - lo) % two_c)
            f = (c, b2, (b2 * b2 - disc) // (4 * c))
    return cycles


# ---------------------------------------------------------------------------
# prime ideals


@dataclass(frozen=True)
class PrimeIdeal:
    """A prime of O_k above p.  ``root`` is c with P = (p, w - c); None if inert."""

    p: int
    kind: str  # split | inert | ramified | rational
    root: int | None = None

    @property
    def residue_degree(self) -> int:
        return 2 if self.kind == "inert" else 1

    @property
    def norm(self) -> int:
        return self.p ** self.residue_degree

    @property
    def sort_key(self) -> tuple:
        return (self.norm, self.p, -1 if self.root is None else self.root)

    def describe(self) -> str:
        if self.root is None:
            return f"({self.p})"
        return f"({self.p}, w - {self.root})"


@lru_cache(maxsize=None)
def factor_rational_prime(k: QuadraticField, p: int) -> tuple[PrimeIdeal, ...]:
    """Primes of O_k above the rational prime p, sorted by their root."""
    if not isprime(p):
        raise ValueError(f"{p} is not prime")
    if k.degree == 1:
        return (PrimeIdeal(p, "rational"),)
    chi = kronecker_symbol(k.disc, p)
    if chi == -1:
        return (PrimeIdeal(p, "inert"),)
    if p == 2:
        roots = [c for c in (0, 1) if (c * c - k.t * c - k.m) % 2 == 0]
    else:
        # roots of X^2 - tX - m are (t +- sqrt(t^2 + 4m))/2
        disc = (k.t * k.t + 4 * k.m) % p
        half = pow(2, -1, p)
        sq = sqrt_mod(disc, p, all_roots=True) if disc else [0]
        roots = sorted({((k.t + r) * half) % p for r in sq})
    if chi == 0:
        return (PrimeIdeal(p, "ramified", roots[0]),)
    return tuple(PrimeIdeal(p, "split", c) for c in sorted(roots))


def primes_up_to_norm(k: QuadraticField, bound: int) -> list[PrimeIdeal]:
    out = []
    for p in range(2, bound + 1):
        if isprime(p):
            out.extend(P for P in factor_rational_prime(k, p) if P.norm <= bound)
    return sorted(out, key=lambda P: P.sort_key)


def _vp(n: int, p: int) -> int:
    if n == 0:
        return math.inf
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


@lru_cache(maxsize=4096)
def _lifted_root(k: QuadraticField, P: PrimeIdeal, L: int) -> int:
    """Hensel lift of the root c of X^2 - tX - m to a root modulo p^L (split P)."""
    p, c, mod = P.p, P.root, P.p
    while mod < p**L:
        mod = min(mod * mod, p**L)
        f = c * c - k.t * c - k.m
        df = 2 * c - k.t
        c = (c - f * pow(df, -1, mod)) % mod
    return c % p**L


def valuation(k: QuadraticField, x, P: PrimeIdeal):
    """The P-adic valuation of x; INF for x = 0."""
    a, b = x
    if a == 0 and b == 0:
        return INF
    p = P.p
    if P.kind == "rational":
        return _vp(a, p)
    if P.kind == "inert":
        return min(_vp(a, p), _vp(b, p))
    L = _vp(k.norm(x), p)
    if P.kind == "ramified" or L == 0:
        return L
    c = _lifted_root(k, P, L)
    return min(_vp(a + b * c, p), L)


# ---------------------------------------------------------------------------
# ideals in Hermite normal form


@dataclass(frozen=True)
class Ideal:
    """A full-rank sublattice Z*A + Z*(B + C*w) of O_k, with 0 <= B < A."""

    A: int
    B: int
    C: int

    @property
    def norm(self) -> int:
        return self.A * self.C

    def contains(self, x) -> bool:
        a, b = x
        if b % self.C:
            return False
        return (a - (b // self.C) * self.B) % self.A == 0

    def reduce(self, x) -> RingElement:
        a, b = x
        q, y = divmod(b, self.C)
        return RingElement((a - q * self.B) % self.A, y)

    def representatives(self) -> Iterator[RingElement]:
        for y in range(self.C):
            for a in range(self.A):
                yield RingElement(a, y)

    def basis(self) -> tuple[RingElement, RingElement]:
        return RingElement(self.A, 0), RingElement(self.B, self.C)


def hnf(vectors: Iterable[Sequence[int]]) -> Ideal:
    """Hermite normal form of the Z-span of integer pairs (must have rank 2)."""
    pivot = None
    zero_gcd = 0
    for x, y in vectors:
        if pivot is None:
            if y:
                pivot = (x, y) if y > 0 else (-x, -y)
            else:
                zero_gcd = math.gcd(zero_gcd, x)
            continue
        px, py = pivot
        if y == 0:
            zero_gcd = math.gcd(zero_gcd, x)
            continue
        g, s, t = _egcd(py, y)
        new_pivot = (s * px + t * x, g)
        eliminated = (y // g) * px - (py // g) * x
        zero_gcd = math.gcd(zero_gcd, eliminated)
        pivot = new_pivot if g > 0 else (-new_pivot[0], -g)
    if pivot is None or zero_gcd == 0:
        raise ValueError("vectors do not span a full-rank lattice")
    A = abs(zero_gcd)
    return Ideal(A, pivot[0] % A, pivot[1])


def _egcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def ideal_from_generators(k: QuadraticField, gens: Iterable) -> Ideal:
    gens = [RingElement(*g) for g in gens]
    if k.degree == 1:
        g = 0
        for x in gens:
            g = math.gcd(g, x.a)
        if g == 0:
            raise ValueError("zero ideal")
        return Ideal(g, 0, 1)
    vecs = []
    for g in gens:
        vecs.append(g)
        vecs.append(k.mul(g, W))
    return hnf(vecs)


def ideal_mul(k: QuadraticField, I: Ideal, J: Ideal) -> Ideal:
    if k.degree == 1:
        return Ideal(I.A * J.A, 0, 1)
    return hnf(k.mul(x, y) for x in I.basis() for y in J.basis())


def prime_ideal_lattice(k: QuadraticField, P: PrimeIdeal) -> Ideal:
    if P.kind == "rational":
        return Ideal(P.p, 0, 1)
    if P.kind == "inert":
        return Ideal(P.p, 0, P.p)
    return Ideal(P.p, (-P.root) % P.p, 1)


@lru_cache(maxsize=8192)
def prime_power(k: QuadraticField, P: PrimeIdeal, l: int) -> Ideal:
    """P**l computed by repeated ideal multiplication."""
    if l < 0:
        raise ValueError("negative exponent")
    if l == 0:
        return Ideal(1, 0, 1)
    base = prime_ideal_lattice(k, P)
    if l == 1:
        return base
    return ideal_mul(k, prime_power(k, P, l - 1), base)


def valuation_by_membership(k: QuadraticField, x, P: PrimeIdeal):
    """Largest l with x in P**l, by testing membership in explicit ideal powers."""
    if x[0] == 0 and x[1] == 0:
        return INF
    l = 0
    while prime_power(k, P, l + 1).contains(x):
        l += 1
    return l


def residue(k: QuadraticField, x, P: PrimeIdeal, l: int) -> RingElement:
    return prime_power(k, P, l).reduce(x)


def congruent(k: QuadraticField, x, y, P: PrimeIdeal, l: int) -> bool:
    return prime_power(k, P, l).contains(k.sub(x, y))


def residue_classes(k: QuadraticField, P: PrimeIdeal, l: int,
                    cap: int = DEFAULT_RESIDUE_CAP) -> list[RingElement]:
    """One representative per class of O_k / P**l."""
    if l < 1:
        raise ValueError("l must be positive")
    if P.norm**l > cap:
        raise CapExceededError(f"N(P)^l = {P.norm**l} exceeds cap {cap}")
    return list(prime_power(k, P, l).representatives())


@lru_cache(maxsize=200_000)
def factor_element(k: QuadraticField, x) -> tuple[tuple[PrimeIdeal, int], ...]:
    """Prime factorisation of the principal ideal (x), x nonzero."""
    n = k.abs_norm(x)
    if n == 0:
        raise ValueError("cannot factor zero")
    out = []
    for p in sorted(factorint(n)):
        for P in factor_rational_prime(k, p):
            v = valuation(k, x, P)
            if v:
                out.append((P, v))
    return tuple(sorted(out, key=lambda item: item[0].sort_key))


def prime_generator(k: QuadraticField, P: PrimeIdeal) -> RingElement | None:
    """A generator of P if one is found in a bounded search, else None."""
    q = P.norm
    if k.degree == 1:
        return RingElement(P.p, 0)
    bound = math.sqrt(q)
    if k.is_real:
        bound *= math.exp(k.regulator / 2) * 1.01
    box = (-bound - 1e-9, -bound - 1e-9), (bound + 1e-9, bound + 1e-9)
    a, b, _ = lattice_points_in_box(k, *box)
    found = []
    for ai, bi in zip(a.tolist(), b.tolist()):
        x = RingElement(ai, bi)
        if k.abs_norm(x) == q and valuation(k, x, P):
            found.append(x)
    if not found:
        return None
    return min(found, key=lambda x: (abs(x.b), abs(x.a), -x.a, -x.b))


# ---------------------------------------------------------------------------
# units


def units_in_box(k: QuadraticField, exponent_bound: int) -> list[RingElement]:
    """All units eta * eps**e with |e| <= exponent_bound (torsion only if rank 0)."""
    if exponent_bound < 0:
        raise ValueError("exponent bound must be nonnegative")
    if k.degree == 1:
        return [ONE, RingElement(-1, 0)]
    if not k.is_real:
        return list(k.torsion)
    out = []
    for e in sorted(range(-exponent_bound, exponent_bound + 1), key=lambda e: (abs(e), e < 0)):
        u = k.unit_power(e)
        out.extend([u, k.neg(u)])
    return out


# ---------------------------------------------------------------------------
# lattice enumeration and cylinders


def lattice_points_in_box(k: QuadraticField, lo: Sequence[float], hi: Sequence[float],
                          cap: int = DEFAULT_ENUM_CAP, pad: float = 1e-9):
    """Elements whose V-coordinates lie in the box [lo, hi] (padded slightly).

    Coordinates are (s1, s2) for real fields and (Re, Im) for imaginary ones.
    Returns integer arrays a, b and the float coordinate array; callers apply
    their own exact membership predicate to the returned superset.
    """
    lo = [float(v) - pad * max(1.0, abs(float(v))) for v in lo]
    hi = [float(v) + pad * max(1.0, abs(float(v))) for v in hi]
    if any(h < l for l, h in zip(lo, hi)):
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, k.embed_many(empty, empty)
    if k.degree == 1:
        a0, a1 = math.ceil(lo[0]), math.floor(hi[0])
        if a1 - a0 + 1 > cap:
            raise CapExceededError(f"box holds more than {cap} points")
        a = np.arange(a0, max(a0, a1 + 1), dtype=np.int64)
        b = np.zeros_like(a)
        return a, b, k.embed_many(a, b)
    if k.is_imaginary:
        w = k.omega_complex
        b_lo, b_hi = math.ceil(lo[1] / w.imag), math.floor(hi[1] / w.imag)
        bs = np.arange(b_lo, max(b_lo, b_hi + 1), dtype=np.int64)
        a_lo = np.ceil(lo[0] - bs * w.real)
        a_hi = np.floor(hi[0] - bs * w.real)
    else:
        w1, w2 = k.omega_real
        dw = w1 - w2
        b_lo, b_hi = math.ceil((lo[0] - hi[1]) / dw), math.floor((hi[0] - lo[1]) / dw)
        bs = np.arange(b_lo, max(b_lo, b_hi + 1), dtype=np.int64)
        a_lo = np.ceil(np.maximum(lo[0] - bs * w1, lo[1] - bs * w2))
        a_hi = np.floor(np.minimum(hi[0] - bs * w1, hi[1] - bs * w2))
    counts = np.maximum(a_hi - a_lo + 1, 0).astype(np.int64)
    total = int(counts.sum())
    if total > cap:
        raise CapExceededError(f"box holds about {total} points, cap {cap}")
    b = np.repeat(bs, counts)
    starts = np.repeat(a_lo.astype(np.int64), counts)
    offsets = np.arange(total, dtype=np.int64) - np.repeat(np.cumsum(counts) - counts, counts)
    a = starts + offsets
    return a, b, k.embed_many(a, b)


def coordinate_kinds(k: QuadraticField) -> tuple[str, ...]:
    if k.degree == 1:
        return ("real",)
    return ("real", "real") if k.is_real else ("complex",)


def v_norm(k: QuadraticField, t: Sequence) -> float:
    """||t|| on V: product of |t_i| over real and |t_i|^2 over complex coordinates."""
    out = 1.0
    for kind, ti in zip(coordinate_kinds(k), t):
        out *= abs(ti) ** (2 if kind == "complex" else 1)
    return out


@dataclass(frozen=True)
class Cylinder:
    """Coordinate-wise product of closed balls in V."""

    kinds: tuple[str, ...]
    centers: tuple
    radii: tuple[float, ...]

    def leb_volume(self) -> float:
        vol = 1.0
        for kind, r in zip(self.kinds, self.radii):
            vol *= 2 * math.pi * r * r if kind == "complex" else 2 * r
        return vol


@dataclass(frozen=True)
class CylinderCount:
    count: int
    leb_volume: float
    ratio: float


def count_lattice_in_cylinder(k: QuadraticField, cyl: Cylinder, tol: float = 1e-12) -> CylinderCount:
    """Exact number of O_k points in a cylinder, with count/(1 + Leb) reported."""
    if k.is_imaginary:
        (c,), (r,) = cyl.centers, cyl.radii
        c = complex(c)
        a, b, xy = lattice_points_in_box(k, (c.real - r, c.imag - r), (c.real + r, c.imag + r))
        dist = np.hypot(xy[:, 0] - c.real, xy[:, 1] - c.imag)
        inside = dist <= r + tol * max(1.0, r)
    else:
        centers = [float(c) for c in cyl.centers]
        lo = [c - r for c, r in zip(centers, cyl.radii)]
        hi = [c + r for c, r in zip(centers, cyl.radii)]
        a, b, xy = lattice_points_in_box(k, lo, hi)
        inside = np.ones(len(a), dtype=bool)
        for i, (c, r) in enumerate(zip(centers, cyl.radii)):
            inside &= np.abs(xy[:, i] - c) <= r + tol * max(1.0, r)
    count = int(inside.sum())
    vol = cyl.leb_volume()
    return CylinderCount(count, vol, count / (1.0 + vol))
