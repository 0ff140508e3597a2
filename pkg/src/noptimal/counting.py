"""Fundamental domains for the unit action and the counts built on them.

Real quadratic fields use two sign cones, s1 > 0 with either sign of s2,
cut by the log-slope u = log|s1| - log|s2| to a window [c, c + 2R).
Imaginary fields use an angular sector of width 2*pi/w.  The window offset
is nudged away from lattice points so that no enumerated element sits on a
boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from sympy import isprime, integer_nthroot

from .errors import CapExceededError, InvariantError
from .ring import (
    QuadraticField,
    RingElement,
    factor_rational_prime,
    lattice_points_in_box,
    v_norm,
)

BOUNDARY_TOL = 1e-9


# ---------------------------------------------------------------------------
# fundamental domain


@dataclass(frozen=True)
class FundamentalDomain:
    field: QuadraticField
    offset: float  # c (real) or theta0 (imaginary)
    width: float  # 2R or 2 pi / w
    C0: float
    alpha: float
    nudge: float = 0.0  # offset minus its default value
    check_norm: float = 0.0
    clearance: float = math.inf  # smallest boundary distance seen when built

    @property
    def cones(self) -> list[dict]:
        if self.field.is_real:
            return [{"signs": s, "u_interval": [self.offset, self.offset + self.width]}
                    for s in ((1, 1), (1, -1))]
        return [{"theta0": self.offset, "width": self.width}]

    def relative_position(self, coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(rel, in_domain): position inside one period and membership of ℱ."""
        coords = np.asarray(coords, dtype=float)
        if self.field.is_real:
            s1, s2 = coords[:, 0], coords[:, 1]
            with np.errstate(divide="ignore"):
                u = np.log(np.abs(s1)) - np.log(np.abs(s2))
            shifted = u - self.offset
            rel = np.mod(shifted, self.width)
            inside = (s1 > 0) & (shifted >= 0) & (shifted < self.width)
        else:
            th = np.arctan2(coords[:, 1], coords[:, 0])
            shifted = np.mod(th - self.offset, 2 * math.pi)
            rel = np.mod(shifted, self.width)
            inside = shifted < self.width
        return rel, inside

    def boundary_distance(self, coords: np.ndarray) -> np.ndarray:
        rel, _ = self.relative_position(coords)
        return np.minimum(rel, self.width - rel)

    def contains(self, coords: np.ndarray) -> np.ndarray:
        return self.relative_position(coords)[1]

    def check_clear(self, coords: np.ndarray, tol: float = BOUNDARY_TOL) -> None:
        if len(coords) and float(self.boundary_distance(coords).min()) < tol:
            raise InvariantError("a lattice point lies on the boundary of the fundamental "
                                 "domain; rebuild it with a larger check_norm")

    def describe(self) -> dict:
        return {"field": self.field.spec, "offset": self.offset, "width": self.width,
                "C0": self.C0, "alpha": self.alpha, "nudge": self.nudge,
                "check_norm": self.check_norm, "cones": self.cones}


def _domain(k, offset, default, check_norm=0.0, clearance=math.inf):
    if k.is_real:
        R = k.regulator
        C0 = math.exp(max(abs(offset), abs(offset + 2 * R)) / 2)
        return FundamentalDomain(k, offset, 2 * R, C0, R, offset - default, check_norm, clearance)
    w = k.torsion_units
    return FundamentalDomain(k, offset, 2 * math.pi / w, 1.0, 1.0, offset - default,
                             check_norm, clearance)


def _candidate_points(k, check_norm, slack):
    r = math.sqrt(check_norm) * slack
    a, b, xy = lattice_points_in_box(k, (-r, -r), (r, r))
    norms = k.norm_many(a, b)
    keep = (norms != 0) & (np.abs(norms) <= check_norm)
    return xy[keep]


def build_fundamental_domain(k: QuadraticField, check_norm: float = 1e4,
                             tol: float = BOUNDARY_TOL) -> FundamentalDomain:
    """A good fundamental domain whose boundary avoids every nonzero element
    of norm at most ``check_norm`` by more than ``tol``."""
    if k.degree != 2:
        raise ValueError("fundamental domains are built for quadratic fields only")
    if k.is_real:
        R = k.regulator
        default = -R
        window = 0.05 * R
        slack = math.exp((R + window) / 2) * 1.001
    else:
        default = -math.pi / k.torsion_units
        window = 0.05 * (2 * math.pi / k.torsion_units)
        slack = 1.001
    pts = _candidate_points(k, check_norm, slack)
    offset = default
    for _ in range(8):
        dom = _domain(k, offset, default)
        rel = dom.boundary_distance(pts) if len(pts) else np.array([math.inf])
        clearance = float(rel.min())
        if clearance >= tol:
            return _domain(k, offset, default, check_norm, clearance)
        # move the offset to the middle of the nearest wide gap between
        # log-slopes (or angles) of lattice points
        r, _ = dom.relative_position(pts)
        signed = np.where(r > dom.width / 2, r - dom.width, r)
        near = np.sort(np.concatenate([signed[np.abs(signed) <= window], [-window, window]]))
        gaps = np.diff(near)
        mids = (near[:-1] + near[1:]) / 2
        wide = gaps > 100 * tol
        best = np.argmin(np.where(wide, np.abs(mids), np.inf))
        offset = offset + float(mids[best])
    raise InvariantError("could not nudge the fundamental domain off the lattice")


@dataclass(frozen=True)
class Decomposition:
    x: RingElement
    unit: RingElement
    torsion_index: int  # sign (0 for +1, 1 for -1) or torsion power
    exponent: int  # power of the fundamental unit (0 if imaginary)


def decompose(F: FundamentalDomain, y) -> Decomposition:
    """y = x * unit with x in ℱ; the identity is checked exactly."""
    k = F.field
    y = RingElement(*y)
    if y == (0, 0):
        raise ValueError("cannot decompose zero")
    if k.is_real:
        s1, s2 = k.embed(y)
        sign = 1 if s1 > 0 else -1
        u = math.log(abs(s1)) - math.log(abs(s2))
        j = math.floor((u - F.offset) / F.width)
        unit = k.scale(k.unit_power(j), sign)
        x = k.scale(k.mul(y, k.unit_power(-j)), sign)
        tidx, exp = (0 if sign == 1 else 1), j
    else:
        (z,) = k.embed(y)
        w = k.torsion_units
        j = math.floor(((math.atan2(z.imag, z.real) - F.offset) % (2 * math.pi)) / F.width) % w
        unit = k.torsion[j]
        x = k.mul(y, k.torsion[(-j) % w])
        tidx, exp = j, 0
    if k.mul(x, unit) != y:
        raise InvariantError("decomposition does not recompose")
    if not F.contains(np.asarray([_coords(k, x)]))[0]:
        raise InvariantError(f"decomposed element {x} is not in the fundamental domain")
    return Decomposition(x, unit, tidx, exp)


def _coords(k, x):
    c = k.embed(x)
    if k.is_imaginary:
        return (c[0].real, c[0].imag)
    return c


def domain_points(F: FundamentalDomain, max_norm: float):
    """All x in ℱ ∩ O_k with 0 < ||x|| <= max_norm: arrays a, b, norms, coords."""
    k = F.field
    r = F.C0 * math.sqrt(max_norm) * (1 + 1e-9)
    a, b, xy = lattice_points_in_box(k, (-r, -r), (r, r))
    norms = np.abs(k.norm_many(a, b))
    keep = (norms > 0) & (norms <= max_norm)
    a, b, xy, norms = a[keep], b[keep], xy[keep], norms[keep]
    F.check_clear(xy)
    inside = F.contains(xy)
    return a[inside], b[inside], norms[inside], xy[inside]


def _domain_for(k, F, max_norm):
    if F is None:
        return build_fundamental_domain(k, check_norm=max(max_norm, 1.0))
    if F.field != k:
        raise ValueError("fundamental domain belongs to another field")
    return F


# ---------------------------------------------------------------------------
# S(a, X) and norm pairs


def _square(X) -> Fraction:
    return Fraction(X) ** 2


def _unit_exponent_window(k, x, a, t):
    """Exponents j outside the returned range give ||a - x*(+-eps^j)|| > t."""
    R = k.regulator
    x1, x2 = (abs(c) for c in k.embed(x))
    a1, a2 = (abs(c) for c in k.embed(a))
    t = float(t)

    def reach(p1, p2, q1, q2):
        vals = [2 * q1 / p1, 2 * p2 / q2, 4 * t / (q2 * p1)]
        return max(0, math.ceil(math.log(max(vals)) / R)) + 1

    return -reach(x2, x1, a2, a1), reach(x1, x2, a1, a2)


@dataclass
class SaxRecord:
    a: RingElement
    X: float
    pairs: list[tuple[RingElement, RingElement]]
    count: int
    tail_count: int  # pairs with ||lambda||_inf >= M
    M: int
    domain: dict = field(default_factory=dict)


def count_S_aX(k: QuadraticField, a, X, M: int = 0, F: FundamentalDomain | None = None,
               B: float = 1.0) -> SaxRecord:
    """Enumerate pairs (x, lam) with x in ℱ, ||x|| <= X and ||x (a - x/lam)|| <= X^2.

    ``B`` only matters for the warning-level hypothesis ||a|| >= X e^{-B};
    counts are exact regardless.
    """
    a = RingElement(*a)
    if a == (0, 0):
        raise ValueError("a must be nonzero")
    if M < 0:
        raise ValueError("M must be nonnegative")
    X2 = _square(X)
    pairs: list[tuple[RingElement, RingElement]] = []
    tail = 0
    if X < 1:
        F = _domain_for(k, F, 1.0)
        return SaxRecord(a, X, [], 0, 0, M, F.describe())
    F = _domain_for(k, F, float(X))
    av, bv, norms, _ = domain_points(F, float(X))
    for ai, bi, nx in zip(av.tolist(), bv.tolist(), norms.tolist()):
        x = RingElement(ai, bi)
        nx = int(nx)
        t = X2 / nx
        if k.is_real:
            lo, hi = _unit_exponent_window(k, x, a, t)
            candidates = [(s, j) for j in range(lo, hi + 1) for s in (1, -1)]
        else:
            candidates = [(i, 0) for i in range(k.torsion_units)]
        for s, j in candidates:
            mu = k.scale(k.unit_power(j), s) if k.is_real else k.torsion[s]
            if nx * abs(k.norm(k.sub(a, k.mul(x, mu)))) <= X2:
                pairs.append((x, k.unit_inverse(mu)))
                if abs(j) >= M:
                    tail += 1
    return SaxRecord(a, X, pairs, len(pairs), tail, M, F.describe())


def _strip_factors(k, a, b):
    """Coefficients of N(A + b w) and N(a - A - b w) as quadratics in A."""
    t, m = k.t, k.m
    a0, a1 = a
    bb = a1 - b
    n1 = (np.ones_like(b), t * b, -m * b * b)
    n2 = (np.ones_like(b), -(2 * a0 + t * bb), a0 * a0 + t * a0 * bb - m * bb * bb)
    return n1, n2


def _quad(c, A):
    return (A + c[1]) * A + c[2]


def _within(k, a, b, A, X2: Fraction) -> np.ndarray:
    """Exact test |N(y) N(a - y)| <= X2 for y = A + b w (int64 arrays)."""
    n1, n2 = _strip_factors(k, a, b)
    p1 = np.abs(_quad(n1, A)).astype(float)
    p2 = np.abs(_quad(n2, A)).astype(float)
    prod = p1 * p2
    x2 = float(X2)
    ok = prod <= x2 * (1 - 1e-12)
    close = np.nonzero(~ok & (prod <= x2 * (1 + 1e-12)))[0]
    for i in close:  # float cannot decide; redo in integers
        v1 = abs(int(_quad([1, int(n1[1][i]), int(n1[2][i])], int(A[i]))))
        v2 = abs(int(_quad([1, int(n2[1][i]), int(n2[2][i])], int(A[i]))))
        ok[i] = v1 * v2 <= X2
    return ok


def _quartic_roots(n1, n2, shift, scale):
    """Roots of N1 N2 + shift for each strip, via batched companion matrices."""
    c = [np.asarray(x, dtype=float) for x in (*n1, *n2)]
    _, p1, q1, _, p2, q2 = c
    # (A^2 + p1 A + q1)(A^2 + p2 A + q2) in the variable z = A / scale
    coeffs = [p1 + p2, q1 + q2 + p1 * p2, p1 * q2 + p2 * q1, q1 * q2 + shift]
    nb = len(p1)
    comp = np.zeros((nb, 4, 4))
    for i, cf in enumerate(coeffs):
        comp[:, 0, i] = -cf / scale ** (i + 1)
    comp[:, 1, 0] = comp[:, 2, 1] = comp[:, 3, 2] = 1.0
    return np.linalg.eigvals(comp) * scale[:, None]


def _count_strips(k, a, b, X2: Fraction, collect: bool):
    n1, n2 = _strip_factors(k, a, b)
    scale = np.maximum(np.maximum(np.abs(b), abs(a[0]) + abs(a[1])), 1).astype(float)
    x2 = float(X2)
    crit = np.sort(np.concatenate([_quartic_roots(n1, n2, -x2, scale).real,
                                   _quartic_roots(n1, n2, x2, scale).real], axis=1), axis=1)
    # integers within 2 of a critical point, verified one by one
    offs = np.arange(-2, 4)
    cand = np.sort((np.floor(crit)[:, :, None] + offs).reshape(len(b), -1).astype(np.int64), axis=1)
    fresh = np.ones(cand.shape, dtype=bool)
    fresh[:, 1:] = cand[:, 1:] != cand[:, :-1]
    bb = np.broadcast_to(b[:, None], cand.shape)[fresh]
    AA = cand[fresh]
    ok = _within(k, a, bb, AA, X2)
    near = np.stack([bb[ok], AA[ok]], axis=1)
    # integers strictly between consecutive critical points: the condition is
    # constant there, so one interior test decides the whole run
    lo = np.floor(crit[:, :-1]).astype(np.int64) + 4
    hi = np.floor(crit[:, 1:]).astype(np.int64) - 3
    rows, cols = np.nonzero(hi >= lo)
    blo, bhi, bstrip = lo[rows, cols], hi[rows, cols], b[rows]
    mid = (blo + bhi) // 2
    full = _within(k, a, bstrip, mid, X2) if len(mid) else np.zeros(0, dtype=bool)
    bulk = int(np.sum((bhi - blo + 1)[full]))
    points = None
    if collect:
        points = [RingElement(int(A), int(bv)) for bv, A in near]
        for l_, h_, bv in zip(blo[full], bhi[full], bstrip[full]):
            points.extend(RingElement(A, int(bv)) for A in range(int(l_), int(h_) + 1))
    return len(near) + bulk, points


@dataclass
class NormPairCount:
    count: int
    points: list[RingElement] | None
    strips: int


def count_norm_pairs(k: QuadraticField, a, X, collect: bool = False,
                     chunk: int = 20000) -> NormPairCount:
    """|{y in O_k : ||y (a - y)|| <= X^2}|, exact, by strips of fixed w-coefficient."""
    if k.degree != 2:
        raise ValueError("quadratic fields only")
    a = RingElement(*a)
    if a == (0, 0):
        raise ValueError("a must be nonzero")
    X2 = _square(X)
    xf = float(X)
    if k.is_real:
        s1, s2 = (abs(c) for c in k.embed(a))
        b1 = max(2 * s1, 4 * xf * xf / s2)
        b2 = max(2 * s2, 4 * xf * xf / s1)
        w1, w2 = k.omega_real
        bmax = math.ceil((b1 + b2) / abs(w1 - w2)) + 1
    else:
        (z,) = k.embed(a)
        r = (abs(z) + math.sqrt(abs(z) ** 2 + 4 * xf)) / 2
        bmax = math.ceil(r / k.omega_complex.imag) + 1
    if bmax > 10**8:
        raise CapExceededError(f"{2 * bmax + 1} strips exceed the enumeration cap")
    total = 0
    points: list[RingElement] | None = [] if collect else None
    for start in range(-bmax, bmax + 1, chunk):
        b = np.arange(start, min(start + chunk, bmax + 1), dtype=np.int64)
        c, pts = _count_strips(k, a, b, X2, collect)
        total += c
        if collect:
            points.extend(pts)
    if collect:
        points.sort()
    return NormPairCount(total, points, 2 * bmax + 1)


def count_norm_pairs_box(k: QuadraticField, a, X, radius: int) -> int:
    """Brute-force oracle over |coefficients| <= radius."""
    a = RingElement(*a)
    if radius > 20000:
        raise CapExceededError("oracle box too large for exact int64 products")
    r = np.arange(-radius, radius + 1, dtype=np.int64)
    A, b = np.meshgrid(r, r, indexing="ij")
    n1 = np.abs((A + k.t * b) * A - k.m * b * b)
    c, d = a[0] - A, a[1] - b
    n2 = np.abs((c + k.t * d) * c - k.m * d * d)
    X2 = _square(X)
    # n1 * n2 stays below 2^63 for the allowed radius; compare as integers
    return int(np.count_nonzero(n1 * n2 * X2.denominator <= X2.numerator))


def norm_pair_radius(k: QuadraticField, a, X) -> int:
    """Coefficient radius containing every y with ||y (a - y)|| <= X^2."""
    a = RingElement(*a)
    xf = float(X)
    if k.is_real:
        s1, s2 = (abs(c) for c in k.embed(a))
        b1 = max(2 * s1, 4 * xf * xf / s2)
        b2 = max(2 * s2, 4 * xf * xf / s1)
        w1, w2 = k.omega_real
        bmax = (b1 + b2) / abs(w1 - w2)
        return math.ceil(max(bmax, b1 + bmax * abs(w1))) + 1
    (z,) = k.embed(a)
    rad = (abs(z) + math.sqrt(abs(z) ** 2 + 4 * xf)) / 2
    w = k.omega_complex
    bmax = rad / w.imag
    return math.ceil(max(bmax, rad + bmax * abs(w.real))) + 1


def kappa(N: int) -> Fraction:
    if N < 2:
        raise ValueError("kappa needs N >= 2")
    return min(Fraction(1, 2 * N * (N - 1)), Fraction(1, 4 * N - 1))


@dataclass
class ScalingFit:
    slope: float
    intercept: float
    residuals: list[float]
    excess: float  # slope - (1 + kappa)
    X: list[float]
    counts: list[int]


def fit_log_log(X: Sequence[float], counts: Sequence[int], N: int = 2) -> ScalingFit:
    X = [float(x) for x in X]
    if len(set(X)) < 2:
        raise ValueError("need at least two distinct X values")
    lx = np.log(np.asarray(X))
    ly = np.log(np.asarray(counts, dtype=float))
    A = np.stack([lx, np.ones_like(lx)], axis=1)
    (slope, icpt), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = (ly - (slope * lx + icpt)).tolist()
    return ScalingFit(float(slope), float(icpt), resid, float(slope) - (1 + float(kappa(N))),
                      X, list(counts))


def fit_count_scaling(k: QuadraticField, a_sequence, X_grid) -> ScalingFit:
    """Least-squares slope of log count_norm_pairs(a, X) against log X."""
    a_sequence = [RingElement(*a) for a in a_sequence]
    if len(a_sequence) != len(X_grid):
        raise ValueError("a_sequence and X_grid differ in length")
    counts = [count_norm_pairs(k, a, X).count for a, X in zip(a_sequence, X_grid)]
    return fit_log_log(X_grid, counts, k.degree)


# ---------------------------------------------------------------------------
# unit equation


@dataclass
class UnitEquationResult:
    solutions: list[tuple[RingElement, RingElement]]
    nu: int
    certified: bool
    exponent_bound: int
    certificate_bound: int


def _unit_equation_window(k, al1, al3, al2_norm):
    """|j| beyond the returned bounds forces |N(al3 - al1*lam1)| > ||al2||."""
    p1, p2 = (abs(c) for c in k.embed(al1))
    q1, q2 = (abs(c) for c in k.embed(al3))
    R = k.regulator

    def reach(p1, p2, q1, q2):
        vals = [2 * q1 / p1, 2 * p2 / q2, 4 * al2_norm * 1.0001 / (p1 * q2)]
        return max(0, math.ceil(math.log(max(vals)) / R)) + 1

    return max(reach(p1, p2, q1, q2), reach(p2, p1, q2, q1))


def unit_equation_solutions(k: QuadraticField, alpha1, alpha2, alpha3,
                            exponent_bound: int | None = None) -> UnitEquationResult:
    """All units (l1, l2) with alpha1*l1 + alpha2*l2 = alpha3.

    For real fields l1 = +-eps^j with |j| <= exponent_bound; the result is
    certified complete when the bound reaches the growth threshold of
    |N(alpha3 - alpha1*l1)|.  ``None`` uses that threshold.
    """
    al1, al2, al3 = (RingElement(*x) for x in (alpha1, alpha2, alpha3))
    if any(x == (0, 0) for x in (al1, al2, al3)):
        raise ValueError("coefficients must be nonzero")
    if k.degree != 2:
        raise ValueError("quadratic fields only")
    if k.is_real:
        need = _unit_equation_window(k, al1, al3, k.abs_norm(al2))
        J = need if exponent_bound is None else exponent_bound
        units = [k.scale(k.unit_power(j), s) for j in range(-J, J + 1) for s in (1, -1)]
        certified = J >= need
    else:
        need, J, certified = 0, 0, True
        units = list(k.torsion)
    sols = []
    for l1 in units:
        l2 = k.exact_div(k.sub(al3, k.mul(al1, l1)), al2)
        if l2 is not None and k.is_unit(l2):
            sols.append((l1, l2))
    nu = len(sols)
    if certified and nu > 3 * 7**k.degree:
        raise InvariantError(f"nu = {nu} exceeds 3*7^N")
    return UnitEquationResult(sols, nu, certified, J, need)


@dataclass
class AverageUnitSum:
    total: int
    pair_count: int
    norm_pairs: int


def average_unit_equation_sum(k: QuadraticField, alpha3, X,
                              F: FundamentalDomain | None = None) -> AverageUnitSum:
    """Sum of nu(a1, a2, alpha3) over orbit representatives with ||a1 a2|| <= X^2.

    Adds 2 for the degenerate points 0 and alpha3 and must agree with
    ``count_norm_pairs(alpha3, X)``.
    """
    al3 = RingElement(*alpha3)
    X2 = _square(X)
    total = 2
    pair_count = 0
    if X2 >= 1:
        F = _domain_for(k, F, float(X2))
        av, bv, norms, _ = domain_points(F, float(X2))
        reps = sorted(zip(norms.astype(np.int64).tolist(), av.tolist(), bv.tolist()))
        for n1, a1, b1 in reps:
            for n2, a2, b2 in reps:
                if n1 * n2 > X2:
                    break
                pair_count += 1
                total += unit_equation_solutions(k, (a1, b1), (a2, b2), al3).nu
    direct = count_norm_pairs(k, al3, X).count
    if total != direct:
        raise InvariantError(f"unit-equation sum {total} != norm-pair count {direct}")
    return AverageUnitSum(total, pair_count, direct)


# ---------------------------------------------------------------------------
# sums over principal ideals and sector primes


@dataclass
class IdealSum:
    value: float
    ideal_count: int
    main_term: float  # r! (rho/h) X
    ratio: float


def principal_ideal_sum(k: QuadraticField, X: float, r: int,
                        F: FundamentalDomain | None = None) -> IdealSum:
    """Sum over principal ideals (a) with N(a) <= X of (log X - log N(a))^r."""
    from .constants import residue_rho

    if X < 1 or r < 0:
        raise ValueError("need X >= 1 and r >= 0")
    F = _domain_for(k, F, float(X))
    _, _, norms, _ = domain_points(F, float(X))
    logs = np.log(float(X)) - np.log(norms)  # one unit of ℱ stands for the unit ideal
    if r == 0:
        value = float(len(logs))
    else:
        value = math.fsum((logs**r).tolist())
    main = math.factorial(r) * residue_rho(k).value / k.class_number * X
    return IdealSum(value, len(logs), main, value / main)


def generates_prime(k: QuadraticField, x) -> bool:
    """Whether the principal ideal (x) is prime."""
    n = k.abs_norm(x)
    if n < 2:
        return False
    if isprime(n):
        return True
    p, exact = integer_nthroot(n, 2)
    if not exact or not isprime(int(p)):
        return False
    p = int(p)
    if factor_rational_prime(k, p)[0].kind != "inert":
        return False
    return x[0] % p == 0 and x[1] % p == 0


@dataclass
class SectorRow:
    t: complex
    lattice_points: int
    prime_generators: int
    density: float  # prime generators per unit ||t||


def sector_prime_survey(k: QuadraticField, U, dilations) -> list[SectorRow]:
    """Count a in tU ∩ O_k generating prime ideals, for each dilation t."""
    if not k.is_imaginary:
        raise ValueError("the sector survey is for imaginary quadratic fields")
    rows = []
    lo, hi = U.bbox()
    for t in dilations:
        t = complex(t)
        if t == 0:
            raise ValueError("dilation must be nonzero")
        rad = abs(t) * float(np.max(np.abs(np.concatenate([lo, hi]))))
        a, b, xy = lattice_points_in_box(k, (-rad, -rad), (rad, rad))
        z = (xy[:, 0] + 1j * xy[:, 1]) / t
        inside = U.contains(np.stack([z.real, z.imag], axis=1))
        pts = [RingElement(int(ai), int(bi)) for ai, bi in zip(a[inside], b[inside])]
        primes = sum(1 for x in pts if generates_prime(k, x))
        rows.append(SectorRow(t, len(pts), primes, primes / v_norm(k, (t,))))
    return rows
