"""Almost-uniform distribution tests, n-optimal certification and search.

Two certification routes are provided and are meant to be cross-checked:

* ``certify_n_optimal`` recounts residue histograms modulo a finite list of
  prime powers;
* ``certify_via_volume`` compares the ideal generated by the product of all
  ordered differences with the squared product of generalized factorials.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations

from .errors import CapExceededError, ParseError
from .orderings import FactoredIdeal, factorial_product_squared
from .ring import (
    DEFAULT_RESIDUE_CAP,
    Cylinder,
    PrimeIdeal,
    QuadraticField,
    RingElement,
    coordinate_kinds,
    factor_element,
    format_element,
    prime_power,
    primes_up_to_norm,
)


def _distinct(S) -> list[RingElement]:
    S = [RingElement(*x) for x in S]
    if len(set(S)) != len(S):
        raise ValueError("set contains repeated elements")
    return S


# ---------------------------------------------------------------------------
# almost-uniform distribution


@dataclass(frozen=True)
class UniformityCheck:
    ok: bool
    class_count: int  # N(P)^l
    histogram: dict  # residue -> count, occupied classes only
    max_count: int
    min_count: int


def is_almost_uniform(k: QuadraticField, S, P: PrimeIdeal, l: int,
                      cap: int = DEFAULT_RESIDUE_CAP) -> UniformityCheck:
    """Whether the class counts of S modulo P^l differ by at most one."""
    if l < 1:
        raise ValueError("l must be positive")
    classes = P.norm**l
    if classes > cap:
        raise CapExceededError(f"N(P)^l = {classes} exceeds cap {cap}")
    ideal = prime_power(k, P, l)
    hist = Counter(ideal.reduce(x) for x in S)
    hi = max(hist.values(), default=0)
    lo = min(hist.values(), default=0) if len(hist) == classes else 0
    return UniformityCheck(hi - lo <= 1, classes, dict(sorted(hist.items())), hi, lo)


# ---------------------------------------------------------------------------
# certification, route 1: residue histograms


@dataclass(frozen=True)
class Witness:
    prime: PrimeIdeal
    exponent: int
    crowded_class: RingElement
    crowded_count: int
    sparse_class: RingElement
    sparse_count: int


@dataclass(frozen=True)
class Verdict:
    status: str  # "optimal" | "fails"
    witness: Witness | None
    checked_prime_powers: tuple[tuple[PrimeIdeal, int], ...]

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _empty_class(ideal, occupied) -> RingElement:
    for r in ideal.representatives():
        if r not in occupied:
            return r
    raise AssertionError("no empty class")


def difference_valuation_profile(k: QuadraticField, S) -> dict[PrimeIdeal, int]:
    """For each prime dividing some difference, the largest valuation seen."""
    prof: dict[PrimeIdeal, int] = {}
    for x, y in combinations(S, 2):
        for P, e in factor_element(k, k.sub(x, y)):
            if e > prof.get(P, 0):
                prof[P] = e
    return prof


def certify_n_optimal(k: QuadraticField, S, cap: int = DEFAULT_RESIDUE_CAP) -> Verdict:
    """Check almost-uniformity modulo every prime power that can matter.

    Only primes dividing some difference can fail, and only for exponents up
    to one past the largest valuation of a difference: beyond that every
    element sits in its own class.
    """
    S = _distinct(S)
    if len(S) < 2:
        raise ValueError("need at least two elements")
    checked = []
    prof = difference_valuation_profile(k, S)
    for P in sorted(prof, key=lambda P: P.sort_key):
        for l in range(1, prof[P] + 2):
            checked.append((P, l))
            res = is_almost_uniform(k, S, P, l, cap)
            if not res.ok:
                crowded = max(res.histogram, key=lambda r: (res.histogram[r], tuple(-c for c in r)))
                if res.min_count == 0:
                    sparse = _empty_class(prime_power(k, P, l), res.histogram)
                else:
                    sparse = min(res.histogram, key=lambda r: (res.histogram[r], r))
                wit = Witness(P, l, crowded, res.max_count, sparse, res.min_count)
                return Verdict("fails", wit, tuple(checked))
    return Verdict("optimal", None, tuple(checked))


def recount_witness(k: QuadraticField, S, w: Witness) -> int:
    """Recount the witness classes; returns the histogram gap."""
    ideal = prime_power(k, w.prime, w.exponent)
    crowded = sum(1 for x in S if ideal.contains(k.sub(x, w.crowded_class)))
    sparse = sum(1 for x in S if ideal.contains(k.sub(x, w.sparse_class)))
    return crowded - sparse


def certify_brute_force(k: QuadraticField, S, norm_bound: int) -> bool:
    """Check every P^l with N(P^l) <= norm_bound directly (oracle for tests)."""
    S = _distinct(S)
    for P in primes_up_to_norm(k, norm_bound):
        l = 1
        while P.norm**l <= norm_bound:
            if not is_almost_uniform(k, S, P, l, cap=norm_bound).ok:
                return False
            l += 1
    return True


# ---------------------------------------------------------------------------
# certification, route 2: the volume identity


@dataclass(frozen=True)
class VolumeResult:
    ideal: FactoredIdeal
    log_norm: float
    generator: RingElement


def volume(k: QuadraticField, S) -> VolumeResult:
    """The product of x - y over ordered pairs of distinct elements."""
    S = _distinct(S)
    gen = RingElement(1, 0)
    exps: dict[PrimeIdeal, int] = {}
    for x, y in combinations(S, 2):
        d = k.sub(x, y)
        # (x - y)(y - x) = -(x - y)^2
        gen = k.mul(gen, k.neg(k.mul(d, d)))
        for P, e in factor_element(k, d):
            exps[P] = exps.get(P, 0) + 2 * e
    ideal = FactoredIdeal.from_dict(exps)
    return VolumeResult(ideal, ideal.log_norm(), gen)


def certify_via_volume(k: QuadraticField, S) -> bool:
    S = _distinct(S)
    return volume(k, S).ideal == factorial_product_squared(k, len(S) - 1)


@dataclass(frozen=True)
class VolumeBound:
    holds: bool
    log_volume: float
    log_bound: float


def lower_volume_bound_check(k: QuadraticField, F) -> VolumeBound:
    """||Vol(F)|| >= N(prod_{m<|F|} m!_k^2), compared on exact norms."""
    F = _distinct(F)
    vol = volume(k, F).ideal
    bound = factorial_product_squared(k, len(F) - 1)
    return VolumeBound(vol.norm >= bound.norm, vol.log_norm(), bound.log_norm())


# ---------------------------------------------------------------------------
# exhaustive search


@dataclass
class SearchResult:
    sets: list[tuple[RingElement, ...]]
    complete: bool
    nodes: int
    resume_token: str | None = None
    notes: list[str] = field(default_factory=list)


def canonical_form(k: QuadraticField, S) -> tuple[RingElement, ...]:
    """Representative of S under translation and multiplication by torsion units."""
    best = None
    for u in k.torsion if k.degree == 2 else (RingElement(1, 0), RingElement(-1, 0)):
        for x0 in S:
            img = tuple(sorted((k.mul(u, k.sub(s, x0)) for s in S),
                               key=lambda z: (k.abs_norm(z), z)))
            key = tuple((k.abs_norm(z), z) for z in img)
            if best is None or key < best[0]:
                best = (key, img)
    return best[1]


def _pair_ok(k, x, y, n) -> bool:
    # a set of size n+1 keeps pairwise distinct classes mod P^l once N(P)^l > n
    for P, e in factor_element(k, k.sub(x, y)):
        if P.norm**e > n:
            return False
    return True


def _search_prime_powers(k, n):
    out = []
    for P in primes_up_to_norm(k, n):
        l = 1
        while P.norm**l <= n:
            out.append((prime_power(k, P, l), P.norm**l))
            l += 1
    return out


def search_n_optimal(k: QuadraticField, n: int, box: int, normalize: bool = True,
                     node_cap: int = 10**7, resume_token: str | None = None) -> SearchResult:
    """All n-optimal sets containing 0 with coordinates |a|, |b| <= box.

    With ``normalize`` the sets are reduced to one representative per class
    under translation and torsion units.  When ``node_cap`` DFS nodes are
    exhausted the result is flagged incomplete and carries a resume token.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    size = n + 1
    if k.degree == 1:
        cands = [RingElement(a, 0) for a in range(-box, box + 1)]
    else:
        cands = [RingElement(a, b) for a in range(-box, box + 1) for b in range(-box, box + 1)]
    zero = RingElement(0, 0)
    cands = [c for c in cands if c != zero and _pair_ok(k, c, zero, n)]
    cands.sort(key=lambda z: (k.abs_norm(z), z))
    mods = _search_prime_powers(k, n)
    ceil_cap = [-(-size // q) for _, q in mods]
    floor_need = [size // q for _, q in mods]

    start: list[int] | None = None
    if resume_token is not None:
        try:
            tok = json.loads(resume_token)
            if tok["field"] != k.spec or tok["n"] != n or tok["box"] != box:
                raise ParseError("resume token belongs to a different search")
            start = [int(i) for i in tok["path"]]
        except (ValueError, KeyError, TypeError) as exc:
            raise ParseError(f"bad resume token: {exc}") from exc

    hists = [Counter({ideal.reduce(zero): 1}) for ideal, _ in mods]
    chosen = [zero]
    path: list[int] = []
    found: dict = {}
    nodes = 0
    stopped_at: list[int] | None = None

    def feasible(remaining):
        for h, (_, q), need in zip(hists, mods, floor_need):
            deficit = sum(max(0, need - h.get(r, 0)) for r in h)
            deficit += max(0, q - len(h)) * need
            if deficit > remaining:
                return False
        return True

    def dfs(first: int, resume: list[int] | None):
        nonlocal nodes, stopped_at
        if len(chosen) == size:
            S = tuple(chosen)
            key = canonical_form(k, S) if normalize else tuple(sorted(S))
            found.setdefault(key, S)
            return True
        lo_idx = first
        if resume:
            lo_idx = max(first, resume[0])
        for i in range(lo_idx, len(cands)):
            if len(cands) - i < size - len(chosen):
                break
            nodes += 1
            if nodes > node_cap:
                stopped_at = path + [i]
                return False
            c = cands[i]
            if not all(_pair_ok(k, c, s, n) for s in chosen[1:]):
                continue
            residues = [ideal.reduce(c) for ideal, _ in mods]
            if any(h.get(r, 0) + 1 > cap_ for h, r, cap_ in zip(hists, residues, ceil_cap)):
                continue
            for h, r in zip(hists, residues):
                h[r] += 1
            chosen.append(c)
            path.append(i)
            ok = True
            if feasible(size - len(chosen)):
                sub = resume[1:] if resume and i == resume[0] else None
                ok = dfs(i + 1, sub)
            path.pop()
            chosen.pop()
            for h, r in zip(hists, residues):
                h[r] -= 1
                if not h[r]:
                    del h[r]
            if not ok:
                return False
            resume = None
        return True

    complete = dfs(0, start)
    sets = []
    for key in sorted(found, key=lambda s: tuple((k.abs_norm(z), z) for z in s)):
        S = key if normalize else found[key]
        verdict = certify_n_optimal(k, S)
        if not verdict.optimal:
            raise AssertionError(f"search emitted a non-optimal set {S}")
        sets.append(S)
    token = None
    if not complete:
        token = json.dumps({"field": k.spec, "n": n, "box": box, "path": stopped_at})
    return SearchResult(sets, complete, nodes, token)


# ---------------------------------------------------------------------------
# geometric diagnostics


def pairwise_log_bound(k: QuadraticField, S) -> float:
    """max over pairs of log||x - y|| minus log n, with n = |S| - 1."""
    S = _distinct(S)
    if len(S) < 2:
        raise ValueError("need at least two elements")
    n = len(S) - 1
    top = max(k.abs_norm(k.sub(x, y)) for x, y in combinations(S, 2))
    return math.log(top) - math.log(n)


def _circle_two(p, q):
    c = ((p[0] + q[0]) / 2, (p[1] + q[1]) / 2)
    return c, math.dist(c, p)


def _circle_three(p, q, r):
    ax, ay = p
    bx, by = q
    cx, cy = r
    d = 2 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if abs(d) < 1e-15:
        return None
    ux = ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay)
          + (cx * cx + cy * cy) * (ay - by)) / d
    uy = ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx)
          + (cx * cx + cy * cy) * (bx - ax)) / d
    return (ux, uy), math.dist((ux, uy), p)


def minimal_enclosing_circle(points) -> tuple[tuple[float, float], float]:
    """Smallest disk containing the points (incremental construction)."""
    pts = sorted(set((float(x), float(y)) for x, y in points))
    if not pts:
        raise ValueError("no points")
    eps = 1e-12

    def inside(c, p):
        return math.dist(c[0], p) <= c[1] * (1 + eps) + eps

    circ = (pts[0], 0.0)
    for i, p in enumerate(pts):
        if inside(circ, p):
            continue
        circ = (p, 0.0)
        for j in range(i):
            q = pts[j]
            if inside(circ, q):
                continue
            circ = _circle_two(p, q)
            for m in range(j):
                r = pts[m]
                if inside(circ, r):
                    continue
                three = _circle_three(p, q, r)
                if three is not None:
                    circ = three
    return circ


@dataclass(frozen=True)
class HullResult:
    cylinder: Cylinder
    volume: float
    ratio: float


def cylinder_hull(k: QuadraticField, S) -> HullResult:
    """Minimal coordinate-wise ball product containing the embedded set."""
    S = _distinct(S)
    if not S:
        raise ValueError("empty set")
    kinds = coordinate_kinds(k)
    if kinds == ("complex",):
        pts = [k.embed(x)[0] for x in S]
        (cx, cy), r = minimal_enclosing_circle((z.real, z.imag) for z in pts)
        cyl = Cylinder(kinds, (complex(cx, cy),), (r,))
    else:
        coords = [k.embed(x) for x in S]
        centers, radii = [], []
        for i in range(len(kinds)):
            vals = [c[i] for c in coords]
            centers.append((max(vals) + min(vals)) / 2)
            radii.append((max(vals) - min(vals)) / 2)
        cyl = Cylinder(kinds, tuple(centers), tuple(radii))
    vol = cyl.leb_volume()
    return HullResult(cyl, vol, vol / len(S))


def format_set(k: QuadraticField, S) -> list[str]:
    return [format_element(x, k) for x in S]
