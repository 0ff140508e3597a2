"""Lattice counts in dilated translates tU + v and their discrepancy.

``count_region`` is the fast float route.  Witnesses are re-counted by an
independent exact route: lattice coordinates are p + q sqrt|disc| with
rational p, q, floats are exact rationals, so membership in disks, boxes and
polygons is decided with ``Fraction`` arithmetic.  Sectors and level sets
fall back to float membership plus a perturbation-stability check.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .errors import CapExceededError
from .regions import Box, Disk, Polygon, Region
from .ring import QuadraticField, lattice_points_in_box, v_norm

BATCH_ELEMENTS = 4_000_000  # lattice points x candidate shifts per vectorized block


# ---------------------------------------------------------------------------
# coordinates


def _as_vec(k: QuadraticField, t) -> np.ndarray:
    """V point as a float vector: (Re, Im), (s1, s2) or (a,)."""
    if isinstance(t, complex):
        return np.array([t.real, t.imag])
    if np.isscalar(t):
        dim = 1 if k.degree == 1 else 2
        return np.array([float(t), 0.0]) if (dim == 2 and k.is_imaginary) else np.full(dim, float(t))
    out = np.asarray(t, dtype=float).ravel()
    if len(out) != (1 if k.degree == 1 else 2):
        raise ValueError(f"expected a point of V for {k.spec}, got {t!r}")
    return out


def t_norm(k: QuadraticField, t) -> float:
    t = _as_vec(k, t)
    if k.is_imaginary:
        return float(t[0] ** 2 + t[1] ** 2)
    return float(v_norm(k, tuple(t)))


def _inverse_map(k: QuadraticField, pts: np.ndarray, t: np.ndarray, v: np.ndarray) -> np.ndarray:
    """(x - v) / t coordinate-wise (complex division on a complex coordinate)."""
    d = pts - v
    if k.is_imaginary:
        n = t[0] ** 2 + t[1] ** 2
        re = (d[..., 0] * t[0] + d[..., 1] * t[1]) / n
        im = (d[..., 1] * t[0] - d[..., 0] * t[1]) / n
        return np.stack([re, im], axis=-1)
    return d / t


def _forward_map(k: QuadraticField, pts: np.ndarray, t: np.ndarray, v: np.ndarray) -> np.ndarray:
    if k.is_imaginary:
        re = pts[..., 0] * t[0] - pts[..., 1] * t[1]
        im = pts[..., 0] * t[1] + pts[..., 1] * t[0]
        return np.stack([re, im], axis=-1) + v
    return pts * t + v


def _image_bbox(k, U: Region, t, v):
    lo, hi = (np.asarray(a, float) for a in U.bbox())
    if len(lo) == 1:
        ends = np.array([[lo[0]], [hi[0]]])
    else:
        ends = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [lo[0], hi[1]], [hi[0], hi[1]]])
    img = _forward_map(k, ends, t, v)
    return img.min(axis=0), img.max(axis=0)


def _check_t(k, t) -> np.ndarray:
    tv = _as_vec(k, t)
    if t_norm(k, tv) == 0:
        raise ValueError("t must be invertible (nonzero in every coordinate)")
    return tv


# ---------------------------------------------------------------------------
# counting


def count_region(k: QuadraticField, U: Region, t=1.0, v=0.0) -> int:
    """N_t(U, v) = #(O_k ∩ (tU + v))."""
    tv = _check_t(k, t)
    vv = _as_vec(k, v)
    lo, hi = _image_bbox(k, U, tv, vv)
    a, b, xy = lattice_points_in_box(k, lo, hi)
    if not len(a):
        return 0
    xy = np.asarray(xy, float)
    return int(np.count_nonzero(U.contains(_inverse_map(k, xy, tv, vv))))


def main_term(k: QuadraticField, U: Region, t=1.0) -> float:
    """|disc|^{-1/2} Leb(U) ||t|| with Leb doubled on complex coordinates."""
    return float(U.paper_measure(k) * t_norm(k, t) / math.sqrt(abs(k.disc)))


def discrepancy(k: QuadraticField, U: Region, t=1.0, v=0.0) -> float:
    return count_region(k, U, t, v) - main_term(k, U, t)


def reduce_shift(k: QuadraticField, v) -> np.ndarray:
    """Representative of v modulo O_k in the cell spanned by 1 and omega."""
    vv = _as_vec(k, v)
    if k.degree == 1:
        return vv - np.floor(vv)
    basis = k.embed_many(np.array([1, 0]), np.array([0, 1])).T  # columns are 1 and omega
    coef = np.linalg.solve(basis, vv)
    return vv - basis @ np.floor(coef)


def period_cell_sample(k: QuadraticField, rng: np.random.Generator, n: int) -> np.ndarray:
    """n uniform points of a fundamental cell of O_k in V."""
    if k.degree == 1:
        return rng.uniform(0, 1, (n, 1))
    basis = k.embed_many(np.array([1, 0]), np.array([0, 1])).T
    return rng.uniform(0, 1, (n, 2)) @ basis.T


def count_many(k: QuadraticField, U: Region, t, shifts: np.ndarray) -> np.ndarray:
    """N_t(U, v) for many shifts v at once (vectorized over the shifts)."""
    tv = _check_t(k, t)
    shifts = np.asarray(shifts, float).reshape(len(shifts), -1)
    if not len(shifts):
        return np.zeros(0, dtype=np.int64)
    lo0, hi0 = _image_bbox(k, U, tv, np.zeros_like(tv))
    a, b, xy = lattice_points_in_box(k, lo0 + shifts.min(axis=0), hi0 + shifts.max(axis=0))
    xy = np.asarray(xy, float)
    out = np.zeros(len(shifts), dtype=np.int64)
    if not len(a):
        return out
    step = max(1, BATCH_ELEMENTS // len(a))
    for s in range(0, len(shifts), step):
        vs = shifts[s:s + step]
        y = _inverse_map(k, xy[None, :, :], tv, vs[:, None, :])
        inside = U.contains(y.reshape(-1, y.shape[-1])).reshape(len(vs), len(a))
        out[s:s + step] = inside.sum(axis=1)
    return out


# ---------------------------------------------------------------------------
# exact recount


@dataclass(frozen=True)
class Surd:
    """p + q sqrt(m) with rational p, q."""

    p: Fraction
    q: Fraction
    m: int

    def __add__(self, o):
        o = _lift(o, self.m)
        return Surd(self.p + o.p, self.q + o.q, self.m)

    __radd__ = __add__

    def __sub__(self, o):
        o = _lift(o, self.m)
        return Surd(self.p - o.p, self.q - o.q, self.m)

    def __rsub__(self, o):
        return _lift(o, self.m) - self

    def __mul__(self, o):
        o = _lift(o, self.m)
        return Surd(self.p * o.p + self.q * o.q * self.m, self.p * o.q + self.q * o.p, self.m)

    __rmul__ = __mul__

    def sign(self) -> int:
        sp = (self.p > 0) - (self.p < 0)
        sq = (self.q > 0) - (self.q < 0)
        if sq == 0 or sp == sq:
            return sp if sp else sq
        if sp == 0:
            return sq
        # opposite signs: compare p^2 with q^2 m
        diff = self.p * self.p - self.q * self.q * self.m
        return sp if diff > 0 else (sq if diff < 0 else 0)


def _lift(x, m) -> Surd:
    if isinstance(x, Surd):
        return x
    return Surd(Fraction(x), Fraction(0), m)


def _exact_coordinates(k: QuadraticField, a: int, b: int) -> tuple[Surd, ...]:
    """V-coordinates of a + b omega as surds in sqrt|disc|."""
    m = abs(k.disc)
    if k.degree == 1:
        return (Surd(Fraction(a), Fraction(0), 1),)
    base = Fraction(a) + Fraction(b * k.t, 2)
    half = Fraction(b, 2)
    if k.is_imaginary:
        return (Surd(base, Fraction(0), m), Surd(Fraction(0), half, m))
    return (Surd(base, half, m), Surd(base, -half, m))


def _exact_preimage(k, x: tuple[Surd, ...], t, v):
    T = [Fraction(float(c)) for c in t]
    Vv = [Fraction(float(c)) for c in v]
    d = [xi - vi for xi, vi in zip(x, Vv)]
    if k.is_imaginary:
        n = T[0] * T[0] + T[1] * T[1]
        inv = Fraction(1) / n
        return ((d[0] * T[0] + d[1] * T[1]) * inv, (d[1] * T[0] - d[0] * T[1]) * inv)
    return tuple(di * (Fraction(1) / ti) for di, ti in zip(d, T))


def _exact_contains(U: Region, y) -> bool | None:
    """Exact membership of a surd point in U, or None if U has no exact test."""
    F = lambda c: Fraction(float(c))  # noqa: E731
    if isinstance(U, Disk):
        c = [F(ci) for ci in U.center]
        s = sum((yi - ci) * (yi - ci) for yi, ci in zip(y, c)) - F(U.radius) ** 2
        return s.sign() <= 0
    if isinstance(U, Box):
        for yi, lo, hi in zip(y, U.lo, U.hi):
            s_lo, s_hi = (yi - F(lo)).sign(), (F(hi) - yi).sign()
            if U.closed and (s_lo < 0 or s_hi < 0):
                return False
            if not U.closed and (s_lo <= 0 or s_hi <= 0):
                return False
        return True
    if isinstance(U, Polygon):
        verts = [(F(px), F(py)) for px, py in U.vertices]
        px, py = y
        winding = 0
        for (ax, ay), (bx, by) in zip(verts, verts[1:] + verts[:1]):
            cross = ((px - ax) * (by - ay) - (py - ay) * (bx - ax)).sign()
            up_a = (py - ay).sign() >= 0
            up_b = (py - by).sign() >= 0
            if cross == 0:
                on_x = (px - min(ax, bx)).sign() >= 0 and (F(max(ax, bx)) - px).sign() >= 0
                on_y = (py - min(ay, by)).sign() >= 0 and (F(max(ay, by)) - py).sign() >= 0
                if on_x and on_y:
                    return False  # boundary is outside, as in the float test
            if up_a and not up_b and cross < 0:
                winding += 1
            elif up_b and not up_a and cross > 0:
                winding -= 1
        return winding != 0
    return None


@dataclass
class Recount:
    count: int
    exact: bool
    stable: bool


def exact_recount(k: QuadraticField, U: Region, t, v, probes: int = 8,
                  rel_step: float = 1e-9) -> Recount:
    """Independent recount of N_t(U, v) and whether nearby shifts agree."""
    tv = _check_t(k, t)
    vv = _as_vec(k, v)
    lo, hi = _image_bbox(k, U, tv, vv)
    span = float(np.max(hi - lo)) + 1.0
    a, b, xy = lattice_points_in_box(k, lo - 1e-6 * span, hi + 1e-6 * span)
    xy = np.asarray(xy, float)
    exact_ok = True
    n = 0
    for ai, bi, p in zip(a.tolist(), b.tolist(), xy):
        y = _exact_preimage(k, _exact_coordinates(k, ai, bi), tv, vv)
        inside = _exact_contains(U, y)
        if inside is None:
            exact_ok = False
            inside = bool(U.contains(_inverse_map(k, p[None, :], tv, vv))[0])
        n += bool(inside)
    # same count at small perturbations of v: the value is attained on an open set
    rng = np.random.default_rng(12345)
    step = rel_step * span
    shifts = vv + step * rng.standard_normal((probes, len(vv)))
    stable = bool(np.all(count_many(k, U, tv, shifts) == n))
    return Recount(n, exact_ok, stable)


# ---------------------------------------------------------------------------
# witnesses


@dataclass
class Witness:
    t: list
    v: list
    N: int
    main_term: float
    D: float
    exact_recount: bool
    stable: bool
    samples: int

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass
class LowerBound:
    value: float
    witness: Witness
    samples: int


def _witness(k, U, t, v, samples) -> Witness:
    rc = exact_recount(k, U, t, v)
    mt = main_term(k, U, t)
    return Witness([float(c) for c in _as_vec(k, t)], [float(c) for c in _as_vec(k, v)],
                   rc.count, mt, rc.count - mt, rc.exact, rc.stable, samples)


def max_discrepancy_lower(k: QuadraticField, U: Region, t=1.0, budget: int = 4096,
                          seed: int = 0, batch: int = 256) -> LowerBound:
    """Best |D_t(U, v)| over sampled shifts v.

    The candidate stream depends only on the seed and on earlier results,
    so a larger budget can never report a smaller bound.  Half of each batch
    is uniform over a period cell; the other half places a lattice point just
    inside or just outside a boundary point of tU + v.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    tv = _check_t(k, t)
    rng = np.random.default_rng(seed)
    mt = main_term(k, U, tv)
    bpts = U.boundary_points(64) if hasattr(U, "boundary_points") else None
    center = np.mean(np.stack(U.bbox()), axis=0)
    best_val, best_v, used = -1.0, np.zeros_like(tv), 0
    first = True
    while used < budget:
        n = min(batch, budget - used)
        if first:
            cand = np.zeros((1, len(tv)))
            if n > 1:
                cand = np.vstack([cand, period_cell_sample(k, rng, n - 1)])
            first = False
        else:
            half = n // 2
            parts = [period_cell_sample(k, rng, n - half)]
            if half and bpts is not None and len(bpts):
                p = bpts[rng.integers(len(bpts), size=half)]
                eta = rng.choice([-1e-6, 1e-6], size=(half, 1)) * rng.uniform(1, 100, (half, 1))
                shifted = center + (1 - eta) * (p - center)
                parts.append(-_forward_map(k, shifted, tv, np.zeros_like(tv)))
            elif half:
                parts.append(period_cell_sample(k, rng, half))
            cand = np.vstack(parts)
        vals = np.abs(count_many(k, U, tv, cand) - mt)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best_v = float(vals[i]), cand[i]
        used += len(cand)
    w = _witness(k, U, tv, best_v, used)
    return LowerBound(abs(w.D), w, used)


@dataclass
class DilateSearch:
    witness: Witness | None
    samples: int
    pairs_tried: int

    @property
    def exhausted(self) -> bool:
        return self.witness is None

    def to_dict(self) -> dict:
        return {"witness": None if self.witness is None else self.witness.to_dict(),
                "samples": self.samples, "pairs_tried": self.pairs_tried,
                "status": "exhausted" if self.exhausted else "found"}


def _invert(k, d: np.ndarray) -> np.ndarray:
    if k.is_imaginary:
        n = d[0] ** 2 + d[1] ** 2
        return np.array([d[0] / n, -d[1] / n])
    return 1.0 / d


def find_bad_dilate(k: QuadraticField, U: Region, budget: int = 10**6, seed: int = 0,
                    margin: float = 1e-6, per_pair: int = 64) -> DilateSearch:
    """Search for (t, v) with |D_t(U, v)| > 1 following the three-point recipe.

    For boundary points p, q of U put t = (q - p)^-1 and v = -p t, so that 0 and
    1 lie on the boundary of tU + v; then scan slight dilations about 1/2 and
    jittered shifts.  Candidates are only reported after an exact recount
    that is stable under perturbation of v.
    """
    if k.degree == 1:
        raise ValueError("the dilate search needs dim V >= 2; intervals in R have D <= 1")
    rng = np.random.default_rng(seed)
    bpts = U.boundary_points(512)
    used = pairs = 0
    mass = U.paper_measure(k)
    half_one = _as_vec(k, 0.5)
    while used < budget:
        i, j = rng.integers(len(bpts), size=2)
        d = bpts[j] - bpts[i]
        if k.is_imaginary:
            if math.hypot(*d) < 1e-9:
                continue
        elif np.min(np.abs(d)) < 1e-9:
            continue
        pairs += 1
        t0 = _invert(k, d)
        v0 = -_forward_map(k, bpts[i], t0, np.zeros(2))
        n = min(per_pair, budget - used)
        eps = np.concatenate([[1e-4, 1e-3, 1e-2], rng.uniform(-0.02, 0.05, max(0, n - 3))])[:n]
        jitter = rng.standard_normal((n, 2)) * 1e-3 * np.abs(eps)[:, None]
        used += n
        for e in np.unique(np.round(eps, 12)):
            sel = np.nonzero(np.round(eps, 12) == e)[0]
            t = (1 + e) * t0
            # dilate tU + v about 1/2 so both anchor points move inside together
            v = (1 + e) * v0 - e * half_one + jitter[sel]
            try:
                counts = count_many(k, U, t, v)
            except CapExceededError:
                continue
            mt = mass * t_norm(k, t) / math.sqrt(abs(k.disc))
            hits = np.nonzero(np.abs(counts - mt) > 1 + margin)[0]
            for h in hits[:4]:
                w = _witness(k, U, t, v[h], used)
                if abs(w.D) > 1 + margin and w.stable:
                    return DilateSearch(w, used, pairs)
    return DilateSearch(None, used, pairs)
