"""Bounded regions of V used for lattice counts, discrepancy and quantization.

Points are passed as float arrays of shape (m, D): D = 2 for quadratic
fields, holding (s1, s2) for real fields and (Re, Im) for imaginary ones,
and D = 1 for Q.  ``paper_measure`` doubles planar area on a complex
coordinate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import shapely

from .errors import ParseError
from .ring import QuadraticField


def _measure_factor(k: QuadraticField) -> float:
    return 2.0 if k.is_imaginary else 1.0


class Region:
    kind = "region"

    def contains(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def planar_measure(self) -> float:
        raise NotImplementedError

    def paper_measure(self, k: QuadraticField) -> float:
        return _measure_factor(k) * self.planar_measure()

    def boundary_points(self, n: int) -> np.ndarray:
        """n points on the boundary, spread by arc length."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Disk(Region):
    center: tuple[float, float]
    radius: float
    kind = "disk"

    def contains(self, pts):
        pts = np.asarray(pts, dtype=float)
        c = np.asarray(self.center)
        return np.sum((pts - c) ** 2, axis=1) <= self.radius**2

    def bbox(self):
        c = np.asarray(self.center, dtype=float)
        return c - self.radius, c + self.radius

    def planar_measure(self):
        return math.pi * self.radius**2

    def boundary_points(self, n):
        th = 2 * math.pi * (np.arange(n) + 0.5) / n
        return np.stack([self.center[0] + self.radius * np.cos(th),
                         self.center[1] + self.radius * np.sin(th)], axis=1)

    def to_dict(self):
        return {"kind": "disk", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class Box(Region):
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    closed: bool = True
    kind = "box"

    def contains(self, pts):
        pts = np.asarray(pts, dtype=float)
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        if self.closed:
            return np.all((pts >= lo) & (pts <= hi), axis=1)
        return np.all((pts > lo) & (pts < hi), axis=1)

    def bbox(self):
        return np.asarray(self.lo, dtype=float), np.asarray(self.hi, dtype=float)

    def planar_measure(self):
        return float(np.prod(np.asarray(self.hi) - np.asarray(self.lo)))

    def paper_measure(self, k):
        if len(self.lo) == 1:
            return self.planar_measure()
        return super().paper_measure(k)

    def boundary_points(self, n):
        if len(self.lo) == 1:
            return np.array([[self.lo[0]], [self.hi[0]]])
        (x0, y0), (x1, y1) = self.lo, self.hi
        poly = shapely.Polygon([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])
        return _ring_points(poly.exterior, n)

    def to_dict(self):
        return {"kind": "box", "lo": list(self.lo), "hi": list(self.hi), "closed": self.closed}


def _ring_points(ring, n):
    s = (np.arange(n) + 0.5) / n * ring.length
    pts = shapely.line_interpolate_point(ring, s)
    return shapely.get_coordinates(pts)


@dataclass(frozen=True)
class Polygon(Region):
    vertices: tuple[tuple[float, float], ...]
    kind = "polygon"

    @property
    def _shape(self):
        return shapely.Polygon(self.vertices)

    def contains(self, pts):
        pts = np.asarray(pts, dtype=float)
        return shapely.contains_xy(self._shape, pts[:, 0], pts[:, 1])

    def bbox(self):
        x0, y0, x1, y1 = self._shape.bounds
        return np.array([x0, y0]), np.array([x1, y1])

    def planar_measure(self):
        return float(self._shape.area)

    def boundary_points(self, n):
        return _ring_points(self._shape.exterior, n)

    def to_dict(self):
        return {"kind": "polygon", "vertices": [list(v) for v in self.vertices]}


@dataclass(frozen=True)
class SectorAnnulus(Region):
    """{r e^{i theta}: r_in <= r <= r_out, theta_lo <= theta <= theta_hi}."""

    r_in: float
    r_out: float
    theta_lo: float
    theta_hi: float
    kind = "sector"

    def contains(self, pts):
        pts = np.asarray(pts, dtype=float)
        r = np.hypot(pts[:, 0], pts[:, 1])
        th = np.arctan2(pts[:, 1], pts[:, 0])
        rel = np.mod(th - self.theta_lo, 2 * math.pi)
        return (r >= self.r_in) & (r <= self.r_out) & (rel <= self.theta_hi - self.theta_lo)

    def bbox(self):
        r = self.r_out
        return np.array([-r, -r]), np.array([r, r])

    def planar_measure(self):
        return 0.5 * (self.theta_hi - self.theta_lo) * (self.r_out**2 - self.r_in**2)

    def boundary_points(self, n):
        th = np.linspace(self.theta_lo, self.theta_hi, 256)
        outer = np.stack([self.r_out * np.cos(th), self.r_out * np.sin(th)], axis=1)
        inner = np.stack([self.r_in * np.cos(th[::-1]), self.r_in * np.sin(th[::-1])], axis=1)
        return _ring_points(shapely.LinearRing(np.vstack([outer, inner])), n)

    def to_dict(self):
        return {"kind": "sector", "r_in": self.r_in, "r_out": self.r_out,
                "theta_lo": self.theta_lo, "theta_hi": self.theta_hi}


@dataclass(frozen=True, eq=False)
class LevelSet(Region):
    """Union of the grid cells flagged in ``mask`` (axis 0 is the first coordinate)."""

    lo: tuple[float, float]
    hi: tuple[float, float]
    mask: np.ndarray
    kind = "levelset"

    @property
    def cell(self):
        shape = np.asarray(self.mask.shape)
        return (np.asarray(self.hi) - np.asarray(self.lo)) / shape

    def contains(self, pts):
        pts = np.asarray(pts, dtype=float)
        idx = np.floor((pts - np.asarray(self.lo)) / self.cell).astype(np.int64)
        ok = np.all((idx >= 0) & (idx < np.asarray(self.mask.shape)), axis=1)
        out = np.zeros(len(pts), dtype=bool)
        out[ok] = self.mask[idx[ok, 0], idx[ok, 1]]
        return out

    def bbox(self):
        return np.asarray(self.lo, dtype=float), np.asarray(self.hi, dtype=float)

    def planar_measure(self):
        return float(self.mask.sum() * np.prod(self.cell))

    def boundary_points(self, n):
        """Midpoints of cell edges separating inside from outside."""
        m = np.pad(self.mask.astype(bool), 1)
        hx, hy = self.cell
        pts = []
        ix, iy = np.nonzero(m[1:, 1:-1] != m[:-1, 1:-1])
        pts.append(np.stack([self.lo[0] + ix * hx, self.lo[1] + (iy + 0.5) * hy], axis=1))
        ix, iy = np.nonzero(m[1:-1, 1:] != m[1:-1, :-1])
        pts.append(np.stack([self.lo[0] + (ix + 0.5) * hx, self.lo[1] + iy * hy], axis=1))
        allpts = np.vstack(pts)
        if len(allpts) > n:
            allpts = allpts[np.linspace(0, len(allpts) - 1, n).astype(int)]
        return allpts

    def to_dict(self):
        return {"kind": "levelset", "lo": list(self.lo), "hi": list(self.hi),
                "shape": list(self.mask.shape),
                "cells": [[int(i), int(j)] for i, j in zip(*np.nonzero(self.mask))]}


def region_from_dict(data: dict) -> Region:
    try:
        kind = data["kind"]
        if kind == "disk":
            return Disk(tuple(map(float, data["center"])), float(data["radius"]))
        if kind == "box":
            return Box(tuple(map(float, data["lo"])), tuple(map(float, data["hi"])),
                       bool(data.get("closed", True)))
        if kind == "polygon":
            return Polygon(tuple(tuple(map(float, v)) for v in data["vertices"]))
        if kind == "sector":
            return SectorAnnulus(float(data["r_in"]), float(data["r_out"]),
                                 float(data["theta_lo"]), float(data["theta_hi"]))
        if kind == "levelset":
            mask = np.zeros(tuple(data["shape"]), dtype=bool)
            for i, j in data["cells"]:
                mask[i, j] = True
            return LevelSet(tuple(data["lo"]), tuple(data["hi"]), mask)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed region: {exc}") from exc
    raise ParseError(f"unknown region kind {data.get('kind')!r}")


def region_from_json(text: str) -> Region:
    try:
        return region_from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ParseError(f"region is not valid JSON: {exc}") from exc


def unit_measure_disk(k: QuadraticField) -> Disk:
    """The disk about 0 whose measure is 1 (doubled on the complex plane)."""
    return Disk((0.0, 0.0), math.sqrt(1.0 / (_measure_factor(k) * math.pi)))
