"""Analytic constants: zeta residues, L(1, chi) and its derivative, Euler–Kronecker constants.

Every value carries an error bound.  The primary L-series route sums whole
periods of the character and bounds the tail by Abel summation against the
periodic partial sums.  The secondary route uses mpmath's Hurwitz-zeta based
Dirichlet series and a symmetric difference of (s - 1) zeta_k(s) at s = 1.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import mpmath
import numpy as np

from .ring import QuadraticField, kronecker_symbol


@dataclass(frozen=True)
class Value:
    value: float
    error: float

    def __float__(self):
        return self.value


@lru_cache(maxsize=None)
def residue_rho(k: QuadraticField) -> Value:
    """Residue of the Dedekind zeta function at s = 1 (class number formula)."""
    if k.is_rational:
        return Value(1.0, 0.0)
    r1, r2 = (2, 0) if k.is_real else (0, 1)
    R = k.regulator if k.is_real else 1.0
    rho = 2**r1 * (2 * math.pi) ** r2 * k.class_number * R / (k.torsion_units * math.sqrt(abs(k.disc)))
    return Value(rho, 1e-14 * rho)


def _character_table(D: int) -> np.ndarray:
    q = abs(D)
    return np.array([kronecker_symbol(D, n) for n in range(q)], dtype=float)


@dataclass(frozen=True)
class LSeriesValues:
    L1: Value
    L1prime: Value
    terms: int


def _tail_bound_data(chi: np.ndarray):
    """Mean of the periodic partial sums A(n) and a bound on the centred running sums."""
    A = np.cumsum(np.roll(chi, -1))  # A(1..q), period q
    mean = float(A.mean())
    centred = np.cumsum(A - mean)
    C = float(np.max(np.abs(centred))) + 1e-12
    return mean, C


@lru_cache(maxsize=None)
def l_series_at_one(D: int, periods: int = 0) -> LSeriesValues:
    """L(1, chi_D) and L'(1, chi_D) by periodic partial sums with rigorous tails."""
    q = abs(D)
    chi = _character_table(D)
    if periods <= 0:
        periods = max(1, 2_000_000 // q)
    M = periods * q
    n = np.arange(1, M + 1, dtype=float)
    c = chi[np.arange(1, M + 1) % q]
    L = math.fsum((c / n).tolist())
    Lp = -math.fsum((c * np.log(n) / n).tolist())
    mean, C = _tail_bound_data(chi)
    # A(M) = 0, so the tail is sum_{n>M} A(n) (f(n) - f(n+1))
    L += mean / (M + 1)
    L_err = C / ((M + 1) * (M + 2))
    f = lambda x: math.log(x) / x  # noqa: E731
    Lp -= mean * f(M + 1)
    Lp_err = C * (f(M + 1) - f(M + 2))
    rounding = 4 * M * float(np.finfo(float).eps)
    return LSeriesValues(Value(L, float(L_err + rounding)),
                         Value(Lp, float(Lp_err + rounding * math.log(M))), M)


@lru_cache(maxsize=None)
def euler_gamma() -> Value:
    """Euler's constant via harmonic sums with Euler–Maclaurin corrections."""
    n = 10_000
    H = math.fsum(1.0 / j for j in range(1, n + 1))
    g = H - math.log(n) - 1 / (2 * n) + 1 / (12 * n**2) - 1 / (120 * n**4)
    return Value(g, 1 / (252 * n**6) + 1e-15)


@dataclass(frozen=True)
class FieldConstants:
    field: str
    rho: Value
    gamma_k: Value
    gamma_Q: Value
    L1: Value
    L1prime: Value
    paper_constant: Value
    secondary_gamma_k: float
    secondary_L1: float

    @property
    def precision(self) -> float:
        return self.paper_constant.error

    def to_dict(self) -> dict:
        d = asdict(self)
        d["routes"] = {"primary": "periodic L-series partial sums with Abel tail bounds",
                       "secondary": "mpmath Dirichlet series, difference quotient of (s-1)zeta_k(s)"}
        return d


def gamma_secondary(k: QuadraticField, dps: int = 25) -> tuple[float, float]:
    """(gamma_k, L(1, chi)) from the Laurent expansion of zeta_k at 1."""
    if k.is_rational:
        with mpmath.workdps(dps):
            return float(mpmath.euler), 1.0
    D = k.disc
    q = abs(D)
    chi = [kronecker_symbol(D, n) for n in range(q)]
    with mpmath.workdps(dps):
        def g(s):
            return (s - 1) * mpmath.zeta(s) * mpmath.dirichlet(s, chi)

        h = mpmath.mpf(10) ** (-(dps // 3))
        lo, hi = g(1 - h), g(1 + h)
        rho = (lo + hi) / 2
        slope = (hi - lo) / (2 * h)
        return float(slope / rho), float(rho)  # (s - 1) zeta(s) -> 1, so rho = L(1)


def gamma_euler_kronecker(k: QuadraticField) -> Value:
    return field_constants(k).gamma_k


@lru_cache(maxsize=None)
def field_constants(k: QuadraticField) -> FieldConstants:
    gQ = euler_gamma()
    if k.is_rational:
        L1, L1p = Value(1.0, 0.0), Value(0.0, 0.0)
    else:
        vals = l_series_at_one(k.disc)
        L1, L1p = vals.L1, vals.L1prime
    ratio = L1p.value / L1.value
    ratio_err = (L1p.error + abs(ratio) * L1.error) / L1.value
    gk = Value(gQ.value + ratio, gQ.error + ratio_err)
    pc = -0.5 * math.log(abs(k.disc)) - 1.5 - ratio
    sec_gamma, sec_L1 = gamma_secondary(k)
    return FieldConstants(k.spec, residue_rho(k), gk, gQ, L1, L1p, Value(pc, ratio_err),
                          sec_gamma, sec_L1)


def paper_constant(k: QuadraticField) -> Value:
    """-1/2 log|disc| - 3/2 - gamma_k + gamma_Q; the gamma terms reduce to L'/L(1)."""
    return field_constants(k).paper_constant
