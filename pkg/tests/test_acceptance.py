"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the summary of all criteria
is printed at the end of the session.
"""
import itertools
import math
import random
import time

import numpy as np
import pytest

from noptimal.constants import paper_constant
from noptimal.counting import (
    average_unit_equation_sum,
    count_norm_pairs,
    fit_count_scaling,
    principal_ideal_sum,
    unit_equation_solutions,
)
from noptimal.discrepancy import count_region, discrepancy, exact_recount, find_bad_dilate
from noptimal.measures import (
    collapse,
    energy,
    minimize_energy,
    quantize,
    random_density_grid,
    symmetric_difference_from_disk,
)
from noptimal.optimal import (
    canonical_form,
    certify_n_optimal,
    certify_via_volume,
    search_n_optimal,
)
from noptimal.regions import Disk, unit_measure_disk
from noptimal.ring import RingElement as E
from noptimal.ring import coordinate_kinds, get_field

QQ, QI, Q2, Q3, Q5, Q7 = (get_field(d) for d in (1, -1, 2, -3, 5, 7))
DISK_ENERGY = -math.log(2 * math.pi) - 0.5


@pytest.fixture(scope="module")
def gaussian_minimizer():
    return minimize_energy(QI, 512)


@pytest.mark.criterion(1)
def test_integers_are_n_optimal(criterion):
    start = time.perf_counter()
    bad = [n for n in range(1, 31)
           if not certify_n_optimal(QQ, [E(j, 0) for j in range(n + 1)]).optimal]
    elapsed = time.perf_counter() - start
    criterion.check(not bad, f"all n <= 30 certified (failures: {bad})")
    criterion.check(elapsed < 5, f"{elapsed:.2f} s < 5 s")
    assert not criterion.failures


def _sweep_sets(k):
    if k.degree == 1:
        pool = [E(a, 0) for a in range(1, 7)]
    else:
        pool = [E(a, b) for a in range(7) for b in range(7) if (a, b) != (0, 0)]
    for r in range(1, 5):
        for rest in itertools.combinations(pool, r):
            yield [E(0, 0), *rest]


@pytest.mark.criterion(2)
def test_certification_routes_agree(criterion):
    for k in (QQ, QI, Q2, Q3):
        total = disagreements = optimal = 0
        for S in _sweep_sets(k):
            direct = certify_n_optimal(k, S).optimal
            total += 1
            optimal += direct
            disagreements += direct != certify_via_volume(k, S)
        criterion.check(disagreements == 0,
                        f"{k.spec}: {disagreements} disagreements in {total} sets ({optimal} optimal)")
    assert not criterion.failures


@pytest.mark.criterion(3)
def test_search_instances(criterion):
    start = time.perf_counter()
    sqrt7 = search_n_optimal(Q7, 2, 8)
    criterion.check(sqrt7.complete and sqrt7.sets == [], "Q(sqrt 7), n=2, box 8: no sets")
    target = {E(0, 0), E(1, 0), E(1, 1)}
    raw = search_n_optimal(QI, 2, 4, normalize=False)
    criterion.check(raw.complete and any(set(S) == target for S in raw.sets),
                    f"Q(i), n=2, box 4: {{0, 1, 1+i}} among {len(raw.sets)} sets")
    norm = search_n_optimal(QI, 2, 4)
    criterion.check([canonical_form(QI, S) for S in norm.sets] == [canonical_form(QI, target)],
                    "normalized search gives the single class of {0, 1, 1+i}")
    elapsed = time.perf_counter() - start
    criterion.check(elapsed < 60, f"{elapsed:.1f} s < 60 s")
    assert not criterion.failures


def _brute_nu(k, a1, a2, a3, J=20):
    units = list(k.torsion) if k.is_imaginary else [
        k.scale(k.unit_power(j), s) for j in range(-J, J + 1) for s in (1, -1)]
    return sum(1 for u in units for w in units
               if k.add(k.mul(a1, u), k.mul(a2, w)) == E(*a3))


@pytest.mark.criterion(4)
def test_unit_equation_census(criterion):
    one = E(1, 0)
    for k, expect in ((QI, 0), (Q5, 6)):
        nu = unit_equation_solutions(k, one, one, one).nu
        brute = _brute_nu(k, one, one, one)
        criterion.check(nu == brute == expect, f"{k.spec}: nu(1,1,1) = {nu}, brute force {brute}")

    rng = random.Random(2024)
    worst = 0
    for k in (QI, Q2, Q3, Q5):
        for _ in range(100):
            al = [E(rng.randint(-5, 5), rng.randint(-5, 5)) for _ in range(3)]
            if any(a == (0, 0) for a in al):
                continue
            worst = max(worst, unit_equation_solutions(k, *al).nu)
    criterion.check(worst <= 3 * 7**2, f"max sampled nu = {worst} <= 147")

    mismatches = 0
    for trial in range(50):
        k = (Q2, QI, Q5, Q3)[trial % 4]
        a3 = E(0, 0)
        while a3 == (0, 0):
            a3 = E(rng.randint(-6, 6), rng.randint(-6, 6))
        X = rng.choice([1, 2, 3, 4, 5])
        total = average_unit_equation_sum(k, a3, X).total
        mismatches += total != count_norm_pairs(k, a3, X).count
    criterion.check(mismatches == 0, f"unit-sum identity: {mismatches} mismatches in 50 cases")
    assert not criterion.failures


@pytest.mark.criterion(5)
def test_tauberian_sums(criterion):
    for r in (0, 1, 2):
        res = principal_ideal_sum(QI, 10**5, r)
        ratio = res.value / (math.factorial(r) * math.pi / 4 * 10**5)
        criterion.check(0.95 <= ratio <= 1.05, f"r={r}: ratio {ratio:.5f}")
    small = principal_ideal_sum(QI, 100, 0).value
    criterion.check(small == 79, f"X=100, r=0: {small:g} == 79")
    assert not criterion.failures


@pytest.mark.criterion(6)
def test_count_scaling(criterion):
    js = range(4, 11)
    X = [2**j for j in js]
    limit = 1 + 1 / 7 + 0.15
    for k, gen in ((QI, E(1, 1)), (Q2, E(0, 1))):
        fit = fit_count_scaling(k, [k.power(gen, j) for j in js], X)
        criterion.check(fit.slope <= limit, f"{k.spec}: slope {fit.slope:.4f} <= {limit:.4f}")
    assert not criterion.failures


@pytest.mark.criterion(7)
def test_energy_minimizer(criterion, gaussian_minimizer):
    res = gaussian_minimizer
    sd = symmetric_difference_from_disk(res.grid)
    criterion.check(sd < 0.02, f"symmetric difference {100 * sd:.3f}% < 2%")
    criterion.check(abs(res.report.I - DISK_ENERGY) < 0.01,
                    f"I = {res.report.I:.6f} vs {DISK_ENERGY:.6f}")
    assert not criterion.failures


@pytest.mark.criterion(8)
def test_energy_lower_bound(criterion, gaussian_minimizer):
    c = paper_constant(QI).value
    criterion.check(abs(c + 2.4388) <= 1e-3, f"constant {c:.5f} = -2.4388 +- 1e-3")
    criterion.check(c <= gaussian_minimizer.report.I,
                    f"constant <= minimizer energy {gaussian_minimizer.report.I:.5f}")
    rng = np.random.default_rng(8)
    violations, lowest = 0, math.inf
    for _ in range(1000):
        rep = energy(random_density_grid(QI, 32, rng))
        lowest = min(lowest, rep.I)
        violations += rep.I < c - rep.quadrature_error_bound
    criterion.check(violations == 0, f"1000 random grids: {violations} violations, lowest I {lowest:.4f}")
    assert not criterion.failures


@pytest.mark.criterion(9)
def test_collapse_properties(criterion):
    for d in (1, -1, 2, -3):
        k = get_field(d)
        rng = np.random.default_rng(900 + d)
        mass_err = 0.0
        not_idem = increases = not_strict = 0
        for _ in range(100):
            g = random_density_grid(k, 48, rng)
            before = energy(g)
            for i in range(1, len(coordinate_kinds(k)) + 1):
                c = collapse(g, i)
                mass_err = max(mass_err, abs(c.mass - g.mass))
                not_idem += not np.array_equal(collapse(c, i).cells, c.cells)
                after = energy(c)
                err = before.quadrature_error_bound + after.quadrature_error_bound
                increases += after.I > before.I + err
                not_strict += not after.I < before.I - err
        criterion.check(mass_err <= 1e-12 and not_idem == 0 and increases == 0 and not_strict == 0,
                        f"{k.spec}: mass err {mass_err:.1e}, {not_idem} non-idempotent, "
                        f"{increases} increases, {not_strict} not strict")
    assert not criterion.failures


@pytest.mark.criterion(10)
def test_discrepancy_engine(criterion):
    disk = Disk((0.0, 0.0), 1.0)
    rc = exact_recount(QI, disk, 1, 0)
    D = discrepancy(QI, disk, 1, 0)
    criterion.check(rc.exact and rc.count == 5 and count_region(QI, disk, 1, 0) == 5,
                    f"exact N = {rc.count}")
    criterion.check(abs(D - (5 - math.pi)) < 1e-12, f"D = {D:.12f}")

    found = find_bad_dilate(QI, unit_measure_disk(QI), budget=10**6)
    w = found.witness
    criterion.check(w is not None and w.exact_recount and abs(w.D) > 1,
                    f"bad dilate D = {w.D:.4f} after {w.samples} samples" if w else "no witness")

    rng = np.random.default_rng(10)
    U = unit_measure_disk(QI)
    broken = 0
    for _ in range(1000):
        t, v = rng.uniform(0.5, 4, 2), rng.uniform(-3, 3, 2)
        x = QI.embed_many(*(np.array([c]) for c in rng.integers(-8, 9, 2)))[0]
        broken += discrepancy(QI, U, t, v) != discrepancy(QI, U, t, v + x)
    criterion.check(broken == 0, f"periodicity: {broken} of 1000 shifts differ")
    assert not criterion.failures


@pytest.mark.criterion(11)
def test_quantizer_counts(criterion):
    U = unit_measure_disk(QI)
    for n, tol in ((100, 0.15), (10**4, 0.05)):
        size = quantize(QI, U, n).count
        criterion.check(abs(size - n) <= tol * n, f"n={n}: |E_n| = {size}")
    assert not criterion.failures
