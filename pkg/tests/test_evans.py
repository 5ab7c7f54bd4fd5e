import math

import numpy as np
import pytest

from bolax import evans
from bolax.laxspec import spectrum
from bolax.potential import parse_potential


def test_contour_geometry():
    cs = evans.contours(2)
    assert len(cs) == 3
    assert evans.theta(1, 1) == pytest.approx(math.pi)
    assert evans.theta(1, 2) == pytest.approx(math.pi / 2)
    assert evans.theta(2, 2) == pytest.approx(3 * math.pi / 2)


def test_kronrod_rule_exact_on_polynomials():
    x, w = evans.KRONROD_X, evans.KRONROD_W
    assert len(x) == 15 and w.sum() == pytest.approx(2.0, abs=1e-14)
    for p in range(0, 22, 2):
        assert np.dot(w, x**p) == pytest.approx(2.0 / (p + 1), abs=1e-13)


def test_A_converges(cosine):
    a, e = evans.oscillatory_A(cosine, 0.5, 0.3, 1, 1)
    assert np.isfinite(a) and e < 1e-8 * abs(a)
    b, _ = evans.oscillatory_A(cosine, 0.5, 0.3, 1, 1, tol=1e-12)
    assert abs(a - b) <= 1e-8 * abs(a)


def test_A_converges_smaller_eps(cosine):
    a, e = evans.oscillatory_A(cosine, 0.25, 0.3, 1, 1)
    assert np.isfinite(a) and e < 1e-8 * abs(a)


@pytest.mark.parametrize("coeffs, eps", [([-1.0], 0.5), ([1.0, 0.15], 0.5), ([0.5, 0.3, 0.2], 0.37)])
@pytest.mark.parametrize("lam", [0.3, -0.71])
def test_symmetry_relations_even(coeffs, eps, lam):
    r = evans.symmetry_residuals(parse_potential(coeffs), eps, lam)
    assert r["conjugate"] <= max(2 * r["err"], 1e-10)
    assert r["reality"] <= max(2 * r["err"], 1e-10)


def test_symmetry_relations_fail_for_non_even():
    r = evans.symmetry_residuals(parse_potential([1.0, 0.4j]), 0.5, 0.3)
    assert r["conjugate"] > 1e-4


def test_tolerance_self_consistency(cosine):
    for lam in (-1.1, 0.37, 2.9):
        d8 = evans.evans_det(cosine, 0.5, lam, tol=1e-8)
        d10 = evans.evans_det(cosine, 0.5, lam, tol=1e-10)
        assert abs(d8 - d10) < 1e-6 * abs(d10)


def test_det_at_and_between_eigenvalues(cosine):
    eps = 0.5
    ev = spectrum(cosine, eps).eigenvalues
    inside = ev[(ev > -1.8) & (ev < 1.8)]
    grid = np.linspace(-1.8, 1.8, 73)
    median = float(np.median(np.abs(evans.evans_batch(cosine, eps, grid).det)))
    for lam in inside:
        assert abs(evans.evans_det(cosine, eps, lam)) <= 1e-4 * median
    for a, b in zip(inside, inside[1:]):
        assert abs(evans.evans_det(cosine, eps, 0.5 * (a + b))) >= 10 * 1e-6 * median


def test_scan_matches_spectrum(cosine):
    eps = 0.5
    ev = spectrum(cosine, eps, 400).eigenvalues
    scan = evans.scan_zeros(cosine, eps, (-1.8, 1.8), eigenvalues=ev)
    unmatched, missed = evans.match_bidirectional(scan.zero_values(), ev, (-1.8, 1.8))
    assert not unmatched and not missed
    assert len(list(scan.rows())) == len(scan.lams)


def test_scan_large_region_spacing(cosine):
    eps = 0.5
    ev = spectrum(cosine, eps, 400).eigenvalues
    zs = evans.scan_zeros(cosine, eps, (2.2, 6.0)).zero_values()
    zs = [z for z in zs if 2.2 <= z <= 6.0]
    assert zs and all(np.min(np.abs(ev - z)) <= 1e-3 for z in zs)
    assert np.all(np.abs(np.diff(zs) - eps) <= 0.05 * eps)


def test_scan_empty_below_spectrum(cosine):
    scan = evans.scan_zeros(cosine, 0.5, (-4.0, -2.5))
    assert scan.zero_values() == []


@pytest.mark.parametrize("lam", [0.37, -1.1])
def test_mp_determinant_agrees(even_two_mode, lam):
    m = evans.evans_batch(even_two_mode, 0.5, [lam]).matrices[0]
    double = abs(np.linalg.det(m)) / np.prod(np.abs(m).sum(axis=1))
    assert double == pytest.approx(evans.evans_det_mp(even_two_mode, 0.5, lam), rel=1e-9)


def test_match_bidirectional():
    unmatched, missed = evans.match_bidirectional([0.1, 0.5], [0.1005, 0.9], (0, 1))
    assert unmatched == [0.5] and missed == [0.9]
