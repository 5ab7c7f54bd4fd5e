import math

import numpy as np
import pytest

from bolax.burgers import (
    BranchSet,
    CharacteristicMap,
    action_A,
    alt_sum,
    alt_sum_field,
    antecedents,
    branch_fourier,
    branch_fourier_feet,
    branches,
    distribution_F,
    distribution_profile,
    weak_limit_fourier,
)
from bolax.errors import NotWeaklyBellShaped, OutOfRangeEta


@pytest.fixture(scope="module")
def prof(cosine):
    return distribution_profile(cosine)


def test_F_values(prof):
    assert distribution_F(prof, 3.0) == 0.0
    assert distribution_F(prof, -3.0) == 1.0
    assert distribution_F(prof, 0.0) == pytest.approx(0.5, abs=1e-12)
    assert distribution_F(prof, 1.0) == pytest.approx(1 / 3, abs=1e-12)


def test_F_grid_count(level0):
    p = distribution_profile(level0)
    x = np.linspace(0, 2 * np.pi, 10**6, endpoint=False)
    vals = level0(x)
    for eta in (-5.0, 0.3, 6.0):
        assert p.F(eta) == pytest.approx(np.mean(vals >= eta), abs=1e-5)


def test_antecedents(prof):
    xp, xm = antecedents(prof, 0.0)
    assert xp == pytest.approx(np.pi / 2, abs=1e-12) and xm == pytest.approx(3 * np.pi / 2, abs=1e-12)
    xp, xm = antecedents(prof, 2.0 - 1e-8)
    assert abs(xp - np.pi) < 1e-3 and abs(xm - np.pi) < 1e-3 and xp < np.pi < xm
    xp, xm = antecedents(prof, -2.0 + 1e-8)
    assert xp < 1e-3 and xm > 2 * np.pi - 1e-3
    with pytest.raises(OutOfRangeEta):
        antecedents(prof, 2.5)


def test_action(prof):
    assert action_A(prof, 2.0) == 0.0
    assert action_A(prof, -2.0) == pytest.approx(2.0, abs=1e-9)
    assert action_A(prof, 0.0) == pytest.approx(2 / np.pi, abs=1e-9)


def test_branches_before_breaking(cosine):
    for x in np.linspace(0, 2 * np.pi, 512, endpoint=False):
        assert branches(cosine, 0.2, x).count == 1
    assert branches(cosine, 0.0, 1.3).values[0] == pytest.approx(cosine(1.3))


def test_branches_after_breaking(cosine):
    xs = np.linspace(0, 2 * np.pi, 256, endpoint=False) + 1e-3
    counts = {branches(cosine, 0.5, x).count for x in xs}
    assert counts == {1, 3}


def test_alt_sum_definition():
    assert alt_sum(BranchSet(0.0, 0.0, (1.5,), (0.0,))) == 1.5
    assert alt_sum(BranchSet(0.0, 0.0, (-1.0, 0.5, 2.0), (0.0, 1.0, 2.0))) == pytest.approx(-1.0 - 0.5 + 2.0)


def test_alt_field_zero_mean(cosine):
    # rectangle rule across the shock kinks: error shrinks with the grid
    errs = []
    for n in (1024, 16384):
        x = np.linspace(0, 2 * np.pi, n, endpoint=False) + 1e-4
        errs.append(abs(np.mean(alt_sum_field(cosine, 0.5, x))))
    assert errs[1] < 1e-6 and errs[1] < errs[0] / 10


def test_alt_field_matches_branches(cosine):
    for x in (0.4, 2.0, 3.3, 5.1):
        assert CharacteristicMap(cosine, 0.5).field(np.array([x]))[0] == pytest.approx(
            alt_sum(branches(cosine, 0.5, x)), abs=1e-10)


def test_weak_limit_t0(prof):
    assert weak_limit_fourier(prof, 0.0, 1) == pytest.approx(-1.0, abs=1e-7)
    assert abs(weak_limit_fourier(prof, 0.0, 2)) < 1e-7


def test_weak_limit_matches_branch_transforms(cosine, prof):
    ks = [1, 2, 3, 5, 8]
    a = weak_limit_fourier(prof, 0.5, ks)
    assert np.max(np.abs(a - branch_fourier(cosine, 0.5, ks))) < 1e-5
    assert np.max(np.abs(a - branch_fourier_feet(cosine, 0.5, ks))) < 1e-5


def test_weak_limit_conjugate_symmetry(prof):
    a = weak_limit_fourier(prof, 0.5, [3, -3])
    assert a[1] == pytest.approx(np.conj(a[0]), abs=1e-12)


def test_branches_need_bell():
    from bolax.potential import parse_potential

    with pytest.raises(NotWeaklyBellShaped):
        branches(parse_potential([0.0, 1.0]), 0.1, 0.3)
    assert math.isfinite(alt_sum(branches(parse_potential([0.0, 1.0]), 0.1, 0.3, check_shape=False)))
