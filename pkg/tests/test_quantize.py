import numpy as np
import pytest

from bolax.burgers import distribution_profile
from bolax.errors import InsufficientLadder, NotEven, OutOfRegion
from bolax.laxspec import spectrum
from bolax.potential import parse_potential
from bolax.quantize import (
    PsiLift,
    large_spacing,
    predict_small,
    psi_even,
    psi_general,
    region_classify,
    residual_report,
)


@pytest.fixture(scope="module")
def cos_tools(cosine):
    prof = distribution_profile(cosine)
    return prof, PsiLift(cosine, prof)


def test_psi_even_cosine_center(cosine):
    # -1/4 - N F(0) with no interior roots: -3/4 = 1/4 mod 1
    assert psi_even(cosine, 0.0) == pytest.approx(0.25, abs=1e-12)
    assert psi_general(cosine, 0.0) == pytest.approx(0.25, abs=1e-12)


def test_psi_even_requires_even(level0):
    with pytest.raises(NotEven):
        psi_even(level0, 0.0)


def test_psi_even_general_agree(even_two_mode):
    prof = distribution_profile(even_two_mode)
    for eta in np.linspace(prof.min_u + 0.1, prof.max_u - 0.1, 25):
        d = psi_even(even_two_mode, eta, prof) - psi_general(even_two_mode, -eta)
        assert abs((d + 0.5) % 1 - 0.5) < 1e-8


def test_psi_continuity_non_even():
    u = parse_potential([-1.0, 0.3j])
    prof = distribution_profile(u)
    lift = PsiLift(u, prof)
    etas = np.linspace(prof.min_u + 0.2, prof.max_u - 0.2, 100)
    vals = np.array([lift(e) for e in etas])
    assert np.max(np.abs(np.diff(vals))) < 0.05


def test_lift_anchor(cosine, cos_tools):
    _, lift = cos_tools
    assert lift(2.0 - 1e-6) == pytest.approx(0.75, abs=1e-2)
    assert lift(0.0) == pytest.approx(0.25, abs=1e-12)  # 3/4 - F(0)


def test_region_partition(cosine):
    part = region_classify(spectrum(cosine, 0.1), cosine, 0.2)
    assert part.small == pytest.approx((-1.8, 1.8))
    assert part.large_lo == pytest.approx(2.2)
    assert set(part.bands) == {-2.0, 2.0}
    assert "band" not in part.tags


def test_transition_count(cosine):
    eps, delta = 0.05, 0.2
    part = region_classify(spectrum(cosine, eps), cosine, delta)
    assert len(part.indices("transition")) >= 0.5 * delta / eps


def test_predict_small_vs_eigensolver(cosine, cos_tools):
    prof, lift = cos_tools
    eps = 0.1
    sp = spectrum(cosine, eps)
    checked = 0
    for n, lam in enumerate(sp.eigenvalues):
        if -1.5 <= -lam <= 1.5:
            assert abs(predict_small(cosine, eps, 0.05, n, profile=prof, lift=lift) - lam) <= 0.1 * eps
            checked += 1
    assert checked > 10


def test_predict_monotone_and_top(cosine, cos_tools):
    prof, lift = cos_tools
    lams = [predict_small(cosine, 0.01, 0.001, n, profile=prof, lift=lift) for n in range(5)]
    assert np.all(np.diff(lams) > 0)
    exact = spectrum(cosine, 0.01).eigenvalues[:5]
    assert np.max(np.abs(np.array(lams) - exact)) < 0.1 * 0.01
    with pytest.raises(OutOfRegion):
        predict_small(cosine, 0.1, 0.2, 10**4, profile=prof, lift=lift)


def test_residual_report_scaling(cosine):
    rep = residual_report(cosine, [0.2, 0.1, 0.05, 0.025], 0.2)
    assert rep.small_slope >= 1.2
    assert rep.to_json()["psi_convention"]
    with pytest.raises(InsufficientLadder):
        residual_report(cosine, [0.2, 0.1], 0.2)


def test_large_spacing(cosine):
    eps = 0.05
    sp = spectrum(cosine, eps, 400)
    assert large_spacing(sp, region_classify(sp, cosine, 0.3), 4.0) <= 0.05 * eps


def test_free_like_large_spacing_zero():
    from bolax.laxspec import LaxMatrix, eigensolve

    u = parse_potential([-1.0])
    sp = eigensolve(LaxMatrix.free(0.1, 128))
    assert large_spacing(sp, region_classify(sp, u, 0.3), 4.0) == 0.0
