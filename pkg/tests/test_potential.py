import math

import numpy as np
import pytest

from bolax.errors import EmptyCoefficients, GridTooCoarse, NotWeaklyBellShaped, ZeroArgument, ZeroLeadingCoefficient
from bolax.potential import (
    TrigPotential,
    classify_shape,
    comonotone_check,
    eval_complex,
    eval_complex_derivative,
    eval_Q,
    eval_torus,
    from_json,
    parse_potential,
    preset,
    truncate_fourier,
)


def test_parse_cosine(cosine):
    x = np.linspace(0, 2 * np.pi, 17)
    assert cosine.degree == 1 and cosine.is_even
    assert np.allclose(eval_torus(cosine, x), -2 * np.cos(x), atol=1e-15)


def test_parse_level0_coefficients():
    u = parse_potential([4, -0.5j, 0, 0, 0, 0.1])
    x = np.linspace(0, 2 * np.pi, 33)
    assert np.allclose(u(x), 8 * np.cos(x) + np.sin(2 * x) + np.cos(6 * x) / 5, atol=1e-13)
    assert not u.is_even


def test_preset_outside_expansion():
    u = preset("fig-level0-outside")
    x = np.linspace(0, 2 * np.pi, 33)
    ref = 8 * np.cos(x) - np.sin(2 * x) / 2 + np.sin(4 * x) / 4 + np.cos(6 * x) / 10
    assert np.allclose(u(x), ref, atol=1e-13)


def test_rotation_makes_leading_positive():
    u = parse_potential([1j])
    un = u.normalized()
    assert un.coeffs[-1].real > 0 and abs(un.coeffs[-1].imag) < 1e-15
    x = np.linspace(0, 2 * np.pi, 9)
    assert np.allclose(un(x), u(x - u.rotation), atol=1e-14)


def test_parse_errors():
    with pytest.raises(EmptyCoefficients):
        parse_potential([])
    with pytest.raises(ZeroLeadingCoefficient):
        parse_potential([1.0, 0.0])


def test_json_roundtrip(level0):
    v = from_json(level0.to_json())
    assert np.array_equal(v.coeffs, level0.coeffs)


def test_eval_complex_examples(cosine):
    assert abs(eval_complex(cosine, 1j)) < 1e-15
    assert eval_complex(cosine, 2.0) == pytest.approx(-2.5)
    with pytest.raises(ZeroArgument):
        eval_complex(cosine, 0.0)


def test_eval_complex_real_on_circle(level0):
    z = np.exp(1j * np.linspace(0, 2 * np.pi, 101))
    assert np.max(np.abs(eval_complex(level0, z).imag)) <= 1e-14 * level0.coeff_scale()
    assert np.allclose(eval_complex(level0, z).real, level0(np.angle(z)), atol=1e-13)


def test_eval_Q_examples(cosine):
    assert eval_Q(cosine, 1j) == pytest.approx(2j)
    assert eval_Q(cosine, -1j) == pytest.approx(-2j)
    z = np.exp(1j * np.linspace(0, 2 * np.pi, 50))
    assert np.max(np.abs(eval_Q(cosine, z).real)) < 1e-14


def test_Q_derivative_identity(level0):
    rng = np.random.default_rng(0)
    r = rng.uniform(0.3, 2.0, 100)
    z = r * np.exp(1j * rng.uniform(0, 2 * np.pi, 100))
    h = 1e-6 * np.abs(z)
    dq = (eval_Q(level0, z + h) - eval_Q(level0, z - h)) / (2 * h)
    rel = np.abs(-z * dq - eval_complex(level0, z)) / np.abs(eval_complex(level0, z)).clip(1e-3)
    assert np.max(rel) < 1e-8


def test_complex_derivative_matches_fd(level0):
    z = 0.7 * np.exp(0.4j)
    h = 1e-6
    fd = (eval_complex(level0, z + h) - eval_complex(level0, z - h)) / (2 * h)
    assert abs(eval_complex_derivative(level0, z) - fd) < 1e-6 * abs(fd)


def test_classify_cosine_bell(cosine):
    rep = classify_shape(cosine)
    assert rep.classification == "bell"
    assert rep.x_min == pytest.approx(0.0, abs=1e-10) or rep.x_min == pytest.approx(2 * np.pi, abs=1e-10)
    assert rep.x_max - rep.x_min == pytest.approx(np.pi, abs=1e-10)
    assert rep.xi_minus - rep.x_min == pytest.approx(np.pi / 2, abs=1e-10)
    assert rep.xi_plus - rep.x_min == pytest.approx(3 * np.pi / 2, abs=1e-10)
    assert classify_shape(cosine, grid_size=8192).classification == "bell"


def test_classify_degenerate_is_neither():
    assert classify_shape(parse_potential([1e-300])).classification == "neither"


def test_classify_level0_weakly_bell(level0):
    # dense-grid oracle: u' changes sign twice, u'' six times
    x = np.linspace(0, 2 * np.pi, 200001)
    assert np.count_nonzero(np.diff(np.sign(level0.derivative(x, 1)))) == 2
    assert np.count_nonzero(np.diff(np.sign(level0.derivative(x, 2)))) == 6
    assert classify_shape(level0).classification == "weakly_bell"


def test_truncate_exact_on_trig_polys(level0):
    x = np.linspace(0, 2 * np.pi, 256, endpoint=False)
    u = truncate_fourier(level0(x), 6)
    assert np.max(np.abs(u.coeffs - level0.coeffs)) < 1e-13
    c = truncate_fourier(-2 * np.cos(x), 4).coeffs
    assert abs(c[0] + 1) < 1e-14 and np.max(np.abs(c[1:])) < 1e-14
    with pytest.raises(GridTooCoarse):
        truncate_fourier(np.zeros(12), 4)


def test_truncate_bump_error_decreases():
    x = np.linspace(0, 2 * np.pi, 2048, endpoint=False)
    s = np.exp(np.cos(x))
    s -= s.mean()
    errs = [np.max(np.abs(truncate_fourier(s, n)(x) - s)) for n in (8, 16)]
    assert errs[1] < errs[0]


def test_comonotone_trig_poly_exact():
    x = np.linspace(0, 2 * np.pi, 1024, endpoint=False)
    u = parse_potential([-1.0, 0.1, 0.01])
    rep = comonotone_check(u(x), [3, 4, 8])
    assert all(r.comonotone for r in rep.records)
    assert max(r.sup_error for r in rep.records) < 1e-13


def test_comonotone_rejects_non_bell():
    x = np.linspace(0, 2 * np.pi, 1024, endpoint=False)
    with pytest.raises(NotWeaklyBellShaped):
        comonotone_check(np.cos(3 * x), [8])


def test_potential_immutable(cosine):
    with pytest.raises(ValueError):
        cosine.coeffs[0] = 2.0
    assert isinstance(cosine, TrigPotential)
    assert cosine.l2_squared() == pytest.approx(2.0)
    assert math.isclose(cosine.sup_norm(), 2.0, rel_tol=1e-12)
