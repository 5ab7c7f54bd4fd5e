import numpy as np
import pytest

from bolax import evolve as ev
from bolax.burgers import distribution_profile, weak_limit_fourier
from bolax.errors import BlowupDetected, TruncationTooSmall
from bolax.potential import parse_potential


def test_t0_reconstruction(level0):
    st = ev.fourier_evolution(level0, 0.3, 0.0, 8)
    expect = np.zeros(9, dtype=complex)
    expect[1:7] = level0.coeffs
    assert np.array_equal(st.coeffs, expect)
    lim = ev.weak_limit_operator(level0, 0.0, 8, M=64)
    assert np.array_equal(lim.coeffs, expect)
    ref = ev.reference_integrator(level0, 0.3, 0.0, M_modes=64, kmax=8)
    assert np.max(np.abs(ref.coeffs - expect)) < 1e-13


@pytest.mark.parametrize("t", [0.1, 0.3, 1.0])
def test_mass_and_mean_conserved(cosine, t):
    M = 256
    st = ev.fourier_evolution(cosine, 0.5, t, M // 2, M)
    assert abs(st.coeffs[0]) <= 1e-10
    assert abs(st.mass() - st.extras["mass0"]) <= 1e-8


def test_explicit_matches_rk4(cosine):
    a = ev.fourier_evolution(cosine, 0.5, 0.3, 8)
    b = ev.reference_integrator(cosine, 0.5, 0.3, dt=1e-4, M_modes=128, kmax=8)
    assert ev.relative_l2(a, b) <= 1e-5
    assert b.extras["step_halving_error"] < 1e-8


def test_explicit_matches_rk4_non_even():
    u = parse_potential([-1.0, 0.2j])
    a = ev.fourier_evolution(u, 0.5, 0.2, 8)
    b = ev.reference_integrator(u, 0.5, 0.2, dt=1e-4, M_modes=128, kmax=8)
    assert ev.relative_l2(a, b) <= 1e-5


def test_weak_limit_sandwich(cosine):
    prof = distribution_profile(cosine)
    st = ev.weak_limit_operator(cosine, 0.5, 4, M=512)
    assert np.max(np.abs(st.coeffs[1:5] - weak_limit_fourier(prof, 0.5, [1, 2, 3, 4]))) <= 2e-3


@pytest.mark.parametrize("t", [0.15, 0.5])
def test_eps_convergence(cosine, t):
    lim = ev.weak_limit_operator(cosine, t, 3, M=512)
    coarse = ev.fourier_evolution(cosine, 0.2, t, 3)
    fine = ev.fourier_evolution(cosine, 0.025, t, 3)
    for k in (1, 2, 3):
        assert abs(fine.coeffs[k] - lim.coeffs[k]) <= 0.5 * abs(coarse.coeffs[k] - lim.coeffs[k])


def test_dispersion_dominated(cosine):
    eps, t = 4.0, 0.05
    st = ev.reference_integrator(cosine, eps, t, dt=1e-4, M_modes=64, kmax=4, error_estimate=False)
    lin = -1.0 * np.exp(1j * eps * t)
    assert abs(st.coeffs[1] - lin) <= 0.1 * abs(lin)


def test_reference_dt_bound(cosine):
    with pytest.raises(ValueError):
        ev.reference_integrator(cosine, 0.5, 0.1, dt=0.1, M_modes=128)


def test_blowup_detected():
    u = parse_potential([-1.0])
    # far above the stability bound the explicit scheme diverges
    with pytest.raises(BlowupDetected):
        ev._rk4_run(u, 0.0, 5.0, 0.5, 64)


def test_truncation_errors(level0):
    with pytest.raises(TruncationTooSmall):
        ev.hardy_vector(level0, 8)
    with pytest.raises(TruncationTooSmall):
        ev.fourier_evolution(level0, 0.5, 0.1, 40, M=64)


def test_state_rows(cosine):
    st = ev.fourier_evolution(cosine, 0.5, 0.1, 3)
    rows = list(st.rows())
    assert len(rows) == 4 and rows[1][:3] == (0.5, 0.1, 1) and rows[0][5] == "explicit_formula"


def test_lax_from_coeffs_matches_assembly(level0):
    from bolax.laxspec import assemble_lax

    coeffs = np.zeros(40, dtype=complex)
    coeffs[1:7] = level0.coeffs
    a = ev.lax_from_coeffs(coeffs, 0.3, 40).H
    assert np.allclose(a, assemble_lax(level0, 0.3, 40).H, atol=1e-15)


def test_frequency_near_free():
    # lambda_n -> n eps as u -> 0, so the increments approach (2n + 1) eps
    rep = ev.frequency_check(parse_potential([0.01]), 0.5, 0.01, M=32)
    assert rep.n.size >= 2
    assert np.max(np.abs(rep.measured - (2 * rep.n + 1) * 0.5)) < 1e-3
    assert rep.max_residual() < 1e-6


def test_frequency_cosine(cosine):
    rep = ev.frequency_check(cosine, 0.5, 0.01, M=64)
    small = (rep.predicted - 0.5) / 2
    mask = np.abs(small) < 1.8
    assert mask.any() and rep.max_residual(mask) <= 1e-2
    # the relation holds exactly along the flow, so a smaller step keeps it at round-off
    half = ev.frequency_check(cosine, 0.5, 0.005, M=64)
    assert half.max_residual(mask[: half.n.size]) <= 1e-2
