import numpy as np
import pytest

from bolax.errors import TruncationTooSmall
from bolax.laxspec import (
    LaxMatrix,
    assemble_lax,
    auto_truncation,
    eigensolve,
    gaps_and_sumrule,
    phase_constants,
    shift_pairing,
    spectrum,
)
from bolax.potential import parse_potential


def test_assemble_cosine_small(cosine):
    H = assemble_lax(cosine, 1.0, 4).H
    assert np.allclose(np.diag(H).real, [0, 1, 2, 3])
    for j in range(3):
        assert H[j, j + 1] == 1 and H[j + 1, j] == 1


def test_banded_and_hermitian(level0):
    L = assemble_lax(level0, 0.1, 256)
    i, j = np.indices(L.H.shape)
    assert np.all(L.H[np.abs(i - j) > 6] == 0)
    assert L.hermiticity_residual() == 0.0


def test_truncation_too_small(level0):
    with pytest.raises(TruncationTooSmall):
        assemble_lax(level0, 0.1, 20)


def test_auto_truncation_rule(cosine):
    assert auto_truncation(cosine, 0.5) == max(8, int(np.ceil(4 / 0.5)) + 4)


def test_free_spectrum_exact():
    sp = eigensolve(LaxMatrix.free(1.0, 16))
    assert np.max(np.abs(sp.eigenvalues - np.arange(16))) <= 1e-12
    assert np.all(phase_constants(sp)[1:] == 0)
    _, res = gaps_and_sumrule(sp, None, 1.0)
    assert res == 0.0 and np.all(sp.gaps == 0)
    assert np.max(np.abs(shift_pairing(sp).pairings)) == 0


def test_spectrum_invariants(level0):
    eps, M = 0.1, 300
    L = assemble_lax(level0, eps, M)
    sp = eigensolve(L)
    sup = level0.sup_norm()
    f = sp.eigenvectors
    res = np.linalg.norm(L.H @ f - f * sp.eigenvalues, axis=0)
    assert np.max(res) <= 1e-10 * (eps * M + 2 * sup)
    assert np.all(np.diff(sp.eigenvalues) > 0)
    assert sp.eigenvalues[0] >= -sup - 1e-9
    n = np.arange(M)
    assert np.all(sp.eigenvalues <= eps * n + sup + 1e-9)
    assert np.min(sp.gaps[: M - 2 * 6]) >= -1e-8
    assert np.allclose(f.conj().T @ f, np.eye(M), atol=1e-12)


def test_truncation_convergence(cosine):
    a = spectrum(cosine, 0.5, 128).eigenvalues[:65]
    b = spectrum(cosine, 0.5, 256).eigenvalues[:65]
    assert np.max(np.abs(a - b)) < 1e-9


def test_sum_rule_cosine(cosine):
    for M in (256, 512):
        g, res = gaps_and_sumrule(spectrum(cosine, 0.5, M), cosine, 0.5)
        assert res <= 1e-3 * cosine.l2_squared()
        assert np.min(g[: M - 2]) >= -1e-8


def test_gauge(cosine):
    sp = spectrum(cosine, 0.5, 128)
    assert sp.inner_1[0].real > 0 and abs(sp.inner_1[0].imag) < 1e-15
    f = sp.eigenvectors
    s = np.einsum("kn,kn->n", f[1:, 1:], np.conj(f[:-1, :-1]))  # <f_{n+1}|S f_n>
    big = np.abs(s) > 1e-12
    assert np.all(s[big].real > 0) and np.max(np.abs(s[big].imag)) < 1e-12


def test_even_phase_steps(cosine):
    rep = shift_pairing(spectrum(cosine, 0.5, 128))
    st = rep.theta_steps[~np.isnan(rep.theta_steps)]
    assert st.size > 3
    assert np.max(np.minimum(np.abs(st - 1), np.abs(st + 1))) <= 1e-6
    assert rep.max_im <= 1e-8 * np.max(np.abs(rep.pairings))


def test_non_even_control():
    u = parse_potential([-1.0, 0.3j])
    rep = shift_pairing(spectrum(u, 0.5, 128))
    assert rep.max_im > 1e-3 * np.max(np.abs(rep.pairings))


def test_min_max_monotonicity(cosine):
    v = parse_potential([-1.05])  # u + 0.1 cos x
    a = spectrum(cosine, 0.5, 128).eigenvalues[:64]
    b = spectrum(v, 0.5, 128).eigenvalues[:64]
    assert np.max(np.abs(a - b)) <= 0.1 + 1e-9


def test_tail_gap_sum(cosine):
    sp = spectrum(cosine, 0.05, 512)
    n = int(4 / 0.05)
    assert np.sum(sp.gaps[n:256]) <= 0.05


def test_deterministic(level0):
    a = spectrum(level0, 0.1, 200)
    b = spectrum(level0, 0.1, 200)
    assert a.eigenvalues.tobytes() == b.eigenvalues.tobytes()
    assert a.eigenvectors.tobytes() == b.eigenvectors.tobytes()
