"""Truncated Lax operator on the Hardy space and its spectral data.

On the basis e^{ikx}, k >= 0, the operator h -> -i eps h' - Pi(u h) is the
Hermitian band matrix H[j, k] = eps j delta_jk - c_{j-k}.  Inner products
follow <a|b> = (1/2pi) int a conj(b), so <1|f> = conj(f[0]) and
<f|Sf> = sum_k f[k+1] conj(f[k]).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceFailure, TruncationTooSmall
from .potential import TrigPotential, value_range

GAUGE = ("<1|f_0> > 0; <f_{n+1}|S f_n> > 0 when |.| > 1e-12, "
         "otherwise largest-magnitude component of f_{n+1} made real positive")


@dataclass(frozen=True)
class LaxMatrix:
    M: int
    eps: float
    H: np.ndarray
    degree: int
    coeffs: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))

    @classmethod
    def free(cls, eps: float, M: int) -> "LaxMatrix":
        """The unperturbed operator eps D (all potential entries zero)."""
        return cls(M, float(eps), np.diag(eps * np.arange(M)).astype(complex), 0)

    def hermiticity_residual(self) -> float:
        return float(np.max(np.abs(self.H - self.H.conj().T)))


def auto_truncation(u: TrigPotential, eps: float, lam_target: float = 0.0) -> int:
    """Smallest M satisfying M >= max(8N, ceil((lam_target + 2 |u|_inf)/eps) + 4N)."""
    n = u.degree
    return max(8 * n, int(math.ceil((lam_target + 2 * u.sup_norm()) / eps)) + 4 * n)


def assemble_lax(u: TrigPotential, eps: float, M: int) -> LaxMatrix:
    if eps <= 0:
        raise ValueError("eps must be positive")
    n = u.degree
    if M < 4 * n:
        raise TruncationTooSmall(f"M = {M} < 4N = {4 * n}")
    H = np.diag(eps * np.arange(M)).astype(complex)
    idx = np.arange(M)
    for m, c in enumerate(u.coeffs, start=1):
        if m >= M:
            break
        H[idx[m:], idx[:-m]] = -c
        H[idx[:-m], idx[m:]] = -np.conj(c)
    return LaxMatrix(M, float(eps), H, n, u.coeffs)


@dataclass(frozen=True)
class SpectrumResult:
    eps: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # column n is f_n
    thetas: np.ndarray
    gaps: np.ndarray
    inner_1: np.ndarray  # <1|f_n>
    gauge: str
    gauge_fallbacks: tuple

    @property
    def M(self) -> int:
        return len(self.eigenvalues)


def _fix_gauge(vecs):
    M = vecs.shape[0]
    out = vecs.copy()
    fallbacks = []
    prev = None
    for n in range(M):
        f = out[:, n]
        if prev is None:
            ref = np.conj(f[0])
        else:
            ref = np.vdot(prev[:-1], f[1:])  # <f|S prev> = sum f[k+1] conj(prev[k])
        if abs(ref) <= 1e-12:
            fallbacks.append(n)
            j = int(np.argmax(np.abs(f)))
            phase = abs(f[j]) / f[j]
        elif prev is None:
            phase = ref / abs(ref)  # makes conj(f[0]) real positive
        else:
            phase = np.conj(ref) / abs(ref)
        f = f * phase
        out[:, n] = f
        prev = f
    return out, tuple(fallbacks)


def eigensolve(H: LaxMatrix) -> SpectrumResult:
    try:
        lam, vecs = np.linalg.eigh(H.H)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    order = np.argsort(lam, kind="stable")
    lam = lam[order]
    vecs, fb = _fix_gauge(vecs[:, order])
    inner = np.conj(vecs[0, :])
    return SpectrumResult(H.eps, lam, vecs, phase_constants_from(inner), np.diff(lam) - H.eps,
                          inner, GAUGE, fb)


def spectrum(u: TrigPotential, eps: float, M: int | None = None) -> SpectrumResult:
    return eigensolve(assemble_lax(u, eps, M or auto_truncation(u, eps)))


def phase_constants_from(inner):
    th = np.angle(inner)
    th[np.abs(inner) <= 1e-12] = 0.0
    return th


def phase_constants(spec: SpectrumResult) -> np.ndarray:
    """theta_n = arg <1|f_n>, or 0 when the overlap vanishes."""
    return phase_constants_from(spec.inner_1)


def gaps_and_sumrule(spec: SpectrumResult, u: TrigPotential | None, eps: float, degree: int | None = None):
    """Gaps and the trace sum-rule residual.

    With gamma_n = lambda_{n+1} - lambda_n - eps the identity reads
    eps * sum_{n>=0} (n+1) gamma_n = (1/2) * (1/2pi) int u^2 dx.  Only the
    lower half of the truncated spectrum enters the sum: near the truncation
    edge the eigenvalues mirror the bottom of the spectrum and the gaps there
    are artefacts.
    """
    M = spec.M
    n = degree if degree is not None else (u.degree if u is not None else 0)
    if u is not None:
        if M < 8 * n or eps * M < 4 * u.sup_norm():
            raise TruncationTooSmall(f"M = {M} too small for the sum rule at eps = {eps}")
    g = spec.gaps
    K = M // 2
    lhs = eps * math.fsum((k + 1) * g[k] for k in range(K))
    rhs = 0.0 if u is None else 0.5 * u.l2_squared()
    return g, abs(lhs - rhs)


@dataclass(frozen=True)
class ParityReport:
    pairings: np.ndarray
    J: tuple
    max_im: float
    step_signs: np.ndarray  # -s_n/|s_n|: the sign of conj(zeta_n) zeta_{n+1}
    theta_steps: np.ndarray  # e^{i(theta_{n+1} - theta_n)} in the fixed gauge, nan where undefined


def shift_pairing(spec: SpectrumResult, u: TrigPotential | None = None, delta: float | None = None) -> ParityReport:
    """s_n = <f_n|S f_n>, consecutive phase steps and the upside-down set.

    Up to a positive factor, s_n = -conj(zeta_n) zeta_{n+1} for the Birkhoff
    coordinates zeta_n, so -s_n/|s_n| is the gauge-free phase step.  For a
    potential with x_min at 0 the bulk of the small-region steps equal +1
    (this is what makes the k = 1 Fourier coefficient come out negative), so
    J collects the steps equal to -1: n >= 1 with lambda_n + eps in
    Lambda_-(delta) and s_n > 0.
    """
    f = spec.eigenvectors
    s = np.einsum("kn,kn->n", f[1:, :], np.conj(f[:-1, :]))
    mag = np.abs(s)
    step = np.full(len(s), np.nan + 0j)
    nz = mag > 1e-12
    step[nz] = -s[nz] / mag[nz]
    a = spec.inner_1
    ok = (np.abs(a[:-1]) > 1e-6) & (np.abs(a[1:]) > 1e-6)
    ratio = np.full(len(a) - 1, np.nan + 0j)
    ratio[ok] = (a[1:][ok] / np.abs(a[1:][ok])) / (a[:-1][ok] / np.abs(a[:-1][ok]))
    J = []
    if u is not None and delta is not None:
        umin, umax = value_range(u)
        lo, hi = -umax + delta, -umin - delta
        for n in range(1, len(s)):
            lam = spec.eigenvalues[n] + spec.eps
            if nz[n] and lo <= lam <= hi and step[n].real < 0:
                J.append(n)
    return ParityReport(s, tuple(J), float(np.max(np.abs(s.imag))), step, ratio)
