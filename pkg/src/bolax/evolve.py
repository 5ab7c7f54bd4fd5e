"""Time evolution of Fourier coefficients.

Three routes to u(t):

* the explicit formula, u_hat(t)(k) = <M(t)^k Pi u0 | 1> with
  M(t) = e^{i eps t} exp(2 i t L) S*, L the truncated Lax matrix;
* the eps -> 0 limit operator, M(t) = exp(-2 i t T_u0) S*;
* a pseudo-spectral RK4 integrator for u_t = d_x(eps |D| u - u^2), used as
  an independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .errors import BlowupDetected, PhaseUnwrapAmbiguity, TruncationTooSmall
from .laxspec import LaxMatrix, assemble_lax, auto_truncation, eigensolve
from .potential import TrigPotential

OVERLAP_FLOOR = 1e-10


@dataclass(frozen=True)
class EvolutionState:
    eps: float  # 0 for the limit operator
    t: float
    coeffs: np.ndarray  # u_hat(t)(k), k = 0..kmax
    provenance: str
    M: int
    extras: dict = field(default_factory=dict)

    @property
    def kmax(self) -> int:
        return len(self.coeffs) - 1

    def mass(self) -> float:
        """sum_{k >= 1} |u_hat(k)|^2."""
        return float(np.sum(np.abs(self.coeffs[1:]) ** 2))

    def rows(self):
        for k, c in enumerate(self.coeffs):
            yield (self.eps, self.t, k, float(c.real), float(c.imag), self.provenance)


def hardy_vector(u0: TrigPotential, M: int) -> np.ndarray:
    """Pi u0 on the basis e^{ikx}, 0 <= k < M."""
    if u0.degree > M // 2:
        tail = float(np.sum(np.abs(u0.coeffs[M // 2:]) ** 2))
        if tail > 1e-10:
            raise TruncationTooSmall(f"tail mass {tail:.3g} of Pi u0 beyond M/2 = {M // 2}")
    v = np.zeros(M, dtype=complex)
    n = min(u0.degree, M - 1)
    v[1 : n + 1] = u0.coeffs[:n]
    return v


def _check_kmax(kmax: int, M: int):
    if kmax > M // 2:
        raise TruncationTooSmall(f"kmax = {kmax} exceeds M/2 = {M // 2}")


class Propagator:
    """exp(i s H) for a Hermitian H, through one eigendecomposition."""

    def __init__(self, H: np.ndarray):
        self.lam, self.V = np.linalg.eigh(H)

    def apply(self, s: float, v: np.ndarray) -> np.ndarray:
        return self.V @ (np.exp(1j * s * self.lam) * (self.V.conj().T @ v))


def _iterate(prop: Propagator, s: float, scale: complex, v: np.ndarray, kmax: int) -> np.ndarray:
    out = np.empty(kmax + 1, dtype=complex)
    out[0] = v[0]
    for k in range(1, kmax + 1):
        w = np.zeros_like(v)
        w[:-1] = v[1:]  # S*
        v = w if s == 0 else scale * prop.apply(s, w)
        out[k] = v[0]
    return out


def fourier_evolution(u0: TrigPotential, eps: float, t: float, kmax: int, M: int | None = None,
                      prop: Propagator | None = None) -> EvolutionState:
    if eps <= 0:
        raise ValueError("eps must be positive")
    M = M or max(auto_truncation(u0, eps), 2 * kmax)
    _check_kmax(kmax, M)
    v = hardy_vector(u0, M)
    prop = prop or Propagator(assemble_lax(u0, eps, M).H)
    coeffs = _iterate(prop, 2.0 * t, np.exp(1j * eps * t), v, kmax)
    return EvolutionState(float(eps), float(t), coeffs, "explicit_formula", M,
                          {"mass0": float(np.sum(np.abs(v) ** 2))})


def toeplitz_matrix(u0: TrigPotential, M: int) -> np.ndarray:
    """T_u0 on the first M modes: T[j, k] = c_{j-k}."""
    H = assemble_lax(u0, 1.0, M).H
    return -(H - np.diag(np.arange(M)))


def weak_limit_operator(u0: TrigPotential, t: float, kmax: int, M: int = 512,
                        prop: Propagator | None = None) -> EvolutionState:
    _check_kmax(kmax, M)
    v = hardy_vector(u0, M)
    prop = prop or Propagator(toeplitz_matrix(u0, M))
    coeffs = _iterate(prop, -2.0 * t, 1.0, v, kmax)
    return EvolutionState(0.0, float(t), coeffs, "limit_operator", M)


def _linear_symbol(eps: float, k: np.ndarray) -> np.ndarray:
    # u_t = eps d_x |D| u has symbol i eps k |k|: e^{ikx} -> e^{i eps k|k| t} e^{ikx}
    return 1j * eps * k * np.abs(k)


def _rk4_run(u0: TrigPotential, eps: float, t_end: float, dt: float, n: int):
    k = np.fft.fftfreq(n, 1.0 / n)
    x = 2.0 * math.pi * np.arange(n) / n
    uh = np.fft.fft(u0(x)) / n
    lin = _linear_symbol(eps, k)
    keep = np.abs(k) <= n // 3  # 2/3 rule
    ik = 1j * k

    def nonlin(vh):
        uu = np.fft.ifft(vh * n).real
        return -ik * keep * (np.fft.fft(uu * uu) / n)

    sup0 = float(np.max(np.abs(u0(x))))
    steps = max(1, int(round(t_end / dt)))
    h = t_end / steps
    E = np.exp(lin * h / 2)
    v = uh * keep
    for _ in range(steps):
        k1 = nonlin(v)
        vm = E * v
        k2 = nonlin(vm + 0.5 * h * E * k1)
        k3 = nonlin(vm + 0.5 * h * k2)
        k4 = nonlin(E * (vm + h * k3))
        v = E * E * v + h / 6.0 * (E * E * k1 + 2.0 * E * (k2 + k3) + k4)
        if not np.all(np.isfinite(v)) or np.max(np.abs(np.fft.ifft(v * n))) > 10.0 * sup0:
            raise BlowupDetected("sup norm grew beyond 10x its initial value")
    return v, h


def reference_integrator(u0: TrigPotential, eps: float, t_end: float, dt: float = 1e-4, M_modes: int = 128,
                         kmax: int | None = None, error_estimate: bool = True) -> EvolutionState:
    """Integrating-factor RK4 for u_t = d_x(eps |D| u - u^2) on M_modes grid points."""
    if dt > 0.5 / (max(eps, 1e-300) * M_modes):
        raise ValueError(f"dt = {dt} above the stability bound 0.5/(eps M) = {0.5 / (eps * M_modes):.3g}")
    kmax = M_modes // 3 if kmax is None else kmax
    v, h = _rk4_run(u0, eps, t_end, dt, M_modes)
    coeffs = v[: kmax + 1].copy()
    extras = {"dt": h}
    if error_estimate and t_end > 0:
        v2, _ = _rk4_run(u0, eps, t_end, dt / 2, M_modes)
        extras["step_halving_error"] = float(np.linalg.norm(v2[: kmax + 1] - coeffs))
    return EvolutionState(float(eps), float(t_end), coeffs, "reference_integrator", M_modes, extras)


def relative_l2(a: EvolutionState, b: EvolutionState, ks=None) -> float:
    ks = range(1, min(a.kmax, b.kmax) + 1) if ks is None else ks
    x = np.array([a.coeffs[k] for k in ks])
    y = np.array([b.coeffs[k] for k in ks])
    return float(np.linalg.norm(x - y) / np.linalg.norm(y))


def lax_from_coeffs(coeffs: np.ndarray, eps: float, M: int) -> LaxMatrix:
    """Lax matrix eps D - T_u for u with Fourier coefficients coeffs[k], k >= 0."""
    col = np.zeros(M, dtype=complex)
    n = min(len(coeffs), M)
    col[1:n] = coeffs[1:n]
    T = toeplitz(col, np.conj(col))
    return LaxMatrix(M, float(eps), np.diag(eps * np.arange(M)).astype(complex) - T, n - 1)


@dataclass(frozen=True)
class FrequencyReport:
    eps: float
    dt: float
    n: np.ndarray
    measured: np.ndarray  # increments of theta_{n+1} - theta_n over dt
    predicted: np.ndarray  # 2 lambda_n + eps
    residuals: np.ndarray

    def max_residual(self, mask=None) -> float:
        r = self.residuals if mask is None else self.residuals[mask]
        return float(np.max(r)) if r.size else 0.0


def frequency_check(u0: TrigPotential, eps: float, dt: float, M: int | None = None, t1: float = 0.0,
                    n_max: int | None = None) -> FrequencyReport:
    """Finite-difference phase frequencies from two evolved snapshots.

    theta_n(t) = arg <1|f_n(t)> in the gauge of laxspec.  With
    theta_n(t) = theta_n(0) + omega_n t the consecutive differences
    omega_{n+1} - omega_n should equal 2 lambda_n + eps.  Modes are used up
    to the first n whose overlap with 1 drops below OVERLAP_FLOOR, where the
    phase stops being defined.
    """
    M = M or auto_truncation(u0, eps)
    big = 2 * M
    prop = Propagator(assemble_lax(u0, eps, big).H)

    def snapshot(t):
        st = fourier_evolution(u0, eps, t, M, big, prop)
        return eigensolve(lax_from_coeffs(st.coeffs, eps, M))

    s1, s2 = snapshot(t1), snapshot(t1 + dt)
    n_max = M // 2 if n_max is None else n_max
    a, b = s1.inner_1[: n_max + 1], s2.inner_1[: n_max + 1]
    ok = np.minimum(np.abs(a), np.abs(b)) > OVERLAP_FLOOR
    n_ok = int(np.argmin(ok)) if not ok.all() else n_max + 1  # first unresolved overlap
    d = np.angle(b[:n_ok] / a[:n_ok])
    step = (np.diff(d) + math.pi) % (2 * math.pi) - math.pi
    if np.any(np.abs(step) > math.pi / 2):
        raise PhaseUnwrapAmbiguity("phase increment above pi/2 between snapshots; reduce dt")
    measured = step / dt
    predicted = 2.0 * s1.eigenvalues[: n_ok - 1] + eps
    return FrequencyReport(float(eps), float(dt), np.arange(n_ok - 1), measured, predicted,
                           np.abs(measured - predicted))
