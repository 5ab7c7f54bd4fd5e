"""Bohr-Sommerfeld predictions for the Lax eigenvalues and residual diagnostics.

Small eigenvalues satisfy A(-lambda_n) = eps (n + psi(-lambda_n)) + O(eps^{3/2})
with A(eta) = int_eta^{max u} F.  The phase psi is taken continuous in eta,
anchored at eta -> max u where it tends to 3/4.  Every function here uses
eta = -lambda as the argument of psi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .burgers import DistributionProfile, distribution_profile
from .errors import DegenerateCriticalPoints, InsufficientLadder, NotEven, OutOfRegion, RootPolishFailure
from .landscape import CriticalPointSet, band_candidates, critical_points, psi_raw
from .laxspec import SpectrumResult, auto_truncation, spectrum
from .potential import TrigPotential, value_range

PSI_CONVENTION = "psi evaluated at eta = -lambda, lifted continuously from 3/4 at eta = max u"


def psi_general(u: TrigPotential, lam: float, cps: CriticalPointSet | None = None) -> float:
    """psi(-lambda) in [0, 1)."""
    return psi_raw(u, lam, cps)


def psi_even(u: TrigPotential, eta: float, profile: DistributionProfile | None = None) -> float:
    """psi for even u in [0, 1), using p_+ = conj(p_-).

    The inside roots are closed under conjugation, so the two argument sums
    fold into one: psi = -1/4 - N F(eta) + (1/pi) sum_k arg(p_- - p_k).
    """
    if not u.is_even:
        raise NotEven("psi_even needs real coefficients")
    prof = profile or distribution_profile(u)
    if eta >= prof.max_u:
        return 0.75
    F = prof.F(eta)
    if eta <= prof.min_u:
        return (-0.25 - u.degree * F) % 1.0
    _, xm = prof.antecedents(eta)
    p_minus = complex(np.exp(1j * xm))
    cps = critical_points(u, -eta)
    s = float(np.sum(np.angle(p_minus - cps.inside)))
    return (-0.25 - u.degree * F + s / math.pi) % 1.0


class PsiLift:
    """Continuous branch of psi on (min u, max u), equal to 3/4 at the top."""

    def __init__(self, u: TrigPotential, profile: DistributionProfile | None = None, points: int = 800):
        self.u = u
        self.profile = profile or distribution_profile(u)
        lo, hi = self.profile.min_u, self.profile.max_u
        s = (np.arange(points) + 0.5) / points
        etas = lo + (hi - lo) * 0.5 * (1.0 - np.cos(math.pi * s))
        etas = etas[::-1]  # from the top down
        raw, keep = [], []
        for e in etas:
            try:
                raw.append(self.raw(e))
                keep.append(e)
            except (DegenerateCriticalPoints, RootPolishFailure):
                continue
        raw = np.array(raw)
        lifted = raw + np.concatenate([[0.0], np.cumsum(np.round(-np.diff(raw)))])
        lifted -= round(lifted[0] - 0.75)  # branch through 3/4 at the top
        self.etas = np.array(keep)[::-1]
        self.values = lifted[::-1]

    def raw(self, eta: float) -> float:
        return psi_raw(self.u, -eta)

    def __call__(self, eta: float) -> float:
        r = self.raw(eta)
        guess = float(np.interp(eta, self.etas, self.values))
        return r + round(guess - r)


@dataclass(frozen=True)
class RegionPartition:
    delta: float
    small: tuple  # Lambda_-(delta) as (lo, hi)
    large_lo: float  # Lambda_+(delta) = [large_lo, inf)
    bands: tuple
    tags: tuple

    def indices(self, tag: str):
        return [n for n, t in enumerate(self.tags) if t == tag]


def region_classify(spec: SpectrumResult, u: TrigPotential, delta: float, bands=None) -> RegionPartition:
    """Tag each lambda_n by where lambda_n + eps falls.

    "band" marks values inside Lambda_pm(delta) that sit within delta of a
    band value; everything outside both regions is "transition".
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    lo, hi = value_range(u)
    bands = tuple(band_candidates(u) if bands is None else bands)
    small = (-hi + delta, -lo - delta)
    large_lo = -lo + delta
    tags = []
    for lam in spec.eigenvalues + spec.eps:
        in_small = small[0] <= lam <= small[1]
        in_large = lam >= large_lo
        if in_small or in_large:
            if any(abs(lam - y) < delta for y in bands):
                tags.append("band")
            else:
                tags.append("small" if in_small else "large")
        else:
            tags.append("transition")
    return RegionPartition(delta, small, large_lo, bands, tuple(tags))


def _quantization_gap(profile, lift, eps, n, tol):
    return lambda eta: profile.A(eta, tol) - eps * (n + lift(eta))


def predict_small(u: TrigPotential, eps: float, delta: float, n: int, *, profile=None, lift=None,
                  tol: float = 1e-13) -> float:
    """Solve A(eta) = eps (n + psi(eta)) for eta = -lambda_hat_n."""
    prof = profile or distribution_profile(u)
    lift = lift or PsiLift(u, prof)
    a, b = prof.min_u + delta, prof.max_u - delta
    g = _quantization_gap(prof, lift, eps, n, tol)
    ga, gb = g(a), g(b)
    if ga * gb > 0:
        raise OutOfRegion(f"level {n} has no solution in ({a:.6g}, {b:.6g}) at eps = {eps}")
    eta = brentq(g, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
    return -eta


@dataclass(frozen=True)
class QuantizationReport:
    eps_ladder: tuple
    delta: float
    small_residuals: dict  # eps -> list of (n, residual) for adjacent pairs
    large_residuals: dict  # eps -> max |lambda_n - lambda_p - (n - p) eps|
    max_small: dict
    small_slope: float
    large_slope: float | None
    corollary_max: dict  # eps -> max |A(-lambda_n) - n eps| / eps
    convention: str = PSI_CONVENTION
    extras: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "eps_ladder": list(self.eps_ladder),
            "delta": self.delta,
            "max_small_residual": {str(k): v for k, v in self.max_small.items()},
            "max_large_residual": {str(k): v for k, v in self.large_residuals.items()},
            "small_slope": self.small_slope,
            "large_slope": self.large_slope,
            "corollary_max_over_eps": {str(k): v for k, v in self.corollary_max.items()},
            "psi_convention": self.convention,
        }


def _slope(eps, vals):
    x = np.log(np.asarray(eps, dtype=float))
    y = np.log(np.maximum(np.asarray(vals, dtype=float), 1e-300))
    return float(np.polyfit(x, y, 1)[0])


def large_spacing(spec: SpectrumResult, part: RegionPartition, K: float) -> float:
    """max over n, p in the large region with n, p <= K/eps of |lambda_n - lambda_p - (n - p) eps|."""
    idx = [n for n in part.indices("large") if n <= K / spec.eps]
    if len(idx) < 2:
        return 0.0
    shifted = spec.eigenvalues[idx] - spec.eps * np.asarray(idx)
    return float(shifted.max() - shifted.min())


def residual_report(u: TrigPotential, eps_ladder, delta: float, *, spectra=None, K: float | None = None,
                    tol: float = 1e-12) -> QuantizationReport:
    eps_ladder = tuple(float(e) for e in eps_ladder)
    if len(eps_ladder) < 3:
        raise InsufficientLadder("need at least three eps values")
    prof = distribution_profile(u)
    lift = PsiLift(u, prof)
    span = prof.max_u - prof.min_u
    K = span if K is None else K
    small, large, max_small, coro = {}, {}, {}, {}
    for eps in eps_ladder:
        spec = spectra[eps] if spectra else spectrum(u, eps, auto_truncation(u, eps, 2 * K))
        part = region_classify(spec, u, delta)
        idx = part.indices("small")
        lam = spec.eigenvalues
        A = {n: prof.A(-lam[n], tol) for n in idx}
        psi = {n: lift(-lam[n]) for n in idx}
        res = []
        for n in idx:
            if n + 1 in A:
                r = abs(A[n] - A[n + 1] - eps * (-1 + psi[n] - psi[n + 1]))
                res.append((n, r))
        small[eps] = res
        max_small[eps] = max((r for _, r in res), default=0.0)
        large[eps] = large_spacing(spec, part, K)
        coro[eps] = max((abs(A[n] - n * eps) / eps for n in idx), default=0.0)
    es = list(eps_ladder)
    small_slope = _slope(es, [max_small[e] for e in es])
    lv = [large[e] for e in es]
    large_slope = _slope(es, lv) if all(v > 0 for v in lv) else None
    return QuantizationReport(eps_ladder, delta, small, large, max_small, small_slope, large_slope, coro)
