"""Distribution function, antecedents and the multivalued Burgers solution.

For a weakly bell potential, x_+(eta) is the antecedent of eta on the
increasing arc (x_min, x_max) and x_-(eta) the one on the decreasing arc
(x_max, x_min + 2pi); F(eta) = (x_- - x_+) / 2pi is the normalized measure of
{u >= eta}.  Branches of u^B = u(x - 2 u^B t) are found through the
characteristic feet y with y + 2u(y)t = x mod 2pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import BranchCountEven, NotWeaklyBellShaped, OutOfRangeEta
from .potential import TWO_PI, TrigPotential, classify_shape
from .quadrature import adaptive_simpson, smoothstep_integral


def _bisect_increasing(g, lo, hi, iters=60):
    """Vectorized bisection for g increasing on each bracket [lo, hi]."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        pos = g(mid) > 0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class DistributionProfile:
    u: TrigPotential
    x_min: float
    x_max: float  # unwrapped into (x_min, x_min + 2pi)
    min_u: float
    max_u: float

    def antecedents(self, eta):
        """(x_+, x_-) for eta strictly inside (min_u, max_u); vectorized."""
        e = np.asarray(eta, dtype=float)
        if np.any((e <= self.min_u) | (e >= self.max_u)):
            raise OutOfRangeEta(f"eta must lie in ({self.min_u}, {self.max_u})")
        u = self.u
        scalar = e.ndim == 0
        e = np.atleast_1d(e)
        lo = np.full(e.shape, self.x_min)
        xp = _bisect_increasing(lambda x: u(x) - e, lo, np.full(e.shape, self.x_max))
        xm = _bisect_increasing(lambda x: e - u(x), np.full(e.shape, self.x_max), lo + TWO_PI)
        if scalar:
            return float(xp[0]), float(xm[0])
        return xp, xm

    def F(self, eta):
        e = np.atleast_1d(np.asarray(eta, dtype=float))
        out = np.where(e > self.min_u, 0.0, 1.0)
        inside = (e > self.min_u) & (e < self.max_u)
        if np.any(inside):
            xp, xm = self.antecedents(e[inside])
            out[inside] = (xm - xp) / TWO_PI
        return out if np.ndim(eta) else float(out[0])

    def A(self, eta, tol: float = 1e-9):
        """Action integral int_eta^{max u} F."""
        eta = float(eta)
        if eta > self.max_u:
            return 0.0
        if eta < self.min_u:
            return (self.min_u - eta) + self.A(self.min_u, tol)
        if eta == self.max_u:
            return 0.0
        lo = eta
        val, _ = smoothstep_integral(lambda v: self.F(np.clip(v, np.nextafter(self.min_u, np.inf),
                                                               np.nextafter(self.max_u, -np.inf))),
                                     lo, self.max_u, tol)
        return float(val)

    def A_grid(self, etas, tol: float = 1e-9):
        return np.array([self.A(e, tol) for e in np.atleast_1d(etas)])


def distribution_profile(u: TrigPotential) -> DistributionProfile:
    rep = classify_shape(u)
    if rep.classification == "neither":
        raise NotWeaklyBellShaped("potential is not weakly bell shaped")
    return DistributionProfile(u, rep.x_min, rep.x_max, rep.min_u, rep.max_u)


def distribution_F(profile: DistributionProfile, eta):
    return profile.F(eta)


def antecedents(profile: DistributionProfile, eta):
    return profile.antecedents(eta)


def action_A(profile: DistributionProfile, eta, tol: float = 1e-9) -> float:
    return profile.A(eta, tol)


# --- multivalued Burgers solution ------------------------------------------


@dataclass(frozen=True)
class BranchSet:
    t: float
    x: float
    values: tuple
    feet: tuple

    @property
    def count(self) -> int:
        return len(self.values)


def _check_bell(u):
    if classify_shape(u).classification == "neither":
        raise NotWeaklyBellShaped("potential is not weakly bell shaped")


def branches(u: TrigPotential, t: float, x: float, grid: int = 8192, tol: float = 1e-12,
             check_shape: bool = True) -> BranchSet:
    """All branches u^B(t, x), sorted ascending."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if check_shape:
        _check_bell(u)
    y = np.linspace(0.0, TWO_PI, grid + 1)
    h = y + 2.0 * u(y) * t - x
    mlo = math.floor(h.min() / TWO_PI)
    mhi = math.ceil(h.max() / TWO_PI)
    feet = []
    for m in range(mlo, mhi + 1):
        g = h - TWO_PI * m
        gfun = lambda s: s + 2.0 * float(u(s)) * t - x - TWO_PI * m
        zero = np.nonzero(g[:-1] == 0)[0]
        feet.extend(float(y[i]) for i in zero)
        for i in np.nonzero((g[:-1] != 0) & (g[1:] != 0) & ((g[:-1] < 0) != (g[1:] < 0)))[0]:
            a, b = y[i], y[i + 1]
            fa = gfun(a)
            while b - a > tol:
                mid = 0.5 * (a + b)
                fm = gfun(mid)
                if (fm < 0) == (fa < 0):
                    a, fa = mid, fm
                else:
                    b = mid
                if mid in (a, b) and b - a <= 4 * np.spacing(b):
                    break
            feet.append(0.5 * (a + b))
        # tangency: an interior extremum of g that nearly touches zero
        gi = g[1:-1]
        ext = ((gi - g[:-2]) * (g[2:] - gi) <= 0) & (np.abs(gi) < 1e-6)
        for i in np.nonzero(ext)[0]:
            if abs(float(1 + 2 * t * u.derivative(y[i + 1]))) < 1e-3:
                sgn = 1.0 if gi[i] > 0 else -1.0
                r = minimize_scalar(lambda s: sgn * gfun(s), bounds=(y[i], y[i + 2]), method="bounded",
                                    options={"xatol": 1e-14})
                if abs(r.fun) <= 1e-10:
                    raise BranchCountEven(f"characteristic tangency near x = {x}; perturb x")
    feet = sorted(set(round(f, 14) for f in feet))
    vals = sorted((float(u(f)), f) for f in feet)
    if len(vals) % 2 == 0:
        raise BranchCountEven(f"{len(vals)} branches at x = {x}, t = {t}; perturb x")
    return BranchSet(float(t), float(x), tuple(v for v, _ in vals), tuple(f for _, f in vals))


def alt_sum(b: BranchSet) -> float:
    return float(sum(v if i % 2 == 0 else -v for i, v in enumerate(b.values)))


class CharacteristicMap:
    """Monotone pieces of y -> y + 2u(y)t, used for vectorized branch fields."""

    def __init__(self, u: TrigPotential, t: float, grid: int = 8192):
        self.u, self.t = u, float(t)
        y = np.linspace(0.0, TWO_PI, grid + 1)
        d = 1.0 + 2.0 * t * u.derivative(y)
        crit = []
        for i in np.nonzero(np.signbit(d[:-1]) != np.signbit(d[1:]))[0]:
            crit.append(float(_bisect_increasing(
                lambda s: (1.0 + 2.0 * t * u.derivative(s)) * (1 if d[i + 1] > d[i] else -1),
                np.array([y[i]]), np.array([y[i + 1]]))[0]))
        self.critical_feet = np.array(sorted(crit))
        if len(crit) == 0:
            self.pieces = [(0.0, TWO_PI)]
        else:
            c = list(self.critical_feet)
            self.pieces = [(c[i], c[i + 1]) for i in range(len(c) - 1)] + [(c[-1], c[0] + TWO_PI)]

    def xmap(self, y):
        return y + 2.0 * self.u(y) * self.t

    def caustics(self):
        """Caustic positions x_c in [0, 2pi), sorted."""
        return np.sort(self.xmap(self.critical_feet) % TWO_PI)

    def field(self, x):
        """Alternating branch sum at each x (ascending order, signs +,-,+,...)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        values = [[] for _ in range(len(x))]
        for a, b in self.pieces:
            xa, xb = self.xmap(a), self.xmap(b)
            sign = 1.0 if xb > xa else -1.0
            lo_x, hi_x = min(xa, xb), max(xa, xb)
            for m in range(math.floor((lo_x - x.max()) / TWO_PI), math.ceil((hi_x - x.min()) / TWO_PI) + 1):
                target = x + TWO_PI * m
                sel = np.nonzero((target > lo_x) & (target < hi_x))[0]
                if sel.size == 0:
                    continue
                tt = target[sel]
                ys = _bisect_increasing(lambda s: sign * (self.xmap(s) - tt), np.full(sel.size, a),
                                        np.full(sel.size, b))
                for i, yv in zip(sel, self.u(ys)):
                    values[i].append(float(yv))
        out = np.empty(len(x))
        for i, vs in enumerate(values):
            vs.sort()
            out[i] = sum(v if j % 2 == 0 else -v for j, v in enumerate(vs))
        return out


def alt_sum_field(u: TrigPotential, t: float, xs) -> np.ndarray:
    return CharacteristicMap(u, t).field(xs)


def branch_fourier(u: TrigPotential, t: float, ks, tol: float = 1e-10) -> np.ndarray:
    """Fourier coefficients (1/2pi) int u_alt(t, x) e^{-ikx} dx of the branch field.

    The field is smooth between caustics and has square-root behaviour at
    them, so each piece is integrated separately with a smoothstep change of
    variable.
    """
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    cm = CharacteristicMap(u, t)
    cuts = cm.caustics()
    if cuts.size == 0:
        edges = [0.0, TWO_PI]
    else:
        edges = list(cuts) + [cuts[0] + TWO_PI]
    total = np.zeros(len(ks), dtype=complex)
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a < 1e-14:
            continue
        a_in, b_in = a, b

        def integrand(xv):
            xv = np.clip(xv, np.nextafter(a_in, np.inf), np.nextafter(b_in, -np.inf))
            return cm.field(xv)[:, None] * np.exp(-1j * np.outer(xv, ks))

        val, _ = smoothstep_integral(integrand, a, b, tol)
        total += val
    return total / TWO_PI


def branch_fourier_feet(u: TrigPotential, t: float, ks, n: int = 4096) -> np.ndarray:
    """Same coefficients through the foot parametrization x = y + 2u(y)t.

    Ascending branches alternate with the orientation of the characteristic
    map, so the alternating sum transforms into the periodic integral
    (1/2pi) int u(y) e^{-ik x(y)} x'(y) dy, which the trapezoid rule resolves
    spectrally.
    """
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    y = np.linspace(0.0, TWO_PI, n, endpoint=False)
    xy = y + 2.0 * u(y) * t
    jac = 1.0 + 2.0 * t * u.derivative(y)
    return (u(y) * jac) @ np.exp(-1j * np.outer(xy, ks)) / n


def weak_limit_fourier(profile: DistributionProfile, t: float, k, tol: float = 1e-8):
    """-(i / 2k pi) int_{min}^{max} e^{-ik(x_+ + 2 eta t)} - e^{-ik(x_- + 2 eta t)} d eta."""
    ks = np.atleast_1d(np.asarray(k, dtype=float))
    if np.any(ks == 0):
        raise ValueError("k must be nonzero")
    lo, hi = profile.min_u, profile.max_u

    def integrand(eta):
        eta = np.clip(eta, np.nextafter(lo, np.inf), np.nextafter(hi, -np.inf))
        xp, xm = profile.antecedents(eta)
        ph = np.outer(eta * 2.0 * t, ks)
        return np.exp(-1j * (np.outer(xp, ks) + ph)) - np.exp(-1j * (np.outer(xm, ks) + ph))

    val, _ = smoothstep_integral(integrand, lo, hi, tol)
    out = -1j / (TWO_PI * ks) * val
    return out if np.ndim(k) else complex(out[0])
