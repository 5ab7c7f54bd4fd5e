"""Real zero-mean trigonometric polynomials on the torus.

A potential is stored through its positive Fourier coefficients only,

    u(x) = sum_{k=1..N} c_k e^{ikx} + conj(c_k) e^{-ikx},

so reality and zero mean hold by construction.  The same coefficients give
the Laurent extension u(z) on the punctured plane and the primitive
Q(z) with -z Q'(z) = u(z).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import (
    EmptyCoefficients,
    GridTooCoarse,
    NotWeaklyBellShaped,
    ZeroArgument,
    ZeroLeadingCoefficient,
)

TWO_PI = 2.0 * math.pi

PRESETS = {
    "cosine": [-1.0],
    "fig-level0": [4.0, -0.5j, 0.0, 0.0, 0.0, 0.1],
    "fig-level0-outside": [4.0, 0.25j, 0.0, -0.125j, 0.0, 0.05],
}


@dataclass(frozen=True)
class TrigPotential:
    """Immutable trigonometric polynomial with c_N != 0.

    ``coeffs`` are the user-facing coefficients.  ``rotation`` is the shift r
    such that u(x - r) has a positive leading coefficient; it is recorded and
    only applied through :attr:`normalized_coeffs`.
    """

    coeffs: np.ndarray
    rotation: float
    is_even: bool = field(init=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex).copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        scale = float(np.sum(np.abs(c)))
        object.__setattr__(self, "is_even", bool(np.all(np.abs(c.imag) <= 1e-14 * scale)))

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    @property
    def leading_positive(self) -> bool:
        return True

    @property
    def normalized_coeffs(self) -> np.ndarray:
        k = np.arange(1, self.degree + 1)
        c = self.coeffs * np.exp(-1j * k * self.rotation)
        c[-1] = abs(self.coeffs[-1])
        return c

    def normalized(self) -> "TrigPotential":
        """The translated potential x -> u(x - rotation), leading coefficient > 0."""
        return TrigPotential(self.normalized_coeffs, 0.0)

    def coeff_scale(self) -> float:
        return float(np.sum(np.abs(self.coeffs)))

    def __call__(self, x):
        return eval_torus(self, x)

    def derivative(self, x, order: int = 1):
        """Derivative of order ``order`` on the torus."""
        x = np.asarray(x, dtype=float)
        k = np.arange(1, self.degree + 1)
        ck = self.coeffs * (1j * k) ** order
        return 2.0 * np.real(np.exp(1j * np.multiply.outer(x, k)) @ ck)

    def sup_norm(self, grid: int = 4096) -> float:
        x = np.linspace(0.0, TWO_PI, max(grid, 64 * self.degree), endpoint=False)
        return float(np.max(np.abs(self(x))))

    def l2_squared(self) -> float:
        """Mean of u^2 over the torus, (1/2pi) int u^2 dx = 2 sum |c_k|^2."""
        return float(2.0 * np.sum(np.abs(self.coeffs) ** 2))

    def to_json(self) -> dict:
        return {
            "coeffs": [[float(c.real), float(c.imag)] for c in self.coeffs],
            "rotation": float(self.rotation),
        }


def _as_complex_list(coeff_list) -> list[complex]:
    out = []
    for c in coeff_list:
        if isinstance(c, (list, tuple)):
            if len(c) != 2:
                raise ValueError(f"coefficient pair must be [re, im], got {c!r}")
            out.append(complex(float(c[0]), float(c[1])))
        else:
            out.append(complex(c))
    return out


def parse_potential(coeff_list) -> TrigPotential:
    """Build a potential from c_1..c_N (complex numbers or [re, im] pairs)."""
    coeffs = _as_complex_list(coeff_list)
    if not coeffs:
        raise EmptyCoefficients("coefficient list is empty")
    if coeffs[-1] == 0:
        raise ZeroLeadingCoefficient("last coefficient c_N must be nonzero")
    n = len(coeffs)
    rotation = (math.atan2(coeffs[-1].imag, coeffs[-1].real) / n) % TWO_PI
    return TrigPotential(np.array(coeffs, dtype=complex), rotation)


def preset(name: str) -> TrigPotential:
    try:
        return parse_potential(PRESETS[name])
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def from_json(data: dict) -> TrigPotential:
    u = parse_potential(data["coeffs"])
    if "rotation" in data and not math.isclose(float(data["rotation"]), u.rotation, abs_tol=1e-12):
        raise ValueError("stored rotation disagrees with the leading coefficient")
    return u


def eval_torus(u: TrigPotential, x):
    x = np.asarray(x, dtype=float)
    k = np.arange(1, u.degree + 1)
    return 2.0 * np.real(np.exp(1j * np.multiply.outer(x, k)) @ u.coeffs)


def _laurent(coeffs, z, weights):
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise ZeroArgument("the Laurent extension is singular at z = 0")
    pos = np.zeros_like(z)
    neg = np.zeros_like(z)
    zi = 1.0 / z
    for c, w in zip(coeffs[::-1], weights[::-1]):
        pos = (pos + w[0] * c) * z
        neg = (neg + w[1] * np.conj(c)) * zi
    return pos + neg


def eval_complex(u: TrigPotential, z):
    """u(z) = sum c_k z^k + conj(c_k) z^{-k} for z != 0."""
    w = [(1.0, 1.0)] * u.degree
    return _laurent(u.coeffs, z, w)


def eval_Q(u: TrigPotential, z):
    """Q(z) = sum -c_k z^k / k + conj(c_k) z^{-k} / k, so that -z Q'(z) = u(z)."""
    w = [(-1.0 / k, 1.0 / k) for k in range(1, u.degree + 1)]
    return _laurent(u.coeffs, z, w)


def eval_complex_derivative(u: TrigPotential, z, order: int = 1):
    """d^order u / dz^order of the Laurent extension."""
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise ZeroArgument("the Laurent extension is singular at z = 0")
    out = np.zeros_like(z)
    for k, c in enumerate(u.coeffs, start=1):
        fp = math.prod(range(k - order + 1, k + 1)) if order <= k else 0
        fn = math.prod(range(-k - order + 1, -k + 1))
        if fp:
            out += c * fp * z ** (k - order)
        out += np.conj(c) * fn * z ** (-k - order)
    return out


def extrema(u: TrigPotential, grid: int = 4096):
    """Refined (x_min, min u, x_max, max u)."""
    x = np.linspace(0.0, TWO_PI, max(grid, 64 * u.degree), endpoint=False)
    v = u(x)
    h = x[1] - x[0]
    out = []
    for i, sgn in ((int(np.argmin(v)), 1.0), (int(np.argmax(v)), -1.0)):
        r = minimize_scalar(lambda t: sgn * float(u(t)), bounds=(x[i] - h, x[i] + h), method="bounded",
                            options={"xatol": 1e-14})
        out += [float(r.x % TWO_PI), float(u(r.x))]
    return tuple(out)


def value_range(u: TrigPotential):
    """(min u, max u) on the torus."""
    _, lo, _, hi = extrema(u)
    return lo, hi


# --- shape classification -------------------------------------------------


@dataclass(frozen=True)
class ShapeReport:
    classification: str
    x_min: float
    x_max: float
    xi_minus: float | None
    xi_plus: float | None
    min_u: float
    max_u: float
    tolerance: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _sign_change_roots(f, x, tol):
    """Roots of a periodic f bracketed by sign changes on the grid x (2pi-periodic)."""
    y = f(x)
    xs = np.append(x, x[0] + TWO_PI)
    ys = np.append(y, y[0])
    roots = []
    for i in np.nonzero(np.signbit(ys[:-1]) != np.signbit(ys[1:]))[0]:
        a, b = xs[i], xs[i + 1]
        if ys[i] == 0:
            roots.append(a % TWO_PI)
            continue
        if ys[i + 1] == 0:
            continue
        roots.append(brentq(lambda t: float(f(t)), a, b, xtol=tol, rtol=4 * np.finfo(float).eps) % TWO_PI)
    return sorted(roots)


def _touches_zero(f, x, lo, hi, thresh):
    """True when |f| dips below ``thresh`` strictly inside the arc (lo, hi)."""
    if hi <= lo:
        hi += TWO_PI
    t = np.linspace(lo, hi, max(16, int((hi - lo) / (x[1] - x[0])) + 1))[1:-1]
    if t.size < 3:
        return False
    a = np.abs(f(t))
    for i in range(1, len(t) - 1):
        if a[i] <= a[i - 1] and a[i] <= a[i + 1]:
            res = minimize_scalar(lambda s: abs(float(f(s))), bounds=(t[i - 1], t[i + 1]), method="bounded",
                                  options={"xatol": 1e-13})
            if res.fun < thresh:
                return True
    return False


def classify_shape(u: TrigPotential, grid_size: int | None = None, tol: float = 1e-12) -> ShapeReport:
    """Bell / weakly-bell / neither, with extrema and inflections refined to ``tol``.

    The x_min = 0 requirement is read up to translation: x_min is reported
    and every other location is expressed in (x_min, x_min + 2pi).
    """
    n = u.degree
    if grid_size is None:
        grid_size = int(4096 * max(1, n / 8))
    if grid_size < 16 * n:
        raise GridTooCoarse(f"grid_size {grid_size} < 16 N = {16 * n}")
    # offset the grid so symmetric potentials do not put roots exactly on nodes
    x = np.linspace(0.0, TWO_PI, grid_size, endpoint=False) + TWO_PI / grid_size * 0.2360679774997897
    vals = u(x)
    d1 = lambda t: u.derivative(t, 1)
    d2 = lambda t: u.derivative(t, 2)
    d3 = lambda t: u.derivative(t, 3)
    d1_sup = float(np.max(np.abs(d1(x))))
    d3_sup = float(np.max(np.abs(d3(x))))
    i_min, i_max = int(np.argmin(vals)), int(np.argmax(vals))
    neither = ShapeReport("neither", float(x[i_min] % TWO_PI), float(x[i_max] % TWO_PI), None, None,
                          float(vals[i_min]), float(vals[i_max]), tol)
    if d1_sup <= 1e-9 or d1_sup < tol:
        return neither
    crit = _sign_change_roots(d1, x, tol)
    if len(crit) != 2:
        return neither
    a, b = crit
    if u.derivative(a, 2) < 0:
        a, b = b, a
    x_min, x_max = a, b
    if u.derivative(x_min, 2) <= 0 or u.derivative(x_max, 2) >= 0:
        # degenerate extrema still give sign changes; check direction via values
        if u(x_min) >= u(x_max):
            return neither
    thresh = 1e-9 * d1_sup
    if _touches_zero(d1, x, x_min, x_max, thresh) or _touches_zero(d1, x, x_max, x_min, thresh):
        return neither
    unwrap = lambda t: x_min + ((t - x_min) % TWO_PI)
    xmax_u = unwrap(x_max)
    min_u, max_u = float(u(x_min)), float(u(x_max))
    infl = [unwrap(t) for t in _sign_change_roots(d2, x, tol)]
    simple = all(abs(float(d3(t))) > 1e-9 * d3_sup for t in infl)
    if (len(infl) == 2 and simple and x_min < infl[0] < xmax_u < infl[1] < x_min + TWO_PI
            and not _touches_zero(d2, x, x_min, infl[0], 1e-9 * float(np.max(np.abs(d2(x)))))):
        return ShapeReport("bell", float(x_min), float(xmax_u), float(infl[0]), float(infl[1]), min_u, max_u, tol)
    return ShapeReport("weakly_bell", float(x_min), float(xmax_u), None, None, min_u, max_u, tol)


# --- truncation ------------------------------------------------------------


def truncate_fourier(samples, n: int) -> TrigPotential:
    """Degree-n trigonometric polynomial from samples on a uniform grid of [0, 2pi)."""
    s = np.asarray(samples, dtype=float)
    if len(s) < 4 * n:
        raise GridTooCoarse(f"{len(s)} samples cannot resolve degree {n}; need at least {4 * n}")
    c = np.fft.rfft(s)[1 : n + 1] / len(s)
    if c[-1] == 0:
        c[-1] = np.finfo(float).tiny
    return parse_potential(c)


@dataclass(frozen=True)
class ApproxRecord:
    n: int
    x_min: float
    x_max: float
    sup_error: float
    comonotone: bool


@dataclass(frozen=True)
class ApproxReport:
    records: tuple
    n0: int | None
    slope: float | None

    def to_json(self) -> dict:
        return {"records": [r.__dict__ for r in self.records], "N0": self.n0, "slope": self.slope}


def _sample_extrema(s):
    """Grid argmin/argmax with a parabolic sub-cell correction."""
    m = len(s)
    h = TWO_PI / m
    out = []
    for i in (int(np.argmin(s)), int(np.argmax(s))):
        y0, y1, y2 = s[i - 1], s[i], s[(i + 1) % m]
        den = y0 - 2 * y1 + y2
        shift = 0.5 * (y0 - y2) / den if den != 0 else 0.0
        out.append((i + shift) * h % TWO_PI)
    return out


def _samples_weakly_bell(s) -> bool:
    d = np.diff(np.append(s, s[0]))
    sgn = np.sign(d)
    if np.any(sgn == 0):
        return False
    changes = np.count_nonzero(sgn != np.roll(sgn, 1))
    return changes == 2


def comonotone_check(u_samples, n_ladder) -> ApproxReport:
    """Truncate sampled data at each degree in the ladder and test comonotonicity."""
    s = np.asarray(u_samples, dtype=float)
    s = s - s.mean()
    if not _samples_weakly_bell(s):
        raise NotWeaklyBellShaped("sampled function is not monotone between a single min and max")
    x = np.linspace(0.0, TWO_PI, len(s), endpoint=False)
    recs = []
    for n in n_ladder:
        un = truncate_fourier(s, n)
        rep = classify_shape(un)
        err = float(np.max(np.abs(un(x) - s)))
        ok = rep.classification in ("bell", "weakly_bell")
        recs.append(ApproxRecord(int(n), rep.x_min % TWO_PI, rep.x_max % TWO_PI, err, ok))
    n0 = None
    for r in reversed(recs):
        if not r.comonotone:
            break
        n0 = r.n
    ns = np.array([r.n for r in recs], dtype=float)
    errs = np.array([r.sup_error for r in recs])
    keep = errs > 1e-13 * max(1.0, float(np.max(np.abs(s))))
    slope = None
    if np.count_nonzero(keep) >= 2:
        slope = float(np.polyfit(np.log(ns[keep]), np.log(errs[keep]), 1)[0])
    return ApproxReport(tuple(recs), n0, slope)


def sample_extrema(u_samples):
    """(x_min, x_max) of uniformly sampled data, refined within one cell."""
    return tuple(_sample_extrema(np.asarray(u_samples, dtype=float)))
