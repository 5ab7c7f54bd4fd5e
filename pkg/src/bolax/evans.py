"""Evans determinant from oscillatory contour integrals.

With theta_k = (2k - 1) pi / N, the contour Gamma_k runs out from 0 along
arg = theta_k, around the unit circle to theta_{k+1}, and back to 0; Gamma_N
is split at the branch cut arg = 0 into Gamma^- (out along theta_N, arc to
2 pi) and Gamma^+ (arc from 0 to theta_1, back along theta_1).  Entries are

    A_{k,l} = int_{Gamma_k} e^{Q/eps} zeta^{-l - lambda/eps} dzeta/zeta,
    A_{N,l} = e^{-2 i pi lambda/eps} A^+_{N,l} + A^-_{N,l},

and the real zeros of det A are the Lax eigenvalues.  Rays use r = e^{-s},
so dzeta/zeta = -ds.  Each row is divided by the L1 mass of its integrand,
which leaves the zero set unchanged and keeps |det A| of order one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BranchCutCrossing, QuadratureNoConvergence
from .potential import TWO_PI, TrigPotential, eval_Q

# Gauss-Kronrod 7/15 abscissae and weights on [-1, 1]
_XK = np.array([0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                0.207784955007898467600689403773245, 0.0])
_WK = np.array([0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                0.381830050505118944950369775488975, 0.417959183673469387755102040816327])
KRONROD_X = np.concatenate([-_XK[:-1], _XK[::-1]])
KRONROD_W = np.concatenate([_WK[:-1], _WK[::-1]])
_gauss_mask = np.zeros(15, dtype=bool)
_gauss_mask[1::2] = True
GAUSS_W = np.concatenate([_WG[:-1], _WG[::-1]])

LOG_CUT = -46.0  # integrand below e^{-46} ~ 1e-20 of its peak is dropped
MAX_EVALS = 10**6
NOISE_FLOOR = 1e-15  # normalized |det A| below this is rounding-level


@dataclass(frozen=True)
class Segment:
    kind: str  # "ray" | "arc"
    a: float  # ray: angle; arc: start angle
    b: float  # ray: +1 outward (0 -> e^{i theta}), -1 inward; arc: end angle

    def describe(self) -> dict:
        if self.kind == "ray":
            return {"kind": "ray", "theta": self.a, "direction": "out" if self.b > 0 else "in"}
        return {"kind": "arc", "from": self.a, "to": self.b}


@dataclass(frozen=True)
class ContourDescriptor:
    kind: str  # "Gamma_k" | "Gamma_N_plus" | "Gamma_N_minus"
    N: int
    k: int
    segments: tuple

    def to_json(self) -> dict:
        return {"kind": self.kind, "N": self.N, "k": self.k, "segments": [s.describe() for s in self.segments]}


def theta(k: int, N: int) -> float:
    return (2 * k - 1) * math.pi / N


def contours(N: int) -> list[ContourDescriptor]:
    out = []
    for k in range(1, N):
        t0, t1 = theta(k, N), theta(k + 1, N)
        out.append(ContourDescriptor("Gamma_k", N, k, (Segment("ray", t0, 1), Segment("arc", t0, t1),
                                                        Segment("ray", t1, -1))))
    tN, t1 = theta(N, N), theta(1, N)
    out.append(ContourDescriptor("Gamma_N_minus", N, N, (Segment("ray", tN, 1), Segment("arc", tN, TWO_PI))))
    out.append(ContourDescriptor("Gamma_N_plus", N, N, (Segment("arc", 0.0, t1), Segment("ray", t1, -1))))
    return out


class _Integrand:
    """e^{Q/eps - (l + lambda/eps) log zeta} times the measure, batched over (lambda, l)."""

    def __init__(self, u: TrigPotential, eps: float, lams: np.ndarray, ells: np.ndarray):
        self.u, self.eps = u, eps
        self.mu = (ells[None, :] + lams[:, None] / eps).ravel()  # exponent of zeta^{-1}

    def log_f(self, seg: Segment, t: np.ndarray):
        if seg.kind == "ray":
            if not 0.0 < seg.a < TWO_PI:
                raise BranchCutCrossing("ray on the branch cut")
            z = np.exp(-t + 1j * seg.a)
            logz = -t + 1j * seg.a
        else:
            if t.size and (t.min() < 0.0 or t.max() > TWO_PI):
                raise BranchCutCrossing("arc leaves (0, 2pi)")
            z = np.exp(1j * t)
            logz = 1j * t
        q = eval_Q(self.u, z) / self.eps
        return q[:, None] - logz[:, None] * self.mu[None, :]

    def values(self, seg: Segment, t: np.ndarray):
        f = np.exp(self.log_f(seg, t))
        if seg.kind == "ray":
            return f * seg.b  # outward ray: +int_0^inf f ds
        return f * 1j


def _ray_cut(integ: _Integrand, seg: Segment) -> float:
    """Smallest s beyond which the integrand stays below e^{LOG_CUT} of its peak."""
    s = np.arange(0.0, 60.0, 0.02)
    with np.errstate(over="ignore", under="ignore"):
        lf = integ.log_f(seg, s).real.max(axis=1)
    lf = np.nan_to_num(lf, nan=-np.inf)
    peak = lf.max()
    above = np.flatnonzero(lf > peak + LOG_CUT)
    if above.size == 0:
        return 1.0
    cut = s[min(above[-1] + 1, len(s) - 1)]
    if cut >= s[-1]:
        raise QuadratureNoConvergence("ray integrand does not decay")
    return float(cut)


def _gk(values_fn, lo, hi):
    """Kronrod/Gauss panel sums for intervals [lo, hi]; returns (K, G, L1, phase_jump)."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    t = (mid[:, None] + half[:, None] * KRONROD_X[None, :]).ravel()
    f = values_fn(t).reshape(len(lo), 15, -1)
    K = np.einsum("j,ijb->ib", KRONROD_W, f) * half[:, None]
    G = np.einsum("j,ijb->ib", GAUSS_W, f[:, _gauss_mask, :]) * half[:, None]
    L1 = np.einsum("j,ijb->ib", KRONROD_W, np.abs(f)) * half[:, None]
    with np.errstate(invalid="ignore", divide="ignore"):
        turn = np.abs(np.angle(f[:, 1:, :] / f[:, :-1, :]))
    jump = np.nan_to_num(turn).sum(axis=1).max(axis=1)
    return K, G, L1, jump


def integrate_segment(integ: _Integrand, seg: Segment, tol: float, max_evals: int = MAX_EVALS):
    """Adaptive Gauss-Kronrod over one segment for the whole batch.

    Panels split until |K - G| <= tol * (L1 mass of the panel) for every batch
    member and the integrand turns by at most pi/4 per panel.  Returns the
    integral, its L1 mass and an error estimate, each per batch member.
    """
    if seg.kind == "ray":
        lo_t, hi_t = 0.0, _ray_cut(integ, seg)
    else:
        lo_t, hi_t = seg.a, seg.b
    n0 = max(4, int(math.ceil((hi_t - lo_t) / 0.25)))
    edges = np.linspace(lo_t, hi_t, n0 + 1)
    lo, hi = edges[:-1], edges[1:]
    total = total_l1 = total_err = 0.0
    evals = 0

    def fn(t):
        with np.errstate(under="ignore"):
            return integ.values(seg, t)

    while lo.size:
        K, G, L1, jump = _gk(fn, lo, hi)
        evals += 15 * lo.size
        err = np.abs(K - G)
        ok = np.all(err <= tol * L1 + 1e-300, axis=1) & (jump <= math.pi / 4)
        if np.any(ok):
            total = total + K[ok].sum(axis=0)
            total_l1 = total_l1 + L1[ok].sum(axis=0)
            total_err = total_err + err[ok].sum(axis=0)
        if evals > max_evals:
            raise QuadratureNoConvergence(f"segment {seg.describe()} exceeded {max_evals} evaluations")
        bad = ~ok
        m = 0.5 * (lo[bad] + hi[bad])
        lo, hi = np.concatenate([lo[bad], m]), np.concatenate([m, hi[bad]])
    return total, total_l1, total_err


@dataclass(frozen=True)
class EvansBatch:
    lams: np.ndarray
    det: np.ndarray  # complex, rows normalized
    err: np.ndarray  # propagated error bound on det
    matrices: np.ndarray  # (len(lams), N, N) normalized


def _segment_integrals(u: TrigPotential, eps: float, lams: np.ndarray, tol: float):
    """Outward rays R_j (j = 1..N) and arcs: Arc_k from theta_k to theta_{k+1} (k < N),
    Arc_N from theta_N to 2pi and Arc_0 from 0 to theta_1.  Each entry is a triple
    (value, L1 mass, error) with arrays shaped (len(lams), N) over l."""
    N = u.degree
    integ = _Integrand(u, eps, lams, np.arange(1, N + 1, dtype=float))
    shape = (len(lams), N)

    def run(seg):
        return tuple(np.reshape(np.broadcast_to(x, (len(lams) * N,)), shape)
                     for x in integrate_segment(integ, seg, tol))

    rays = {j: run(Segment("ray", theta(j, N), 1)) for j in range(1, N + 1)}
    arcs = {k: run(Segment("arc", theta(k, N), theta(k + 1, N))) for k in range(1, N)}
    arcs[N] = run(Segment("arc", theta(N, N), TWO_PI))
    arcs[0] = run(Segment("arc", 0.0, theta(1, N)))
    return rays, arcs


def _contour_integrals(u: TrigPotential, eps: float, lams: np.ndarray, tol: float):
    """Integrals over Gamma_k (k < N), Gamma^+ and Gamma^- assembled from segments."""
    N = u.degree
    rays, arcs = _segment_integrals(u, eps, lams, tol)
    out = {}

    def comb(terms):
        v = sum(c * t[0] for c, t in terms)
        m = sum(t[1] for _, t in terms)
        e = sum(t[2] for _, t in terms)
        return v, m, e

    for k in range(1, N):
        out[f"Gamma_{k}"] = comb([(1, rays[k]), (1, arcs[k]), (-1, rays[k + 1])])
    out["Gamma_N_minus"] = comb([(1, rays[N]), (1, arcs[N])])
    out["Gamma_N_plus"] = comb([(1, arcs[0]), (-1, rays[1])])
    return out


def _assemble(lams: np.ndarray, eps: float, parts: dict, N: int):
    """Row-normalized A and entrywise error bounds from the contour integrals."""
    mats = np.zeros((len(lams), N, N), dtype=complex)
    errs = np.zeros((len(lams), N, N))
    for k in range(1, N):
        v, m, e = parts[f"Gamma_{k}"]
        scale = m.sum(axis=1, keepdims=True)
        mats[:, k - 1, :] = v / scale
        errs[:, k - 1, :] = e / scale
    vp, mp_, ep = parts["Gamma_N_plus"]
    vm, mm, em = parts["Gamma_N_minus"]
    ph = np.exp(-2j * math.pi * lams / eps)[:, None]
    scale = (mp_ + mm).sum(axis=1, keepdims=True)
    mats[:, N - 1, :] = (ph * vp + vm) / scale
    errs[:, N - 1, :] = (ep + em) / scale
    return mats, errs


def evans_batch(u: TrigPotential, eps: float, lams, tol: float = 1e-10) -> EvansBatch:
    """det A(lambda; eps) on an array of lambda values (coefficients rotated so c_N > 0).

    Rows are divided by the L1 mass of their integrands; the error is a
    first-order bound from the per-entry quadrature errors.
    """
    un = u.normalized()
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    N = un.degree
    mats, errs = _assemble(lams, eps, _contour_integrals(un, eps, lams, tol), N)
    det = np.linalg.det(mats)
    rown = np.abs(mats).sum(axis=2)
    err = np.prod(rown, axis=1) * np.max(errs.sum(axis=2) / np.maximum(rown, 1e-300), axis=1)
    return EvansBatch(lams, det, err, mats)


def oscillatory_A(u: TrigPotential, eps: float, lam: float, k: int, ell: int, tol: float = 1e-10,
                  part: str | None = None):
    """A_{k,l} (unnormalized) with its error estimate.

    For k = N, part selects "plus" or "minus"; None gives the combination
    e^{-2 i pi lambda/eps} A^+ + A^-.
    """
    un = u.normalized()
    N = un.degree
    parts = _contour_integrals(un, eps, np.array([float(lam)]), tol)
    if k < N:
        v, _, e = parts[f"Gamma_{k}"]
        return complex(v[0, ell - 1]), float(e[0, ell - 1])
    vp, _, ep = parts["Gamma_N_plus"]
    vm, _, em = parts["Gamma_N_minus"]
    if part == "plus":
        return complex(vp[0, ell - 1]), float(ep[0, ell - 1])
    if part == "minus":
        return complex(vm[0, ell - 1]), float(em[0, ell - 1])
    ph = np.exp(-2j * math.pi * lam / eps)
    return complex(ph * vp[0, ell - 1] + vm[0, ell - 1]), float(ep[0, ell - 1] + em[0, ell - 1])


def symmetry_residuals(u: TrigPotential, eps: float, lam: float, tol: float = 1e-10) -> dict:
    """Residuals of the conjugation relations for even u (real coefficients).

    With the arg in (0, 2pi) branch the relations read
        A_{k,l} + e^{-2 i pi lambda/eps} conj(A_{N-k,l}) = 0   (1 <= k < N)
        Re(e^{2 i pi lambda/eps} A_{N,l}) = 0
    Each residual is relative to the largest entry involved; "err" is the
    matching relative quadrature error.
    """
    un = u.normalized()
    N = un.degree
    parts = _contour_integrals(un, eps, np.array([float(lam)]), tol)
    ph = np.exp(-2j * math.pi * lam / eps)
    conj_res, err = 0.0, 0.0
    for k in range(1, N):
        a, _, ea = parts[f"Gamma_{k}"]
        b, _, eb = parts[f"Gamma_{N - k}"]
        scale = np.maximum(np.abs(a[0]), np.abs(b[0]))
        conj_res = max(conj_res, float(np.max(np.abs(a[0] + ph * np.conj(b[0])) / scale)))
        err = max(err, float(np.max((ea[0] + eb[0]) / scale)))
    vp, _, ep = parts["Gamma_N_plus"]
    vm, _, em = parts["Gamma_N_minus"]
    aN = ph * vp[0] + vm[0]
    rot = aN / ph
    real_res = float(np.max(np.abs(rot.real) / np.abs(rot)))
    err = max(err, float(np.max((ep[0] + em[0]) / np.abs(aN))))
    return {"conjugate": conj_res, "reality": real_res, "err": err}


def evans_det(u: TrigPotential, eps: float, lam: float, tol: float = 1e-10) -> complex:
    return complex(evans_batch(u, eps, [lam], tol).det[0])


def evans_det_mp(u: TrigPotential, eps: float, lam: float, dps: int = 40) -> float:
    """|det A| in extended precision, each row divided by the sum of its entry moduli.

    Slow (seconds per call); meant for spot checks where the straight-ray
    integrals are so much larger than the determinant that double precision
    cannot resolve it.
    """
    import mpmath as mp

    un = u.normalized()
    N = un.degree
    with mp.workdps(dps):
        c = [mp.mpc(complex(x).real, complex(x).imag) for x in un.coeffs]
        lam_m, eps_m = mp.mpf(lam), mp.mpf(eps)
        mu_base = lam_m / eps_m

        def Q(z):
            return mp.fsum(-c[k - 1] * z**k / k + mp.conj(c[k - 1]) * z ** (-k) / k for k in range(1, N + 1))

        th = [(2 * k - 1) * mp.pi / N for k in range(1, N + 1)]
        s_cut = [_ray_cut(_Integrand(un, eps, np.array([lam]), np.arange(1, N + 1, dtype=float)),
                          Segment("ray", float(t), 1)) for t in th]

        def ray(j, ell):
            t = th[j - 1]
            f = lambda s: mp.exp(Q(mp.exp(-s + 1j * t)) / eps_m - (ell + mu_base) * (-s + 1j * t))  # noqa: E731
            return mp.quad(f, mp.linspace(0, s_cut[j - 1], 25))

        def arc(a, b, ell):
            f = lambda t: 1j * mp.exp(Q(mp.exp(1j * t)) / eps_m - (ell + mu_base) * 1j * t)  # noqa: E731
            pieces = int(float((b - a) * (abs(mu_base) + ell + 1))) + 8
            return mp.quad(f, mp.linspace(a, b, pieces))

        e = mp.exp(-2j * mp.pi * mu_base)
        A = mp.matrix(N, N)
        norms = [mp.mpf(0)] * N
        for ell in range(1, N + 1):
            R = {j: ray(j, ell) for j in range(1, N + 1)}
            for k in range(1, N):
                A[k - 1, ell - 1] = R[k] + arc(th[k - 1], th[k], ell) - R[k + 1]
            A[N - 1, ell - 1] = R[N] + arc(th[N - 1], 2 * mp.pi, ell) + e * (arc(0, th[0], ell) - R[1])
        for k in range(N):
            norms[k] = mp.fsum(abs(A[k, i]) for i in range(N))
        d = mp.det(A)
        for nk in norms:
            d /= nk
        return float(abs(d))


@dataclass(frozen=True)
class EvansZero:
    lam: float
    abs_det: float
    status: str  # "converged" | "unresolved" | "rejected"
    matched: float | None = None

    def to_json(self) -> dict:
        return {"lambda": self.lam, "abs_det": self.abs_det, "status": self.status, "matched": self.matched}


@dataclass(frozen=True)
class EvansScan:
    eps: float
    lams: np.ndarray
    abs_det: np.ndarray
    err_est: np.ndarray
    zeros: tuple
    median: float
    near_integer: tuple = ()
    unresolved_points: int = 0

    def zero_values(self):
        return [z.lam for z in self.zeros if z.status == "converged"]

    def rows(self):
        for lam, d, e in zip(self.lams, self.abs_det, self.err_est):
            yield float(lam), float(d), float(e)


def _golden(f, a, b, width):
    g = (math.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > width:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _secant(det, x0, x1, iters=8):
    d0, d1 = det(x0), det(x1)
    for _ in range(iters):
        if d1 == d0:
            break
        x2 = float((x1 - d1 * (x1 - x0) / (d1 - d0)).real)
        x0, d0 = x1, d1
        x1, d1 = x2, det(x2)
        if abs(x1 - x0) < 1e-13:
            break
    return x1, abs(d1)


def scan_zeros(u: TrigPotential, eps: float, lam_range, grid_points: int | None = None, tol: float = 1e-10,
               eigenvalues=None, batch: int = 128, match_tol: float = 1e-3, threshold: float = 1e-6) -> EvansScan:
    """Sample |det A| on a grid, then refine each local minimum.

    Golden-section narrows the minimum to width 1e-6; a secant step on the
    complex determinant then polishes it.  A minimum counts as a zero when
    |det A| <= threshold * median of the grid values.  Minima whose
    neighbours already sit below NOISE_FLOOR are not dips out of a resolved
    background but rounding noise, and are reported as "unresolved".
    """
    a, b = map(float, lam_range)
    if grid_points is None:
        grid_points = max(16, int(math.ceil((b - a) / (eps / 20.0))) + 1)
    pad = 2.0 * (b - a) / (grid_points - 1)  # so zeros on the range ends stay bracketed
    lams = np.linspace(a - pad, b + pad, grid_points + 4)
    dets, errs = [], []
    for i in range(0, len(lams), batch):
        res = evans_batch(u, eps, lams[i:i + batch], tol)
        dets.append(res.det)
        errs.append(res.err)
    det = np.concatenate(dets)
    err = np.concatenate(errs)
    mag = np.abs(det)
    median = float(np.median(mag))
    one = lambda x: evans_det(u, eps, x, tol)  # noqa: E731
    zeros = []
    h = lams[1] - lams[0] if len(lams) > 1 else 1.0
    for i in range(len(lams)):
        left = mag[i - 1] if i > 0 else np.inf
        right = mag[i + 1] if i + 1 < len(lams) else np.inf
        if not (mag[i] < left and mag[i] <= right):
            continue
        if (i == 0 or i == len(lams) - 1):
            continue  # minima on the boundary are not bracketed
        if min(left, right) <= NOISE_FLOOR:
            zeros.append(EvansZero(float(lams[i]), float(mag[i]), "unresolved"))
            continue
        x = _golden(lambda t: abs(one(t)), lams[i] - h, lams[i] + h, 1e-6)
        x, val = _secant(one, x - 1e-7, x + 1e-7)
        if not lams[i] - h <= x <= lams[i] + h:
            status = "rejected"
        elif val <= threshold * median:
            status = "converged"
        else:
            status = "rejected"
        matched = None
        if eigenvalues is not None and status == "converged":
            ev = np.asarray(eigenvalues)
            j = int(np.argmin(np.abs(ev - x)))
            if abs(ev[j] - x) <= match_tol:
                matched = float(ev[j])
        zeros.append(EvansZero(float(x), float(val), status, matched))
    frac = lams / eps - np.round(lams / eps)
    near = tuple(float(lv) for lv, f in zip(lams, frac) if abs(f) < 1e-6)
    return EvansScan(eps, lams, mag, err, tuple(zeros), median, near, int(np.count_nonzero(mag <= NOISE_FLOOR)))


def match_bidirectional(zeros, eigenvalues, lam_range, tol: float = 1e-3):
    """(unmatched zeros, missed eigenvalues) for zero and eigenvalue lists inside lam_range."""
    a, b = lam_range
    ev = [e for e in eigenvalues if a <= e <= b]
    zs = [z for z in zeros if a - tol <= z <= b + tol]
    unmatched = [z for z in zs if not any(abs(z - e) <= tol for e in eigenvalues)]
    missed = [e for e in ev if not any(abs(z - e) <= tol for z in zs)]
    return unmatched, missed
