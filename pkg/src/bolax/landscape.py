"""The complex phase S_lambda(z) = Q(z) - lambda log z and its critical points.

Critical points are the roots of z^N (u(z) + lambda), a polynomial of degree
2N.  When -lambda lies in the range of u, two of them sit on the unit circle
(p_+ on the increasing arc, p_- on the decreasing arc) and the others come in
pairs (p_k, 1/conj p_k) with |p_k| < 1; otherwise all 2N roots pair up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import (
    DegenerateCriticalPoints,
    GridTooCoarse,
    MalformedTree,
    OnBranchCut,
    OutOfRegion,
    RootPolishFailure,
)
from .potential import (
    TWO_PI,
    TrigPotential,
    eval_complex,
    eval_complex_derivative,
    eval_Q,
    value_range,
)
from .quadrature import gauss_panels

CIRCLE_TOL = 1e-6


def eval_S(u: TrigPotential, lam: float, z):
    """Q(z) - lambda log z with arg z in (0, 2pi)."""
    z = np.asarray(z, dtype=complex)
    if np.any((z.imag == 0) & (z.real >= 0)):
        raise OnBranchCut("S is cut along the nonnegative real axis")
    arg = np.angle(z) % TWO_PI
    return eval_Q(u, z) - lam * (np.log(np.abs(z)) + 1j * arg)


def re_S(u: TrigPotential, lam: float, z):
    """Re S, which needs no branch choice."""
    z = np.asarray(z, dtype=complex)
    return eval_Q(u, z).real - lam * np.log(np.abs(z))


def eval_S2(u: TrigPotential, lam: float, z):
    """S''(z) = -(u'(z) z - (u(z) + lambda)) / z^2, from S'(z) = -(u(z) + lambda)/z."""
    z = np.asarray(z, dtype=complex)
    return -(eval_complex_derivative(u, z) * z - (eval_complex(u, z) + lam)) / z**2


def _poly_coeffs(u: TrigPotential, lam: float):
    """Coefficients of z^N (u(z) + lambda), highest power first."""
    n = u.degree
    co = np.zeros(2 * n + 1, dtype=complex)  # index = power
    for k, c in enumerate(u.coeffs, start=1):
        co[n + k] += c
        co[n - k] += np.conj(c)
    co[n] += lam
    return co[::-1]


@dataclass(frozen=True)
class CriticalPointSet:
    lam: float
    roots: np.ndarray
    kinds: tuple  # "inside" | "circle" | "outside" per root
    inside: np.ndarray  # p_k
    p_plus: complex | None
    p_minus: complex | None
    outside: np.ndarray
    case: str  # "small" | "large"
    multiple: bool

    @property
    def simple(self) -> bool:
        return not self.multiple


def critical_points(u: TrigPotential, lam: float) -> CriticalPointSet:
    co = _poly_coeffs(u, lam)
    roots = np.roots(co)
    dco = np.polyder(co)
    scale = u.coeff_scale() + abs(lam)
    polished = []
    for r in roots:
        z = r
        for _ in range(50):
            p, dp = np.polyval(co, z), np.polyval(dco, z)
            if dp == 0:
                break
            step = p / dp
            z_new = z - step
            if not np.isfinite(z_new):
                break
            # keep Newton only while it improves the residual
            if abs(np.polyval(co, z_new)) > abs(p):
                break
            z = z_new
            if abs(step) <= 1e-15 * max(1.0, abs(z)):
                break
        polished.append(z)
    roots = np.array(polished)
    resid = np.abs(eval_complex(u, roots) + lam)
    if np.any(resid > 1e-9 * scale * np.maximum(1.0, np.abs(roots) ** u.degree + np.abs(roots) ** -u.degree)):
        raise RootPolishFailure(f"root residual {resid.max():.3e} too large at lambda = {lam}")
    # deterministic order: modulus then argument
    order = np.lexsort((np.round(np.angle(roots) % TWO_PI, 12), np.round(np.abs(roots), 12)))
    roots = roots[order]
    mod = np.abs(roots)
    kinds = tuple("inside" if m < 1 - CIRCLE_TOL else "outside" if m > 1 + CIRCLE_TOL else "circle" for m in mod)
    circle = roots[[k == "circle" for k in kinds]]
    p_plus = p_minus = None
    if circle.size == 2:
        d = [float(u.derivative(np.angle(z) % TWO_PI)) for z in circle]
        i_plus = 0 if d[0] > d[1] else 1
        p_plus, p_minus = complex(circle[i_plus]), complex(circle[1 - i_plus])
    case = "small" if circle.size >= 2 else "large"
    diffs = np.abs(roots[:, None] - roots[None, :]) + np.eye(len(roots))
    multiple = bool(np.min(diffs) < 1e-6) or circle.size not in (0, 2)
    return CriticalPointSet(float(lam), roots, kinds, roots[[k == "inside" for k in kinds]], p_plus, p_minus,
                            roots[[k == "outside" for k in kinds]], case, multiple)


@dataclass(frozen=True)
class SpacingReport:
    min_pair_distance: float
    min_inside_modulus: float
    min_distance_to_circle_points: float
    bands: tuple
    degenerate: bool


def band_candidates(u: TrigPotential, tol: float = 1e-9):
    """Real values y = -u(z*) over the nonzero roots z* of z^{N+1} u'(z)."""
    n = u.degree
    co = np.zeros(2 * n + 1, dtype=complex)
    for k, c in enumerate(u.coeffs, start=1):
        co[n + k] += k * c
        co[n - k] -= k * np.conj(c)
    zs = np.roots(co[::-1])
    ys = -eval_complex(u, zs)
    scale = u.coeff_scale()
    real = sorted({round(float(y.real), 12) for y in ys if abs(y.imag) <= tol * scale})
    return tuple(real)


def spacing_report(cps: CriticalPointSet, u: TrigPotential, delta: float = 0.0) -> SpacingReport:
    r = cps.roots
    d = np.abs(r[:, None] - r[None, :]) + np.diag(np.full(len(r), np.inf))
    min_pair = float(np.min(d)) if len(r) > 1 else math.inf
    min_mod = float(np.min(np.abs(cps.inside))) if cps.inside.size else math.inf
    if cps.p_plus is not None and cps.inside.size:
        circ = np.array([cps.p_plus, cps.p_minus])
        to_circ = float(np.min(np.abs(cps.inside[:, None] - circ[None, :])))
    else:
        to_circ = math.inf
    bands = band_candidates(u)
    degenerate = cps.multiple or any(abs(cps.lam - y) < delta for y in bands)
    return SpacingReport(min_pair, min_mod, to_circ, bands, bool(degenerate))


def check_S2(u: TrigPotential, cps: CriticalPointSet) -> float:
    """Largest mismatch between |S''(p_pm)| and its factorized closed form."""
    if cps.case != "small" or cps.multiple:
        raise DegenerateCriticalPoints("need two simple roots on the circle")
    cN = abs(u.coeffs[-1])
    out = 0.0
    for p in (cps.p_plus, cps.p_minus):
        direct = abs(complex(eval_S2(u, cps.lam, p)))
        closed = cN * abs(cps.p_plus - cps.p_minus) * float(np.prod(np.abs(cps.inside - p) ** 2 / np.abs(cps.inside)))
        out = max(out, abs(direct - closed))
    return out


def circle_action(u: TrigPotential, lam: float, x_plus: float, x_minus: float, panels: int = 64) -> complex:
    """S(p_+) - S(p_-) as i int_{x_+}^{x_-} (u(x) + lambda) dx along the arc through x_max."""
    if x_minus < x_plus:
        x_minus += TWO_PI
    nodes, weights = gauss_panels(x_plus, x_minus, panels, 20)
    return 1j * float(np.dot(weights, u(nodes) + lam))


def _arc_ends(u: TrigPotential, cps: CriticalPointSet):
    xp = float(np.angle(cps.p_plus) % TWO_PI)
    xm = float(np.angle(cps.p_minus) % TWO_PI)
    if xm < xp:
        xm += TWO_PI
    return xp, xm


def action_integral(u: TrigPotential, lam: float, profile=None, tol: float = 1e-12):
    """(lhs, rhs, residual) of S(p_+) - S(p_-) = 2 i pi int_{-lambda}^{max u} F."""
    from .burgers import distribution_profile

    lo, hi = value_range(u)
    if not lo < -lam < hi:
        raise OutOfRegion(f"-lambda = {-lam} is outside ({lo}, {hi})")
    cps = critical_points(u, lam)
    if cps.case != "small":
        raise DegenerateCriticalPoints("circle roots not resolved")
    xp, xm = _arc_ends(u, cps)
    lhs = circle_action(u, lam, xp, xm)
    prof = profile if profile is not None else distribution_profile(u)
    rhs = 2j * math.pi * prof.A(-lam, tol)
    return lhs, rhs, abs(lhs - rhs)


# --- leading-order factors ---------------------------------------------------


def _arg_sum(cps: CriticalPointSet) -> float:
    p = cps.inside
    return float(np.sum(np.angle(cps.p_minus - p) - np.angle(cps.p_plus - p)))


def psi_raw(u: TrigPotential, lam: float, cps: CriticalPointSet | None = None, F: float | None = None) -> float:
    """Quantization phase in [0, 1).

    psi = -1/4 - N F(-lambda) + (1/2pi) sum_k [arg(p_- - p_k) - arg(p_+ - p_k)] mod 1.
    Steepest descent through p_pm runs along the circle tangent, so the
    descent angles carry x_pm; together with the p_pm^{-(N+1)} Vandermonde
    ratio this produces the -N F term.
    """
    cps = cps or critical_points(u, lam)
    if cps.case != "small" or cps.multiple:
        raise DegenerateCriticalPoints(f"critical points degenerate at lambda = {lam}")
    if F is None:
        xp, xm = _arc_ends(u, cps)
        F = (xm - xp) / TWO_PI
    return (-0.25 - u.degree * F + _arg_sum(cps) / TWO_PI) % 1.0


@dataclass(frozen=True)
class DeltaFactor:
    delta: complex
    abs_P: float
    psi: float
    action: complex


def delta_factor(u: TrigPotential, lam: float, eps: float, cps: CriticalPointSet | None = None) -> DeltaFactor:
    """Delta = 1 - e^{2 i pi (A(-lambda)/eps - psi)} with the action taken on the circle.

    |P| collects the magnitudes of the leading-order prefactor: the
    Vandermonde determinant over (p_1..p_{N-1}, p_+) divided by the square
    roots of |S''| at the same points (exponential factors excluded).
    """
    cps = cps or critical_points(u, lam)
    if cps.case != "small" or cps.multiple:
        raise DegenerateCriticalPoints(f"critical points degenerate at lambda = {lam}")
    xp, xm = _arc_ends(u, cps)
    action = circle_action(u, lam, xp, xm)
    psi = psi_raw(u, lam, cps, (xm - xp) / TWO_PI)
    # action = 2 i pi A(-lambda), so the phase is 2 pi (A/eps - psi)
    phase = (action / (1j * eps)).real - TWO_PI * psi
    delta = 1.0 - np.exp(1j * phase)
    pts = np.append(cps.inside, cps.p_plus)
    n = len(pts)
    vdm = 1.0
    for j in range(n):
        for k in range(j + 1, n):
            vdm *= abs(pts[k] - pts[j])
    vdm *= float(np.prod(np.abs(pts) ** (-(n + 1))))
    s2 = np.abs(eval_S2(u, lam, pts))
    return DeltaFactor(complex(delta), float(vdm / math.sqrt(float(np.prod(s2)))), psi, complex(action))


def _delta_phase(u: TrigPotential, eps: float, lam: float) -> float:
    """(phase of Delta)/2pi folded into [-1/2, 1/2); zeros of Delta sit at 0."""
    d = delta_factor(u, lam, eps)
    x = (d.action / (2j * math.pi * eps)).real - d.psi
    return (x + 0.5) % 1.0 - 0.5


def delta_factor_zeros(u: TrigPotential, eps: float, lam_lo: float, lam_hi: float, points: int | None = None,
                       xtol: float = 1e-14) -> np.ndarray:
    """Real zeros of Delta on [lam_lo, lam_hi].

    The folded phase is sampled finely enough that it moves by well under
    1/2 per step, so each sign change through 0 brackets one zero and the
    jumps at +-1/2 are skipped.
    """
    points = points or max(64, int(8 * (lam_hi - lam_lo) / eps))
    lams = np.linspace(lam_lo, lam_hi, points + 1)
    h = np.array([_delta_phase(u, eps, x) for x in lams])
    out = []
    for i in range(points):
        a, b = h[i], h[i + 1]
        if a == 0.0:
            out.append(lams[i])
        elif a * b < 0 and abs(a - b) < 0.5:
            out.append(brentq(lambda x: _delta_phase(u, eps, x), lams[i], lams[i + 1], xtol=xtol))
    return np.array(out)


def saddle_hessian_det(u: TrigPotential, lam: float, p: complex, h: float = 1e-4) -> float:
    """Determinant of the finite-difference Hessian of Re S at p (negative at a saddle)."""
    def f(dx, dy):
        return float(eval_S(u, lam, p + dx + 1j * dy).real)

    fxx = (f(h, 0) - 2 * f(0, 0) + f(-h, 0)) / h**2
    fyy = (f(0, h) - 2 * f(0, 0) + f(0, -h)) / h**2
    fxy = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4 * h**2)
    return fxx * fyy - fxy**2


# --- level sets and the merge tree --------------------------------------------


@dataclass(frozen=True)
class LevelGrid:
    lam: float
    r: np.ndarray  # radial nodes, log-spaced, last one = 1
    theta: np.ndarray
    values: np.ndarray  # Re S clamped to [-cap, cap], shape (len(r), len(theta))
    cap: float

    def rows(self):
        for i, r in enumerate(self.r):
            for j, t in enumerate(self.theta):
                yield float(r), float(t), float(self.values[i, j])


def default_r_floor(u: TrigPotential, cap: float) -> float:
    """Radius where the leading term |c_N| / (N r^N) of Re Q reaches 3 * cap."""
    n = u.degree
    return (abs(u.coeffs[-1]) / (3.0 * n * cap)) ** (1.0 / n)


def level_grid(u: TrigPotential, lam: float, n_r: int = 600, n_theta: int = 1200, r_floor: float | None = None,
               cap: float = 1e3) -> LevelGrid:
    r0 = default_r_floor(u, cap) if r_floor is None else r_floor
    r = np.exp(np.linspace(math.log(r0), 0.0, n_r))
    r[-1] = 1.0
    theta = TWO_PI * (np.arange(n_theta) + 0.5) / n_theta
    z = r[:, None] * np.exp(1j * theta[None, :])
    with np.errstate(over="ignore", invalid="ignore"):
        vals = eval_Q(u, z).real - lam * np.log(r)[:, None]
    vals[-1, :] = 0.0  # Re S vanishes on the circle
    vals = np.clip(np.nan_to_num(vals, nan=-cap, posinf=cap, neginf=-cap), -cap, cap)
    return LevelGrid(float(lam), r, theta, vals, float(cap))


@dataclass
class TreeNode:
    id: int
    kind: str  # "leaf" | "saddle" | "continent"
    level: float
    children: list
    label: str = ""
    cell: tuple | None = None
    tol: float = 0.0
    saddle: complex | None = None

    def to_json(self) -> dict:
        out = {"id": self.id, "kind": self.kind, "label": self.label, "level": self.level,
               "children": list(self.children)}
        if self.saddle is not None:
            out["saddle"] = [self.saddle.real, self.saddle.imag]
        return out


@dataclass(frozen=True)
class MergeTree:
    lam: float
    case: str
    nodes: tuple
    leaves: tuple  # node ids of l_1..l_N in label order
    internal: tuple  # node ids in order of creation (descending level)
    distinguished: int
    root: int

    def node(self, i: int) -> TreeNode:
        return self.nodes[i]

    def to_json(self) -> dict:
        return {"lambda": self.lam, "case": self.case, "leaves": list(self.leaves),
                "internal": list(self.internal), "distinguished": self.distinguished,
                "root": self.root, "nodes": [n.to_json() for n in self.nodes]}


class _UnionFind:
    """Union-find over grid cells carrying the unwrapped angular offset to the root."""

    def __init__(self, size: int):
        self.parent = list(range(size))
        self.offset = [0] * size  # column(cell) - column(root), unwrapped

    def find(self, a: int):
        parent, offset = self.parent, self.offset
        path = []
        while parent[a] != a:
            path.append(a)
            a = parent[a]
        root = a
        # compress from the top so each offset is relative to the root
        acc = 0
        for c in reversed(path):
            acc += offset[c]
            offset[c] = acc
            parent[c] = root
        return root

    def union(self, a: int, b: int, shift: int):
        """Attach root(b) under root(a) so that col(b) = col(a) + shift in unwrapped units."""
        ra, rb = self.find(a), self.find(b)
        # col(b) - col(rb) = offset[b]; want col(rb) relative to ra
        self.parent[rb] = ra
        self.offset[rb] = self.offset[a] + shift - self.offset[b]
        return ra


def _leaf_label(theta: float, u: TrigPotential) -> int:
    n = u.degree
    k = int(round(n * ((theta + u.rotation) % TWO_PI) / TWO_PI)) % n
    return n if k == 0 else k


def merge_tree(u: TrigPotential, lam: float, grid: LevelGrid | None = None, **grid_kw) -> MergeTree:
    """Superlevel-set merge tree of Re S_lambda on the punctured disk.

    Leaves are the clamped plateaus near the origin.  Binary merges of
    components holding leaves are saddle nodes; the distinguished node is the
    first contact with the circle (small case) or the first time a component
    winds around the origin (large case).  Every merge level must match a
    critical value Re S(p) within three value steps of the grid.
    """
    cps = critical_points(u, lam)
    if cps.multiple:
        raise DegenerateCriticalPoints(f"critical points collide at lambda = {lam}")
    g = grid or level_grid(u, lam, **grid_kw)
    vals = g.values
    nr, nt = vals.shape
    inner = nr - 1  # rows 0..inner-1 are cells; row inner is the circle
    circle_id = inner * nt
    flat = vals[:inner].ravel()
    uf = _UnionFind(circle_id + 1)
    active = np.zeros(circle_id + 1, dtype=bool)
    node_of: dict[int, int] = {}
    nodes: list[TreeNode] = []

    def step_size(i, j):
        v = vals[i, j]
        nb = [vals[i, (j + 1) % nt], vals[i, (j - 1) % nt]]
        if i > 0:
            nb.append(vals[i - 1, j])
        nb.append(vals[i + 1, j])
        return max(abs(v - w) for w in nb)

    # leaves: connected plateaus at the cap
    top = vals[:inner] >= g.cap
    for idx in np.flatnonzero(top.ravel()):
        active[idx] = True
    for idx in np.flatnonzero(top.ravel()):
        i, j = divmod(int(idx), nt)
        for ii, jj, d in ((i, (j + 1) % nt, 1), (i + 1, j, 0)):
            if ii < inner and top[ii, jj]:
                nb = ii * nt + jj
                ra, rb = uf.find(idx), uf.find(nb)
                if ra != rb:
                    uf.union(int(idx), nb, d)
    plateau_roots = sorted({uf.find(int(i)) for i in np.flatnonzero(top.ravel())})
    leaf_by_label = {}
    for root in plateau_roots:
        j = root % nt
        label = _leaf_label(float(g.theta[j]), u)
        if label in leaf_by_label:
            raise GridTooCoarse(f"two plateaus map to leaf {label}")
        nid = len(nodes)
        nodes.append(TreeNode(nid, "leaf", g.cap, [], f"l{label}", (root // nt, j)))
        node_of[root] = nid
        leaf_by_label[label] = nid
    if len(leaf_by_label) != u.degree:
        raise GridTooCoarse(f"found {len(leaf_by_label)} plateaus, expected {u.degree}")

    internal = []
    distinguished = None
    order = np.argsort(-flat, kind="stable")
    circle_value = 0.0
    circle_done = False

    def new_node(kind, level, children, cell, tol):
        nid = len(nodes)
        nodes.append(TreeNode(nid, kind, float(level), children, "", cell, tol))
        internal.append(nid)
        return nid

    def process_circle():
        nonlocal distinguished
        active[circle_id] = True
        hits = {}
        for j in range(nt):
            c = (inner - 1) * nt + j
            if active[c]:
                r = uf.find(c)
                if r in node_of and r not in hits:
                    hits[r] = c
                uf_root = uf.find(circle_id)
                if uf_root != r:
                    uf.union(c, circle_id, 0)
        if cps.case == "small":
            if len(hits) != 1:
                raise GridTooCoarse(f"{len(hits)} components reach the circle at level 0")
            (r, c), = hits.items()
            nid = new_node("continent", 0.0, [node_of[r]], (inner, c % nt), 0.0)
            distinguished = nid
            node_of[uf.find(circle_id)] = nid
        else:
            kids = [node_of[r] for r in hits]
            if len(kids) > 1:
                raise GridTooCoarse("several mountains reach the circle at once")
            if kids:
                node_of[uf.find(circle_id)] = kids[0]

    for idx in order:
        idx = int(idx)
        v = flat[idx]
        if not circle_done and v < circle_value:
            process_circle()
            circle_done = True
        if active[idx]:
            continue
        if len(internal) == u.degree and distinguished is not None:
            break
        active[idx] = True
        i, j = divmod(idx, nt)
        nbrs = [(i * nt + (j + 1) % nt, 1), (i * nt + (j - 1) % nt, -1)]
        if i > 0:
            nbrs.append(((i - 1) * nt + j, 0))
        nbrs.append((circle_id if i == inner - 1 else (i + 1) * nt + j, 0))
        for nb, d in nbrs:
            if not active[nb]:
                continue
            ra, rb = uf.find(idx), uf.find(nb)
            if ra == rb:
                if nb == circle_id or cps.case != "large" or distinguished is not None or ra not in node_of:
                    continue
                wind = uf.offset[idx] + d - uf.offset[nb]
                if wind != 0:
                    nid = new_node("continent", v, [node_of[ra]], (i, j), 3 * step_size(i, j))
                    distinguished = nid
                    node_of[ra] = nid
                continue
            na, nb_node = node_of.pop(ra, None), node_of.pop(rb, None)
            if nb == circle_id:
                root = uf.union(nb, idx, 0)
            else:
                root = uf.union(idx, nb, d)
            if na is not None and nb_node is not None:
                node_of[root] = new_node("saddle", v, [na, nb_node], (i, j), 3 * step_size(i, j))
            elif na is not None or nb_node is not None:
                node_of[root] = na if na is not None else nb_node
    if not circle_done and cps.case == "small":
        process_circle()
    if distinguished is None or len(internal) != u.degree:
        raise GridTooCoarse(f"tree incomplete: {len(internal)} internal nodes, distinguished={distinguished}")
    _match_saddles(u, cps, g, nodes, internal, distinguished)
    ordered_leaves = tuple(leaf_by_label[k] for k in range(1, u.degree + 1))
    return MergeTree(float(lam), cps.case, tuple(nodes), ordered_leaves, tuple(internal), distinguished,
                     internal[-1])


def _match_saddles(u, cps, g, nodes, internal, distinguished):
    """Attach each internal node to a critical point by value, position breaking ties.

    Labels follow the merge order: internal nodes are p1, p2, ... by
    decreasing level, the continent node in the small case being p_pm.
    """
    pts = list(cps.inside)
    values = [float(re_S(u, cps.lam, p)) for p in pts]
    if cps.case == "small":
        nodes[distinguished].saddle = complex(cps.p_plus)
    used = set()
    for nid in internal:
        if cps.case == "small" and nid == distinguished:
            continue
        node = nodes[nid]
        i, j = node.cell
        z = g.r[i] * np.exp(1j * g.theta[j])
        best = None
        for k, (p, val) in enumerate(zip(pts, values)):
            if k in used:
                continue
            key = (abs(val - node.level) > node.tol, abs(p - z))
            if best is None or key < best[0]:
                best = (key, k)
        if best is None or best[0][0]:
            raise GridTooCoarse(f"merge at level {node.level:.6g} matches no saddle value")
        used.add(best[1])
        node.saddle = complex(pts[best[1]])
    for k, nid in enumerate(internal, start=1):
        small_continent = cps.case == "small" and nid == distinguished
        nodes[nid].label = "p_pm" if small_continent else f"p{k}"


@dataclass(frozen=True)
class Pruning:
    pairs: tuple  # (leaf label, node label) in pruning order
    survivor: str
    encircled: dict  # node label -> sorted labels of previously pruned leaves below it

    def to_json(self) -> dict:
        return {"pairs": [list(p) for p in self.pairs], "survivor": self.survivor,
                "D": {k: list(v) for k, v in self.encircled.items()}}


def prune_tree(tree: MergeTree) -> Pruning:
    """Pair every leaf but one with an internal node.

    Repeatedly pick the lowest-id internal node whose children are all
    leaves.  A binary node drops the leaf with the smaller index (never the
    one carried by the distinguished node) and the pair is recorded; the
    node then stands for the remaining leaf.  The unary distinguished node
    simply takes over its child and marks it as unprunable.
    """
    nodes = {n.id: n for n in tree.nodes}
    if len(tree.leaves) != len(tree.internal):
        raise MalformedTree("leaf and internal node counts differ")
    carried: dict[int, int] = {nid: int(nodes[nid].label[1:]) for nid in tree.leaves}
    protected: set[int] = set()
    pending = set(tree.internal)
    pruned_order: list[int] = []
    pairs, encircled = [], {}
    below: dict[int, set] = {nid: set() for nid in tree.leaves}
    while pending:
        ready = sorted(n for n in pending if all(c in carried for c in nodes[n].children))
        if not ready:
            raise MalformedTree("no internal node has only leaf children")
        nid = ready[0]
        node = nodes[nid]
        kids = node.children
        if len(kids) == 1:
            (c,) = kids
            carried[nid] = carried.pop(c)
            below[nid] = below.pop(c)
            protected.add(nid)
            if nid != tree.distinguished:
                raise MalformedTree("unary node that is not the distinguished one")
        elif len(kids) == 2:
            a, b = kids
            if a in protected and b in protected:
                raise MalformedTree("both children carry the distinguished leaf")
            if a in protected or b in protected:
                drop = b if a in protected else a
            else:
                drop = a if carried[a] < carried[b] else b
            keep = b if drop == a else a
            leaf = carried.pop(drop)
            kept = carried.pop(keep)
            encircled[node.label] = sorted(f"l{x}" for x in below[drop] | below[keep])
            pairs.append((f"l{leaf}", node.label))
            pruned_order.append(leaf)
            carried[nid] = kept
            below[nid] = below.pop(drop) | below.pop(keep) | {leaf}
            if keep in protected:
                protected.add(nid)
        else:
            raise MalformedTree(f"node {nid} has {len(kids)} children")
        pending.discard(nid)
    (survivor,) = carried.values()
    if len(pairs) != len(tree.leaves) - 1 or len(set(pruned_order)) != len(pruned_order):
        raise MalformedTree("pruning is not a bijection")
    return Pruning(tuple(pairs), f"l{survivor}", encircled)
