"""Acceptance checks shared by the test-suite and the ``report`` command.

Each check returns a :class:`CheckResult` whose ``details`` hold only
numbers, strings and lists, so a report serializes deterministically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import burgers, evans, evolve, landscape, laxspec, quantize
from .potential import comonotone_check, parse_potential, preset, value_range

EVEN_FIXTURES = {"cosine": [-1.0], "even-two-mode": [-1.0, 0.15]}


@dataclass(frozen=True)
class CheckResult:
    id: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.id:2d} {self.name}"

    def to_json(self) -> dict:
        return {"id": self.id, "name": self.name, "status": "pass" if self.passed else "fail",
                "details": _clean(self.details)}


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(f"{float(obj):.10g}")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    return obj


def check_free_operator() -> CheckResult:
    spec = laxspec.eigensolve(laxspec.LaxMatrix.free(1.0, 256))
    err = float(np.max(np.abs(spec.eigenvalues - np.arange(256))))
    gap = float(np.max(np.abs(spec.gaps)))
    return CheckResult(1, "free operator exactness", err <= 1e-12 and gap <= 1e-12,
                       {"max_eigen_error": err, "max_gap": gap})


def check_sum_rule() -> CheckResult:
    u = preset("cosine")
    norm2 = u.l2_squared()
    res = {}
    for M in (256, 512):
        _, r = laxspec.gaps_and_sumrule(laxspec.spectrum(u, 0.5, M), u, 0.5)
        res[M] = r
    floor = 1e-11 * norm2
    ok = all(r <= 1e-3 * norm2 for r in res.values()) and res[512] <= max(res[256], floor)
    return CheckResult(2, "trace sum rule", ok, {"residual": res, "bound": 1e-3 * norm2, "floor": floor})


def check_evans(eps_list=(0.5, 0.25)) -> CheckResult:
    u = preset("cosine")
    details, ok = {}, True
    for eps in eps_list:
        ev = laxspec.spectrum(u, eps, 400).eigenvalues
        for rng in ((-1.8, 1.8), (2.2, 6.0)):
            scan = evans.scan_zeros(u, eps, rng, eigenvalues=ev)
            unmatched, missed = evans.match_bidirectional(scan.zero_values(), ev, rng)
            ok &= not unmatched and not missed
            details[f"eps={eps} range={list(rng)}"] = {
                "zeros": len(scan.zero_values()), "unmatched": list(unmatched), "missed": list(missed)}
    return CheckResult(3, "Evans zeros match eigenvalues", ok, details)


_LADDER = (0.2, 0.1, 0.05, 0.025)


def check_bs_scaling() -> CheckResult:
    rep = quantize.residual_report(preset("cosine"), _LADDER, 0.2)
    return CheckResult(4, "Bohr-Sommerfeld residual scaling", rep.small_slope >= 1.2,
                       {"slope": rep.small_slope, "max_small_residual": rep.max_small})


def check_large_spacing() -> CheckResult:
    u = preset("cosine")
    eps, delta = 0.05, 0.3
    lo, hi = value_range(u)
    K = hi - lo
    spec = laxspec.spectrum(u, eps, laxspec.auto_truncation(u, eps, 2 * K))
    part = quantize.region_classify(spec, u, delta)
    r = quantize.large_spacing(spec, part, K)
    return CheckResult(5, "large-eigenvalue spacing", r <= 0.05 * eps, {"max_deviation": r, "bound": 0.05 * eps})


def check_action_identity() -> CheckResult:
    u = preset("cosine")
    lhs, _, r0 = landscape.action_integral(u, 0.0)
    closed = abs(lhs - 4j)
    v = preset("fig-level0")
    prof = burgers.distribution_profile(v)
    lo, hi = prof.min_u, prof.max_u
    lams = np.linspace(-hi + 0.2, -lo - 0.2, 50)
    worst = max(landscape.action_integral(v, lam, prof)[2] for lam in lams)
    ok = r0 <= 1e-8 and closed <= 1e-8 and worst <= 1e-6
    return CheckResult(6, "action identity", ok, {"cosine_residual": r0, "cosine_vs_4i": closed,
                                                   "fig_level0_max_residual": worst})


def check_s2_identity() -> CheckResult:
    u = preset("cosine")
    cps = landscape.critical_points(u, 0.0)
    r0 = landscape.check_S2(u, cps)
    exact = max(abs(abs(complex(landscape.eval_S2(u, 0.0, p))) - 2.0) for p in (cps.p_plus, cps.p_minus))
    v = preset("fig-level0")
    worst = max(landscape.check_S2(v, landscape.critical_points(v, lam)) for lam in (-6.0, -3.0, 0.0, 3.0, 6.0))
    ok = r0 <= 1e-10 and exact <= 1e-10 and worst <= 1e-8
    return CheckResult(7, "S'' identity", ok, {"cosine_residual": r0, "cosine_vs_2": exact,
                                                "fig_level0_residual": worst})


def _j_sum(u, eps, delta=0.2):
    spec = laxspec.spectrum(u, eps)
    prof = burgers.distribution_profile(u)
    rep = laxspec.shift_pairing(spec, u, delta)
    return eps * math.fsum(float(np.sinc(prof.F(-spec.eigenvalues[n]))) for n in rep.J), len(rep.J)


def check_phase_parity() -> CheckResult:
    details, ok = {}, True
    for name, coeffs in EVEN_FIXTURES.items():
        u = parse_potential(coeffs)
        for eps in (0.5, 0.1):
            rep = laxspec.shift_pairing(laxspec.spectrum(u, eps))
            smax = float(np.max(np.abs(rep.pairings)))
            st = rep.theta_steps[~np.isnan(rep.theta_steps)]
            step_err = float(np.max(np.minimum(np.abs(st - 1), np.abs(st + 1)))) if st.size else 0.0
            ok &= rep.max_im <= 1e-8 * smax + 1e-12 and step_err <= 1e-6
            details[f"{name} eps={eps}"] = {"max_im": rep.max_im, "max_abs": smax, "theta_step_error": step_err}
    u = preset("cosine")
    (s_hi, n_hi), (s_lo, n_lo) = _j_sum(u, 0.2), _j_sum(u, 0.05)
    ok &= s_lo <= s_hi
    details["J_sum"] = {"eps=0.2": s_hi, "eps=0.05": s_lo, "size_eps=0.2": n_hi, "size_eps=0.05": n_lo}
    return CheckResult(8, "phase parity", ok, details)


def check_explicit_vs_rk4() -> CheckResult:
    u = preset("cosine")
    a = evolve.fourier_evolution(u, 0.5, 0.3, 8, 128)
    b = evolve.reference_integrator(u, 0.5, 0.3, 1e-4, 128, kmax=8)
    r = evolve.relative_l2(a, b)
    return CheckResult(9, "explicit formula vs RK4", r <= 1e-5,
                       {"relative_l2": r, "rk4_step_halving": b.extras.get("step_halving_error")})


def check_zero_dispersion() -> CheckResult:
    u = preset("cosine")
    prof = burgers.distribution_profile(u)
    ks = [1, 2, 3]
    details, ok = {}, True
    for t in (0.15, 0.5):
        target = burgers.weak_limit_fourier(prof, t, ks)
        alt = burgers.branch_fourier(u, t, ks)
        agree = float(np.max(np.abs(target - alt)))
        e_hi = np.abs(evolve.fourier_evolution(u, 0.2, t, 3).coeffs[1:] - target)
        e_lo = np.abs(evolve.fourier_evolution(u, 0.025, t, 3).coeffs[1:] - target)
        ok &= agree <= 1e-5 and bool(np.all(e_lo <= 0.5 * e_hi))
        details[f"t={t}"] = {"targets_agree": agree, "err_eps=0.2": list(e_hi), "err_eps=0.025": list(e_lo)}
    return CheckResult(10, "zero-dispersion convergence", ok, details)


def check_burgers_consistency() -> CheckResult:
    u = preset("cosine")
    prof = burgers.distribution_profile(u)
    ks = [k for k in range(-8, 9) if k]
    worst = {}
    for t in (0.0, 0.15, 0.5):
        a = burgers.weak_limit_fourier(prof, t, ks)
        b = burgers.branch_fourier(u, t, ks)
        worst[t] = float(np.max(np.abs(a - b)))
    return CheckResult(11, "Burgers transforms agree", max(worst.values()) <= 1e-5, {"max_difference": worst})


def bell_test_samples(n: int = 4096) -> np.ndarray:
    """A C^4 bell with x_min = 0, x_max = pi: -2 cos x + 0.3 |sin(x/2)|^5."""
    x = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    return -2.0 * np.cos(x) + 0.3 * np.abs(np.sin(0.5 * x)) ** 5


def check_comonotone() -> CheckResult:
    rep = comonotone_check(bell_test_samples(), [8, 16, 32, 64])
    xmax_err = abs(rep.records[-1].x_max - math.pi)
    ok = rep.n0 is not None and rep.n0 <= 16 and rep.slope is not None and rep.slope <= -1.5 and xmax_err <= 0.05
    return CheckResult(12, "comonotone approximation", ok, {"N0": rep.n0, "slope": rep.slope, "x_max_error": xmax_err})


def check_landscape() -> CheckResult:
    u = preset("fig-level0")
    N = u.degree
    cps = landscape.critical_points(u, 0.0)
    tree = landscape.merge_tree(u, 0.0)
    pr = landscape.prune_tree(tree)
    level_err, levels_ok = 0.0, True
    for nid in tree.internal:
        node = tree.node(nid)
        if node.saddle is not None:
            d = abs(float(landscape.re_S(u, 0.0, node.saddle)) - node.level)
            level_err = max(level_err, d)
            levels_ok &= d <= node.tol + 1e-12
    bijection = (len(pr.pairs) == N - 1 and len({a for a, _ in pr.pairs} | {pr.survivor}) == N
                 and len({b for _, b in pr.pairs}) == N - 1)
    ok = (len(tree.leaves) == N and len(tree.internal) == N and bijection and len(cps.roots) == 2 * N
          and len(cps.roots) - len(cps.inside) - len(cps.outside) == 2 and levels_ok)
    return CheckResult(13, "landscape combinatorics", ok, {
        "leaves": len(tree.leaves), "internal": len(tree.internal), "roots": len(cps.roots),
        "on_circle": len(cps.roots) - len(cps.inside) - len(cps.outside),
        "pairs": [list(p) for p in pr.pairs], "survivor": pr.survivor, "max_level_error": level_err})


def check_psi_consistency() -> CheckResult:
    details, ok = {}, True
    for name, coeffs in EVEN_FIXTURES.items():
        u = parse_potential(coeffs)
        prof = burgers.distribution_profile(u)
        worst = 0.0
        for eta in np.linspace(prof.min_u + 0.1, prof.max_u - 0.1, 25):
            d = quantize.psi_even(u, eta, prof) - quantize.psi_general(u, -eta)
            worst = max(worst, abs((d + 0.5) % 1.0 - 0.5))
        ok &= worst <= 1e-8
        details[f"{name} psi_mismatch"] = worst
    u = preset("cosine")
    eps = 0.1
    prof = burgers.distribution_profile(u)
    lift = quantize.PsiLift(u, prof)
    zeros = landscape.delta_factor_zeros(u, eps, -prof.max_u + 0.2, -prof.min_u - 0.2)
    worst = 0.0
    count = 0
    for n in range(int((prof.max_u - prof.min_u) / eps) + 2):
        try:
            lam = quantize.predict_small(u, eps, 0.2, n, profile=prof, lift=lift)
        except quantize.OutOfRegion:
            continue
        count += 1
        worst = max(worst, float(np.min(np.abs(zeros - lam))))
    ok &= count > 0 and count == len(zeros) and worst <= 1e-8
    details["delta_zeros"] = len(zeros)
    details["predictions"] = count
    details["max_zero_mismatch"] = worst
    return CheckResult(14, "psi consistency", ok, details)


CHECKS = {
    1: check_free_operator,
    2: check_sum_rule,
    3: check_evans,
    4: check_bs_scaling,
    5: check_large_spacing,
    6: check_action_identity,
    7: check_s2_identity,
    8: check_phase_parity,
    9: check_explicit_vs_rk4,
    10: check_zero_dispersion,
    11: check_burgers_consistency,
    12: check_comonotone,
    13: check_landscape,
    14: check_psi_consistency,
}


def run_checks(ids=None) -> list[CheckResult]:
    out = []
    for i in sorted(CHECKS if ids is None else ids):
        try:
            out.append(CHECKS[i]())
        except Exception as exc:  # a crash is a failed criterion, recorded by type
            out.append(CheckResult(i, CHECKS[i].__name__, False, {"error": type(exc).__name__, "message": str(exc)}))
    return out
