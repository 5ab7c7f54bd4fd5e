"""Batch front-end: ``bolax COMMAND [--config PATH] [--out DIR] [--threads N] [--preset NAME]``.

Every run writes its data files plus ``manifest.json`` (resolved config,
library version, chosen truncations, output checksums, and the error if one
occurred).  Outputs carry no timestamps, so identical configs give identical
bytes.  Exit codes: 0 ok, 1 compute error, 2 invalid config.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigInvalid, LabError
from .potential import PRESETS, TrigPotential, parse_potential, preset, value_range

COMMANDS = ("spectrum", "quantize", "evans", "landscape", "burgers", "evolve", "weaklimit", "report")


@dataclass
class RunConfig:
    potential: object = "cosine"
    eps: list = field(default_factory=lambda: [0.5])
    M: object = "auto"
    delta: float = 0.2
    times: list = field(default_factory=lambda: [0.0, 0.15, 0.5])
    k: list = field(default_factory=lambda: list(range(1, 9)))
    lam: float = 0.0
    lam_ranges: list | None = None
    grid_points: int | None = None
    n_r: int = 600
    n_theta: int = 1200
    dt: float = 1e-4
    M_modes: int = 128
    reference: bool = False
    checks: list | None = None
    rerun: bool = True

    def to_json(self) -> dict:
        return asdict(self)


_DEFAULT_EPS = {"quantize": [0.2, 0.1, 0.05, 0.025], "evans": [0.5], "evolve": [0.5]}


def _fail(msg):
    raise ConfigInvalid(msg)


def _num(v, name, positive=False, nonneg=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(f"{name} must be a number, got {v!r}")
    if positive and not v > 0:
        _fail(f"{name} must be positive")
    if nonneg and v < 0:
        _fail(f"{name} must be nonnegative")
    return float(v)


def _int(v, name, minimum=1):
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        _fail(f"{name} must be an integer >= {minimum}, got {v!r}")
    return v


def _numlist(v, name, **kw):
    v = v if isinstance(v, list) else [v]
    if not v:
        _fail(f"{name} must not be empty")
    return [_num(x, name, **kw) for x in v]


def resolve_config(command: str, raw: dict, preset_name: str | None = None) -> RunConfig:
    """Validate a JSON config; unknown keys and ill-typed values raise ConfigInvalid."""
    if not isinstance(raw, dict):
        _fail("config must be a JSON object")
    known = set(RunConfig.__dataclass_fields__)
    unknown = sorted(set(raw) - known)
    if unknown:
        _fail(f"unknown config keys: {', '.join(unknown)}")
    cfg = RunConfig()
    if command in _DEFAULT_EPS:
        cfg.eps = list(_DEFAULT_EPS[command])
    if command == "weaklimit":
        cfg.M = 512
    if command == "evolve":
        cfg.times = [0.3]
    for key, val in raw.items():
        setattr(cfg, key, val)
    if preset_name is not None:
        cfg.potential = preset_name
    if isinstance(cfg.potential, str):
        if cfg.potential not in PRESETS:
            _fail(f"unknown preset {cfg.potential!r}; choose from {sorted(PRESETS)}")
    elif isinstance(cfg.potential, list):
        try:
            parse_potential(cfg.potential)
        except (LabError, ValueError, TypeError) as exc:
            _fail(f"bad coefficient list: {exc}")
    else:
        _fail("potential must be a preset name or a coefficient list")
    cfg.eps = _numlist(cfg.eps, "eps", positive=True)
    if cfg.M != "auto":
        cfg.M = _int(cfg.M, "M", 2)
    cfg.delta = _num(cfg.delta, "delta", positive=True)
    cfg.times = _numlist(cfg.times, "times", nonneg=True)
    if not isinstance(cfg.k, list) or not cfg.k:
        _fail("k must be a nonempty list of integers")
    cfg.k = [_int(x, "k", 1) for x in cfg.k]
    cfg.lam = _num(cfg.lam, "lam")
    if cfg.lam_ranges is not None:
        if not isinstance(cfg.lam_ranges, list) or not all(isinstance(r, list) and len(r) == 2 for r in cfg.lam_ranges):
            _fail("lam_ranges must be a list of [lo, hi] pairs")
        cfg.lam_ranges = [[_num(a, "lam_ranges"), _num(b, "lam_ranges")] for a, b in cfg.lam_ranges]
        if any(a >= b for a, b in cfg.lam_ranges):
            _fail("each lam_ranges pair needs lo < hi")
    if cfg.grid_points is not None:
        cfg.grid_points = _int(cfg.grid_points, "grid_points", 4)
    cfg.n_r = _int(cfg.n_r, "n_r", 4)
    cfg.n_theta = _int(cfg.n_theta, "n_theta", 8)
    cfg.dt = _num(cfg.dt, "dt", positive=True)
    cfg.M_modes = _int(cfg.M_modes, "M_modes", 8)
    for key in ("reference", "rerun"):
        if not isinstance(getattr(cfg, key), bool):
            _fail(f"{key} must be true or false")
    if cfg.checks is not None:
        if not isinstance(cfg.checks, list):
            _fail("checks must be a list of criterion ids")
        cfg.checks = sorted({_int(c, "checks", 1) for c in cfg.checks})
        if any(c > 15 for c in cfg.checks):
            _fail("criterion ids run from 1 to 15")
    return cfg


def potential_of(cfg: RunConfig) -> TrigPotential:
    return preset(cfg.potential) if isinstance(cfg.potential, str) else parse_potential(cfg.potential)


# --- output helpers ---------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v) + 0.0)  # no negative zero
    return "" if v is None else str(v)


class Outputs:
    def __init__(self, root: Path):
        self.root = root
        self.files: list[str] = []
        root.mkdir(parents=True, exist_ok=True)

    def csv(self, name: str, header, rows):
        with open(self.root / name, "w", newline="", encoding="ascii") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(x) for x in r])
        self.files.append(name)

    def json(self, name: str, obj):
        with open(self.root / name, "w", encoding="ascii") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")
        self.files.append(name)

    def digests(self) -> dict:
        return {n: hashlib.sha256((self.root / n).read_bytes()).hexdigest() for n in sorted(self.files)}


def _pmap(fn, items, threads: int):
    items = list(items)
    if threads == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads or os.cpu_count()) as ex:
        return list(ex.map(fn, items))  # results in submission order


def _truncation(u, eps, cfg, lam_target=0.0):
    from .laxspec import auto_truncation

    return auto_truncation(u, eps, lam_target) if cfg.M == "auto" else cfg.M


# --- commands ---------------------------------------------------------------------


def cmd_spectrum(cfg, out, info, threads):
    from .laxspec import gaps_and_sumrule, spectrum

    u = potential_of(cfg)

    def job(eps):
        M = _truncation(u, eps, cfg)
        return eps, M, spectrum(u, eps, M)

    rows, summary = [], {}
    for eps, M, sp in _pmap(job, cfg.eps, threads):
        info["truncation"][str(eps)] = M
        for n, lam in enumerate(sp.eigenvalues):
            gap = sp.gaps[n] if n < len(sp.gaps) else None
            rows.append((eps, n, lam, gap, sp.thetas[n]))
        try:
            summary[str(eps)] = {"sum_rule_residual": gaps_and_sumrule(sp, u, eps)[1]}
        except LabError as exc:
            summary[str(eps)] = {"sum_rule_residual": None, "note": str(exc)}
    out.csv("spectrum.csv", ["eps", "n", "lambda", "gap", "theta"], rows)
    out.json("spectrum_summary.json", summary)


def cmd_quantize(cfg, out, info, threads):
    from .quantize import residual_report

    u = potential_of(cfg)
    rep = residual_report(u, cfg.eps, cfg.delta)
    rows = [(eps, n, r) for eps in rep.eps_ladder for n, r in rep.small_residuals[eps]]
    out.csv("quantize.csv", ["eps", "n", "residual"], rows)
    out.json("quantize.json", rep.to_json())


def _default_ranges(u, delta):
    lo, hi = value_range(u)
    return [[-hi + delta, -lo - delta], [-lo + delta, -lo + delta + 4.0]]


def cmd_evans(cfg, out, info, threads):
    from .evans import match_bidirectional, scan_zeros
    from .laxspec import spectrum

    u = potential_of(cfg)
    ranges = cfg.lam_ranges or _default_ranges(u, cfg.delta)
    top = max(b for _, b in ranges)
    grid_rows, zero_rows, summary = [], [], {}
    for eps in cfg.eps:
        M = _truncation(u, eps, cfg, top + 2.0)
        info["truncation"][str(eps)] = M
        ev = spectrum(u, eps, M).eigenvalues
        scans = _pmap(lambda r: scan_zeros(u, eps, r, cfg.grid_points, eigenvalues=ev), ranges, threads)
        for rng, scan in zip(ranges, scans):
            for lam, d, e in scan.rows():
                grid_rows.append((eps, lam, d, e, ""))
            for z in scan.zeros:
                zero_rows.append((eps, z.lam, z.abs_det, z.status, z.matched))
            unmatched, missed = match_bidirectional(scan.zero_values(), ev, rng)
            summary[f"eps={eps} range={rng}"] = {"zeros": len(scan.zero_values()), "unmatched": list(unmatched),
                                                 "missed": list(missed), "unresolved": int(scan.unresolved_points),
                                                 "near_integer": list(scan.near_integer)}
    out.csv("evans.csv", ["eps", "lambda", "abs_det", "err_est", "matched_eigenvalue"], grid_rows)
    out.csv("evans_zeros.csv", ["eps", "lambda", "abs_det", "status", "matched_eigenvalue"], zero_rows)
    out.json("evans_summary.json", summary)


def cmd_landscape(cfg, out, info, threads):
    from .landscape import critical_points, level_grid, merge_tree, prune_tree

    u = potential_of(cfg)
    grid = level_grid(u, cfg.lam, cfg.n_r, cfg.n_theta)
    out.csv("level_grid.csv", ["r", "theta", "re_S"], grid.rows())
    tree = merge_tree(u, cfg.lam, grid)
    cps = critical_points(u, cfg.lam)
    doc = {"tree": tree.to_json(), "critical_points": [[float(z.real), float(z.imag), k]
                                                      for z, k in zip(cps.roots, cps.kinds)]}
    try:
        doc["pruning"] = prune_tree(tree).to_json()
    except LabError as exc:
        doc["pruning"] = {"error": type(exc).__name__, "message": str(exc)}
    out.json("tree.json", doc)


def cmd_burgers(cfg, out, info, threads):
    from .burgers import branch_fourier, distribution_profile, weak_limit_fourier

    u = potential_of(cfg)
    prof = distribution_profile(u)
    rows, worst = [], 0.0
    for t in cfg.times:
        a = weak_limit_fourier(prof, t, cfg.k)
        b = branch_fourier(u, t, cfg.k)
        worst = max(worst, float(np.max(np.abs(a - b))))
        for k, x, y in zip(cfg.k, a, b):
            rows.append((t, k, x.real, x.imag, "integral"))
            rows.append((t, k, y.real, y.imag, "branch_sum"))
    out.csv("burgers.csv", ["t", "k", "re", "im", "method"], rows)
    out.json("burgers_summary.json", {"max_method_difference": worst})


def cmd_evolve(cfg, out, info, threads):
    from .evolve import Propagator, fourier_evolution, reference_integrator
    from .laxspec import assemble_lax

    u = potential_of(cfg)
    kmax = max(cfg.k)

    def job(eps):
        M = max(_truncation(u, eps, cfg), 2 * kmax) if cfg.M == "auto" else cfg.M
        prop = Propagator(assemble_lax(u, eps, M).H)
        full = [fourier_evolution(u, eps, t, M // 2, M, prop) for t in cfg.times]
        ref = [reference_integrator(u, eps, t, cfg.dt, cfg.M_modes, kmax) for t in cfg.times] if cfg.reference else []
        return eps, M, full, ref

    rows, summary = [], {}
    for eps, M, full, ref in _pmap(job, cfg.eps, threads):
        info["truncation"][str(eps)] = M
        for st in full:
            rows.extend(r for r in st.rows() if r[2] <= kmax)
            # mass over k <= M/2; tail_abs = |u_hat(M/2)| shows whether that captures it
            summary[f"eps={eps} t={st.t}"] = {"mean": abs(st.coeffs[0]), "mass": st.mass(),
                                              "mass0": st.extras["mass0"], "tail_abs": abs(st.coeffs[-1])}
        for st in ref:
            rows.extend(st.rows())
    out.csv("evolve.csv", ["eps", "t", "k", "re", "im", "method"], rows)
    out.json("evolve_summary.json", summary)


def cmd_weaklimit(cfg, out, info, threads):
    from .burgers import distribution_profile, weak_limit_fourier
    from .evolve import Propagator, toeplitz_matrix, weak_limit_operator

    u = potential_of(cfg)
    M = 512 if cfg.M == "auto" else cfg.M
    info["truncation"]["0"] = M
    prop = Propagator(toeplitz_matrix(u, M))
    kmax = max(cfg.k)
    rows, summary = [], {}
    prof = distribution_profile(u)
    for t in cfg.times:
        st = weak_limit_operator(u, t, kmax, M, prop)
        rows.extend(st.rows())
        try:
            target = weak_limit_fourier(prof, t, cfg.k)
        except LabError as exc:
            summary[str(t)] = {"note": str(exc)}
            continue
        for k, z in zip(cfg.k, target):
            rows.append((0.0, t, k, z.real, z.imag, "burgers_integral"))
        summary[str(t)] = {"max_difference": float(np.max(np.abs(st.coeffs[cfg.k] - target)))}
    out.csv("weaklimit.csv", ["eps", "t", "k", "re", "im", "method"], rows)
    out.json("weaklimit_summary.json", summary)


def _report_payload(results) -> bytes:
    return json.dumps([r.to_json() for r in results], indent=2, sort_keys=True).encode()


def cmd_report(cfg, out, info, threads):
    from .acceptance import CheckResult, run_checks

    ids = [i for i in (cfg.checks or range(1, 16)) if i != 15]
    results = run_checks(ids)
    if cfg.checks is None or 15 in cfg.checks:
        first = _report_payload(results)
        if cfg.rerun:
            second = _report_payload(run_checks(ids))
            same = first == second
            results.append(CheckResult(15, "determinism", same, {
                "sha256_first": hashlib.sha256(first).hexdigest(), "sha256_second": hashlib.sha256(second).hexdigest()}))
        else:
            results.append(CheckResult(15, "determinism", False, {"note": "rerun disabled"}))
    doc = {"criteria": [r.to_json() for r in results],
           "passed": sum(bool(r.passed) for r in results), "total": len(results)}
    out.json("acceptance.json", doc)
    for r in results:
        print(r.line())
    info["all_passed"] = bool(all(r.passed for r in results))


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bolax", description="Benjamin-Ono zero-dispersion laboratory")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--threads", type=int, default=1, help="worker threads, 0 = all cores")
    p.add_argument("--preset", help=f"potential preset ({', '.join(sorted(PRESETS))})")
    p.add_argument("--version", action="version", version=f"bolax {__version__}")
    return p


def run(command: str, cfg: RunConfig, out_dir: Path, threads: int = 1) -> int:
    out = Outputs(out_dir)
    info = {"command": command, "version": __version__, "config": cfg.to_json(), "truncation": {},
            "status": "ok", "threads": threads}
    code = 0
    try:
        HANDLERS[command](cfg, out, info, threads)
    except Exception as exc:  # any failure inside a command is a compute error
        code = 1
        info["status"] = "error"
        info["error"] = {"module": getattr(exc, "module", type(exc).__module__), "type": type(exc).__name__,
                         "message": str(exc)}
    info["files"] = out.digests()
    with open(out_dir / "manifest.json", "w", encoding="ascii") as fh:
        json.dump(_jsonable(info), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return code


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 0:
        print("error: --threads must be >= 0", file=sys.stderr)
        return 2
    try:
        raw = {}
        if args.config is not None:
            try:
                raw = json.loads(args.config.read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigInvalid(f"cannot read config {args.config}: {exc}") from exc
        cfg = resolve_config(args.command, raw, args.preset)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        args.out.mkdir(parents=True, exist_ok=True)
        with open(args.out / "manifest.json", "w", encoding="ascii") as fh:
            json.dump({"command": args.command, "version": __version__, "status": "config_error",
                       "error": {"module": "cli", "type": "ConfigInvalid", "message": str(exc)}},
                      fh, indent=2, sort_keys=True)
            fh.write("\n")
        return 2
    code = run(args.command, cfg, args.out, args.threads)
    if code:
        print(f"compute error, see {args.out / 'manifest.json'}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
