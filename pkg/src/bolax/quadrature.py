"""Small quadrature kit: breadth-first adaptive Simpson and Gauss-Legendre panels."""

from __future__ import annotations

import numpy as np

from .errors import QuadratureNoConvergence


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-9, max_intervals: int = 2**20, initial: int = 16):
    """Integrate ``f`` over [a, b] to absolute tolerance ``tol``.

    ``f`` maps a 1-D array of nodes to an array whose first axis matches the
    nodes (extra axes are integrated componentwise, complex allowed).  All
    active intervals are refined together, so the cost is a handful of
    vectorized calls.  Returns (value, error_estimate).
    """
    if a == b:
        probe = np.asarray(f(np.array([a])))
        return np.zeros(probe.shape[1:], dtype=probe.dtype), 0.0
    edges = np.linspace(a, b, initial + 1)
    lo, hi = edges[:-1], edges[1:]
    mid = 0.5 * (lo + hi)
    pts = np.concatenate([lo, mid, hi])
    vals = np.asarray(f(pts))
    n = len(lo)
    flo, fmid, fhi = vals[:n], vals[n : 2 * n], vals[2 * n :]
    total = 0.0
    err_total = 0.0
    span = b - a
    count = n
    while n:
        h = hi - lo
        shape = (-1,) + (1,) * (flo.ndim - 1)
        hb = h.reshape(shape)
        whole = hb / 6.0 * (flo + 4.0 * fmid + fhi)
        ql, qr = 0.5 * (lo + mid), 0.5 * (mid + hi)
        fv = np.asarray(f(np.concatenate([ql, qr])))
        fql, fqr = fv[:n], fv[n:]
        left = hb / 12.0 * (flo + 4.0 * fql + fmid)
        right = hb / 12.0 * (fmid + 4.0 * fqr + fhi)
        diff = left + right - whole
        err = np.abs(diff).reshape(n, -1).max(axis=1) / 15.0
        ok = err <= tol * h / span
        if np.any(ok):
            total = total + np.sum((left + right + diff / 15.0)[ok], axis=0)
            err_total += float(np.sum(err[ok]))
        bad = ~ok
        if not np.any(bad):
            break
        count += int(np.count_nonzero(bad))
        if count > max_intervals:
            raise QuadratureNoConvergence(f"adaptive Simpson exceeded {max_intervals} intervals")
        lo_b, mid_b, hi_b = lo[bad], mid[bad], hi[bad]
        lo = np.concatenate([lo_b, mid_b])
        hi = np.concatenate([mid_b, hi_b])
        mid = np.concatenate([ql[bad], qr[bad]])
        flo = np.concatenate([flo[bad], fmid[bad]])
        fhi = np.concatenate([fmid[bad], fhi[bad]])
        fmid = np.concatenate([fql[bad], fqr[bad]])
        n = len(lo)
    return total, err_total


def smoothstep_integral(f, a: float, b: float, tol: float = 1e-9, **kw):
    """Integrate f over [a, b] after x = a + (b - a)(3s^2 - 2s^3).

    The Jacobian vanishes to first order at both ends, which turns
    square-root endpoint behaviour into a smooth integrand.
    """
    w = b - a

    def g(s):
        x = a + w * s * s * (3.0 - 2.0 * s)
        jac = 6.0 * w * s * (1.0 - s)
        v = np.asarray(f(x))
        return v * jac.reshape((-1,) + (1,) * (v.ndim - 1))

    return adaptive_simpson(g, 0.0, 1.0, tol, **kw)


def gauss_panels(a: float, b: float, panels: int, order: int = 20):
    """Nodes and weights of composite Gauss-Legendre on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mids = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mids[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights
