"""Batched connection/curvature kernels.

Two interchangeable implementations are provided: explicit loops compiled
with numba, and a pure-numpy einsum path.  The numba path is used when numba
imports and ``WARPGEOM_DISABLE_NUMBA`` is unset (or ``0``).

Array layout for a batch of N points in dimension n::

    g, ginv   (N, n, n)
    dg        (N, n, n, n)        dg[:, m, i, j]      = d_m g_ij
    d2g       (N, n, n, n, n)     d2g[:, m, l, i, j]  = d_m d_l g_ij
    gamma     (N, n, n, n)        gamma[:, k, i, j]   = Gamma^k_ij
    dgamma    (N, n, n, n, n)     dgamma[:, m, k, i, j] = d_m Gamma^k_ij
"""

from __future__ import annotations

import os

import numpy as np


def _numba_requested() -> bool:
    return os.environ.get("WARPGEOM_DISABLE_NUMBA", "0").strip().lower() in ("", "0", "false", "no")


# --------------------------------------------------------------------------
# numpy
# --------------------------------------------------------------------------


def _first_kind_np(dg):
    # Gamma_{l,ij} = 1/2 (d_i g_jl + d_j g_il - d_l g_ij), stored [N, l, i, j]
    a = np.transpose(dg, (0, 3, 1, 2))  # [N, l, i, j] = d_i g_jl
    b = np.transpose(dg, (0, 3, 2, 1))  # [N, l, i, j] = d_j g_il
    return 0.5 * (a + b - dg)


def christoffel_np(ginv, dg):
    return np.einsum("nkl,nlij->nkij", ginv, _first_kind_np(dg))


def christoffel_grad_np(ginv, dg, d2g):
    first = _first_kind_np(dg)
    # d_m Gamma_{l,ij}
    a = np.transpose(d2g, (0, 1, 4, 2, 3))  # [m, l, i, j] = d_m d_i g_jl
    b = np.transpose(d2g, (0, 1, 4, 3, 2))  # [m, l, i, j] = d_m d_j g_il
    dfirst = 0.5 * (a + b - d2g)
    dginv = -np.einsum("nka,nmab,nbl->nmkl", ginv, dg, ginv)
    return (np.einsum("nmkl,nlij->nmkij", dginv, first)
            + np.einsum("nkl,nmlij->nmkij", ginv, dfirst))


def ricci_np(gamma, dgamma):
    term1 = np.einsum("nkkij->nij", dgamma)
    term2 = np.einsum("nikkj->nij", dgamma)
    term3 = np.einsum("nkkl,nlij->nij", gamma, gamma)
    term4 = np.einsum("nkil,nlkj->nij", gamma, gamma)
    return term1 - term2 + term3 - term4


# --------------------------------------------------------------------------
# numba
# --------------------------------------------------------------------------

try:
    import numba as _nb
except ImportError:  # pragma: no cover - numba is a declared dependency
    _nb = None


if _nb is not None:

    @_nb.njit(cache=True)
    def christoffel_nb(ginv, dg):
        N, n = ginv.shape[0], ginv.shape[1]
        out = np.zeros((N, n, n, n))
        first = np.empty(n)
        for p in range(N):
            for i in range(n):
                for j in range(i, n):
                    for l in range(n):
                        first[l] = 0.5 * (dg[p, i, j, l] + dg[p, j, i, l] - dg[p, l, i, j])
                    for k in range(n):
                        s = 0.0
                        for l in range(n):
                            s += ginv[p, k, l] * first[l]
                        out[p, k, i, j] = s
                        out[p, k, j, i] = s
        return out

    @_nb.njit(cache=True)
    def christoffel_grad_nb(ginv, dg, d2g):
        N, n = ginv.shape[0], ginv.shape[1]
        out = np.zeros((N, n, n, n, n))
        first = np.empty((n, n, n))
        dginv = np.empty((n, n))
        for p in range(N):
            for l in range(n):
                for i in range(n):
                    for j in range(n):
                        first[l, i, j] = 0.5 * (dg[p, i, j, l] + dg[p, j, i, l] - dg[p, l, i, j])
            for m in range(n):
                # d_m g^{kl} = -g^{ka} d_m g_ab g^{bl}
                for k in range(n):
                    for l in range(n):
                        s = 0.0
                        for a in range(n):
                            for b in range(n):
                                s += ginv[p, k, a] * dg[p, m, a, b] * ginv[p, b, l]
                        dginv[k, l] = -s
                for i in range(n):
                    for j in range(i, n):
                        for k in range(n):
                            s = 0.0
                            for l in range(n):
                                dfirst = 0.5 * (d2g[p, m, i, j, l] + d2g[p, m, j, i, l]
                                                - d2g[p, m, l, i, j])
                                s += dginv[k, l] * first[l, i, j] + ginv[p, k, l] * dfirst
                            out[p, m, k, i, j] = s
                            out[p, m, k, j, i] = s
        return out

    @_nb.njit(cache=True)
    def ricci_nb(gamma, dgamma):
        N, n = gamma.shape[0], gamma.shape[1]
        out = np.zeros((N, n, n))
        for p in range(N):
            for i in range(n):
                for j in range(n):
                    s = 0.0
                    for k in range(n):
                        s += dgamma[p, k, k, i, j] - dgamma[p, i, k, k, j]
                        for l in range(n):
                            s += gamma[p, k, k, l] * gamma[p, l, i, j] - gamma[p, k, i, l] * gamma[p, l, k, j]
                    out[p, i, j] = s
        return out

else:  # pragma: no cover
    christoffel_nb = christoffel_grad_nb = ricci_nb = None


NUMBA_AVAILABLE = _nb is not None
USE_NUMBA = NUMBA_AVAILABLE and _numba_requested()
BACKEND = "numba" if USE_NUMBA else "numpy"


def _contig(*arrays):
    return tuple(np.ascontiguousarray(a, dtype=np.float64) for a in arrays)


def christoffel(ginv, dg):
    if USE_NUMBA:
        return christoffel_nb(*_contig(ginv, dg))
    return christoffel_np(ginv, dg)


def christoffel_grad(ginv, dg, d2g):
    if USE_NUMBA:
        return christoffel_grad_nb(*_contig(ginv, dg, d2g))
    return christoffel_grad_np(ginv, dg, d2g)


def ricci(gamma, dgamma):
    if USE_NUMBA:
        return ricci_nb(*_contig(gamma, dgamma))
    return ricci_np(gamma, dgamma)
