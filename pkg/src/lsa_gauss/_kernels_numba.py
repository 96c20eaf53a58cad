"""Numba twins of the batch kernels in ``_kernels_numpy``.

Same signatures, same recursions, loops over replicas in parallel. Random
inputs are drawn by the caller, so the backends are interchangeable.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(cache=True, parallel=True)
def sgd_errors(x, eps, alpha, e0):
    batch, n, d = x.shape
    out = np.empty((batch, d), dtype=np.float64)
    for b in prange(batch):
        e = e0.copy()
        for k in range(n):
            t = 0.0
            for j in range(d):
                t += x[b, k, j] * e[j]
            for j in range(d):
                e[j] = e[j] - alpha * (x[b, k, j] * t + eps[b, k, j])
        out[b] = e
    return out


@njit(cache=True, parallel=True)
def sgd_error_history(x, eps, alpha, e0):
    batch, n, d = x.shape
    out = np.empty((batch, n + 1, d), dtype=np.float64)
    for b in prange(batch):
        e = e0.copy()
        out[b, 0] = e
        for k in range(n):
            t = 0.0
            for j in range(d):
                t += x[b, k, j] * e[j]
            for j in range(d):
                e[j] = e[j] - alpha * (x[b, k, j] * t + eps[b, k, j])
            out[b, k + 1] = e
    return out


@njit(cache=True, parallel=True)
def linear_proxy_paths(eps, alpha, phi):
    batch, n, d = eps.shape
    out = np.empty((batch, d), dtype=np.float64)
    for b in prange(batch):
        jcur = np.zeros(d, dtype=np.float64)
        jnew = np.empty(d, dtype=np.float64)
        for k in range(n):
            for j in range(d):
                pj = 0.0
                for m in range(d):
                    pj += jcur[m] * phi[m, j]
                jnew[j] = jcur[j] - alpha * (pj + eps[b, k, j])
            for j in range(d):
                jcur[j] = jnew[j]
        out[b] = jcur
    return out


@njit(cache=True, parallel=True)
def ladder_paths(x, eps, alpha, phi, e0, depth):
    batch, n, d = x.shape
    final = np.empty((batch, d), dtype=np.float64)
    transient = np.empty((batch, d), dtype=np.float64)
    j_terms = np.empty((depth + 1, batch, d), dtype=np.float64)
    h_tail = np.empty((batch, d), dtype=np.float64)
    for b in prange(batch):
        e = e0.copy()
        tr = e0.copy()
        jc = np.zeros((depth + 1, d), dtype=np.float64)
        jn = np.empty((depth + 1, d), dtype=np.float64)
        phi_j = np.empty((depth + 1, d), dtype=np.float64)
        xdot_j = np.empty(depth + 1, dtype=np.float64)
        h = np.zeros(d, dtype=np.float64)
        for k in range(n):
            for lev in range(depth + 1):
                s = 0.0
                for j in range(d):
                    pj = 0.0
                    for m in range(d):
                        pj += jc[lev, m] * phi[m, j]
                    phi_j[lev, j] = pj
                    s += x[b, k, j] * jc[lev, j]
                xdot_j[lev] = s

            t = 0.0
            for j in range(d):
                t += x[b, k, j] * e[j]
            for j in range(d):
                e[j] = e[j] - alpha * (x[b, k, j] * t + eps[b, k, j])

            t = 0.0
            for j in range(d):
                t += x[b, k, j] * tr[j]
            for j in range(d):
                tr[j] = tr[j] - alpha * (x[b, k, j] * t)

            for j in range(d):
                jn[0, j] = jc[0, j] - alpha * (phi_j[0, j] + eps[b, k, j])
            for lev in range(1, depth + 1):
                for j in range(d):
                    jn[lev, j] = jc[lev, j] - alpha * phi_j[lev, j] - alpha * (
                        x[b, k, j] * xdot_j[lev - 1] - phi_j[lev - 1, j]
                    )

            t = 0.0
            for j in range(d):
                t += x[b, k, j] * h[j]
            for j in range(d):
                h[j] = h[j] - alpha * (x[b, k, j] * t) - alpha * (
                    x[b, k, j] * xdot_j[depth] - phi_j[depth, j]
                )
            for lev in range(depth + 1):
                for j in range(d):
                    jc[lev, j] = jn[lev, j]
        final[b] = e
        transient[b] = tr
        for lev in range(depth + 1):
            j_terms[lev, b] = jc[lev]
        h_tail[b] = h
    return final, transient, j_terms, h_tail
