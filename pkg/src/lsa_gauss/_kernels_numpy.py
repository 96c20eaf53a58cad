"""Pure-numpy batch kernels for the SGD error recursions.

Shapes: feature paths ``x`` are ``(B, n, d)``, noise paths ``eps`` are
``(B, n, d)``, initial errors broadcast from ``(d,)``. All kernels step the
recursions forward in k, vectorized over the batch axis, and must stay
semantically identical to the numba twins in ``_kernels_numba``.
"""

from __future__ import annotations

import numpy as np


def sgd_errors(x: np.ndarray, eps: np.ndarray, alpha: float, e0: np.ndarray) -> np.ndarray:
    """Final errors theta_n - theta* of e_k = (I - a x x^T) e_{k-1} - a eps_k."""
    batch, n, _ = x.shape
    e = np.tile(np.asarray(e0, dtype=np.float64), (batch, 1))
    for k in range(n):
        xk = x[:, k, :]
        t = (xk * e).sum(axis=1)
        e = e - alpha * (xk * t[:, None] + eps[:, k, :])
    return e


def sgd_error_history(x: np.ndarray, eps: np.ndarray, alpha: float, e0: np.ndarray) -> np.ndarray:
    """All errors e_0..e_n, shape (B, n+1, d)."""
    batch, n, d = x.shape
    out = np.empty((batch, n + 1, d), dtype=np.float64)
    e = np.tile(np.asarray(e0, dtype=np.float64), (batch, 1))
    out[:, 0, :] = e
    for k in range(n):
        xk = x[:, k, :]
        t = (xk * e).sum(axis=1)
        e = e - alpha * (xk * t[:, None] + eps[:, k, :])
        out[:, k + 1, :] = e
    return out


def linear_proxy_paths(eps: np.ndarray, alpha: float, phi: np.ndarray) -> np.ndarray:
    """Final J^(0)_n of J_k = (I - a Phi) J_{k-1} - a eps_k from J_0 = 0."""
    batch, n, d = eps.shape
    j = np.zeros((batch, d), dtype=np.float64)
    for k in range(n):
        j = j - alpha * (j @ phi + eps[:, k, :])
    return j


def ladder_paths(
    x: np.ndarray,
    eps: np.ndarray,
    alpha: float,
    phi: np.ndarray,
    e0: np.ndarray,
    depth: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """One shared path drives the error, transient, J^(0..depth) and H^(depth).

    Returns (final_error, transient, j_terms, h_tail) with j_terms of shape
    (depth+1, B, d). Every recursion at step k consumes the pre-update values
    of the lower rungs, which is what makes the exact telescoping identity
    final = transient + sum_l J^(l) + H^(depth) hold path by path.
    """
    batch, n, d = x.shape
    e = np.tile(np.asarray(e0, dtype=np.float64), (batch, 1))
    tr = e.copy()
    j = np.zeros((depth + 1, batch, d), dtype=np.float64)
    h = np.zeros((batch, d), dtype=np.float64)
    for k in range(n):
        xk = x[:, k, :]
        ek = eps[:, k, :]
        phi_j = j @ phi
        xdot_j = (j * xk[None, :, :]).sum(axis=2)

        t = (xk * e).sum(axis=1)
        e = e - alpha * (xk * t[:, None] + ek)

        t = (xk * tr).sum(axis=1)
        tr = tr - alpha * (xk * t[:, None])

        j_new = np.empty_like(j)
        j_new[0] = j[0] - alpha * (phi_j[0] + ek)
        for lev in range(1, depth + 1):
            j_new[lev] = j[lev] - alpha * phi_j[lev] - alpha * (
                xk * xdot_j[lev - 1][:, None] - phi_j[lev - 1]
            )

        t = (xk * h).sum(axis=1)
        h = h - alpha * (xk * t[:, None]) - alpha * (
            xk * xdot_j[depth][:, None] - phi_j[depth]
        )
        j = j_new
    return e, tr, j, h
