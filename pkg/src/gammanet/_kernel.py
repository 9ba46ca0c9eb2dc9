"""Compiled FISTA loop.

Matrix-vector products are explicit loops so the summation order, and hence
every result bit, is independent of BLAS threading and worker count. The
design is passed twice: ``A`` C-ordered for ``A.T @ r`` and ``AF``
Fortran-ordered for ``A @ x``, so both sweeps run over contiguous memory.
"""

import math

import numpy as np
from numba import njit

OK = 0
LINE_SEARCH_FAILED = 1
BAD_START = 2


@njit(cache=True)
def _matvec(A, x, out):
    # Column sweep: each out[i] still sums its terms in column order 0..p-1.
    m, p = A.shape
    for i in range(m):
        out[i] = 0.0
    for j in range(p):
        xj = x[j]
        for i in range(m):
            out[i] += A[i, j] * xj


@njit(cache=True)
def _grad_bound(A, AF, b, k, fro2, floor, x, eta, resid, g):
    _matvec(AF, x, eta)
    return _grad_bound_eta(A, b, k, fro2, floor, eta, resid, g)


@njit(cache=True)
def _grad_bound_eta(A, b, k, fro2, floor, eta, resid, g):
    """Gradient into ``g`` and the floored curvature bound, given ``eta = A @ x``."""
    m, p = A.shape
    ss = 0.0
    for i in range(m):
        r = 1.0 - b[i] * math.exp(-eta[i])
        resid[i] = r
        ss += r * r
    for j in range(p):
        g[j] = 0.0
    for i in range(m):
        r = resid[i]
        for j in range(p):
            g[j] += A[i, j] * r
    finite = True
    for j in range(p):
        g[j] = k * g[j]
        if not math.isfinite(g[j]):
            finite = False
    raw = fro2 * k * k * ss
    if not finite or not math.isfinite(raw):
        return math.inf
    return max(raw, floor)


@njit(cache=True)
def _prox_step(lam, alpha, w, t, z, g, out):
    # out = prox_{t R}(z - t g)
    thr = t * (lam * alpha)
    shr = t * (lam * (1.0 - alpha))
    for j in range(z.shape[0]):
        v = z[j] - t * g[j]
        a = abs(v) - thr * w[j]
        if a > 0.0:
            out[j] = math.copysign(a, v) / (1.0 + shr * w[j])
        else:
            out[j] = 0.0


@njit(cache=True)
def _evaluate(A, AF, b, k, const, fro2, floor, lam, alpha, w, x, eta, resid, g):
    """Objective at ``x``; also fills ``g`` with the gradient and returns the bound.

    Returns ``(H, L)``; ``H`` is ``inf`` when the likelihood overflows.
    """
    m, p = A.shape
    _matvec(AF, x, eta)
    acc = 0.0
    ss = 0.0
    for i in range(m):
        e = b[i] * math.exp(-eta[i])
        acc += eta[i] + e
        r = 1.0 - e
        resid[i] = r
        ss += r * r
    val = const + k * acc
    if not math.isfinite(val):
        return math.inf, math.inf
    for j in range(p):
        g[j] = 0.0
    for i in range(m):
        r = resid[i]
        for j in range(p):
            g[j] += A[i, j] * r
    l1 = 0.0
    l2 = 0.0
    for j in range(p):
        g[j] = k * g[j]
        l1 += w[j] * abs(x[j])
        l2 += w[j] * x[j] * x[j]
    raw = fro2 * k * k * ss
    if not math.isfinite(raw):
        return math.inf, math.inf
    return val + lam * (alpha * l1 + 0.5 * (1.0 - alpha) * l2), max(raw, floor)


@njit(cache=True)
def _prox_residual(lam, alpha, w, x, g, L, tmp):
    _prox_step(lam, alpha, w, 1.0 / L, x, g, tmp)
    r = 0.0
    for j in range(x.shape[0]):
        d = abs(x[j] - tmp[j])
        if d > r:
            r = d
    return r


@njit(cache=True)
def fista(A, AF, b, k, const, fro2, floor, lam, alpha, w, x0,
          tol, max_iter, grow, ls_max, descent_tol):
    m, p = A.shape
    eta_x = np.empty(m)
    eta_new = np.empty(m)
    eta_om = np.empty(m)
    resid = np.empty(m)
    g_om = np.empty(p)
    g_x = np.empty(p)
    g_new = np.empty(p)
    tmp = np.empty(p)
    x = x0.copy()
    x_new = np.empty(p)
    omega = x0.copy()
    trace = np.empty(max_iter + 1)
    s_trace = np.empty(max_iter + 1)
    # Stationarity is judged on the gradient mapping L * (x - prox(x - g/L)) per unit of k*m.
    gtol_abs = tol * k * m

    H, L_x = _evaluate(A, AF, b, k, const, fro2, floor, lam, alpha, w, x, eta_x, resid, g_x)
    trace[0] = H
    s_trace[0] = 1.0
    if not math.isfinite(H):
        return x, trace[:1], s_trace[:1], 0, False, 0, math.inf, math.inf, BAD_START
    res = _prox_residual(lam, alpha, w, x, g_x, L_x, tmp)
    if res * L_x <= gtol_abs:
        return x, trace[:1], s_trace[:1], 0, True, 0, res, res * L_x / (k * m), OK

    s = 1.0
    activations = 0
    it = 0
    converged = False
    omega_is_x = True
    for it in range(1, max_iter + 1):
        if omega_is_x:
            g_om[:] = g_x
            L = L_x
        else:
            L = _grad_bound_eta(A, b, k, fro2, floor, eta_om, resid, g_om)
            if not math.isfinite(L):
                # Momentum point left the finite region: restart from the iterate.
                omega[:] = x
                g_om[:] = g_x
                L = L_x
                s = 1.0
                omega_is_x = True
        t = 1.0 / L
        _prox_step(lam, alpha, w, t, omega, g_om, x_new)
        H_new, L_new = _evaluate(A, AF, b, k, const, fro2, floor, lam, alpha, w, x_new, eta_new,
                                 resid, g_new)
        slack = descent_tol * max(1.0, abs(H))
        n_back = 0
        while not (H_new <= H + slack):
            if n_back >= ls_max:
                return (x, trace[:it], s_trace[:it], it, False, activations, res,
                        res * L_x / (k * m), LINE_SEARCH_FAILED)
            n_back += 1
            activations += 1
            if not omega_is_x:
                omega[:] = x
                g_om[:] = g_x
                L = L_x
                s = 1.0
                omega_is_x = True
            L *= grow
            t = 1.0 / L
            _prox_step(lam, alpha, w, t, omega, g_om, x_new)
            H_new, L_new = _evaluate(A, AF, b, k, const, fro2, floor, lam, alpha, w, x_new,
                                     eta_new, resid, g_new)

        s_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * s * s))
        beta = (s - 1.0) / s_new
        for j in range(p):
            omega[j] = x_new[j] + beta * (x_new[j] - x[j])
            x[j] = x_new[j]
            g_x[j] = g_new[j]
        # A @ omega by linearity, saving a matrix-vector product.
        for i in range(m):
            eta_om[i] = eta_new[i] + beta * (eta_new[i] - eta_x[i])
            eta_x[i] = eta_new[i]
        omega_is_x = beta == 0.0
        H = H_new
        L_x = L_new
        s = s_new
        trace[it] = H
        s_trace[it] = s
        res = _prox_residual(lam, alpha, w, x, g_x, L_x, tmp)
        if res * L_x <= gtol_abs:
            converged = True
            break
    return (x, trace[:it + 1], s_trace[:it + 1], it, converged, activations, res,
            res * L_x / (k * m), OK)


@njit(cache=True)
def gradient(A, b, k, x):
    """Same arithmetic as the solver's gradient, for callers needing bit agreement."""
    A = np.ascontiguousarray(A)
    AF = np.asfortranarray(A)
    m, p = A.shape
    eta = np.empty(m)
    resid = np.empty(m)
    g = np.empty(p)
    _grad_bound(A, AF, b, k, 1.0, 0.0, x, eta, resid, g)
    return g
