"""Compiled inner loops: tridiagonal factor/solve and period sweeps.

Every step matrix is ``I + theta*dt*(A_j - shift)`` with ``A_j`` tridiagonal,
stored as ``(lower, diag, upper)`` arrays of shape ``(nt+1, n)``; row ``j``
holds the operator at ``t_j``.  ``lower[:, 0]`` and ``upper[:, -1]`` are unused.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def factor_levels(lower, diag, upper, dt, theta, shift):
    nt1, n = diag.shape
    cp = np.zeros((nt1, n))
    ip = np.zeros((nt1, n))
    lo = np.zeros((nt1, n))
    minpiv = np.inf
    s = theta * dt
    for j in range(1, nt1):
        prev = 0.0
        for k in range(n):
            l = s * lower[j, k] if k > 0 else 0.0
            d = 1.0 + s * (diag[j, k] - shift)
            u = s * upper[j, k] if k < n - 1 else 0.0
            piv = d - l * prev
            if piv < minpiv:
                minpiv = piv
            if piv == 0.0:
                return cp, ip, lo, 0.0
            ip[j, k] = 1.0 / piv
            prev = u / piv
            cp[j, k] = prev
            lo[j, k] = l
    return cp, ip, lo, minpiv


@njit(cache=True, nogil=True)
def _solve_level(cp, ip, lo, j, r):
    n, m = r.shape
    for c in range(m):
        r[0, c] = r[0, c] * ip[j, 0]
        for k in range(1, n):
            r[k, c] = (r[k, c] - lo[j, k] * r[k - 1, c]) * ip[j, k]
        for k in range(n - 2, -1, -1):
            r[k, c] -= cp[j, k] * r[k + 1, c]


@njit(cache=True, nogil=True)
def _explicit(lower, diag, upper, j, coef, shift, v, out):
    # out = v - coef * (A_j - shift) v
    n, m = v.shape
    for c in range(m):
        for k in range(n):
            acc = (diag[j, k] - shift) * v[k, c]
            if k > 0:
                acc += lower[j, k] * v[k - 1, c]
            if k < n - 1:
                acc += upper[j, k] * v[k + 1, c]
            out[k, c] = v[k, c] - coef * acc


@njit(cache=True, nogil=True)
def propagate(cp, ip, lo, lower, diag, upper, dt, theta, shift, v0, forcing, record):
    """Advance the block ``v0`` (n, m) over one period.

    ``forcing`` is either empty or ``(nt+1, n)``; the same forcing is added to
    every column.  With ``record`` the whole trajectory ``(nt+1, n, m)`` is kept.
    """
    nt1, n = diag.shape
    m = v0.shape[1]
    v = v0.copy()
    r = np.empty_like(v)
    traj = np.zeros((nt1 if record else 1, n, m))
    if record:
        traj[0] = v
    has_f = forcing.shape[0] == nt1
    for j in range(1, nt1):
        if theta < 1.0:
            _explicit(lower, diag, upper, j - 1, (1.0 - theta) * dt, shift, v, r)
        else:
            r[:, :] = v
        if has_f:
            for k in range(n):
                fk = dt * (theta * forcing[j, k] + (1.0 - theta) * forcing[j - 1, k])
                for c in range(m):
                    r[k, c] += fk
        _solve_level(cp, ip, lo, j, r)
        v[:, :] = r
        if record:
            traj[j] = v
    return v, traj


@njit(cache=True, nogil=True)
def logistic_period(lower, diag, upper, a, p, dt, u0, newton_tol, newton_max):
    """One implicit-Euler period of ``u_t + A u = -a |u|^p u``.

    Each step solves ``(I + dt A_j) w + dt a_j |w|^p w = u_prev`` by Newton's
    method with tridiagonal Jacobians.  Returns the trajectory and the worst
    Newton residual (negative when Newton failed).
    """
    nt1, n = diag.shape
    traj = np.zeros((nt1, n))
    traj[0] = u0
    w = u0.copy()
    g = np.empty(n)
    jd = np.empty(n)
    cpv = np.empty(n)
    worst = 0.0
    for j in range(1, nt1):
        prev = traj[j - 1]
        ok = False
        for it in range(newton_max):
            gmax = 0.0
            for k in range(n):
                wk = w[k]
                aw = abs(wk) ** p
                acc = (1.0 + dt * diag[j, k]) * wk + dt * a[j, k] * aw * wk - prev[k]
                if k > 0:
                    acc += dt * lower[j, k] * w[k - 1]
                if k < n - 1:
                    acc += dt * upper[j, k] * w[k + 1]
                g[k] = -acc
                jd[k] = 1.0 + dt * diag[j, k] + dt * a[j, k] * (p + 1.0) * aw
                if abs(acc) > gmax:
                    gmax = abs(acc)
            # Thomas on the Jacobian
            piv = jd[0]
            cpv[0] = (dt * upper[j, 0] / piv) if n > 1 else 0.0
            g[0] = g[0] / piv
            for k in range(1, n):
                l = dt * lower[j, k]
                piv = jd[k] - l * cpv[k - 1]
                cpv[k] = (dt * upper[j, k] / piv) if k < n - 1 else 0.0
                g[k] = (g[k] - l * g[k - 1]) / piv
            for k in range(n - 2, -1, -1):
                g[k] -= cpv[k] * g[k + 1]
            dmax = 0.0
            wmax = 0.0
            for k in range(n):
                w[k] += g[k]
                if abs(g[k]) > dmax:
                    dmax = abs(g[k])
                if abs(w[k]) > wmax:
                    wmax = abs(w[k])
            if dmax <= newton_tol * (1.0 + wmax):
                ok = True
                if gmax > worst:
                    worst = gmax
                break
        if not ok:
            traj[j] = w
            return traj, -1.0
        traj[j] = w
    return traj, worst
