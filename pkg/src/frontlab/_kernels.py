"""Compiled explicit Euler kernels.

Reaction modes: 0 is a(x) f0(u), 1 is f0(u) + M (u - 1/2)(p(x) - u) on (1/2, p(x)).
Boundary codes: 0 reflecting (zero flux), 1 zero Dirichlet, 2 frozen Dirichlet.
"""
import numba
import numpy as np

NEUMANN, DIRICHLET_ZERO, DIRICHLET_FROZEN = 0, 1, 2


@numba.njit(cache=True, fastmath=True, inline="always")
def react(v, a, p, M, table, nt, mode, signed, K):
    r = 0.0
    if v > 0.0 and v < 1.0:
        x = v * nt
        m = int(x)
        if m >= nt:
            m = nt - 1
        base = table[m] + (table[m + 1] - table[m]) * (x - m)
        if mode == 0:
            r = a * base
        else:
            r = base
            if v > 0.5 and v < p:
                r += M * (v - 0.5) * (p - v)
    elif signed:
        if v >= 1.0:
            r = -K * (v - 1.0)
        else:
            r = -K * v
    return r


@numba.njit(cache=True, fastmath=True)
def advance_line(u, out, a, p, M, table, mode, signed, K, dt, h, bc, nsteps):
    n = u.shape[0]
    nt = table.shape[0] - 1
    idx2 = 1.0 / (h * h)
    for _ in range(nsteps):
        for i in range(1, n - 1):
            c = u[i]
            out[i] = c + dt * ((u[i - 1] + u[i + 1] - 2.0 * c) * idx2
                               + react(c, a[i], p[i], M, table, nt, mode, signed, K))
        for i in (0, n - 1):
            if bc == NEUMANN:
                j = 1 if i == 0 else n - 2
                c = u[i]
                out[i] = c + dt * (2.0 * (u[j] - c) * idx2
                                   + react(c, a[i], p[i], M, table, nt, mode, signed, K))
            elif bc == DIRICHLET_ZERO:
                out[i] = 0.0
            else:
                out[i] = u[i]
        u, out = out, u
    return u


@numba.njit(cache=True, fastmath=True)
def _plane_edge(u, out, a, p, M, table, nt, mode, signed, K, dt, idx2, bc, i, j):
    nx, ny = u.shape
    if bc == NEUMANN:
        im = i - 1 if i > 0 else 1
        ip = i + 1 if i < nx - 1 else nx - 2
        jm = j - 1 if j > 0 else 1
        jp = j + 1 if j < ny - 1 else ny - 2
        c = u[i, j]
        lap = (u[im, j] + u[ip, j] + u[i, jm] + u[i, jp] - 4.0 * c) * idx2
        out[i, j] = c + dt * (lap + react(c, a[i, j], p[i, j], M, table, nt, mode, signed, K))
    elif bc == DIRICHLET_ZERO:
        out[i, j] = 0.0
    else:
        out[i, j] = u[i, j]


@numba.njit(cache=True, fastmath=True)
def advance_plane(u, out, a, p, M, table, mode, signed, K, dt, h, bc, nsteps):
    nx, ny = u.shape
    nt = table.shape[0] - 1
    idx2 = 1.0 / (h * h)
    for _ in range(nsteps):
        for i in range(1, nx - 1):
            for j in range(1, ny - 1):
                c = u[i, j]
                lap = (u[i - 1, j] + u[i + 1, j] + u[i, j - 1] + u[i, j + 1] - 4.0 * c) * idx2
                out[i, j] = c + dt * (lap + react(c, a[i, j], p[i, j], M, table, nt, mode, signed, K))
        for i in range(nx):
            _plane_edge(u, out, a, p, M, table, nt, mode, signed, K, dt, idx2, bc, i, 0)
            _plane_edge(u, out, a, p, M, table, nt, mode, signed, K, dt, idx2, bc, i, ny - 1)
        for j in range(1, ny - 1):
            _plane_edge(u, out, a, p, M, table, nt, mode, signed, K, dt, idx2, bc, 0, j)
            _plane_edge(u, out, a, p, M, table, nt, mode, signed, K, dt, idx2, bc, nx - 1, j)
        u, out = out, u
    return u


@numba.njit(cache=True, fastmath=True)
def advance_cylinder(u, out, a, p, M, table, mode, signed, K, dt, h, bc, d_eff, nsteps):
    """Axisymmetric Laplacian u_xx + u_rr + (d_eff - 2) u_r / r; axis at column 0."""
    nx, nr = u.shape
    nt = table.shape[0] - 1
    idx2 = 1.0 / (h * h)
    cp = np.empty(nr)
    cm = np.empty(nr)
    for j in range(1, nr):
        cp[j] = (1.0 + (d_eff - 2.0) / (2.0 * j)) * idx2
        cm[j] = (1.0 - (d_eff - 2.0) / (2.0 * j)) * idx2
    axis = 2.0 * (d_eff - 1.0) * idx2
    for _ in range(nsteps):
        for i in range(nx):
            edge_x = i == 0 or i == nx - 1
            if edge_x and bc != NEUMANN:
                for j in range(nr):
                    out[i, j] = 0.0 if bc == DIRICHLET_ZERO else u[i, j]
                continue
            im = i - 1 if i > 0 else 1
            ip = i + 1 if i < nx - 1 else nx - 2
            c = u[i, 0]
            lap = (u[im, 0] + u[ip, 0] - 2.0 * c) * idx2 + axis * (u[i, 1] - c)
            out[i, 0] = c + dt * (lap + react(c, a[i, 0], p[i, 0], M, table, nt, mode, signed, K))
            for j in range(1, nr - 1):
                c = u[i, j]
                lap = ((u[im, j] + u[ip, j] - 2.0 * c) * idx2
                       + cp[j] * (u[i, j + 1] - c) + cm[j] * (u[i, j - 1] - c))
                out[i, j] = c + dt * (lap + react(c, a[i, j], p[i, j], M, table, nt, mode, signed, K))
            j = nr - 1
            if bc == NEUMANN:
                c = u[i, j]
                lap = (u[im, j] + u[ip, j] - 2.0 * c) * idx2 + 2.0 * (u[i, j - 1] - c) * idx2
                out[i, j] = c + dt * (lap + react(c, a[i, j], p[i, j], M, table, nt, mode, signed, K))
            elif bc == DIRICHLET_ZERO:
                out[i, j] = 0.0
            else:
                out[i, j] = u[i, j]
        u, out = out, u
    return u
