"""Numba-compiled versions of the kernels in ``_kernels`` (same signatures)."""
import numba
import numpy as np

njit = numba.njit(cache=True, nogil=True)


@njit
def rot(psi, n, t, c, cs, sn):
    dim = psi.shape[0]
    st = 1 << (n - 1 - t)
    cm = 0 if c < 0 else 1 << (n - 1 - c)
    for i in range(dim):
        if i & st or (cm and not i & cm):
            continue
        j = i | st
        a = psi[i]
        b = psi[j]
        psi[i] = cs * a - sn * b
        psi[j] = sn * a + cs * b


@njit
def apply(psi, n, kind, t, c, angle):
    dim = psi.shape[0]
    st = 1 << (n - 1 - t)
    if kind == 0:
        for i in range(dim):
            if i & st:
                continue
            a = psi[i]
            b = psi[i | st]
            psi[i] = (a + b) * 0.7071067811865476
            psi[i | st] = (a - b) * 0.7071067811865476
    elif kind == 1:
        rot(psi, n, t, -1, np.cos(0.5 * angle), np.sin(0.5 * angle))
    elif kind == 3:
        rot(psi, n, t, c, np.cos(0.5 * angle), np.sin(0.5 * angle))
    elif kind == 2:
        cm = 1 << (n - 1 - c)
        for i in range(dim):
            if i & st or not i & cm:
                continue
            a = psi[i]
            psi[i] = psi[i | st]
            psi[i | st] = a
    else:
        cm = 1 << (n - 1 - c)
        for i in range(dim):
            # |..c=1..t=0..> <-> |..c=0..t=1..>
            if i & cm and not i & st:
                j = (i ^ cm) | st
                a = psi[i]
                psi[i] = psi[j]
                psi[j] = a


@njit
def derivative(psi, n, kind, t, c, angle):
    if kind == 3:
        cm = 1 << (n - 1 - c)
        for i in range(psi.shape[0]):
            if not i & cm:
                psi[i] = 0.0
    apply(psi, n, kind, t, c, angle + np.pi)
    for i in range(psi.shape[0]):
        psi[i] *= 0.5


@njit
def run_program(psi, n, kind, target, control, angle):
    for k in range(kind.shape[0]):
        apply(psi, n, kind[k], target[k], control[k], angle[k])


@njit
def overlap_gradient(psi_final, bra, n, kind, target, control, angle, pidx, nparams):
    phi = psi_final.copy()
    lam = bra.copy()
    mu = np.empty_like(phi)
    grad = np.zeros(nparams)
    for k in range(kind.shape[0] - 1, -1, -1):
        kd = kind[k]
        a = angle[k]
        inv = -a if (kd == 1 or kd == 3) else a
        apply(phi, n, kd, target[k], control[k], inv)
        if pidx[k] >= 0:
            mu[:] = phi
            derivative(mu, n, kd, target[k], control[k], a)
            acc = 0.0
            for i in range(mu.shape[0]):
                acc += lam[i] * mu[i]
            grad[pidx[k]] += acc
        apply(lam, n, kd, target[k], control[k], inv)
    return grad


@njit
def rhs(v, d1, d2, nu, filt, use_filter, w, out):
    m = v.shape[0]
    for i in range(m):
        if use_filter:
            acc = 0.0
            for j in range(m):
                acc += filt[i, j] * v[j]
            w[i] = acc
        else:
            w[i] = v[i]
    for i in range(m):
        dw = 0.0
        for j in range(m):
            dw += d1[i, j] * w[j]
        out[i] = -w[i] * dw
    if use_filter:
        for i in range(m):
            w[i] = out[i]
        for i in range(m):
            acc = 0.0
            for j in range(m):
                acc += filt[i, j] * w[j]
            out[i] = acc
    for i in range(m):
        ddv = 0.0
        for j in range(m):
            ddv += d2[i, j] * v[j]
        out[i] += nu * ddv


@njit
def burgers_integrate(u0, d1, d2, nu, forcing, dt, record_every, filt, use_filter):
    steps = forcing.shape[0]
    m = u0.shape[0]
    out = np.empty((steps // record_every + 1, m))
    out[0] = u0
    u = u0.copy()
    k1 = np.empty(m)
    k2 = np.empty(m)
    k3 = np.empty(m)
    k4 = np.empty(m)
    tmp = np.empty(m)
    w = np.empty(m)
    for s in range(steps):
        rhs(u, d1, d2, nu, filt, use_filter, w, k1)
        for i in range(m):
            tmp[i] = u[i] + 0.5 * dt * k1[i]
        rhs(tmp, d1, d2, nu, filt, use_filter, w, k2)
        for i in range(m):
            tmp[i] = u[i] + 0.5 * dt * k2[i]
        rhs(tmp, d1, d2, nu, filt, use_filter, w, k3)
        for i in range(m):
            tmp[i] = u[i] + dt * k3[i]
        rhs(tmp, d1, d2, nu, filt, use_filter, w, k4)
        finite = True
        for i in range(m):
            u[i] = (u[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                    + dt * forcing[s, i])
            if not np.isfinite(u[i]):
                finite = False
        if not finite:
            return out, s + 1
        if (s + 1) % record_every == 0:
            out[(s + 1) // record_every] = u
    return out, -1
