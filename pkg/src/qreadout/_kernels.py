"""Hot loops: real statevector gate application, adjoint gradients, Burgers RK4.

Two interchangeable backends share one calling convention.  The numba backend
is used when numba imports and ``QREADOUT_BACKEND`` is not ``numpy``; the
pure-numpy backend is always importable and is the reference for the
cross-backend tests and ``benchmarks/bench_kernels.py``.

Circuits reach this module as flat "programs": parallel int/float arrays
``kind, target, control, angle`` (``control = -1`` for single-qubit gates).
Qubit 0 is the most significant bit of the basis index.
"""
import os
from types import SimpleNamespace

import numpy as np

H, RY, CNOT, CRY, SWAP = 0, 1, 2, 3, 4
_S2 = 1.0 / np.sqrt(2.0)


# ---------------------------------------------------------------- numpy path

def _view1(psi, n, q):
    return psi.reshape(1 << q, 2, 1 << (n - q - 1))


def _view2(psi, n, a, b):
    # axes 1 and 3 belong to min(a, b) and max(a, b)
    lo, hi = (a, b) if a < b else (b, a)
    v = psi.reshape(1 << lo, 2, 1 << (hi - lo - 1), 2, 1 << (n - hi - 1))
    return v, a < b


def _np_rot(x0, x1, c, s):
    a = x0.copy()
    x0 *= c
    x0 -= s * x1
    x1 *= c
    x1 += s * a


def _np_apply(psi, n, kind, t, c, angle):
    if kind == H:
        v = _view1(psi, n, t)
        a = v[:, 0, :].copy()
        b = v[:, 1, :]
        v[:, 0, :] = (a + b) * _S2
        v[:, 1, :] = (a - b) * _S2
    elif kind == RY:
        v = _view1(psi, n, t)
        _np_rot(v[:, 0, :], v[:, 1, :], np.cos(0.5 * angle), np.sin(0.5 * angle))
    elif kind == SWAP:
        v, _ = _view2(psi, n, c, t)
        tmp = v[:, 0, :, 1, :].copy()
        v[:, 0, :, 1, :] = v[:, 1, :, 0, :]
        v[:, 1, :, 0, :] = tmp
    else:
        v, ctl_first = _view2(psi, n, c, t)
        if ctl_first:
            x0, x1 = v[:, 1, :, 0, :], v[:, 1, :, 1, :]
        else:
            x0, x1 = v[:, 0, :, 1, :], v[:, 1, :, 1, :]
        if kind == CNOT:
            tmp = x0.copy()
            x0[...] = x1
            x1[...] = tmp
        else:
            _np_rot(x0, x1, np.cos(0.5 * angle), np.sin(0.5 * angle))


def _np_derivative(psi, n, kind, t, c, angle):
    """psi <- dG/dtheta psi for RY/CRY (0.5 * RY(theta + pi) on the active block)."""
    if kind == RY:
        _np_apply(psi, n, RY, t, c, angle + np.pi)
        psi *= 0.5
        return
    v, ctl_first = _view2(psi, n, c, t)
    if ctl_first:
        v[:, 0, :, :, :] = 0.0
        x0, x1 = v[:, 1, :, 0, :], v[:, 1, :, 1, :]
    else:
        v[:, :, :, 0, :] = 0.0
        x0, x1 = v[:, 0, :, 1, :], v[:, 1, :, 1, :]
    _np_rot(x0, x1, np.cos(0.5 * (angle + np.pi)), np.sin(0.5 * (angle + np.pi)))
    psi *= 0.5


def np_run_program(psi, n, kind, target, control, angle):
    for k in range(kind.shape[0]):
        _np_apply(psi, n, kind[k], target[k], control[k], angle[k])


def np_apply_one(psi, n, kind, t, c, angle):
    _np_apply(psi, n, kind, t, c, angle)


def np_overlap_gradient(psi_final, bra, n, kind, target, control, angle, pidx, nparams):
    """Gradient of <bra|psi(theta)> w.r.t. the parameter slots, by reverse sweep."""
    phi = psi_final.copy()
    lam = bra.copy()
    grad = np.zeros(nparams)
    for k in range(kind.shape[0] - 1, -1, -1):
        kd, t, c, a = kind[k], target[k], control[k], angle[k]
        inv = -a if kd in (RY, CRY) else a
        _np_apply(phi, n, kd, t, c, inv)
        if pidx[k] >= 0:
            mu = phi.copy()
            _np_derivative(mu, n, kd, t, c, a)
            grad[pidx[k]] += lam @ mu
        _np_apply(lam, n, kd, t, c, inv)
    return grad


def np_burgers_integrate(u0, d1, d2, nu, forcing, dt, record_every, filt, use_filter):
    """RK4 on u_t = -u u_x + nu u_xx, forcing added as dt * f after each step.

    With ``use_filter`` the nonlinear term is ``-F((Fu) * D1 (Fu))`` for the
    spectral truncation matrix ``F``.  Returns the field every
    ``record_every`` steps (row 0 is ``u0``) and the 1-based step at which the
    field went non-finite (-1 if none).
    """
    steps = forcing.shape[0]
    out = np.empty((steps // record_every + 1, u0.shape[0]))
    out[0] = u0
    u = u0.copy()

    def rhs(v):
        if use_filter:
            w = filt @ v
            return -(filt @ (w * (d1 @ w))) + nu * (d2 @ v)
        return -v * (d1 @ v) + nu * (d2 @ v)

    # overflow on the way to a blow-up is reported through the return value
    with np.errstate(over="ignore", invalid="ignore"):
        for s in range(steps):
            k1 = rhs(u)
            k2 = rhs(u + 0.5 * dt * k1)
            k3 = rhs(u + 0.5 * dt * k2)
            k4 = rhs(u + dt * k3)
            u = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4) + dt * forcing[s]
            if not np.isfinite(u).all():
                return out, s + 1
            if (s + 1) % record_every == 0:
                out[(s + 1) // record_every] = u
    return out, -1


numpy_backend = SimpleNamespace(
    name="numpy",
    run_program=np_run_program,
    apply_one=np_apply_one,
    overlap_gradient=np_overlap_gradient,
    burgers_integrate=np_burgers_integrate,
)


# ---------------------------------------------------------------- numba path

try:
    from . import _numba_kernels as _nk

    numba_backend = SimpleNamespace(
        name="numba",
        run_program=_nk.run_program,
        apply_one=_nk.apply,
        overlap_gradient=_nk.overlap_gradient,
        burgers_integrate=_nk.burgers_integrate,
    )
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_backend = None


def get_backend(name=None):
    """Return the kernel namespace ``name`` ("numba"/"numpy"), or the active one."""
    name = name or os.environ.get("QREADOUT_BACKEND", "numba")
    if name == "numba" and numba_backend is not None:
        return numba_backend
    if name in ("numba", "numpy"):
        return numpy_backend
    raise ValueError(f"unknown backend {name!r}")


backend = get_backend()
