"""NumPy implementation of the phase-synchronisation coordinate ascent.

All restarts advance together, one coordinate at a time.
"""

import numpy as np


def _objective(q, v):
    return np.real(np.einsum("ri,ij,rj->r", v.conj(), q, v))


def phase_ascent(q, v0, sign, max_sweeps, rel_tol):
    """Optimise ``v^H Q v`` over unit-modulus vectors from each starting row of ``v0``.

    Args:
        q: Hermitian ``(n, n)`` complex matrix.
        v0: ``(restarts, n)`` complex starting points with ``|v_k| = 1``.
        sign: ``+1`` to maximise, ``-1`` to minimise.
        max_sweeps: Sweep budget per restart.
        rel_tol: Stop a restart once one sweep improves the objective by
            less than ``rel_tol * |objective|``.

    Returns:
        ``(best_value, best_v, sweeps)`` where ``sweeps`` is the largest
        number of sweeps any restart used.
    """
    q = np.ascontiguousarray(q, dtype=np.complex128)
    v = np.array(v0, dtype=np.complex128, copy=True)
    n = q.shape[0]
    value = _objective(q, v)
    active = np.ones(v.shape[0], dtype=bool)
    sweeps = 0
    while sweeps < max_sweeps and active.any():
        sweeps += 1
        va = v[active]
        for k in range(n):
            s = va @ q[k] - q[k, k] * va[:, k]
            mag = np.abs(s)
            ok = mag > 0.0
            va[ok, k] = sign * s[ok] / mag[ok]
        v[active] = va
        new = _objective(q, va)
        gain = sign * (new - value[active])
        value[active] = new
        done = gain <= rel_tol * np.maximum(np.abs(new), 1e-300)
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    best = int(np.argmax(sign * value))
    return float(value[best]), v[best].copy(), sweeps
