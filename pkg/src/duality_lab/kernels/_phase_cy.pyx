# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled phase-synchronisation coordinate ascent (same contract as ``_phase_py``)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, hypot

cnp.import_array()


cdef double _objective(double complex[:, ::1] q, double complex[::1] v, Py_ssize_t n) noexcept nogil:
    cdef double total = 0.0
    cdef double complex acc
    cdef Py_ssize_t i, j
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc = acc + q[i, j] * v[j]
        total += (v[i].conjugate() * acc).real
    return total


def phase_ascent(q, v0, int sign, int max_sweeps, double rel_tol):
    cdef double complex[:, ::1] qv = np.ascontiguousarray(q, dtype=np.complex128)
    cdef double complex[:, ::1] starts = np.ascontiguousarray(v0, dtype=np.complex128)
    cdef Py_ssize_t n = qv.shape[0]
    cdef Py_ssize_t r, k, j
    cdef double complex[::1] v = np.empty(n, dtype=np.complex128)
    best_v = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] bv = best_v
    cdef double complex s
    cdef double mag, value, new, best = 0.0
    cdef int sweep, most = 0
    cdef bint have = False
    with nogil:
        for r in range(starts.shape[0]):
            for k in range(n):
                v[k] = starts[r, k]
            value = _objective(qv, v, n)
            sweep = 0
            while sweep < max_sweeps:
                sweep += 1
                for k in range(n):
                    s = 0.0
                    for j in range(n):
                        if j != k:
                            s = s + qv[k, j] * v[j]
                    mag = hypot(s.real, s.imag)
                    if mag > 0.0:
                        v[k] = sign * s / mag
                new = _objective(qv, v, n)
                if sign * (new - value) <= rel_tol * max(fabs(new), 1e-300):
                    value = new
                    break
                value = new
            if sweep > most:
                most = sweep
            if not have or sign * value > sign * best:
                have = True
                best = value
                for k in range(n):
                    bv[k] = v[k]
    return float(best), best_v, most
