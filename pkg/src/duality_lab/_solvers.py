"""Certified solvers for the two optimisation problems behind H_min and H_max.

Both work on the stack ``A[x] = p_x rho_x`` restricted to the support of
``sum_x A[x]`` and return a lower bound, an upper bound and the witnesses
that prove them.
"""

from __future__ import annotations

import numpy as np

from .errors import NoConvergence
from .numerics import herm, psd_function, psd_sqrt

SUPPORT_RTOL = 1e-14


def support_basis(ops: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(herm(ops.sum(axis=0)))
    keep = w > SUPPORT_RTOL * max(w[-1], 1e-300)
    return v[:, keep]


def _pinv_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(herm(m))
    cut = SUPPORT_RTOL * max(w[-1], 1e-300)
    inv = np.where(w > cut, 1.0 / np.sqrt(np.where(w > cut, w, 1.0)), 0.0)
    return (v * inv) @ v.conj().T


def _dual_shift(y: np.ndarray, ops: np.ndarray) -> float:
    worst = min(np.linalg.eigvalsh(y - a)[0] for a in ops)
    return max(0.0, -worst)


def guessing_fixed_point(ops: np.ndarray, tol: float, max_iter: int = 10_000, strict: bool = True):
    """Maximise ``sum_x Tr(M_x A_x)`` over POVMs.

    Iterates ``M_x <- R^{-1/2} A_x M_x A_x R^{-1/2}`` with
    ``R = sum_x A_x M_x A_x`` from the pretty-good measurement. After every
    sweep ``Y = herm(sum_x A_x M_x)`` is shifted by the smallest multiple of
    the identity that makes ``Y >= A_x`` for all ``x``; its trace is an upper
    bound by weak duality.

    Returns ``(lower, upper, Y, M, iterations)`` with ``Y`` and ``M`` in the
    original (full) space. With ``strict=False`` an unconverged run returns
    its best bounds instead of raising.
    """
    full_dim = ops.shape[1]
    basis = support_basis(ops)
    k = basis.shape[1]
    a = np.einsum("ia,xij,jb->xab", basis.conj(), ops, basis)

    s_inv = _pinv_sqrt(a.sum(axis=0))
    m = np.array([herm(s_inv @ ax @ s_inv) for ax in a])

    best_lo, best_hi = -np.inf, np.inf
    best_m, best_y = m, None
    it = 0
    for it in range(1, max_iter + 1):
        y = herm(np.einsum("xab,xbc->ac", a, m))
        lo = float(np.trace(y).real)
        shift = _dual_shift(y, a)
        hi = lo + k * shift
        if lo > best_lo:
            best_lo, best_m = lo, m
        if hi < best_hi:
            best_hi, best_y = hi, y + shift * np.eye(k)
        if best_hi - best_lo <= tol:
            break
        r = np.einsum("xab,xbc,xcd->ad", a, m, a)
        r_inv = _pinv_sqrt(r)
        m = np.array([herm(r_inv @ ax @ mx @ ax @ r_inv) for ax, mx in zip(a, m)])
        deficit = np.eye(k) - m.sum(axis=0)
        if np.max(np.abs(deficit)) > 1e-13:
            # R lost rank: hand the missing subspace to the most useful element
            x = int(np.argmax(np.real(np.einsum("xab,ba->x", a, deficit))))
            m[x] = m[x] + herm(deficit)
    else:
        if strict:
            raise NoConvergence(tol, max_iter, best_hi - best_lo)

    return (best_lo, best_hi, *_lift(basis, full_dim, best_y, best_m), it)


def _lift(basis, full_dim, y, m):
    """Embed a witness and POVM found on the support back into the full space."""
    y_full = basis @ y @ basis.conj().T
    m_full = np.einsum("ia,xab,jb->xij", basis, m, basis.conj())
    m_full[int(np.argmax(np.trace(m_full, axis1=1, axis2=2).real))] += (
        np.eye(full_dim) - basis @ basis.conj().T
    )
    return y_full, m_full


def guessing_barrier(ops: np.ndarray, tol: float, mu: float = 20.0, max_newton: int = 100):
    """Maximise ``sum_x Tr(M_x A_x)`` through its dual ``min Tr Y, Y >= A_x``.

    Log-barrier Newton method on ``Y``. At a central point the blocks
    ``(Y - A_x)^{-1} / t`` sum to the identity; after renormalisation they
    form the POVM that gives the lower bound. Every strictly feasible ``Y``
    gives the upper bound ``Tr Y``.

    Returns ``(lower, upper, Y, M, newton_steps)`` in the full space.
    """
    full_dim = ops.shape[1]
    basis = support_basis(ops)
    k = basis.shape[1]
    d = ops.shape[0]
    a = np.einsum("ia,xij,jb->xab", basis.conj(), ops, basis)
    e = _hermitian_basis(k)
    cost = np.real(np.trace(e, axis1=1, axis2=2))

    def as_matrix(c):
        return np.einsum("i,iab->ab", c, e)

    def barrier(c):
        y = as_matrix(c)
        return -sum(_logdet_pd(y - ax) for ax in a)

    top = max(np.linalg.eigvalsh(ax)[-1] for ax in a)
    c = cost * (top + 1.0)
    t = d * k / float(cost @ c)
    t_max = 4.0 * d * k / tol
    best_lo, best_hi, best_y, best_m = -np.inf, np.inf, None, None
    steps = 0
    while True:
        for _ in range(max_newton):
            y = as_matrix(c)
            z = np.array([np.linalg.inv(y - ax) for ax in a])
            ze = np.einsum("xab,ibc->xiac", z, e)
            hess = np.real(np.einsum("xiab,xjba->ij", ze, ze))
            grad = t * cost - np.real(np.einsum("xiaa->i", ze))
            step_dir = -np.linalg.solve(hess, grad)
            decrement = -float(grad @ step_dir)
            steps += 1
            if decrement < 1e-10:
                break
            f0 = t * float(cost @ c) + barrier(c)
            step, accepted = 1.0, False
            while step > 1e-14:
                trial = c + step * step_dir
                try:
                    if t * float(cost @ trial) + barrier(trial) <= f0 - 0.25 * step * decrement:
                        accepted = True
                        break
                except np.linalg.LinAlgError:
                    pass
                step *= 0.5
            if not accepted:
                break
            c = trial

        y = herm(as_matrix(c))
        if min(np.linalg.eigvalsh(y - ax)[0] for ax in a) >= 0.0 and float(cost @ c) < best_hi:
            best_hi, best_y = float(np.trace(y).real), y
        m = np.array([herm(np.linalg.inv(y - ax)) for ax in a])
        s_inv = _pinv_sqrt(m.sum(axis=0))
        m = np.array([herm(s_inv @ mx @ s_inv) for mx in m])
        lo = float(np.real(np.einsum("xab,xba->", a, m)))
        if np.isfinite(lo) and lo > best_lo:
            best_lo, best_m = lo, m
        if best_hi - best_lo <= tol:
            break
        if t >= t_max:
            raise NoConvergence(tol, steps, best_hi - best_lo)
        t = min(t * mu, t_max)

    return (best_lo, best_hi, *_lift(basis, full_dim, best_y, best_m), steps)


def helstrom(ops: np.ndarray):
    """Closed-form optimum for two hypotheses.

    Returns ``(value, Y, M)`` where ``Y = A_1 + (A_0 - A_1)_+`` is an exact
    dual witness and ``M`` projects onto the positive part of ``A_0 - A_1``.
    """
    delta = herm(ops[0] - ops[1])
    w, v = np.linalg.eigh(delta)
    pos = w > 0
    proj = v[:, pos] @ v[:, pos].conj().T
    value = 0.5 * (1.0 + np.sum(np.abs(w)))
    y = herm(ops[1]) + (v * np.clip(w, 0.0, None)) @ v.conj().T
    eye = np.eye(delta.shape[0])
    return float(value), y, np.array([proj, eye - proj])


def _hermitian_basis(k: int) -> np.ndarray:
    out = []
    for a in range(k):
        e = np.zeros((k, k), dtype=complex)
        e[a, a] = 1.0
        out.append(e)
    r = 1.0 / np.sqrt(2.0)
    for a in range(k):
        for b in range(a + 1, k):
            e = np.zeros((k, k), dtype=complex)
            e[a, b] = e[b, a] = r
            out.append(e)
            e = np.zeros((k, k), dtype=complex)
            e[a, b], e[b, a] = 1j * r, -1j * r
            out.append(e)
    return np.array(out)


def _logdet_pd(m: np.ndarray) -> float:
    chol = np.linalg.cholesky(m)
    return 2.0 * float(np.sum(np.log(np.real(np.diag(chol)))))


def secrecy_barrier(ops: np.ndarray, tol: float, mu: float = 20.0, max_newton: int = 100):
    r"""Certified value of :math:`\max_\sigma (\sum_x \|\sqrt{A_x}\sqrt\sigma\|_1)^2`.

    Uses the equivalent semidefinite program

    .. math::  \min \sum_x \mathrm{Tr}\, S_x
               \quad\text{s.t.}\quad \bigoplus_x S_x \succeq V V^\dagger,
               \qquad V = [\sqrt{A_1}; \dots; \sqrt{A_d}],

    solved by a log-barrier Newton method. Any strictly feasible ``S`` gives
    an upper bound; the rescaled barrier multiplier ``W`` (identity diagonal
    blocks, PSD) gives the lower bound ``Tr(V V^+ W)``, and ``V^+ W V``
    normalised is the maximising ``sigma``; the exact objective at that
    ``sigma`` sharpens the lower bound. Bounds are the best seen over all
    centring steps.

    Returns ``(lower, upper, sigma, newton_steps)``; ``sigma`` in the full space.
    """
    full_dim = ops.shape[1]
    basis = support_basis(ops)
    k = basis.shape[1]
    d = ops.shape[0]
    dk = d * k
    a = np.einsum("ia,xij,jb->xab", basis.conj(), ops, basis)
    roots = np.array([psd_sqrt(ax) for ax in a])
    v = roots.reshape(dk, k)
    g = herm(v @ v.conj().T)

    e = _hermitian_basis(k)
    m1 = e.shape[0]
    cost = np.tile(np.real(np.trace(e, axis1=1, axis2=2)), d)

    def lmi(s: np.ndarray) -> np.ndarray:
        blocks = np.einsum("xi,iab->xab", s.reshape(d, m1), e)
        out = -g.copy()
        for x in range(d):
            out[x * k:(x + 1) * k, x * k:(x + 1) * k] += blocks[x]
        return out

    def primal_value(w: np.ndarray):
        sigma = herm(v.conj().T @ w @ v)
        sigma = sigma / np.trace(sigma).real
        root_sigma = psd_sqrt(sigma)
        h = sum(np.sum(np.linalg.svd(r @ root_sigma, compute_uv=False)) for r in roots)
        return max(float(h**2), float(np.real(np.trace(g @ w)))), sigma

    s = np.tile(np.real(np.trace(e, axis1=1, axis2=2)), d) * (np.linalg.eigvalsh(g)[-1] + 1.0)
    t = dk / float(cost @ s)
    # the barrier gap is about dk / t; past this the inverse loses accuracy
    t_max = 4.0 * dk / tol
    best_lo, best_hi, best_sigma = -np.inf, np.inf, None
    steps = 0
    while True:
        for _ in range(max_newton):
            mat = lmi(s)
            inv = np.linalg.inv(mat)
            nb = inv.reshape(d, k, d, k).transpose(0, 2, 1, 3)
            ne = np.einsum("yxab,ibc->yxiac", nb, e)
            hess = np.real(np.einsum("yxiac,xyjca->xiyj", ne, ne)).reshape(d * m1, d * m1)
            grad = t * cost - np.real(np.einsum("xxab,iba->xi", nb, e)).reshape(-1)
            step_dir = -np.linalg.solve(hess, grad)
            decrement = -float(grad @ step_dir)
            steps += 1
            if decrement < 1e-10:
                break
            f0 = t * float(cost @ s) - _logdet_pd(mat)
            step, accepted = 1.0, False
            while step > 1e-14:
                trial = s + step * step_dir
                try:
                    if t * float(cost @ trial) - _logdet_pd(lmi(trial)) <= f0 - 0.25 * step * decrement:
                        accepted = True
                        break
                except np.linalg.LinAlgError:
                    pass
                step *= 0.5
            if not accepted:
                break
            s = trial

        try:
            _logdet_pd(lmi(s))
            best_hi = min(best_hi, float(cost @ s))
        except np.linalg.LinAlgError:
            pass
        w = herm(np.linalg.inv(lmi(s))) / t
        scale = np.zeros_like(w)
        for x in range(d):
            sl = slice(x * k, (x + 1) * k)
            scale[sl, sl] = psd_function(w[sl, sl], lambda ev: 1.0 / np.sqrt(np.maximum(ev, 1e-300)))
        w = herm(scale @ w @ scale)
        if np.all(np.isfinite(w)):
            lower, sigma = primal_value(w)
            if lower > best_lo:
                best_lo, best_sigma = lower, sigma
        if best_hi - best_lo <= tol:
            break
        if t >= t_max:
            raise NoConvergence(tol, steps, best_hi - best_lo)
        t = min(t * mu, t_max)

    sigma_full = basis @ best_sigma @ basis.conj().T
    if full_dim != k:
        sigma_full = herm(sigma_full)
    return best_lo, best_hi, sigma_full, steps
