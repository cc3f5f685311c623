"""Independent reference computations used to cross-check the main solvers.

Each oracle reaches its answer by a different route from the production
code: exhaustive grids, a generic conic solver, or closed forms.
"""

from __future__ import annotations

import itertools
import warnings

import numpy as np
from scipy.optimize import minimize

from .numerics import herm, psd_sqrt
from .quantum import CQState

GRID_POINTS = 720


def _phase_value(q: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """``v^H Q v`` for ``v = exp(-i phi)``; ``phi`` has shape ``(..., n)``."""
    v = np.exp(-1j * phi)
    return np.real(np.einsum("...i,ij,...j->...", v.conj(), q, v))


def grid_phase_extremum(q, sign: int = 1, points: int = GRID_POINTS, polish: bool = True):
    """Extremise ``v^H Q v`` over phases by brute force (``n <= 3``).

    The first phase is fixed to zero (global gauge) and every other phase
    runs over ``points`` equally spaced angles. The best few grid points are
    then refined with a local quasi-Newton search.

    Returns:
        ``(value, phi)`` with ``phi[0] = 0``.
    """
    q = np.asarray(q, dtype=complex)
    n = q.shape[0]
    if n > 3:
        raise ValueError("grid oracle is limited to n <= 3")
    axis = 2.0 * np.pi * np.arange(points) / points
    mesh = np.meshgrid(*([axis] * (n - 1)), indexing="ij")
    phi = np.stack([np.zeros_like(mesh[0])] + list(mesh), axis=-1).reshape(-1, n)
    vals = sign * _phase_value(q, phi)
    order = np.argsort(vals)[::-1][:8]
    best_val, best_phi = vals[order[0]], phi[order[0]]
    if polish:
        for idx in order:
            res = minimize(
                lambda t: -sign * _phase_value(q, np.concatenate([[0.0], t])),
                phi[idx, 1:],
                method="BFGS",
                options={"gtol": 1e-12},
            )
            if -res.fun > best_val:
                best_val, best_phi = -res.fun, np.concatenate([[0.0], res.x])
    return float(sign * best_val), np.mod(best_phi, 2.0 * np.pi)


def two_path_phase_extrema(q):
    """Closed form for ``n = 2``: ``Q11 + Q22 +/- 2|Q12|``."""
    q = np.asarray(q, dtype=complex)
    base = float(np.real(q[0, 0] + q[1, 1]))
    off = 2.0 * abs(q[0, 1])
    return base + off, base - off


def two_path_pure(psi_se, de: int):
    """D and V of a pure two-path state ``a|1>|eta1> + b|2>|eta2>``.

    Writing the rows of ``psi`` as ``r_z = a_z |eta_z>``, the path
    distinguishability is ``sqrt(1 - 4|<r1|r2>|^2)`` and the visibility is
    ``2|<r1|r2>|``.
    """
    rows = np.asarray(psi_se, dtype=complex).reshape(2, de)
    k = abs(np.vdot(rows[0], rows[1]))
    return float(np.sqrt(max(1.0 - 4.0 * k * k, 0.0))), float(2.0 * k)


def secrecy_by_duality(cq: CQState, solver: str = "CLARABEL") -> float:
    r"""Secrecy value from the purification with a generic conic solver.

    Purifies the ensemble to ``X X' B R``, discards ``B`` and solves
    :math:`\min \mathrm{Tr}\,\sigma` subject to
    :math:`1_X \otimes \sigma_{X'R} \succeq \rho_{XX'R}`, whose optimum is
    the secrecy of X from B.

    A solve that the backend flags as inaccurate is still returned; the
    cross-check tolerance decides whether it is good enough. Any other
    non-optimal status raises ``RuntimeError``.
    """
    import cvxpy as cp

    d, db = cq.num_outcomes, cq.dim_b
    psi = np.zeros((d, d, db, db), dtype=complex)
    for x in range(d):
        psi[x, x] = np.sqrt(cq.probs[x]) * psd_sqrt(cq.states[x])
    # indices: x, x', b, r; trace out b
    rho = np.einsum("abij,cdik->abjcdk", psi, psi.conj()).reshape(d * d * db, d * d * db)
    rho = herm(rho)
    m = d * db
    sigma = cp.Variable((m, m), hermitian=True)
    problem = cp.Problem(
        cp.Minimize(cp.real(cp.trace(sigma))),
        [cp.kron(np.eye(d), sigma) - rho >> 0],
    )
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="Solution may be inaccurate")
        problem.solve(solver=solver)
    if problem.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        raise RuntimeError(f"oracle solve ended with status {problem.status}")
    return float(problem.value)


def guessing_by_enumeration(joint) -> float:
    """Guessing probability of X from a classical Y by trying every decision rule."""
    joint = np.asarray(joint, dtype=float)
    d, k = joint.shape
    best = 0.0
    for rule in itertools.product(range(d), repeat=k):
        best = max(best, sum(joint[rule[y], y] for y in range(k)))
    return best
