"""Min- and max-entropy of classical-quantum states with certified bounds.

``pguess`` and ``psecr`` return a :class:`CertifiedValue` carrying a lower and
upper bound on the optimum; entropies inherit that interval. All logarithms
are base 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _solvers
from .errors import NotADistribution, OutOfRange
from .quantum import CQState

DEFAULT_TOL = 1e-9
FIXED_POINT_SWEEPS = 2_000
_SAME_ATOL = 1e-12
_DIAG_ATOL = 1e-14


@dataclass(frozen=True)
class CertifiedValue:
    """Optimum of a convex program bracketed by primal and dual bounds.

    Attributes:
        value: Objective at the best feasible primal point found.
        lower_bound: Proven lower bound on the optimum.
        upper_bound: Proven upper bound on the optimum.
        iterations: Solver iterations spent (0 for closed forms).
        certificate: Dual witness ``Y`` for the guessing problem, with
            ``Y >= p_x rho_x`` for every ``x`` and ``Tr Y = upper_bound``.
        optimizer: Primal maximiser: POVM elements ``(d, dB, dB)`` for the
            guessing problem, the optimal ``sigma_B`` for the secrecy problem.
    """

    value: float
    lower_bound: float
    upper_bound: float
    iterations: int = 0
    certificate: Optional[np.ndarray] = None
    optimizer: Optional[np.ndarray] = None

    @property
    def gap(self) -> float:
        return max(self.upper_bound - self.lower_bound, 0.0)


@dataclass(frozen=True)
class HalfNormResult:
    value: float
    input_dim: int

    def __float__(self) -> float:
        return self.value


class EntropyValue(float):
    """A float that also remembers the interval implied by solver gaps."""

    lower: float
    upper: float

    def __new__(cls, value: float, lower: float, upper: float):
        obj = super().__new__(cls, value)
        obj.lower = float(lower)
        obj.upper = float(upper)
        return obj


def half_norm(q) -> HalfNormResult:
    r"""Return :math:`(\sum_j \sqrt{q_j})^2` for a probability vector ``q``."""
    vals = np.asarray(q, dtype=float).ravel().tolist()
    # plain floats: these vectors are short and numpy call overhead dominates
    total = math.fsum(vals) if vals else math.nan
    if not math.isfinite(total) or min(vals) < -1e-12 or abs(total - 1.0) > 1e-9:
        raise NotADistribution("input is not a probability vector")
    return HalfNormResult(math.fsum(math.sqrt(v) for v in vals if v > 0.0) ** 2, len(vals))


def _check_tol(tol: float) -> float:
    if not 1e-12 <= tol <= 1e-3:
        raise OutOfRange(f"tol={tol:g} outside [1e-12, 1e-3]")
    return float(tol)


def _common_state(cq: CQState) -> Optional[np.ndarray]:
    """Return the shared conditional state if B carries no information about X."""
    live = cq.states[~cq.zero]
    if cq.dim_b == 1 or np.all(np.abs(live - live[0]) <= _SAME_ATOL):
        return live[0]
    return None


def _classical_joint(cq: CQState) -> Optional[np.ndarray]:
    """Return ``P(x, y)`` when every conditional is diagonal, else ``None``."""
    s = cq.states
    off = s - np.einsum("xii->xi", s)[:, :, None] * np.eye(cq.dim_b)
    if np.max(np.abs(off)) > _DIAG_ATOL:
        return None
    return cq.probs[:, None] * np.real(np.einsum("xii->xi", s))


def _exact(value: float, **kw) -> CertifiedValue:
    return CertifiedValue(value, value, value, **kw)


def pguess(cq: CQState, tol: float = DEFAULT_TOL, method: str = "auto") -> CertifiedValue:
    r"""Optimal probability of guessing X from B.

    Maximises :math:`\sum_x p_x \mathrm{Tr}(M_x\rho_x)` over POVMs. Closed
    forms cover one outcome, uninformative B, diagonal B and the two-outcome
    (Helstrom) case; anything else goes to the certified fixed-point solver.
    ``method="iterative"`` skips the closed forms (used for cross-checks).

    The fixed point can crawl when the optimal POVM is rank deficient; after
    ``FIXED_POINT_SWEEPS`` sweeps without a certified gap the dual problem is
    solved by a barrier method instead and the better bounds are kept.

    Raises:
        NoConvergence: if neither solver reaches a gap of ``tol``.
    """
    tol = _check_tol(tol)
    if method not in ("auto", "iterative"):
        raise ValueError(f"unknown method {method!r}")
    if method == "iterative":
        return _pguess_iterative(cq, tol)
    d, db = cq.num_outcomes, cq.dim_b
    live = np.flatnonzero(~cq.zero)
    if live.size == 1:
        m = np.zeros((d, db, db), dtype=complex)
        m[live[0]] = np.eye(db)
        return _exact(1.0, certificate=cq.states[live[0]].copy(), optimizer=m)

    common = _common_state(cq)
    if common is not None:
        best = int(np.argmax(cq.probs))
        m = np.zeros((d, db, db), dtype=complex)
        m[best] = np.eye(db)
        return _exact(float(cq.probs[best]), certificate=cq.probs[best] * common, optimizer=m)

    joint = _classical_joint(cq)
    if joint is not None:
        winners = np.argmax(joint, axis=0)
        m = np.zeros((d, db, db), dtype=complex)
        m[winners, np.arange(db), np.arange(db)] = 1.0
        column_max = joint.max(axis=0)
        return _exact(float(column_max.sum()), certificate=np.diag(column_max).astype(complex), optimizer=m)

    ops = cq.weighted()
    if live.size == 2:
        value, y, pair = _solvers.helstrom(ops[live])
        m = np.zeros((d, db, db), dtype=complex)
        m[live] = pair
        return _exact(value, certificate=y, optimizer=m)

    return _pguess_iterative(cq, tol)


def _pguess_iterative(cq: CQState, tol: float) -> CertifiedValue:
    d, db = cq.num_outcomes, cq.dim_b
    live = np.flatnonzero(~cq.zero)
    ops = cq.weighted()
    lo, hi, y, m_live, it = _solvers.guessing_fixed_point(ops[live], tol, FIXED_POINT_SWEEPS, strict=False)
    if hi - lo > tol:
        b_lo, b_hi, b_y, b_m, steps = _solvers.guessing_barrier(ops[live], tol)
        it += steps
        if b_lo > lo:
            lo, m_live = b_lo, b_m
        if b_hi < hi:
            hi, y = b_hi, b_y
    m = np.zeros((d, db, db), dtype=complex)
    m[live] = m_live
    floor = float(cq.probs.max())
    if lo < floor:
        # guessing the likeliest outcome is always available
        best = int(np.argmax(cq.probs))
        lo, m = floor, np.zeros((d, db, db), dtype=complex)
        m[best] = np.eye(db)
    return CertifiedValue(lo, lo, hi, iterations=it, certificate=y, optimizer=m)


def psecr(cq: CQState, tol: float = DEFAULT_TOL) -> CertifiedValue:
    r"""Secrecy of X from B: :math:`\max_\sigma F(\rho_{XB}, 1\otimes\sigma_B)`.

    Uses :math:`F = (\sum_x \sqrt{p_x F(\rho_x, \sigma)})^2`. Uninformative
    and diagonal B have closed forms; quantum B is solved as a semidefinite
    program with a barrier method (see :func:`_solvers.secrecy_barrier`).
    """
    tol = _check_tol(tol)
    live = np.flatnonzero(~cq.zero)
    if live.size == 1:
        return _exact(1.0, optimizer=cq.states[live[0]].copy())

    common = _common_state(cq)
    if common is not None:
        return _exact(half_norm(cq.probs).value, optimizer=common.copy())

    joint = _classical_joint(cq)
    if joint is not None:
        column = np.sum(np.sqrt(joint), axis=0)
        sigma = np.diag(column**2 / np.sum(column**2)).astype(complex)
        return _exact(float(np.sum(column**2)), optimizer=sigma)

    lo, hi, sigma, steps = _solvers.secrecy_barrier(cq.weighted()[live], tol)
    return CertifiedValue(lo, lo, hi, iterations=steps, optimizer=sigma)


def hmin(cq: CQState, tol: float = DEFAULT_TOL) -> EntropyValue:
    """Min-entropy ``-log2 pguess`` with the interval from the certificate gap."""
    r = pguess(cq, tol)
    return EntropyValue(-np.log2(r.value), -np.log2(r.upper_bound), -np.log2(r.lower_bound))


def hmax(cq: CQState, tol: float = DEFAULT_TOL) -> EntropyValue:
    """Max-entropy ``log2 psecr`` with the interval from the certificate gap."""
    r = psecr(cq, tol)
    return EntropyValue(np.log2(r.value), np.log2(r.lower_bound), np.log2(r.upper_bound))


def distinguishability_from_pguess(p: float, d: int) -> float:
    value = (d * p - 1.0) / (d - 1.0)
    if -1e-12 <= value < 0.0:
        return 0.0
    if 1.0 < value <= 1.0 + 1e-12:
        return 1.0
    return float(value)


def distinguishability(cq: CQState, tol: float = DEFAULT_TOL) -> float:
    """Rescaled guessing probability ``(d pguess - 1)/(d - 1)`` in ``[0, 1]``."""
    d = cq.num_outcomes
    if d < 2:
        raise OutOfRange("distinguishability needs at least two outcomes")
    return distinguishability_from_pguess(pguess(cq, tol).value, d)


def lemma2_bound(pguess_value: float, d: int) -> float:
    """Upper bound on H_max in terms of the guessing probability over ``d`` outcomes."""
    if d < 1 or not (1.0 / d - 1e-12 <= pguess_value <= 1.0 + 1e-12):
        raise OutOfRange(f"pguess={pguess_value!r} outside [1/{d}, 1]")
    radicand = max((d - 1.0) ** 2 - (d * pguess_value - 1.0) ** 2, 0.0)
    return float(np.log2(1.0 + np.sqrt(radicand)))
