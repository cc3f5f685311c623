"""Checkers for the uncertainty and wave-particle duality relations.

Every checker returns a :class:`RelationReport`. The slack is oriented so
that a relation holds when ``slack >= -tol``; solver gaps, converted to the
units of the relation, widen that allowance so an unconverged solver can
never produce a false alarm.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .entropy import (
    distinguishability_from_pguess,
    half_norm,
    hmax,
    hmin,
    lemma2_bound,
    pguess,
    psecr,
)
from .errors import BadSize, DimensionMismatch, NotADistribution, NotMUB
from .interferometer import (
    DEFAULT_PHASE_OPTIONS,
    Interferometer,
    PhaseOptions,
    _require_symmetric,
    erasure_pipeline,
    fourier_family_basis,
    max_unbiased_overlap,
    minimize_over_fourier_family,
    pdec_detector,
    pmax_detector,
    pmin_detector,
    postselected_cq,
    propagate,
    secrecy_of_unbiased_basis,
    visibility_from_pguess_max,
)
from .quantum import POVM, CQState, cq_conditional_on_path, matrix_of, measure_subsystem, overlap_c, partial_trace

RELATION_IDS = (
    "LEMMA1",
    "LEMMA2",
    "MMEUR",
    "PGUESS_UR",
    "MUB_UR",
    "GENERIC_WPDR",
    "THEOREM1",
    "ASYMMETRIC",
    "ERASURE",
    "ERASURE_ENTROPIC",
    "DURR_IDENTITY",
    "N2_REDUCTIONS",
)


@dataclass(frozen=True)
class RelationReport:
    """Outcome of checking one relation on one instance.

    Attributes:
        relation_id: One of :data:`RELATION_IDS`.
        term_values: Named intermediate quantities.
        lhs: Left-hand side as written in the relation.
        rhs: Right-hand side.
        slack: ``rhs - lhs`` for upper bounds, ``lhs - rhs`` for lower bounds.
        tol: Allowed violation before solver gaps.
        passed: ``slack >= -(tol + sum(solver_gaps))``.
        solver_gaps: Certified solver intervals in the units of ``slack``.
    """

    relation_id: str
    term_values: Dict[str, float]
    lhs: float
    rhs: float
    slack: float
    tol: float
    passed: bool
    solver_gaps: List[float] = field(default_factory=list)

    def to_record(self) -> dict:
        return {
            "relation_id": self.relation_id,
            "terms": {k: float(v) for k, v in self.term_values.items()},
            "lhs": float(self.lhs),
            "rhs": float(self.rhs),
            "slack": float(self.slack),
            "tol": float(self.tol),
            "gaps": [float(g) for g in self.solver_gaps],
            "pass": bool(self.passed),
        }


def _report(rid, terms, lhs, rhs, tol, gaps=(), upper=True) -> RelationReport:
    slack = (rhs - lhs) if upper else (lhs - rhs)
    gaps = [float(abs(g)) for g in gaps]
    return RelationReport(
        rid, {k: float(v) for k, v in terms.items()}, float(lhs), float(rhs), float(slack),
        float(tol), bool(slack >= -(tol + sum(gaps))), gaps,
    )


def solver_tol(tol: float) -> float:
    """Gap requested from the convex solvers for a relation tolerance ``tol``."""
    return float(min(max(tol, 1e-12), 1e-9))


def check_lemma1(q, tol: float = 1e-12) -> RelationReport:
    r"""Check :math:`(\|q\|_{1/2} - 1)^2 + (d\|q\|_\infty - 1)^2 \le (d-1)^2`.

    For ``d = 2`` the relation is an equality and ``equality_residual``
    records ``|slack|``.
    """
    q = np.asarray(q, dtype=float).ravel()
    d = q.size
    if d < 2:
        raise NotADistribution("need at least two outcomes")
    h = half_norm(q).value
    m = max(float(q.max()), 0.0)
    lhs = (h - 1.0) ** 2 + (d * m - 1.0) ** 2
    rhs = (d - 1.0) ** 2
    terms = {"half_norm": h, "max_prob": m, "d": d}
    if d == 2:
        terms["equality_residual"] = abs(rhs - lhs)
    return _report("LEMMA1", terms, lhs, rhs, tol)


def _guess_interval_gap(fn, lo, hi) -> float:
    return abs(fn(hi) - fn(lo))


def check_lemma2(cq: CQState, tol: float = 1e-6) -> RelationReport:
    """Check ``H_max(X|B) <= log2(1 + sqrt((d-1)^2 - (d pguess - 1)^2))``."""
    stol = solver_tol(tol)
    d = cq.num_outcomes
    pg = pguess(cq, stol)
    ps = psecr(cq, stol)
    lhs = float(np.log2(ps.value))
    clip = lambda p: min(max(p, 1.0 / d), 1.0)
    rhs = lemma2_bound(clip(pg.value), d)
    gaps = [
        np.log2(ps.upper_bound) - np.log2(ps.lower_bound),
        _guess_interval_gap(lambda p: lemma2_bound(clip(p), d), pg.lower_bound, pg.upper_bound),
    ]
    terms = {"hmax": lhs, "pguess": pg.value, "bound": rhs, "d": d}
    return _report("LEMMA2", terms, lhs, rhs, tol, gaps)


def _tripartite_marginal(rho, dims: Sequence[int], keep: int) -> np.ndarray:
    """Trace out one of ``B1``/``B2`` from ``A (x) B1 (x) B2``; ``keep`` is 1 or 2."""
    m = matrix_of(rho)
    da, d1, d2 = dims
    if m.shape[0] != da * d1 * d2:
        raise DimensionMismatch(f"dimension {m.shape[0]} is not {da}*{d1}*{d2}")
    t = m.reshape(da, d1, d2, da, d1, d2)
    if keep == 1:
        return np.einsum("abcxyc->abxy", t).reshape(da * d1, da * d1)
    return np.einsum("abcxbz->acxz", t).reshape(da * d2, da * d2)


def _ur_ensembles(rho, basis_x, basis_y, dims):
    bx = np.asarray(getattr(basis_x, "matrix", basis_x), dtype=complex)
    by = np.asarray(getattr(basis_y, "matrix", basis_y), dtype=complex)
    c = overlap_c(bx, by)
    da, d1, d2 = dims
    cq_x = measure_subsystem(_tripartite_marginal(rho, dims, 1), bx, (da, d1))
    cq_y = measure_subsystem(_tripartite_marginal(rho, dims, 2), by, (da, d2))
    return cq_x, cq_y, c


def check_mmeur(rho, basis_x, basis_y, dims, tol: float = 1e-6) -> RelationReport:
    """Check ``H_min(X|B1) + H_max(Y|B2) >= log2(1/c)``."""
    cq_x, cq_y, c = _ur_ensembles(rho, basis_x, basis_y, dims)
    stol = solver_tol(tol)
    a = hmin(cq_x, stol)
    b = hmax(cq_y, stol)
    lhs = float(a) + float(b)
    rhs = float(-np.log2(c))
    gaps = [a.upper - a.lower, b.upper - b.lower]
    return _report("MMEUR", {"hmin_x": a, "hmax_y": b, "c": c}, lhs, rhs, tol, gaps, upper=False)


def _pguess_ur_lhs(px: float, py: float, c: float, d: int) -> float:
    return px / c - np.sqrt(max((d - 1.0) ** 2 - (d * py - 1.0) ** 2, 0.0))


def check_pguess_ur(rho, basis_x, basis_y, dims, tol: float = 1e-6) -> RelationReport:
    """Check ``pguess(X|B1)/c - sqrt((d-1)^2 - (d pguess(Y|B2) - 1)^2) <= 1``."""
    cq_x, cq_y, c = _ur_ensembles(rho, basis_x, basis_y, dims)
    d = dims[0]
    stol = solver_tol(tol)
    gx = pguess(cq_x, stol)
    gy = pguess(cq_y, stol)
    lhs = _pguess_ur_lhs(gx.value, gy.value, c, d)
    worst = max(
        _pguess_ur_lhs(gx.upper_bound, py, c, d) for py in (gy.lower_bound, gy.upper_bound)
    )
    gaps = [worst - lhs]
    terms = {"pguess_x": gx.value, "pguess_y": gy.value, "c": c}
    return _report("PGUESS_UR", terms, lhs, 1.0, tol, gaps)


def check_mub_ur(rho, basis_x, basis_y, dims, tol: float = 1e-6) -> RelationReport:
    """Check ``D(X|B1)^2 + D(Y|B2)^2 <= 1`` for mutually unbiased bases."""
    cq_x, cq_y, c = _ur_ensembles(rho, basis_x, basis_y, dims)
    d = dims[0]
    if abs(c - 1.0 / d) > 1e-10:
        raise NotMUB(f"maximal overlap {c:.12g} differs from 1/{d}")
    stol = solver_tol(tol)
    gx = pguess(cq_x, stol)
    gy = pguess(cq_y, stol)
    dx = distinguishability_from_pguess(gx.value, d)
    dy = distinguishability_from_pguess(gy.value, d)
    lhs = dx * dx + dy * dy
    hi = lambda p: max(distinguishability_from_pguess(p, d), 0.0) ** 2
    gaps = [hi(gx.upper_bound) - hi(gx.value), hi(gy.upper_bound) - hi(gy.value)]
    return _report("MUB_UR", {"D_x": dx, "D_y": dy, "c": c}, lhs, 1.0, tol, gaps)


def _min_family_hmax_quantum(rho_sb, n: int, db: int, stol: float, restarts: int, seed: int):
    """``min_theta H_max(W_theta | B)`` over the Fourier-phase family and its gap."""
    cache = {}

    def objective(theta):
        cq = measure_subsystem(rho_sb, fourier_family_basis(theta), (n, db))
        r = psecr(cq, stol)
        cache["last"] = r
        return float(np.log2(r.value))

    value, theta = minimize_over_fourier_family(objective, n, restarts, seed)
    objective(theta)
    r = cache["last"]
    return float(np.log2(r.value)), float(np.log2(r.upper_bound) - np.log2(r.lower_bound)), theta


def check_generic_wpdr(rho, dims, tol: float = 1e-6, restarts: int = 32, seed: int = 0) -> RelationReport:
    """Check ``H_min(Z|E1) + min_W H_max(W|E2) >= log2 n``.

    The minimum runs over bases ``U_theta F``; a minimum over this subfamily
    is never below the minimum over all unbiased bases, so the check is
    sound.
    """
    n, d1, d2 = dims
    if n < 2:
        raise BadSize("need n >= 2")
    stol = solver_tol(tol)
    rho_se1 = _tripartite_marginal(rho, dims, 1)
    rho_se2 = _tripartite_marginal(rho, dims, 2)
    a = hmin(cq_conditional_on_path(rho_se1, n, d1), stol)
    b, b_gap, theta = _min_family_hmax_quantum(rho_se2, n, d2, stol, restarts, seed)
    lhs = float(a) + b
    rhs = float(np.log2(n))
    gaps = [a.upper - a.lower, b_gap]
    return _report("GENERIC_WPDR", {"hmin_z": a, "min_hmax_w": b}, lhs, rhs, tol, gaps, upper=False)


def _d_squared_gap(pg, n: int) -> float:
    """Width of ``D^2`` induced by the certified interval on ``pguess``."""
    up = distinguishability_from_pguess(min(pg.upper_bound, 1.0), n)
    d = distinguishability_from_pguess(pg.value, n)
    return max(up, 0.0) ** 2 - max(d, 0.0) ** 2


def theorem1_terms(ifm: Interferometer, tol: float, opts: PhaseOptions = DEFAULT_PHASE_OPTIONS):
    """``(V, D, pguess result)`` of an interferometer with symmetric ``fc2``."""
    _require_symmetric(ifm.fc2)
    n, de = ifm.n, ifm.env_dim
    rho_se = propagate(ifm).matrix
    rho_s = partial_trace(rho_se, (n, de), "A")
    v = visibility_from_pguess_max(max_unbiased_overlap(rho_s, opts)[0], n)
    pg = pguess(cq_conditional_on_path(rho_se, n, de), solver_tol(tol))
    d = distinguishability_from_pguess(pg.value, n)
    return v, d, pg


def check_theorem1(ifm: Interferometer, tol: float = 1e-6,
                   opts: PhaseOptions = DEFAULT_PHASE_OPTIONS) -> RelationReport:
    """Check ``V^2 + D^2 <= 1`` for a symmetric second coupler."""
    v, d, pg = theorem1_terms(ifm, tol, opts)
    lhs = v * v + d * d
    gaps = [_d_squared_gap(pg, ifm.n)]
    return _report("THEOREM1", {"V": v, "D": d, "n": ifm.n}, lhs, 1.0, tol, gaps)


def check_asymmetric(ifm: Interferometer, tol: float = 1e-6, phases: Optional[Sequence] = None,
                     c: int = 0, opts: PhaseOptions = DEFAULT_PHASE_OPTIONS) -> RelationReport:
    """Check ``V1^2 + D1^2 <= 1`` for arbitrary couplers.

    ``D1`` is evaluated at the phases maximising the click probability of
    detector ``c`` and at every entry of ``phases``; the report keeps the
    worst case.
    """
    n, de = ifm.n, ifm.env_dim
    rho_se = propagate(ifm).matrix
    rho_s = partial_trace(rho_se, (n, de), "A")
    pdec = pdec_detector(rho_s, ifm.fc2, c)
    pmax, phi_max = pmax_detector(rho_s, ifm.fc2, c, opts)
    v1 = (pmax - pdec) / ((n - 1.0) * pdec)
    stol = solver_tol(tol)
    settings = [phi_max] + [np.asarray(p, dtype=float) for p in (phases or [])]
    solved = []
    worst_d, worst_gap, d_at_max = -np.inf, 0.0, None
    for phi in settings:
        cq, _ = postselected_cq(rho_se, ifm.fc2, phi, c, de)
        pg = next((r for ops, r in solved if np.array_equal(ops, cq.states) ), None)
        if pg is None:
            pg = pguess(cq, stol)
            solved.append((cq.states, pg))
        d1 = distinguishability_from_pguess(pg.value, n)
        if d_at_max is None:
            d_at_max = d1
        if d1 > worst_d:
            worst_d, worst_gap = d1, _d_squared_gap(pg, n)
    lhs = v1 * v1 + worst_d * worst_d
    terms = {"V1": v1, "D1": d_at_max, "D1_worst": worst_d, "pmax": pmax, "pdec": pdec,
             "phase_settings": len(settings)}
    return _report("ASYMMETRIC", terms, lhs, 1.0, tol, [worst_gap])


def check_erasure(ifm: Interferometer, povm_y: POVM, tol: float = 1e-6,
                  opts: PhaseOptions = DEFAULT_PHASE_OPTIONS) -> RelationReport:
    """Check ``V(Y)^2 + D(Y)^2 <= 1`` for sub-ensembles sorted by ``povm_y``."""
    _require_symmetric(ifm.fc2)
    rec = erasure_pipeline(propagate(ifm).matrix, povm_y, ifm.fc2, solver_tol(tol), opts)
    lhs = rec.V**2 + rec.D**2
    terms = {"V_Y": rec.V, "D_Y": rec.D, "outcomes": len(rec.probs), "discarded": rec.discarded}
    return _report("ERASURE", terms, lhs, 1.0, tol)


def check_erasure_entropic(ifm: Interferometer, povm_y: POVM, tol: float = 1e-6,
                           restarts: int = 8, seed: int = 0,
                           opts: PhaseOptions = DEFAULT_PHASE_OPTIONS) -> RelationReport:
    """Check ``H_min(Z|Y) + min_W H_max(W|Y) >= log2 n`` after the phase correction.

    Each branch ``y`` is rotated by the phases that maximise its detector
    guessing probability; ``W`` runs over the bases ``U_theta F``.
    """
    u = _require_symmetric(ifm.fc2)
    n = ifm.n
    rec = erasure_pipeline(propagate(ifm).matrix, povm_y, u, solver_tol(tol), opts)
    pz = float(rec.probs @ rec.path_dists.max(axis=1))
    h_min = -np.log2(pz)
    rot = np.exp(1j * rec.phases)
    rotated = rot[:, :, None] * rec.states * rot.conj()[:, None, :]

    def objective(theta):
        total = sum(p * secrecy_of_unbiased_basis(s, theta) for p, s in zip(rec.probs, rotated))
        return float(np.log2(total))

    h_max, theta = minimize_over_fourier_family(objective, n, restarts, seed)
    lhs = h_min + h_max
    terms = {"hmin_z_given_y": h_min, "min_hmax_w_given_y": h_max, "V_Y": rec.V, "D_Y": rec.D}
    return _report("ERASURE_ENTROPIC", terms, lhs, float(np.log2(n)), tol, upper=False)


def durr_identity(rho, tol: float = 1e-12) -> RelationReport:
    """Split the purity into its diagonal and coherence parts and compare."""
    m = matrix_of(rho)
    diag = np.real(np.diag(m))
    diag_term = float(np.sum(diag**2))
    off = np.abs(m) ** 2
    off_term = float(off.sum() - np.sum(np.diag(off)))
    purity = float(np.real(np.trace(m @ m)))
    residual = abs(diag_term + off_term - purity)
    terms = {"diagonal": diag_term, "coherence": off_term, "purity": purity,
             "purity_slack": 1.0 - purity}
    return _report("DURR_IDENTITY", terms, residual, 0.0, tol)


def check_n2_reductions(ifm: Interferometer, tol: float = 1e-6,
                        opts: PhaseOptions = DEFAULT_PHASE_OPTIONS) -> RelationReport:
    """Check the three two-path identities linking entropies and D, V.

    Each identity has its own allowance: the min-entropy form within
    ``1e-8`` plus the solver gap, the max-entropy form within ``tol`` and the
    dephased click probability within ``1e-9``. The report normalises each
    residual by its allowance; ``lhs`` is the largest ratio and the relation
    holds when it is at most one.
    """
    if ifm.n != 2:
        raise BadSize("two-path identities need n = 2")
    _require_symmetric(ifm.fc2)
    de = ifm.env_dim
    rho_se = propagate(ifm).matrix
    rho_s = partial_trace(rho_se, (2, de), "A")
    stol = solver_tol(tol)

    cq = cq_conditional_on_path(rho_se, 2, de)
    pg = pguess(cq, stol)
    d = distinguishability_from_pguess(pg.value, 2)
    h_min = float(hmin(cq, stol))
    r1 = abs(h_min + np.log2((1.0 + d) / 2.0))
    a1 = 1e-8 + np.log2(pg.upper_bound / pg.lower_bound)

    v = visibility_from_pguess_max(max_unbiased_overlap(rho_s, opts)[0], 2)
    h_w, _ = minimize_over_fourier_family(lambda t: np.log2(secrecy_of_unbiased_basis(rho_s, t)), 2)
    r2 = abs(h_w - np.log2(1.0 + np.sqrt(max(1.0 - v * v, 0.0))))
    a2 = tol

    pmax, _ = pmax_detector(rho_s, ifm.fc2, 0, opts)
    pmin, _ = pmin_detector(rho_s, ifm.fc2, 0, opts)
    pdec = pdec_detector(rho_s, ifm.fc2, 0)
    r3 = abs(pdec - 0.5 * (pmax + pmin))
    a3 = 1e-9

    ratio = max(r1 / a1, r2 / a2, r3 / a3)
    terms = {"D": d, "V": v, "hmin_residual": r1, "hmax_residual": r2, "pdec_residual": r3}
    return _report("N2_REDUCTIONS", terms, ratio, 1.0, 0.0)
