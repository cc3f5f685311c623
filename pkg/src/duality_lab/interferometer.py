"""The n-path Mach-Zehnder interferometer and its wave and particle measures.

A photon enters path 1, the first coupler ``fc1`` spreads it over ``n``
paths, a which-path coupling writes flags into an environment ``E``, phases
``U_phi`` act on the paths and the second coupler ``fc2`` routes it to ``n``
detectors. Detector ``c`` clicks with probability
``(U2 U_phi rho_S U_phi^H U2^H)[c, c]``.

Detector and path indices are 0-based here; detector 0 is the first one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from . import kernels
from .entropy import DEFAULT_TOL, distinguishability, half_norm, pguess
from .errors import (
    BadSize,
    Degenerate,
    DimensionMismatch,
    NoConvergence,
    NotSymmetricCoupler,
    OutOfRange,
    ZeroPostselectionProbability,
)
from .numerics import RandomSource, haar_state, herm, random_source
from .quantum import (
    CQState,
    DensityOperator,
    POVM,
    PureState,
    QuantumChannel,
    apply_channel,
    cq_conditional_on_path,
    fourier_matrix,
    matrix_of,
    partial_trace,
)

UNITARY_ATOL = 1e-10
SYMMETRIC_ATOL = 1e-10
ZERO_BRANCH = 1e-12


def _check_unitary(u, name: str) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got {u.shape}")
    if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > UNITARY_ATOL:
        raise DimensionMismatch(f"{name} is not unitary")
    return u


def is_symmetric_coupler(u) -> bool:
    u = np.asarray(u, dtype=complex)
    return bool(np.max(np.abs(np.abs(u) ** 2 - 1.0 / u.shape[0])) <= SYMMETRIC_ATOL)


def _require_symmetric(fc2) -> np.ndarray:
    u = np.asarray(fc2, dtype=complex)
    if not is_symmetric_coupler(u):
        raise NotSymmetricCoupler("fc2 does not split every path evenly over the detectors")
    return u


def canonical_phases(phi) -> np.ndarray:
    """Representative with ``phi[0] = 0`` and every angle in ``[0, 2 pi)``."""
    phi = np.asarray(phi, dtype=float)
    if not np.all(np.isfinite(phi)):
        raise OutOfRange("phases must be finite")
    return np.mod(phi - phi[0], 2.0 * np.pi)


@dataclass(frozen=True)
class WhichPathCoupling:
    """Isometry ``|z> -> |z>|eta_z>`` that marks each path with a flag state.

    Attributes:
        flags: ``(n, dE)`` array whose row ``z`` is the unit vector ``eta_z``.
    """

    flags: np.ndarray

    def __post_init__(self):
        f = np.array(self.flags, dtype=complex)
        if f.ndim != 2 or f.shape[0] < 2:
            raise BadSize("flags must have shape (n, dE) with n >= 2")
        if np.max(np.abs(np.linalg.norm(f, axis=1) - 1.0)) > 1e-10:
            raise OutOfRange("flag states must be unit vectors")
        f.setflags(write=False)
        object.__setattr__(self, "flags", f)

    @property
    def n(self) -> int:
        return self.flags.shape[0]

    @property
    def env_dim(self) -> int:
        return self.flags.shape[1]

    @property
    def gram(self) -> np.ndarray:
        return self.flags.conj() @ self.flags.T

    @classmethod
    def from_gamma(cls, n: int, gamma: float) -> "WhichPathCoupling":
        """Flags with every pairwise overlap equal to ``gamma``.

        For ``gamma`` in ``[0, 1]`` the flags are
        ``sqrt(gamma)|0> + sqrt(1 - gamma)|z>`` on an ``n + 1`` dimensional
        environment. Negative overlaps down to ``-1/(n - 1)`` use the square
        root of the Gram matrix on ``n`` dimensions.
        """
        if n < 2:
            raise BadSize("need n >= 2")
        if not -1.0 / (n - 1) - 1e-12 <= gamma <= 1.0:
            raise OutOfRange(f"gamma={gamma!r} outside [-1/(n-1), 1]")
        if gamma >= 0.0:
            flags = np.zeros((n, n + 1), dtype=complex)
            flags[:, 0] = np.sqrt(gamma)
            flags[np.arange(n), np.arange(1, n + 1)] = np.sqrt(1.0 - gamma)
            return cls(flags)
        g = (1.0 - gamma) * np.eye(n) + gamma * np.ones((n, n))
        w, v = np.linalg.eigh(g)
        root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T
        return cls(root.astype(complex))

    @classmethod
    def haar(cls, n: int, env_dim: int, rng: RandomSource) -> "WhichPathCoupling":
        return cls(np.array([haar_state(env_dim, rng) for _ in range(n)]))

    def channel(self) -> QuantumChannel:
        n, de = self.n, self.env_dim
        v = np.zeros((n, de, n), dtype=complex)
        v[np.arange(n), :, np.arange(n)] = self.flags
        return QuantumChannel(v.reshape(n * de, n))


InputSpec = Union[np.ndarray, PureState, DensityOperator]


@dataclass(frozen=True)
class Interferometer:
    """Static description of one n-path interferometer.

    Attributes:
        n: Number of paths.
        fc1: First coupler as an ``n x n`` unitary acting on path 1, or an
            explicit input state on ``S`` (pure or mixed).
        coupling: Channel from ``S`` to ``S (x) E``; identity when omitted.
        fc2: Second coupler ``U2``.
        fc2_symmetric: Whether ``|U2[c, z]|^2 = 1/n`` for all entries. Left as
            ``None`` it is computed; ``True`` is validated.
    """

    n: int
    fc1: InputSpec
    fc2: np.ndarray
    coupling: Optional[QuantumChannel] = None
    fc2_symmetric: Optional[bool] = None
    env_dim: int = field(init=False)

    def __post_init__(self):
        n = int(self.n)
        if n < 2:
            raise BadSize("an interferometer needs at least two paths")
        fc2 = _check_unitary(self.fc2, "fc2")
        if fc2.shape[0] != n:
            raise DimensionMismatch(f"fc2 is {fc2.shape[0]}x{fc2.shape[0]}, expected {n}")
        coupling = self.coupling if self.coupling is not None else QuantumChannel.identity(n)
        if coupling.d_in != n or coupling.d_out % n:
            raise DimensionMismatch(f"coupling maps {coupling.d_in} -> {coupling.d_out}, expected {n} -> {n}*dE")
        sym = is_symmetric_coupler(fc2)
        if self.fc2_symmetric and not sym:
            raise NotSymmetricCoupler("fc2 flagged symmetric but is not")
        fc1 = self.fc1
        if not isinstance(fc1, (PureState, DensityOperator)):
            fc1 = _check_unitary(fc1, "fc1")
            if fc1.shape[0] != n:
                raise DimensionMismatch(f"fc1 is {fc1.shape[0]}x{fc1.shape[0]}, expected {n}")
        elif fc1.dim != n:
            raise DimensionMismatch(f"input state has dimension {fc1.dim}, expected {n}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "fc1", fc1)
        object.__setattr__(self, "fc2", fc2)
        object.__setattr__(self, "coupling", coupling)
        object.__setattr__(self, "fc2_symmetric", sym)
        object.__setattr__(self, "env_dim", coupling.d_out // n)

    def input_state(self) -> np.ndarray:
        if isinstance(self.fc1, PureState):
            return self.fc1.density()
        if isinstance(self.fc1, DensityOperator):
            return np.array(self.fc1.matrix)
        col = self.fc1[:, 0]
        return np.outer(col, col.conj())


def propagate(ifm: Interferometer) -> DensityOperator:
    """Joint state of paths and environment right after the coupling."""
    return DensityOperator(apply_channel(ifm.coupling, ifm.input_state()))


def reduced_path_state(rho_se, n: int, de: int) -> np.ndarray:
    return partial_trace(rho_se, (n, de), keep="A")


def _path_matrix(rho_s, n: Optional[int] = None) -> np.ndarray:
    m = matrix_of(rho_s)
    if n is not None and m.shape[0] != n:
        raise DimensionMismatch(f"path state has dimension {m.shape[0]}, expected {n}")
    return m


def detection_distribution(rho_s, phi, fc2) -> np.ndarray:
    """Click probabilities of all detectors for phase setting ``phi``."""
    u = np.asarray(fc2, dtype=complex)
    m = _path_matrix(rho_s, u.shape[0])
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (u.shape[0],):
        raise DimensionMismatch(f"expected {u.shape[0]} phases, got {phi.shape}")
    a = u * np.exp(1j * phi)[None, :]
    return np.real(np.einsum("cz,zw,cw->c", a, m, a.conj()))


@dataclass(frozen=True)
class PhaseOptions:
    """Settings of the phase-synchronisation search.

    Attributes:
        restarts: Random starting points (uniform on ``[0, 2 pi)^n``).
        max_sweeps: Coordinate sweeps per restart.
        rel_tol: Relative improvement below which a restart stops.
        seed: Seed for the starting points.
        verify_grid: For ``n <= 3`` compare against the grid oracle and raise
            :class:`NoConvergence` if they differ by more than ``1e-6``.
    """

    restarts: int = 32
    max_sweeps: int = 5000
    rel_tol: float = 1e-12
    seed: int = 0
    verify_grid: bool = False


DEFAULT_PHASE_OPTIONS = PhaseOptions()


def _phase_extremum(q: np.ndarray, sign: int, opts: PhaseOptions):
    """Extremise ``v^H Q v`` over unit-modulus ``v``; returns ``(value, v)``."""
    n = q.shape[0]
    rng = random_source(opts.seed)
    starts = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, (opts.restarts, n)))
    # deterministic extra start aligned with the leading (or trailing) eigenvector
    w, vecs = np.linalg.eigh(herm(q))
    lead = vecs[:, -1] if sign > 0 else vecs[:, 0]
    aligned = np.where(np.abs(lead) > 0, lead / np.maximum(np.abs(lead), 1e-300), 1.0)
    starts = np.vstack([aligned[None, :], starts])
    value, v, _ = kernels.phase_ascent(q, starts, sign, opts.max_sweeps, opts.rel_tol)
    if opts.verify_grid and n <= 3:
        from .oracles import grid_phase_extremum

        ref, _ = grid_phase_extremum(q, sign)
        if abs(ref - value) > 1e-6:
            raise NoConvergence(1e-6, opts.max_sweeps, abs(ref - value))
    return value, v


def detector_form(rho_s, fc2, c: int) -> np.ndarray:
    """Matrix ``Q`` with ``p_c(phi) = v^H Q v`` at ``v = exp(-i phi)``."""
    u = np.asarray(fc2, dtype=complex)
    m = _path_matrix(rho_s, u.shape[0])
    if not 0 <= c < u.shape[0]:
        raise OutOfRange(f"detector index {c} outside [0, {u.shape[0]})")
    row = u[c]
    return herm(row[:, None] * m * row.conj()[None, :])


def _phases_from_v(v: np.ndarray) -> np.ndarray:
    return canonical_phases(-np.angle(v))


def pmax_detector(rho_s, fc2, c: int = 0, opts: PhaseOptions = DEFAULT_PHASE_OPTIONS):
    """Largest click probability of detector ``c`` over all phase settings.

    Returns:
        ``(value, phi)`` with ``phi`` a maximising phase vector (``phi[0] = 0``).
    """
    value, v = _phase_extremum(detector_form(rho_s, fc2, c), 1, opts)
    return value, _phases_from_v(v)


def pmin_detector(rho_s, fc2, c: int = 0, opts: PhaseOptions = DEFAULT_PHASE_OPTIONS):
    """Smallest click probability of detector ``c`` over all phase settings."""
    value, v = _phase_extremum(detector_form(rho_s, fc2, c), -1, opts)
    return max(value, 0.0), _phases_from_v(v)


def pdec_detector(rho_s, fc2, c: int = 0) -> float:
    """Click probability of detector ``c`` after full dephasing in the path basis."""
    u = np.asarray(fc2, dtype=complex)
    m = _path_matrix(rho_s, u.shape[0])
    return float(np.sum(np.real(np.diag(m)) * np.abs(u[c]) ** 2))


def visibility_naive(rho_s, fc2, c: int = 0, opts: PhaseOptions = DEFAULT_PHASE_OPTIONS) -> float:
    """Fringe contrast ``(pmax - pmin)/(pmax + pmin)`` of detector ``c``."""
    hi, _ = pmax_detector(rho_s, fc2, c, opts)
    lo, _ = pmin_detector(rho_s, fc2, c, opts)
    if hi + lo <= 1e-14:
        raise Degenerate("detector never clicks; contrast undefined")
    return float((hi - lo) / (hi + lo))


def max_unbiased_overlap(rho_s, opts: PhaseOptions = DEFAULT_PHASE_OPTIONS):
    r"""Maximise :math:`\langle w|\rho_S|w\rangle` over vectors unbiased to the path basis.

    Returns:
        ``(value, w)`` with ``|w_z| = 1/sqrt(n)``.
    """
    m = _path_matrix(rho_s)
    n = m.shape[0]
    value, v = _phase_extremum(herm(m) / n, 1, opts)
    return value, v / np.sqrt(n)


def _clamp_unit(x: float, atol: float = 1e-9) -> float:
    if -atol <= x < 0.0:
        return 0.0
    if 1.0 < x <= 1.0 + atol:
        return 1.0
    return float(x)


def pguess_max_c(rho_s, fc2, opts: PhaseOptions = DEFAULT_PHASE_OPTIONS) -> float:
    """``max_phi max_c p_c``; for a symmetric coupler this is the best unbiased overlap."""
    _require_symmetric(fc2)
    return max_unbiased_overlap(rho_s, opts)[0]


def visibility_from_pguess_max(p: float, n: int) -> float:
    return _clamp_unit((n * p - 1.0) / (n - 1.0))


def visibility_n(rho_s, fc2, opts: PhaseOptions = DEFAULT_PHASE_OPTIONS) -> float:
    """Wave measure ``(n pguess_max_C - 1)/(n - 1)`` for a symmetric ``fc2``."""
    u = _require_symmetric(fc2)
    return visibility_from_pguess_max(pguess_max_c(rho_s, u, opts), u.shape[0])


def path_distinguishability(rho_se, n: int, de: int, tol: float = DEFAULT_TOL) -> float:
    """Particle measure: rescaled guessing probability of the path given ``E``."""
    return distinguishability(cq_conditional_on_path(rho_se, n, de), tol)


def _path_blocks(rho_se, n: int, de: int) -> np.ndarray:
    """Diagonal blocks ``<z|rho_SE|z>`` as an ``(n, dE, dE)`` stack."""
    m = matrix_of(rho_se)
    if m.shape[0] != n * de:
        raise DimensionMismatch(f"dimension {m.shape[0]} is not {n}*{de}")
    t = m.reshape(n, de, n, de)
    return np.einsum("zazb->zab", t)


def postselected_cq(rho_se, fc2, phi, c: int = 0, de: Optional[int] = None):
    """Path copy and environment conditioned on detector ``c`` clicking.

    A copy of the path register is written to ``S'``; ``S`` is projected on
    the detector element ``C_c = U2^H |c><c| U2`` and traced out. Measuring
    ``S'`` in the path basis leaves the ensemble with weights
    ``|U2[c, z]|^2 <z|rho_SE|z>``, normalised by their total (the dephased
    click probability). The path phases are diagonal in the path basis and
    so do not change this ensemble.

    Returns:
        ``(cq, p_click)`` where ``p_click`` is the click probability of
        detector ``c`` at phases ``phi``.

    Raises:
        ZeroPostselectionProbability: if either probability is below 1e-12.
    """
    u = np.asarray(fc2, dtype=complex)
    n = u.shape[0]
    m = matrix_of(rho_se)
    if de is None:
        de = m.shape[0] // n
    p_click = float(detection_distribution(partial_trace(m, (n, de), "A"), phi, u)[c])
    if p_click <= ZERO_BRANCH:
        raise ZeroPostselectionProbability(f"detector {c} clicks with probability {p_click:.3g}")
    ops = np.abs(u[c])[:, None, None] ** 2 * _path_blocks(m, n, de)
    total = float(np.real(np.trace(ops, axis1=1, axis2=2)).sum())
    if total <= ZERO_BRANCH:
        raise ZeroPostselectionProbability("dephased click probability vanishes")
    return CQState.from_operators(ops / total), p_click


@dataclass(frozen=True)
class AsymmetricResult:
    D1: float
    V1: float
    pmax: float
    pdec: float
    phi: np.ndarray
    gap: float


def asymmetric_details(
    rho_se, fc2, tol: float = DEFAULT_TOL, c: int = 0, phi=None, de: Optional[int] = None,
    opts: PhaseOptions = DEFAULT_PHASE_OPTIONS,
) -> AsymmetricResult:
    """Post-selected measures with the quantities they are built from."""
    u = np.asarray(fc2, dtype=complex)
    n = u.shape[0]
    m = matrix_of(rho_se)
    if de is None:
        de = m.shape[0] // n
    rho_s = partial_trace(m, (n, de), "A")
    pdec = pdec_detector(rho_s, u, c)
    if pdec <= ZERO_BRANCH:
        raise Degenerate("dephased click probability vanishes")
    pmax, phi_max = pmax_detector(rho_s, u, c, opts)
    phi = phi_max if phi is None else np.asarray(phi, dtype=float)
    cq, _ = postselected_cq(m, u, phi, c, de)
    pg = pguess(cq, tol)
    d1 = _clamp_unit((n * pg.value - 1.0) / (n - 1.0), 1e-12)
    v1 = (pmax - pdec) / ((n - 1.0) * pdec)
    return AsymmetricResult(d1, float(v1), pmax, pdec, phi, pg.gap)


def asymmetric_quantities(rho_se, fc2, tol: float = DEFAULT_TOL, c: int = 0, phi=None, de=None):
    """``(D1, V1)`` for detector ``c``; ``phi`` defaults to the maximiser of ``p_c``."""
    r = asymmetric_details(rho_se, fc2, tol, c, phi, de)
    return r.D1, r.V1


@dataclass(frozen=True)
class ErasureRecord:
    """Sub-ensembles sorted by the outcome ``y`` of a measurement on ``E``.

    Attributes:
        probs: ``p_y`` of the kept outcomes (renormalised to sum to one).
        outcomes: Indices of the kept POVM outcomes.
        path_dists: ``p(z | y)`` for each kept outcome, shape ``(k, n)``.
        states: Conditional path states ``rho_{S,y}``, shape ``(k, n, n)``.
        phases: Per-branch phase settings at which detector 0 attains
            ``max_phi max_c p_c``.
        D_y: Per-branch distinguishability.
        V_y: Per-branch visibility.
        D: ``sum_y p_y D_y``.
        V: ``sum_y p_y V_y``.
        discarded: Total probability of dropped outcomes (``p_y <= 1e-12``).
    """

    probs: np.ndarray
    outcomes: np.ndarray
    path_dists: np.ndarray
    states: np.ndarray
    phases: np.ndarray
    D_y: np.ndarray
    V_y: np.ndarray
    D: float
    V: float
    discarded: float


def erasure_pipeline(rho_se, povm_y: POVM, fc2, tol: float = DEFAULT_TOL,
                     opts: PhaseOptions = DEFAULT_PHASE_OPTIONS) -> ErasureRecord:
    """Measure ``E`` with ``povm_y`` and evaluate both measures on every branch."""
    u = _require_symmetric(fc2)
    n = u.shape[0]
    m = matrix_of(rho_se)
    de = povm_y.dim
    if m.shape[0] != n * de:
        raise DimensionMismatch(f"state dimension {m.shape[0]} is not {n}*{de}")
    t = m.reshape(n, de, n, de)
    branches = np.einsum("yba,zawb->yzw", povm_y.elements, t)
    p_all = np.real(np.einsum("yzz->y", branches))
    keep = np.flatnonzero(p_all > ZERO_BRANCH)
    discarded = float(np.clip(p_all, 0.0, None).sum() - p_all[keep].sum())
    probs = p_all[keep] / p_all[keep].sum()
    states = np.array([herm(branches[y]) / p_all[y] for y in keep])
    dists = np.clip(np.real(np.einsum("yzz->yz", states)), 0.0, None)
    d_y = np.array([_clamp_unit((n * q.max() - 1.0) / (n - 1.0)) for q in dists])
    v_y, phases = [], []
    for s in states:
        value, w = max_unbiased_overlap(s, opts)
        v_y.append(visibility_from_pguess_max(value, n))
        # phases that steer the best unbiased vector onto detector 0
        phases.append(canonical_phases(-np.angle(w) - np.angle(u[0])))
    v_y = np.array(v_y)
    return ErasureRecord(
        probs, keep, dists, states, np.array(phases), d_y, v_y,
        float(probs @ d_y), float(probs @ v_y), discarded,
    )


def fourier_family_basis(theta) -> np.ndarray:
    """Columns ``U_theta F |x>``, a basis unbiased to the path basis."""
    theta = np.asarray(theta, dtype=float)
    return np.exp(1j * theta)[:, None] * fourier_matrix(theta.shape[0])


def minimize_over_fourier_family(objective, n: int, restarts: int = 8, seed: int = 0):
    """Minimise ``objective(theta)`` over phase vectors ``theta`` with ``theta[0] = 0``.

    ``n = 2`` uses a bounded scalar search seeded on a 64-point grid; larger
    ``n`` uses Nelder-Mead from the zero phase and ``restarts`` random points.

    Returns:
        ``(value, theta)``.
    """
    full = lambda t: objective(np.concatenate([[0.0], np.atleast_1d(t)]))
    if n == 2:
        grid = 2.0 * np.pi * np.arange(64) / 64
        vals = [full(g) for g in grid]
        i = int(np.argmin(vals))
        step = 2.0 * np.pi / 64
        res = minimize_scalar(full, bounds=(grid[i] - step, grid[i] + step), method="bounded",
                              options={"xatol": 1e-12})
        best = (res.fun, res.x) if res.fun < vals[i] else (vals[i], grid[i])
        return float(best[0]), np.array([0.0, float(best[1]) % (2.0 * np.pi)])
    rng = random_source(seed)
    starts = [np.zeros(n - 1)] + [rng.uniform(0.0, 2.0 * np.pi, n - 1) for _ in range(restarts)]
    best_val, best_t = np.inf, None
    for s in starts:
        res = minimize(full, s, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 4000})
        if res.fun < best_val:
            best_val, best_t = res.fun, res.x
    return float(best_val), np.concatenate([[0.0], np.mod(best_t, 2.0 * np.pi)])


def secrecy_of_unbiased_basis(rho_s, theta) -> float:
    """``half_norm`` of the outcome distribution in the basis ``U_theta F``."""
    b = fourier_family_basis(theta)
    p = np.clip(np.real(np.einsum("zx,zw,wx->x", b.conj(), matrix_of(rho_s), b)), 0.0, None)
    return half_norm(p / p.sum()).value


def example1_state(n: int) -> PureState:
    """Equal superposition of the Fourier states ``F|x>`` for ``x = 1..n-1``."""
    if n < 3:
        raise BadSize("the example needs n >= 3")
    f = fourier_matrix(n)
    return PureState(f[:, : n - 1].sum(axis=1) / np.sqrt(n - 1))


def example1_phases(n: int) -> np.ndarray:
    """``phi_z = 2 pi z / n`` for ``z = 1..n``."""
    return 2.0 * np.pi * np.arange(1, n + 1) / n
