"""Quantum-state data model.

Matrices are stored as read-only ``complex128`` arrays. Composite systems use
the Kronecker ordering of their factors, so for ``S (x) E`` the basis index is
``z * dE + e``. Paths are labelled ``z = 1..n`` in prose and ``0..n-1`` in
storage.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    BadSize,
    DimensionMismatch,
    InvalidState,
    NotOrthonormal,
)
from .numerics import RandomSource, as_square, haar_unitary, herm, psd_sqrt

STATE_ATOL = 1e-10
POVM_ATOL = 1e-9
ZERO_PROBABILITY = 1e-14


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def matrix_of(x) -> np.ndarray:
    """Raw matrix of a :class:`DensityOperator` or anything array-like."""
    return as_square(getattr(x, "matrix", x))


def check_density(m: np.ndarray, atol: float = STATE_ATOL) -> None:
    if np.max(np.abs(m - m.conj().T)) > atol:
        raise InvalidState("density operator is not Hermitian")
    tr = np.trace(m).real
    if abs(tr - 1.0) > atol:
        raise InvalidState(f"trace {tr:.12g} differs from 1")
    if np.linalg.eigvalsh(herm(m))[0] < -atol:
        raise InvalidState("density operator has a negative eigenvalue")


@dataclass(frozen=True)
class DensityOperator:
    matrix: np.ndarray

    def __post_init__(self):
        m = as_square(self.matrix)
        check_density(m)
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_pure(cls, psi) -> "DensityOperator":
        psi = np.asarray(psi, dtype=complex)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, d: int) -> "DensityOperator":
        return cls(np.eye(d) / d)


@dataclass(frozen=True)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.ndim != 1:
            raise InvalidState("amplitudes must be a vector")
        if abs(np.linalg.norm(a) - 1.0) > STATE_ATOL:
            raise InvalidState(f"state norm {np.linalg.norm(a):.12g} differs from 1")
        object.__setattr__(self, "amplitudes", _frozen(a))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def density(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


@dataclass(frozen=True)
class POVM:
    elements: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.elements, dtype=complex)
        if e.ndim != 3 or e.shape[1] != e.shape[2] or e.shape[0] < 1:
            raise InvalidState(f"POVM elements must have shape (k, d, d), got {e.shape}")
        for m in e:
            if np.max(np.abs(m - m.conj().T)) > STATE_ATOL:
                raise InvalidState("POVM element is not Hermitian")
            if np.linalg.eigvalsh(herm(m))[0] < -STATE_ATOL:
                raise InvalidState("POVM element is not positive semidefinite")
        if np.max(np.abs(e.sum(axis=0) - np.eye(e.shape[1]))) > POVM_ATOL:
            raise InvalidState("POVM elements do not sum to the identity")
        object.__setattr__(self, "elements", _frozen(e))

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    def __len__(self) -> int:
        return self.elements.shape[0]

    @classmethod
    def projective(cls, basis) -> "POVM":
        """Rank-one projectors onto the columns of ``basis``."""
        b = np.asarray(basis, dtype=complex)
        return cls(np.einsum("ix,jx->xij", b, b.conj()))


@dataclass(frozen=True)
class QuantumChannel:
    """Trace-preserving map given by Kraus operators of shape ``(d_out, d_in)``."""

    kraus_ops: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.kraus_ops, dtype=complex)
        if k.ndim == 2:
            k = k[None]
        if k.ndim != 3:
            raise InvalidState("Kraus operators must have shape (m, d_out, d_in)")
        tp = np.einsum("kij,kil->jl", k.conj(), k)
        if np.max(np.abs(tp - np.eye(k.shape[2]))) > POVM_ATOL:
            raise InvalidState("channel is not trace preserving")
        object.__setattr__(self, "kraus_ops", _frozen(k))

    @property
    def d_in(self) -> int:
        return self.kraus_ops.shape[2]

    @property
    def d_out(self) -> int:
        return self.kraus_ops.shape[1]

    def compose(self, first: "QuantumChannel") -> "QuantumChannel":
        """The channel ``self o first`` (apply ``first``, then ``self``)."""
        if first.d_out != self.d_in:
            raise DimensionMismatch(f"cannot compose {first.d_out} -> {self.d_in}")
        ops = np.einsum("aij,bjk->abik", self.kraus_ops, first.kraus_ops)
        return QuantumChannel(ops.reshape(-1, self.d_out, first.d_in))

    @classmethod
    def identity(cls, d: int) -> "QuantumChannel":
        return cls(np.eye(d)[None])

    @classmethod
    def unitary(cls, u) -> "QuantumChannel":
        return cls(np.asarray(u, dtype=complex)[None])


@dataclass(frozen=True)
class CQState:
    r"""Classical-quantum ensemble :math:`\sum_x p_x |x\rangle\langle x| \otimes \rho^x_B`.

    Outcomes with :math:`p_x \le 10^{-14}` carry the maximally mixed state as
    a placeholder and are flagged in ``zero``; solvers skip them.
    """

    probs: np.ndarray
    states: np.ndarray
    zero: np.ndarray = None

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        s = np.asarray(self.states, dtype=complex)
        if p.ndim != 1 or s.ndim != 3 or s.shape[0] != p.shape[0] or s.shape[1] != s.shape[2]:
            raise InvalidState("CQ state needs probs (d,) and states (d, dB, dB)")
        if np.any(p < -STATE_ATOL) or abs(p.sum() - 1.0) > STATE_ATOL:
            raise InvalidState("outcome probabilities do not form a distribution")
        for rho in s:
            check_density(rho)
        p = np.clip(p, 0.0, None)
        zero = p <= ZERO_PROBABILITY if self.zero is None else np.asarray(self.zero, dtype=bool)
        p.setflags(write=False)
        zero.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "states", _frozen(s))
        object.__setattr__(self, "zero", zero)

    @property
    def num_outcomes(self) -> int:
        return self.probs.shape[0]

    @property
    def dim_b(self) -> int:
        return self.states.shape[1]

    def weighted(self) -> np.ndarray:
        """Stack of subnormalised operators ``p_x rho_x``."""
        return self.probs[:, None, None] * self.states

    @classmethod
    def from_operators(cls, ops) -> "CQState":
        """Build from subnormalised blocks ``p_x rho_x`` whose traces sum to one."""
        ops = np.asarray(ops, dtype=complex)
        d, db = ops.shape[0], ops.shape[1]
        probs = np.real(np.trace(ops, axis1=1, axis2=2))
        total = probs.sum()
        if abs(total - 1.0) > 1e-9:
            raise InvalidState(f"blocks have total trace {total:.12g}")
        probs = np.clip(probs / total, 0.0, None)
        zero = probs <= ZERO_PROBABILITY
        states = np.empty_like(ops)
        for x in range(d):
            if zero[x]:
                states[x] = np.eye(db) / db
                continue
            rho = herm(ops[x]) / probs[x] / total
            w, v = np.linalg.eigh(rho)
            if w[0] < 0.0:
                w = np.clip(w, 0.0, None)
                rho = (v * w) @ v.conj().T
            states[x] = rho / np.trace(rho).real
        probs[zero] = 0.0
        probs /= probs.sum()
        return cls(probs, states, zero)

    @classmethod
    def classical(cls, joint) -> "CQState":
        """CQ state whose side information is a classical register: ``joint[x, y] = P(x, y)``."""
        joint = np.asarray(joint, dtype=float)
        ops = np.zeros((joint.shape[0], joint.shape[1], joint.shape[1]), dtype=complex)
        idx = np.arange(joint.shape[1])
        ops[:, idx, idx] = joint
        return cls.from_operators(ops)

    @classmethod
    def trivial(cls, probs) -> "CQState":
        probs = np.asarray(probs, dtype=float)
        return cls.from_operators(probs[:, None, None].astype(complex))


@dataclass(frozen=True)
class BasisFamily:
    """Basis unbiased to the path basis: columns ``U_phi F |x>``."""

    n: int
    phases: np.ndarray
    matrix: np.ndarray


def fourier_matrix(n: int) -> np.ndarray:
    """``F[z, x] = omega**(z x) / sqrt(n)`` with 1-based ``z, x`` and ``omega = exp(2 pi i / n)``."""
    idx = np.arange(1, n + 1)
    return np.exp(2j * np.pi * np.outer(idx, idx) / n) / np.sqrt(n)


def phase_unitary(phi) -> np.ndarray:
    return np.diag(np.exp(1j * np.asarray(phi, dtype=float)))


def mub_basis(n: int, phi) -> BasisFamily:
    phi = np.asarray(phi, dtype=float)
    if n < 2 or phi.shape != (n,):
        raise BadSize(f"need n >= 2 and {n} phases, got n={n}, phases {phi.shape}")
    w = np.exp(1j * phi)[:, None] * fourier_matrix(n)
    return BasisFamily(n, phi.copy(), _frozen(w))


def check_orthonormal(basis, atol: float = STATE_ATOL) -> np.ndarray:
    b = as_square(getattr(basis, "matrix", basis))
    if np.max(np.abs(b.conj().T @ b - np.eye(b.shape[0]))) > atol:
        raise NotOrthonormal("basis columns are not orthonormal")
    return b


def overlap_c(basis_x, basis_y) -> float:
    r"""Maximal overlap :math:`c = \max_{x,y} |\langle X_x|Y_y\rangle|^2`."""
    bx = check_orthonormal(basis_x)
    by = check_orthonormal(basis_y)
    if bx.shape != by.shape:
        raise DimensionMismatch(f"{bx.shape} vs {by.shape}")
    return float(np.max(np.abs(bx.conj().T @ by) ** 2))


def partial_trace(rho, dims: Sequence[int], keep: str = "A") -> np.ndarray:
    """Reduced state of a bipartite operator on ``A (x) B``."""
    m = matrix_of(rho)
    da, db = dims
    if m.shape[0] != da * db:
        raise DimensionMismatch(f"dimension {m.shape[0]} is not {da}*{db}")
    t = m.reshape(da, db, da, db)
    if keep == "A":
        return np.einsum("ajbj->ab", t)
    if keep == "B":
        return np.einsum("iaib->ab", t)
    raise ValueError("keep must be 'A' or 'B'")


def apply_channel(chan: QuantumChannel, rho) -> np.ndarray:
    m = matrix_of(rho)
    if m.shape[0] != chan.d_in:
        raise DimensionMismatch(f"channel input {chan.d_in} vs state {m.shape[0]}")
    k = chan.kraus_ops
    return herm(np.einsum("kij,jl,kml->im", k, m, k.conj()))


def born_distribution(povm: POVM, rho) -> np.ndarray:
    m = matrix_of(rho)
    if m.shape[0] != povm.dim:
        raise DimensionMismatch(f"POVM dim {povm.dim} vs state {m.shape[0]}")
    return np.real(np.einsum("kij,ji->k", povm.elements, m))


def dephase(rho) -> np.ndarray:
    """Zero every off-diagonal entry in the path basis."""
    m = matrix_of(rho)
    return np.diag(np.diag(m))


def measure_subsystem(rho_ab, basis, dims: Sequence[int]) -> CQState:
    """Measure ``A`` of ``rho_AB`` in the orthonormal ``basis`` (columns); keep ``B``."""
    m = matrix_of(rho_ab)
    da, db = dims
    if m.shape[0] != da * db:
        raise DimensionMismatch(f"dimension {m.shape[0]} is not {da}*{db}")
    b = as_square(getattr(basis, "matrix", basis))
    if b.shape[0] != da:
        raise DimensionMismatch(f"basis dim {b.shape[0]} vs subsystem {da}")
    t = m.reshape(da, db, da, db)
    ops = np.einsum("ix,iajb,jx->xab", b.conj(), t, b)
    return CQState.from_operators(ops)


def cq_conditional_on_path(rho_se, n: int, de: int) -> CQState:
    """Path register ``Z`` with the environment as quantum side information."""
    return measure_subsystem(rho_se, np.eye(n), (n, de))


def measure_side_information(cq: CQState, povm: POVM) -> CQState:
    """Replace ``B`` by the classical outcome register of ``povm``."""
    if povm.dim != cq.dim_b:
        raise DimensionMismatch(f"POVM dim {povm.dim} vs side information {cq.dim_b}")
    joint = np.real(np.einsum("kij,xji->xk", povm.elements, cq.weighted()))
    return CQState.classical(np.clip(joint, 0.0, None) / np.clip(joint, 0.0, None).sum())


def purify(cq: CQState) -> PureState:
    r"""Purification on ``X (x) X' (x) B (x) R`` with ``dim R = dim B``.

    :math:`|\psi\rangle = \sum_x \sqrt{p_x}\,|x\rangle|x\rangle(\sqrt{\rho_x}\otimes 1)|\Omega\rangle`
    with :math:`|\Omega\rangle = \sum_i |i\rangle_B|i\rangle_R`.
    """
    d, db = cq.num_outcomes, cq.dim_b
    psi = np.zeros((d, d, db, db), dtype=complex)
    for x in range(d):
        psi[x, x] = np.sqrt(cq.probs[x]) * psd_sqrt(cq.states[x])
    vec = psi.reshape(-1)
    return PureState(vec / np.linalg.norm(vec))


def random_povm(d: int, k: int, rng: RandomSource, mix: float = 0.0) -> POVM:
    """Random ``k``-outcome POVM on dimension ``d``.

    The columns of a Haar unitary are coarse-grained into ``k`` nonempty
    groups; for ``k > d`` the grouping happens on a ``d*k``-dimensional
    Naimark extension. Each element is finally mixed with ``I/k`` by a weight
    drawn uniformly from ``[0, mix]``.
    """
    big = d if k <= d else d * k
    u = haar_unitary(big, rng)[:, :d]
    labels = np.concatenate([np.arange(k), rng.integers(0, k, big - k)])
    rng.shuffle(labels)
    elems = np.zeros((k, d, d), dtype=complex)
    for y in range(k):
        rows = u[labels == y]
        elems[y] = herm(rows.conj().T @ rows)
    t = rng.uniform(0.0, mix) if mix > 0 else 0.0
    elems = (1.0 - t) * elems + t * np.eye(d)[None] / k
    return POVM(elems)
