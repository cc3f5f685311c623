"""Dense complex linear algebra and random sampling.

All routines operate on plain ``numpy`` arrays of dtype ``complex128``.
Random draws go through an explicit :class:`numpy.random.Generator`, so a
seed fully determines every sampled matrix.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import BadRank, DimensionMismatch, NotHermitian, NotPSD, NotSquare

HERMITIAN_ATOL = 1e-10
PSD_ATOL = 1e-8

RandomSource = np.random.Generator


class HermitianEigenSystem(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def random_source(seed: int) -> RandomSource:
    """Return a generator whose draw sequence depends only on ``seed``."""
    return np.random.default_rng(int(seed))


def as_square(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotSquare(f"expected a square matrix, got shape {m.shape}")
    return m


def herm(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def hermitian_eig(m, atol: float = HERMITIAN_ATOL) -> HermitianEigenSystem:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues ascending."""
    m = as_square(m)
    if m.size and np.max(np.abs(m - m.conj().T)) > atol:
        raise NotHermitian("matrix is not Hermitian within %g" % atol)
    w, v = np.linalg.eigh(herm(m))
    return HermitianEigenSystem(w, v)


def psd_function(m: np.ndarray, fn) -> np.ndarray:
    """Apply ``fn`` to the clamped spectrum of a Hermitian PSD matrix.

    No validation; callers in hot loops use this directly.
    """
    w, v = np.linalg.eigh(herm(m))
    w = np.clip(w, 0.0, None)
    return (v * fn(w)) @ v.conj().T


def _noise_floor(w: np.ndarray) -> float:
    # eigenvalues this small are indistinguishable from zero after eigh
    return 10.0 * w.size * np.finfo(float).eps * max(np.max(np.abs(w)), 1e-300)


def psd_sqrt(m: np.ndarray) -> np.ndarray:
    """Square root of a Hermitian PSD matrix, unvalidated.

    Eigenvalues below the eigensolver's noise floor are set to zero; taking
    their square root would turn ``1e-17`` of round-off into ``3e-9``.
    """
    w, v = np.linalg.eigh(herm(m))
    w = np.where(w > _noise_floor(w), w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def matrix_sqrt_psd(m) -> np.ndarray:
    """Principal square root of a positive semidefinite matrix.

    Negative eigenvalues down to ``-1e-8`` and positive ones below the
    eigensolver noise floor are treated as zero; anything below ``-1e-8``
    raises :class:`NotPSD`.
    """
    w, v = hermitian_eig(m)
    if w.size and w[0] < -PSD_ATOL:
        raise NotPSD(f"minimum eigenvalue {w[0]:.3g} is negative")
    w = np.where(w > _noise_floor(w), w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def _check_pair(rho, sigma):
    rho = as_square(rho)
    sigma = as_square(sigma)
    if rho.shape != sigma.shape:
        raise DimensionMismatch(f"{rho.shape} vs {sigma.shape}")
    return rho, sigma


def fidelity(rho, sigma) -> float:
    r"""Uhlmann fidelity :math:`(\mathrm{Tr}\sqrt{\sqrt\rho\,\sigma\sqrt\rho})^2`.

    Evaluated as the squared nuclear norm of :math:`\sqrt\rho\sqrt\sigma`,
    which is symmetric in its arguments by construction.
    """
    rho, sigma = _check_pair(rho, sigma)
    root = matrix_sqrt_psd(rho) @ matrix_sqrt_psd(sigma)
    f = np.sum(np.linalg.svd(root, compute_uv=False)) ** 2
    return float(min(max(f, 0.0), 1.0))


def trace_distance(rho, sigma) -> float:
    rho, sigma = _check_pair(rho, sigma)
    w = np.linalg.eigvalsh(herm(rho - sigma))
    return float(min(0.5 * np.sum(np.abs(w)), 1.0))


def haar_unitary(d: int, rng: RandomSource) -> np.ndarray:
    """Haar-distributed unitary via QR of a Ginibre matrix with phase fix."""
    if d < 1:
        raise ValueError("dimension must be positive")
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


def haar_state(d: int, rng: RandomSource) -> np.ndarray:
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return z / np.linalg.norm(z)


def random_density(d: int, rank: int, rng: RandomSource) -> np.ndarray:
    """Random density matrix of rank at most ``rank``.

    Partial trace of a Haar-random pure state on a ``d x rank`` bipartition
    (the induced Hilbert-Schmidt ensemble).
    """
    if not 1 <= rank <= d:
        raise BadRank(f"rank {rank} outside [1, {d}]")
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    rho = herm(rho) / np.trace(rho).real
    return rho


def random_probability(d: int, rng: RandomSource) -> np.ndarray:
    """Uniform draw from the probability simplex, occasionally with zeros."""
    p = rng.dirichlet(np.ones(d))
    if d > 1 and rng.random() < 0.1:
        p[rng.integers(d)] = 0.0
        p /= p.sum()
    return p
