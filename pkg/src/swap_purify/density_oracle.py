"""Brute-force swap test on explicit density matrices.

The channel is applied literally: project the joint state ``rho (x) sigma``
with ``(I +/- X)/2`` (``X`` the swap operator) and trace out the second
register. Nothing here relies on the spectral formulas in
:mod:`swap_purify.spectrum`, which is what makes it usable as an oracle.

Dimensions are limited to ``MAX_DIM`` since the joint state has ``d**2`` rows.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .spectrum import Spectrum

MAX_DIM = 8
STATE_TOL = 1e-10


class DensityMatrixError(ValueError):
    pass


class DegeneratePrincipalError(DensityMatrixError):
    pass


class ZeroProbabilityError(ArithmeticError):
    """The requested measurement branch has probability zero."""


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace complex matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
            raise DensityMatrixError(f"expected a square matrix of size >= 2, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > STATE_TOL:
            raise DensityMatrixError("matrix is not Hermitian")
        if abs(np.trace(m) - 1) > STATE_TOL:
            raise DensityMatrixError(f"trace is {np.trace(m).real!r}, not 1")
        if np.linalg.eigvalsh(m)[0] < -STATE_TOL:
            raise DensityMatrixError("matrix is not positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


@dataclass(frozen=True)
class SwapOutcome:
    outcome_bit: int
    probability: float
    unnormalized: np.ndarray

    @property
    def post_state(self) -> DensityMatrix:
        """Normalized reduced state on the kept register."""
        if self.probability <= 1e-14:
            raise ZeroProbabilityError(f"outcome a={self.outcome_bit} has zero probability")
        return DensityMatrix(_hermitize(self.unnormalized / self.probability))


def _hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def _unit(psi) -> np.ndarray:
    psi = np.array(psi, dtype=complex).ravel()
    if abs(np.linalg.norm(psi) - 1) > STATE_TOL:
        raise DensityMatrixError(f"state vector has norm {np.linalg.norm(psi)!r}")
    return psi


def make_depolarized(psi, delta: float) -> DensityMatrix:
    """``(1 - delta) |psi><psi| + (delta / d) I``."""
    psi = _unit(psi)
    if not 0 <= delta < 1:
        raise DensityMatrixError(f"delta must lie in [0, 1), got {delta!r}")
    d = psi.size
    return DensityMatrix((1 - delta) * np.outer(psi, psi.conj()) + (delta / d) * np.eye(d))


def orthogonal_tail(psi, eigenvalues, rng: np.random.Generator | None = None) -> DensityMatrix:
    """State with the given spectrum supported on the complement of ``psi``.

    The tail eigenbasis is a Haar-random basis of the complement when ``rng``
    is given, otherwise the complement of ``psi`` in the computational basis
    (via QR).
    """
    psi = _unit(psi)
    d = psi.size
    ev = np.array(eigenvalues, dtype=float).ravel()
    if ev.size > d - 1:
        raise DensityMatrixError("tail has more eigenvalues than the complement has dimensions")
    seed = np.eye(d, dtype=complex)
    if rng is not None:
        seed = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    seed[:, 0] = psi
    q, _ = np.linalg.qr(seed)
    basis = q[:, 1:1 + ev.size]
    return DensityMatrix((basis * ev) @ basis.conj().T)


def make_general_noisy(psi, eta: float, tail: DensityMatrix) -> DensityMatrix:
    """``(1 - eta) |psi><psi| + eta * tail`` with ``tail`` orthogonal to ``psi``."""
    psi = _unit(psi)
    if tail.dim != psi.size:
        raise DensityMatrixError("tail and psi have different dimensions")
    if not 0 <= eta < 1:
        raise DensityMatrixError(f"eta must lie in [0, 1), got {eta!r}")
    if np.linalg.norm(tail.matrix @ psi) > 1e-9:
        raise DensityMatrixError("tail is not supported on the complement of psi")
    if not 1 - eta > eta * np.linalg.eigvalsh(tail.matrix)[-1]:
        raise DegeneratePrincipalError("psi would not be the unique principal eigenvector")
    return DensityMatrix((1 - eta) * np.outer(psi, psi.conj()) + eta * tail.matrix)


@lru_cache(maxsize=MAX_DIM + 1)
def swap_operator(d: int) -> np.ndarray:
    """``X |i>|j> = |j>|i>`` on two d-dimensional registers."""
    x = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            x[j * d + i, i * d + j] = 1.0
    x.setflags(write=False)
    return x


def partial_trace_second(m: np.ndarray, d: int) -> np.ndarray:
    return np.einsum("ijkj->ik", m.reshape(d, d, d, d))


def swap_test_channel(rho: DensityMatrix, sigma: DensityMatrix) -> tuple[SwapOutcome, SwapOutcome]:
    """Both measurement branches of the swap test on ``rho (x) sigma``.

    Returns the outcomes for ``a = 0`` and ``a = 1`` in that order. Each
    carries the sub-normalized reduced state of the first register.
    """
    if rho.dim != sigma.dim:
        raise DensityMatrixError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    d = rho.dim
    if d > MAX_DIM:
        raise DensityMatrixError(f"oracle supports d <= {MAX_DIM}, got {d}")
    joint = np.kron(rho.matrix, sigma.matrix)
    eye = np.eye(d * d)
    x = swap_operator(d)
    outcomes = []
    for a in (0, 1):
        proj = 0.5 * (eye + (-1) ** a * x)
        reduced = _hermitize(partial_trace_second(proj @ joint @ proj, d))
        prob = float(np.real(np.trace(reduced)))
        outcomes.append(SwapOutcome(a, prob, reduced))
    return outcomes[0], outcomes[1]


def spectrum_of(rho: DensityMatrix) -> Spectrum:
    """Descending eigenvalues of ``rho`` as a :class:`Spectrum`."""
    ev = np.linalg.eigvalsh(rho.matrix)[::-1]
    if ev[0] - ev[1] < STATE_TOL:
        raise DegeneratePrincipalError(f"principal gap {ev[0] - ev[1]:.3e} is too small")
    ev = np.clip(ev, 0.0, None)
    return Spectrum(ev / ev.sum())


def principal_eigenvector(rho: DensityMatrix) -> np.ndarray:
    _, vecs = np.linalg.eigh(rho.matrix)
    return vecs[:, -1]


def fidelity_pure(psi, rho: DensityMatrix) -> float:
    """``<psi| rho |psi>``."""
    psi = np.asarray(psi, dtype=complex)
    return float(np.real(psi.conj() @ rho.matrix @ psi))


def diagonal_state(spectrum: Spectrum, unitary: np.ndarray | None = None) -> DensityMatrix:
    """Density matrix with the given spectrum, rotated by ``unitary`` if given."""
    diag = np.diag(spectrum.values).astype(complex)
    if unitary is None:
        return DensityMatrix(diag)
    return DensityMatrix(_hermitize(unitary @ diag @ unitary.conj().T))


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density_matrix(d: int, rng: np.random.Generator, min_gap: float = 1e-4) -> DensityMatrix:
    """Draw ``G G^dagger / Tr(G G^dagger)`` with complex Gaussian ``G``.

    Draws are repeated until the principal gap is at least ``min_gap``.
    """
    while True:
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        m = g @ g.conj().T
        m = _hermitize(m / np.real(np.trace(m)))
        ev = np.linalg.eigvalsh(m)
        if ev[-1] - ev[-2] >= min_gap:
            return DensityMatrix(m)

