"""Dense Hermitian linear algebra for small quantum states.

Density matrices, von Neumann and relative entropies, partial traces over
a qubit (x) oscillator bipartition, Bloch-vector conversion and Gibbs
states.  Everything is plain dense numpy; the largest matrices in practice
are a few hundred rows, where dense eigensolvers beat anything clever.

Basis convention used throughout the package: for the qubit, index 0 is
the excited state and index 1 the ground state, so ``sigma_z = diag(1, -1)``
and a density matrix reads ``[[p_excited, c], [conj(c), p_ground]]``.
Joint qubit+oscillator states are ordered qubit ⊗ Fock, i.e. flat index
``q * n_fock + n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
EIG_CLAMP = 1e-15

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SIGMA_PLUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)   # |1><0|
SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)  # |0><1|
PROJ_EXCITED = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
PROJ_GROUND = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)


class InvalidStateError(ValueError):
    """Input violates a density-matrix invariant."""


class DimensionMismatchError(ValueError):
    """Operands have incompatible dimensions."""


class DensityMatrix:
    """Validated density matrix: Hermitian, unit trace, PSD within tolerance.

    The wrapped array is made read-only so instances can be shared freely
    across threads.  ``_min_eig`` lets internal callers that already hold
    the spectrum skip the eigenvalue check; public code should not use it.
    """

    __slots__ = ("mat",)

    def __init__(self, mat, *, _min_eig: float | None = None):
        arr = np.array(mat, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise InvalidStateError(f"expected a square matrix, got shape {arr.shape}")
        herm = np.abs(arr - arr.conj().T).max()
        if herm > HERMITICITY_TOL:
            raise InvalidStateError(f"not Hermitian: max |M - M^dag| = {herm:.3e}")
        tr_dev = abs(arr.trace() - 1.0)
        if tr_dev > TRACE_TOL:
            raise InvalidStateError(f"trace deviates from 1 by {tr_dev:.3e}")
        min_eig = float(np.linalg.eigvalsh(arr)[0]) if _min_eig is None else float(_min_eig)
        if min_eig < -PSD_TOL:
            raise InvalidStateError(f"not positive semidefinite: min eigenvalue {min_eig:.3e}")
        arr.setflags(write=False)
        self.mat = arr

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def eigvals(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.mat)

    def __repr__(self) -> str:  # pragma: no cover
        return f"DensityMatrix(dim={self.dim})"


@dataclass(frozen=True)
class BlochVector:
    """Qubit Bloch vector (x, y, z) with |r| <= 1 up to tolerance."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if self.r > 1.0 + 1e-12:
            raise InvalidStateError(f"Bloch vector outside the ball: r = {self.r!r}")

    @property
    def ell(self) -> float:
        """Transverse radius sqrt(x^2 + y^2)."""
        return math.hypot(self.x, self.y)

    @property
    def r(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)


def _as_matrix(rho) -> np.ndarray:
    return rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def entropy_of_spectrum(eigenvalues: np.ndarray, clamp: float = EIG_CLAMP) -> float:
    """-sum(p ln p) over eigenvalues, treating values below ``clamp`` as zero.

    Eigenvalues in [-PSD_TOL, clamp] are numerical noise around zero and
    contribute nothing; anything below -PSD_TOL is a genuine positivity
    violation and raises.
    """
    w = np.asarray(eigenvalues, dtype=float)
    if w.size and w.min() < -PSD_TOL:
        raise InvalidStateError(f"negative eigenvalue {w.min():.3e} beyond tolerance")
    w = w[w > clamp]
    return float(-np.sum(w * np.log(w)))


def von_neumann_entropy(rho: DensityMatrix, clamp: float = EIG_CLAMP) -> float:
    """Von Neumann entropy in nats."""
    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix(rho)
    return entropy_of_spectrum(rho.eigvals(), clamp)


def relative_entropy(sigma: DensityMatrix, rho: DensityMatrix, clamp: float = EIG_CLAMP) -> float:
    """Relative entropy D(sigma || rho) = Tr[sigma (ln sigma - ln rho)] in nats.

    Returns ``math.inf`` when the support of ``sigma`` is not contained in
    the support of ``rho`` (detected through the eigenvalue clamp).
    """
    s = _as_matrix(sigma)
    r = _as_matrix(rho)
    if s.shape != r.shape:
        raise DimensionMismatchError(f"shape mismatch: {s.shape} vs {r.shape}")
    ws, vs = np.linalg.eigh(s)
    wr, vr = np.linalg.eigh(r)
    null_r = wr <= clamp
    if np.any(null_r):
        # weight of sigma inside the null space of rho
        overlap = np.einsum("ij,jk,ki->i", vr[:, null_r].conj().T, s, vr[:, null_r]).real
        if overlap.sum() > 1e-12:
            return math.inf
    keep_s = ws > clamp
    keep_r = ~null_r
    term_s = float(np.sum(ws[keep_s] * np.log(ws[keep_s])))
    # |<v_s_j | v_r_k>|^2 cross overlaps
    cross = np.abs(vs[:, keep_s].conj().T @ vr[:, keep_r]) ** 2
    term_r = float(ws[keep_s] @ cross @ np.log(wr[keep_r]))
    return term_s - term_r


def _ptrace_bath_raw(rho_ab: np.ndarray, bath_dim: int) -> np.ndarray:
    r4 = rho_ab.reshape(2, bath_dim, 2, bath_dim)
    return r4.diagonal(axis1=1, axis2=3).sum(axis=-1)


def _ptrace_system_raw(rho_ab: np.ndarray, bath_dim: int) -> np.ndarray:
    r4 = rho_ab.reshape(2, bath_dim, 2, bath_dim)
    return r4.diagonal(axis1=0, axis2=2).sum(axis=-1)


def partial_trace_bath(rho_ab: DensityMatrix, bath_dim: int) -> DensityMatrix:
    """Trace out the oscillator of a qubit ⊗ Fock state; returns the 2x2 qubit state."""
    m = _as_matrix(rho_ab)
    if m.shape[0] != 2 * bath_dim:
        raise DimensionMismatchError(
            f"joint dimension {m.shape[0]} is not 2 * bath_dim = {2 * bath_dim}")
    return DensityMatrix(_ptrace_bath_raw(m, bath_dim))


def partial_trace_system(rho_ab: DensityMatrix, bath_dim: int) -> DensityMatrix:
    """Trace out the qubit; returns the bath_dim x bath_dim oscillator state."""
    m = _as_matrix(rho_ab)
    if m.shape[0] != 2 * bath_dim:
        raise DimensionMismatchError(
            f"joint dimension {m.shape[0]} is not 2 * bath_dim = {2 * bath_dim}")
    return DensityMatrix(_ptrace_system_raw(m, bath_dim))


def bloch_from_density(rho: DensityMatrix) -> BlochVector:
    """Pauli expectation values (x, y, z) of a qubit state."""
    m = _as_matrix(rho)
    if m.shape != (2, 2):
        raise DimensionMismatchError("Bloch conversion requires a 2x2 state")
    return BlochVector(
        x=float(2.0 * m[0, 1].real),
        y=float(-2.0 * m[0, 1].imag),
        z=float((m[0, 0] - m[1, 1]).real),
    )


def density_from_bloch(b: BlochVector) -> DensityMatrix:
    """Inverse of :func:`bloch_from_density`; raises if r > 1 + tol."""
    c = 0.5 * (b.x - 1j * b.y)
    return DensityMatrix(np.array([[0.5 * (1.0 + b.z), c],
                                   [np.conj(c), 0.5 * (1.0 - b.z)]]))


def thermal_state(hamiltonian_diag, beta: float) -> DensityMatrix:
    """Gibbs state of a diagonal Hamiltonian, overflow-safe.

    The minimum energy is subtracted before exponentiating so that very
    cold states underflow gracefully instead of overflowing.
    """
    energies = np.asarray(hamiltonian_diag, dtype=float)
    if not np.all(np.isfinite(energies)):
        raise InvalidStateError("energies must be finite")
    if not (beta > 0.0):
        raise InvalidStateError(f"inverse temperature must be positive, got {beta}")
    w = np.exp(-beta * (energies - energies.min()))
    w /= w.sum()
    return DensityMatrix(np.diag(w.astype(complex)))


def thermal_qubit(omega: float, beta: float) -> DensityMatrix:
    """Thermal qubit at gap ``omega``: populations (1/(1+e^{beta w}), rest)."""
    return thermal_state(np.array([omega, 0.0]), beta)
