"""Finite-dimensional states expressed in the spectral frame of a Hamiltonian.

The Hamiltonian is kept only in spectral form ``H = sum_j E_j P_j``; dense
matrices are converted on ingestion by :func:`spectrum_from_dense`.  Level
indices are zero-based throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptySpectrum,
    IndexOutOfRange,
    InvalidSpectrum,
    InvalidState,
    NonHermitianInput,
    ZeroProbabilityBranch,
)

PROJECTOR_TOL = 1e-10
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-10
NORM_TOL = 1e-12


def _as_square(matrix, name="matrix"):
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DimensionMismatch(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    return m


@dataclass(frozen=True, eq=False)
class EnergySpectrum:
    """Distinct energy levels with orthogonal projectors onto their eigenspaces.

    ``hbar`` may be ``np.inf`` to switch the unitary phases off entirely.
    """

    eigenvalues: np.ndarray
    projectors: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        E = np.asarray(self.eigenvalues, dtype=float).reshape(-1)
        P = np.asarray(self.projectors, dtype=complex)
        if E.size == 0:
            raise EmptySpectrum("spectrum has no levels")
        if P.ndim != 3 or P.shape[0] != E.size or P.shape[1] != P.shape[2]:
            raise InvalidSpectrum(
                f"projectors must have shape (n, d, d) with n={E.size}, got {P.shape}")
        if not np.all(np.isfinite(E)):
            raise InvalidSpectrum("eigenvalues must be finite")
        if E.size > 1 and not np.all(np.diff(E) > 0):
            raise InvalidSpectrum("eigenvalues must be strictly increasing")
        if not self.hbar > 0:
            raise InvalidSpectrum("hbar must be positive")
        d = P.shape[1]
        if P.shape[0] > d:
            raise InvalidSpectrum("more levels than Hilbert-space dimensions")
        for j, Pj in enumerate(P):
            if np.max(np.abs(Pj - Pj.conj().T)) > PROJECTOR_TOL:
                raise InvalidSpectrum(f"projector {j} is not Hermitian")
            if np.max(np.abs(Pj @ Pj - Pj)) > PROJECTOR_TOL:
                raise InvalidSpectrum(f"projector {j} is not idempotent")
        for j in range(len(P)):
            for k in range(j + 1, len(P)):
                if np.max(np.abs(P[j] @ P[k])) > PROJECTOR_TOL:
                    raise InvalidSpectrum(f"projectors {j} and {k} are not orthogonal")
        if np.max(np.abs(P.sum(axis=0) - np.eye(d))) > PROJECTOR_TOL:
            raise InvalidSpectrum("projectors do not resolve the identity")
        E.setflags(write=False)
        P.setflags(write=False)
        object.__setattr__(self, "eigenvalues", E)
        object.__setattr__(self, "projectors", P)
        object.__setattr__(self, "hbar", float(self.hbar))

    @property
    def dim(self) -> int:
        return self.projectors.shape[1]

    @property
    def n_levels(self) -> int:
        return self.eigenvalues.size

    @property
    def ranks(self) -> np.ndarray:
        return np.rint(np.einsum("jaa->j", self.projectors).real).astype(int)

    def hamiltonian(self) -> np.ndarray:
        return np.einsum("j,jab->ab", self.eigenvalues, self.projectors)

    def operator_function(self, values) -> np.ndarray:
        """Return ``sum_j values[j] P_j`` for per-level values (real or complex)."""
        values = np.asarray(values)
        if values.shape[-1] != self.n_levels:
            raise DimensionMismatch("need one value per energy level")
        return np.einsum("...j,jab->...ab", values, self.projectors)

    @property
    def is_diagonal(self) -> bool:
        off = self.projectors.copy()
        idx = np.arange(self.dim)
        off[:, idx, idx] = 0.0
        return bool(np.max(np.abs(off)) == 0.0)

    @classmethod
    def diagonal(cls, energies, multiplicities=None, hbar=1.0) -> "EnergySpectrum":
        """Spectrum of a Hamiltonian that is already diagonal in the computational basis.

        >>> EnergySpectrum.diagonal([0.0, 1.0]).dim
        2
        """
        E = np.asarray(energies, dtype=float)
        mult = np.ones(E.size, dtype=int) if multiplicities is None else np.asarray(multiplicities, int)
        d = int(mult.sum())
        P = np.zeros((E.size, d, d), dtype=complex)
        start = 0
        for j, k in enumerate(mult):
            P[j, start:start + k, start:start + k] = np.eye(k)
            start += k
        return cls(E, P, hbar)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semi-definite, unit-trace matrix.

    Eigenvalues in ``[-1e-10, 0)`` are clamped to zero on construction;
    anything more negative is rejected.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = _as_square(self.matrix, "density matrix")
        if not np.all(np.isfinite(m)):
            raise InvalidState("density matrix has non-finite entries")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise InvalidState("density matrix is not Hermitian")
        m = 0.5 * (m + m.conj().T)
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidState(f"density matrix trace is {tr!r}, expected 1")
        w, v = np.linalg.eigh(m)
        if w[0] < -POSITIVITY_TOL:
            raise InvalidState(f"density matrix has eigenvalue {w[0]:.3e}")
        if w[0] < 0:
            w = np.clip(w, 0.0, None)
            m = (v * w) @ v.conj().T
            m = m / np.trace(m).real
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.real(np.einsum("ab,ba->", self.matrix, self.matrix)))

    @classmethod
    def from_pure(cls, vector) -> "DensityMatrix":
        psi = PureState(vector).vector
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim) / dim)


@dataclass(frozen=True, eq=False)
class PureState:
    vector: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=complex).reshape(-1)
        if v.size == 0:
            raise InvalidState("empty state vector")
        if abs(np.linalg.norm(v) - 1.0) > NORM_TOL:
            raise InvalidState(f"state vector has norm {np.linalg.norm(v)!r}")
        v.setflags(write=False)
        object.__setattr__(self, "vector", v)

    @classmethod
    def from_amplitudes(cls, amplitudes) -> "PureState":
        """Normalize arbitrary nonzero amplitudes into a state."""
        v = np.asarray(amplitudes, dtype=complex).reshape(-1)
        n = np.linalg.norm(v)
        if n == 0:
            raise InvalidState("zero vector cannot be normalized")
        return cls(v / n)

    @property
    def dim(self) -> int:
        return self.vector.size

    def density(self) -> DensityMatrix:
        return DensityMatrix(np.outer(self.vector, self.vector.conj()))


def _matrix_of(state) -> np.ndarray:
    if isinstance(state, DensityMatrix):
        return state.matrix
    if isinstance(state, PureState):
        return np.outer(state.vector, state.vector.conj())
    return np.asarray(state, dtype=complex)


def spectrum_from_dense(hamiltonian, degeneracy_tol=None, hbar=1.0) -> EnergySpectrum:
    """Diagonalize a dense Hermitian matrix and group nearly equal eigenvalues.

    Eigenvalues are merged when consecutive sorted values differ by at most
    ``degeneracy_tol``, which defaults to ``1e-9`` times the spectral range
    (or ``1e-9`` absolute for a fully degenerate matrix).  Each merged level
    takes the mean of its cluster.
    """
    if np.size(hamiltonian) == 0:
        raise EmptySpectrum("hamiltonian is empty")
    H = _as_square(hamiltonian, "hamiltonian")
    if not np.all(np.isfinite(H)):
        raise NonHermitianInput("hamiltonian has non-finite entries")
    if np.max(np.abs(H - H.conj().T)) > HERMITIAN_TOL:
        raise NonHermitianInput("hamiltonian is not Hermitian")
    w, v = np.linalg.eigh(0.5 * (H + H.conj().T))
    if degeneracy_tol is None:
        span = w[-1] - w[0]
        degeneracy_tol = 1e-9 * span if span > 0 else 1e-9
    breaks = np.flatnonzero(np.diff(w) > degeneracy_tol) + 1
    clusters = np.split(np.arange(w.size), breaks)
    levels = np.array([w[c].mean() for c in clusters])
    projectors = np.array([v[:, c] @ v[:, c].conj().T for c in clusters])
    return EnergySpectrum(levels, projectors, hbar)


def _check_dims(rho: np.ndarray, spec: EnergySpectrum):
    if rho.shape[-1] != spec.dim:
        raise DimensionMismatch(f"state has dimension {rho.shape[-1]}, spectrum has {spec.dim}")


def level_probabilities(state, spec: EnergySpectrum) -> np.ndarray:
    """Born weights ``tr(P_j rho)`` for every level, clamped to ``[0, 1]``."""
    rho = _matrix_of(state)
    _check_dims(rho, spec)
    p = np.real(np.einsum("jab,...ba->...j", spec.projectors, rho))
    return np.clip(p, 0.0, 1.0)


def projector_probability(state, spec: EnergySpectrum, j: int) -> float:
    if not 0 <= j < spec.n_levels:
        raise IndexOutOfRange(f"level index {j} outside 0..{spec.n_levels - 1}")
    return float(level_probabilities(state, spec)[j])


def expectation_energy(state, spec: EnergySpectrum) -> float:
    return float(level_probabilities(state, spec) @ spec.eigenvalues)


def variance_energy(state, spec: EnergySpectrum) -> float:
    p = level_probabilities(state, spec)
    mean = p @ spec.eigenvalues
    var = p @ (spec.eigenvalues - mean) ** 2
    return float(max(var, 0.0))


def third_central_moment(state, spec: EnergySpectrum) -> float:
    p = level_probabilities(state, spec)
    mean = p @ spec.eigenvalues
    return float(p @ (spec.eigenvalues - mean) ** 3)


def energy_moments(probabilities, energies):
    """Vectorized mean and variance of the energy from level probabilities ``(..., n)``."""
    p = np.asarray(probabilities)
    E = np.asarray(energies)
    mean = p @ E
    var = p @ E ** 2 - mean ** 2
    return mean, np.clip(var, 0.0, None)


def luders_state(state0, spec: EnergySpectrum, j: int) -> DensityMatrix:
    """Normalized projection ``P_j rho P_j / tr(P_j rho)``."""
    if not 0 <= j < spec.n_levels:
        raise IndexOutOfRange(f"level index {j} outside 0..{spec.n_levels - 1}")
    rho = _matrix_of(state0)
    _check_dims(rho, spec)
    P = spec.projectors[j]
    prob = np.real(np.trace(P @ rho))
    if prob <= 1e-14:
        raise ZeroProbabilityBranch(f"level {j} has probability {prob:.3e}")
    return DensityMatrix(P @ rho @ P / prob)


def trace_distance(a, b) -> float:
    diff = _matrix_of(a) - _matrix_of(b)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))


def check_density_batch(matrices, tol=1e-10):
    """Worst trace, Hermiticity and positivity violations over a stack of matrices.

    Returns a dict with the three deviations; callers compare them with ``tol``.
    """
    m = np.asarray(matrices)
    m = m.reshape(-1, m.shape[-2], m.shape[-1])
    herm = np.max(np.abs(m - np.conj(np.swapaxes(m, -1, -2)))) if m.size else 0.0
    tr = np.max(np.abs(np.einsum("...aa->...", m).real - 1.0)) if m.size else 0.0
    h = 0.5 * (m + np.conj(np.swapaxes(m, -1, -2)))
    mineig = np.min(np.linalg.eigvalsh(h)) if m.size else 0.0
    return {
        "trace_error": float(tr),
        "hermiticity_error": float(herm),
        "min_eigenvalue": float(mineig),
        "ok": bool(tr < tol and herm < tol and mineig > -tol),
    }
