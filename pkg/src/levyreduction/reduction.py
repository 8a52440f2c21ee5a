"""State reduction driven by Lévy information.

The production route is the closed-form filter: given ``(xi_t, t)`` the
posterior level probabilities and the conditional density matrix follow
directly, with no stochastic integration.  For Brownian noise the
Euler-Maruyama integrators of the stochastic Schrödinger and master
equations are provided as an independent check on that solution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .errors import (
    AllWeightsZeroProbability,
    DegenerateNormalization,
    DimensionMismatch,
    StepUnstable,
)
from .information import InformationPath, Signal, validate_grid
from .levy_noise import LevyModel
from .quantum_core import (
    DensityMatrix,
    EnergySpectrum,
    PureState,
    _matrix_of,
    level_probabilities,
)

TWO_PI = 2.0 * np.pi


def _phases(spec: EnergySpectrum, t) -> np.ndarray:
    """``exp(-i E_j t / hbar)`` with the angle reduced mod 2 pi, shape ``t.shape + (n,)``."""
    t = np.asarray(t, dtype=float)
    if np.isinf(spec.hbar):
        return np.ones(t.shape + (spec.n_levels,), dtype=complex)
    angle = np.mod(np.multiply.outer(t, spec.eigenvalues) / spec.hbar, TWO_PI)
    return np.exp(-1j * angle)


def log_likelihoods(model: LevyModel, signal: Signal, xi, t) -> np.ndarray:
    """``lam E_j xi_t - psi(lam E_j) t`` for every level, shape ``broadcast(xi, t) + (n,)``."""
    x = signal.tilts
    model.check_domain(x, "lambda*E_j")
    psi_x = model.psi(x)
    xi = np.asarray(xi, dtype=float)[..., None]
    t = np.asarray(t, dtype=float)[..., None]
    return x * xi - psi_x * t


def _log_prior(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if not np.any(p > 0):
        raise AllWeightsZeroProbability("every prior probability is zero")
    with np.errstate(divide="ignore"):
        return np.log(p)


def posterior_probabilities(model: LevyModel, signal: Signal, xi, t) -> np.ndarray:
    """Posterior probabilities of each energy level given ``xi_t`` at time ``t``.

    Computed from log-weights ``log p_j + lam E_j xi - psi(lam E_j) t`` with
    max-subtraction, so large ``|lam E_j xi|`` cannot overflow.
    """
    logw = _log_prior(signal.probabilities) + log_likelihoods(model, signal, xi, t)
    logw = logw - logsumexp(logw, axis=-1, keepdims=True)
    return np.exp(logw)


def _branch_coefficients(model, coupling, p, spec, xi, t, hbar_phases=True):
    """Coefficients ``c_j`` with ``rho_t = K rho_0 K^dagger``, ``K = sum_j c_j P_j``."""
    signal = Signal(spec.eigenvalues, p / p.sum(), coupling)
    log_l = log_likelihoods(model, signal, xi, t)
    log_p = _log_prior(p)
    log_norm = logsumexp(log_p + log_l, axis=-1, keepdims=True)
    if not np.all(np.isfinite(log_norm)):
        raise DegenerateNormalization("branch weights vanish even in log space")
    live = p > 0
    amp = np.where(live, np.exp(np.where(live, 0.5 * (log_l - log_norm), 0.0)), 0.0)
    if hbar_phases:
        amp = amp * _phases(spec, t)
    return amp


def evolve_density_batch(model: LevyModel, coupling: float, rho0, spec: EnergySpectrum,
                         xi, t) -> np.ndarray:
    """Conditional density matrices for arrays of ``(xi_t, t)``; returns ``(..., d, d)``."""
    rho = _matrix_of(rho0)
    if rho.shape[-1] != spec.dim:
        raise DimensionMismatch("initial state and spectrum dimensions differ")
    p = level_probabilities(rho, spec)
    xi, t = np.broadcast_arrays(np.asarray(xi, float), np.asarray(t, float))
    c = _branch_coefficients(model, coupling, p, spec, xi, t)
    if spec.is_diagonal:
        k = np.einsum("...j,ja->...a", c, np.einsum("jaa->ja", spec.projectors).real)
        out = k[..., :, None] * rho * np.conj(k)[..., None, :]
    else:
        K = spec.operator_function(c)
        out = K @ rho @ np.conj(np.swapaxes(K, -1, -2))
    out = 0.5 * (out + np.conj(np.swapaxes(out, -1, -2)))
    # log-weights of size ~|lam E xi| lose ~1e-16 relative each; restore the trace exactly
    return out / np.real(np.einsum("...aa->...", out))[..., None, None]


def evolve_density(model: LevyModel, signal: Signal, rho0, spec: EnergySpectrum,
                   xi: float, t: float) -> DensityMatrix:
    """Closed-form conditional state at time ``t`` after observing ``xi_t``.

    Blockwise, ``P_m rho_t P_n`` is ``P_m rho_0 P_n`` times
    ``exp(-i (E_m - E_n) t / hbar + (x_m + x_n) xi / 2 - (psi(x_m) + psi(x_n)) t / 2)``
    with ``x_j = lam E_j``, normalized to unit trace.
    """
    return DensityMatrix(evolve_density_batch(model, signal.coupling, rho0, spec, xi, t))


def evolve_state_vector(model: LevyModel, signal: Signal, psi0, spec: EnergySpectrum,
                        xi: float, t: float) -> PureState:
    """``|psi_t> = sum_j sqrt(pi_jt) exp(-i E_j t / hbar) |E_j>`` over the Lüders components."""
    v = psi0.vector if isinstance(psi0, PureState) else PureState(psi0).vector
    if v.size != spec.dim:
        raise DimensionMismatch("initial state and spectrum dimensions differ")
    comps = np.einsum("jab,b->ja", spec.projectors, v)
    p = np.sum(np.abs(comps) ** 2, axis=1)
    pi = posterior_probabilities(model, Signal(spec.eigenvalues, p / p.sum(), signal.coupling), xi, t)
    phases = _phases(spec, t)
    out = np.zeros(spec.dim, dtype=complex)
    for j in np.flatnonzero(p > 0):
        out += np.sqrt(pi[j]) * phases[j] * comps[j] / np.sqrt(p[j])
    return PureState(out / np.linalg.norm(out))


# ---------------------------------------------------------------------------
# Euler-Maruyama oracles (Brownian noise)
# ---------------------------------------------------------------------------


def _step_unitary(spec: EnergySpectrum, dt: float) -> np.ndarray:
    return spec.operator_function(_phases(spec, dt))


def _increments(dW, grid):
    g = validate_grid(grid)
    dW = np.asarray(dW, dtype=float)
    if dW.shape[-1] != g.size - 1:
        raise DimensionMismatch("need one Brownian increment per grid step")
    return g, np.diff(g), dW


def euler_maruyama_vector(psi0, spec: EnergySpectrum, sigma: float, dW, grid) -> np.ndarray:
    """Integrate the energy-driven stochastic Schrödinger equation.

    ``dW`` has shape ``(..., M)`` for a grid of ``M + 1`` times; leading axes
    are independent paths.  Each step is an Euler-Maruyama update of the
    reduction terms followed by the exact propagator ``exp(-i H dt / hbar)``;
    the propagator commutes with ``H - <H>``, so this only removes the
    ``O(dt^2)`` per-step phase error of the explicit unitary term.  The state
    is renormalized after every step.  Returns amplitudes of shape
    ``(..., M + 1, d)``.
    """
    v0 = psi0.vector if isinstance(psi0, PureState) else PureState(psi0).vector
    g, dts, dW = _increments(dW, grid)
    H = spec.hamiltonian()
    batch = dW.shape[:-1]
    psi = np.broadcast_to(v0, batch + (v0.size,)).astype(complex)
    out = np.empty(batch + (g.size, v0.size), dtype=complex)
    out[..., 0, :] = psi
    for k, dt in enumerate(dts):
        Hpsi = psi @ H.T
        Ht = np.real(np.sum(np.conj(psi) * Hpsi, axis=-1, keepdims=True))
        Apsi = Hpsi - Ht * psi
        A2psi = Apsi @ H.T - Ht * Apsi
        psi = psi - 0.125 * sigma ** 2 * A2psi * dt + 0.5 * sigma * Apsi * dW[..., k, None]
        psi = psi @ _step_unitary(spec, dt).T
        norm = np.linalg.norm(psi, axis=-1, keepdims=True)
        if np.any(norm < 1e-12) or not np.all(np.isfinite(norm)):
            raise StepUnstable(f"state norm collapsed at step {k}")
        psi = psi / norm
        out[..., k + 1, :] = psi
    return out


def euler_maruyama_density(rho0, spec: EnergySpectrum, sigma: float, dW, grid,
                           scheme: str = "kraus") -> np.ndarray:
    """Integrate the stochastic master equation, renormalizing the trace each step.

    Shapes follow :func:`euler_maruyama_vector`; returns ``(..., M + 1, d, d)``.

    ``scheme="kraus"`` (default) applies the Euler step in the form
    ``M rho M^dagger`` with ``M = U (1 - sigma^2 A^2 dt / 8 + sigma A dW / 2)``,
    ``A = H - <H>`` and ``U = exp(-i H dt / hbar)``.  It differs from the
    explicit step by the mean-zero term ``sigma^2 A rho A (dW^2 - dt) / 4``
    and by ``O(dt^2)`` in the unitary part, keeps the strong order 1/2, keeps
    ``rho`` positive, is exactly unitary when ``sigma = 0``, and on a pure
    state reproduces :func:`euler_maruyama_vector` exactly.  ``scheme="explicit"`` is the plain
    additive update; it can push eigenvalues of nearly pure states below zero
    by ``O(dt)``, and raises :class:`StepUnstable` once one drops below ``-1e-6``.
    """
    if scheme not in ("kraus", "explicit"):
        raise ValueError("scheme must be 'kraus' or 'explicit'")
    rho0 = _matrix_of(rho0)
    g, dts, dW = _increments(dW, grid)
    H = spec.hamiltonian()
    H2 = H @ H
    unitary = 0.0 if np.isinf(spec.hbar) else 1.0 / spec.hbar
    batch = dW.shape[:-1]
    d = rho0.shape[0]
    rho = np.broadcast_to(rho0, batch + (d, d)).astype(complex)
    out = np.empty(batch + (g.size, d, d), dtype=complex)
    out[..., 0, :, :] = rho
    eye = np.eye(d)
    for k, dt in enumerate(dts):
        Ht = np.real(np.einsum("ab,...ba->...", H, rho))[..., None, None]
        A = H - Ht * eye
        noise = dW[..., k, None, None]
        if scheme == "kraus":
            M = _step_unitary(spec, dt) @ (eye - 0.125 * sigma ** 2 * (A @ A) * dt + 0.5 * sigma * A * noise)
            rho = M @ rho @ np.conj(np.swapaxes(M, -1, -2))
        else:
            Hr = H @ rho
            rH = rho @ H
            lind = Hr @ H - 0.5 * (rho @ H2 + H2 @ rho)
            rho = (rho + (-1j * unitary * (Hr - rH) + 0.25 * sigma ** 2 * lind) * dt
                   + 0.5 * sigma * (A @ rho + rho @ A) * noise)
        rho = 0.5 * (rho + np.conj(np.swapaxes(rho, -1, -2)))
        tr = np.real(np.einsum("...aa->...", rho))[..., None, None]
        if np.any(tr < 1e-12) or not np.all(np.isfinite(tr)):
            raise StepUnstable(f"trace collapsed at step {k}")
        rho = rho / tr
        if scheme == "explicit" and np.min(np.linalg.eigvalsh(rho)) < -1e-6:
            raise StepUnstable(f"positivity lost at step {k}; reduce the time step")
        out[..., k + 1, :, :] = rho
    return out


# ---------------------------------------------------------------------------
# Collapse detection and single-path bookkeeping
# ---------------------------------------------------------------------------


def detect_collapse(posteriors, delta: float = 1e-6):
    """Index ``j`` with ``pi_j > 1 - delta``, else ``None``.

    For a stack of posterior vectors ``(..., n)`` an integer array is returned
    instead, with ``-1`` marking uncollapsed rows.
    """
    if not 0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    pi = np.asarray(posteriors, dtype=float)
    hit = pi > 1.0 - delta
    idx = np.where(hit.any(axis=-1), np.argmax(hit, axis=-1), -1)
    if pi.ndim == 1:
        return None if idx < 0 else int(idx)
    return idx


@dataclass(frozen=True, eq=False)
class ReductionPath:
    grid: np.ndarray
    posteriors: np.ndarray
    collapse_outcome: Optional[int]
    driving_path: InformationPath
    states: Optional[np.ndarray] = None

    def to_records(self, energies):
        """Columnar rows ``t, xi, pi_1..pi_n, H, V, purity`` for output."""
        E = np.asarray(energies, dtype=float)
        H = self.posteriors @ E
        V = np.clip(self.posteriors @ E ** 2 - H ** 2, 0.0, None)
        if self.states is not None:
            purity = np.real(np.einsum("tab,tba->t", self.states, self.states))
        else:
            purity = np.full(self.grid.size, np.nan)
        rows = []
        for k, t in enumerate(self.grid):
            row = {"t": float(t), "xi": float(self.driving_path.values[k])}
            for j, pj in enumerate(self.posteriors[k]):
                row[f"pi_{j + 1}"] = float(pj)
            row.update(H=float(H[k]), V=float(V[k]), purity=float(purity[k]))
            rows.append(row)
        return rows


def reduce_path(model: LevyModel, signal: Signal, rho0, spec: EnergySpectrum,
                path: InformationPath, delta: float = 1e-6, with_states: bool = False) -> ReductionPath:
    """Run the closed-form filter along one information path."""
    post = posterior_probabilities(model, signal, path.values, path.grid)
    states = None
    if with_states:
        states = evolve_density_batch(model, signal.coupling, rho0, spec, path.values, path.grid)
    return ReductionPath(path.grid, post, detect_collapse(post[-1], delta), path, states)
