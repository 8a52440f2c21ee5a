"""Decoherence of the noise-averaged density matrix.

Averaging the conditional state over the noise gives a mean density matrix
whose ``(m, n)`` energy blocks rotate at the Bohr frequency and decay at the
rate ``Gamma_mn = psi(x_m)/2 + psi(x_n)/2 - psi((x_m + x_n)/2)`` with
``x = lam E``.  That rate is computed here from the exponent (the production
route) and, for cross-checking, from two quadratures of the Lévy measure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonpositiveInput
from .levy_noise import LevyModel
from .quantum_core import EnergySpectrum, _matrix_of

PLANCK_SIGMA_SQUARED = 2.8  # MeV^-2 s^-1, dimensional-analysis guess M_p^-2 T_p^-1
CESIUM_HYPERFINE_EV = 3.801e-5


def _pair(model, coupling, e_m, e_n):
    xm = coupling * np.asarray(e_m, dtype=float)
    xn = coupling * np.asarray(e_n, dtype=float)
    mid = 0.5 * (xm + xn)
    for x in (xm, xn, mid):
        model.check_domain(x, "lambda*E")
    return xm, xn, mid


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def gamma_rate(model: LevyModel, coupling: float, e_m, e_n):
    """Decoherence rate of the ``(m, n)`` block from the Lévy exponent."""
    xm, xn, mid = _pair(model, coupling, e_m, e_n)
    rate = 0.5 * model.psi(xm) + 0.5 * model.psi(xn) - model.psi(mid)
    return _out(np.where(xm == xn, 0.0, rate))


def _jump_decay(model, a, b):
    _, _, nu = model.triplet()
    if nu is None or nu.tail_decay is None:
        return None
    return nu.tail_decay - 2.0 * max(a, b, 0.0)


def _gaussian_part(model, coupling, e_m, e_n):
    _, q, _ = model.triplet()
    return 0.125 * q * coupling ** 2 * (e_m - e_n) ** 2


def jump_integral(model: LevyModel, coupling: float, e_m: float, e_n: float) -> float:
    """``(1/2) int (exp(x_m z / 2) - exp(x_n z / 2))**2 nu(dz)``, the jump share of the rate."""
    _pair(model, coupling, e_m, e_n)
    _, _, nu = model.triplet()
    if nu is None or e_m == e_n:
        return 0.0
    a = 0.5 * coupling * e_m
    b = 0.5 * coupling * e_n

    def f(z):
        z = np.asarray(z, dtype=float)
        # exp(bz) expm1((a-b)z) avoids cancellation for small gaps
        return 0.5 * (np.exp(b * z) * np.expm1((a - b) * z)) ** 2

    return nu.integrate(f, decay=_jump_decay(model, a, b))


def gamma_rate_integral(model: LevyModel, coupling: float, e_m: float, e_n: float) -> float:
    """Decoherence rate as a Gaussian term plus a quadrature over the Lévy measure."""
    return _gaussian_part(model, coupling, e_m, e_n) + jump_integral(model, coupling, e_m, e_n)


def gamma_rate_sinh(model: LevyModel, coupling: float, e_m: float, e_n: float) -> float:
    """Decoherence rate via ``2 int exp(x_sum z / 2) sinh^2(x_diff z / 4) nu(dz)``."""
    _pair(model, coupling, e_m, e_n)
    gauss = _gaussian_part(model, coupling, e_m, e_n)
    _, _, nu = model.triplet()
    if nu is None or e_m == e_n:
        return gauss
    s = coupling * (e_m + e_n)
    d = coupling * (e_m - e_n)

    def f(z):
        z = np.asarray(z, dtype=float)
        return 2.0 * np.exp(0.5 * s * z) * np.sinh(0.25 * d * z) ** 2

    a, b = 0.5 * coupling * e_m, 0.5 * coupling * e_n
    return gauss + nu.integrate(f, decay=_jump_decay(model, a, b))


def effective_q(model: LevyModel, coupling: float, e_m, e_n):
    """``psi''`` at the mean tilt: the Gaussian-equivalent noise strength of the pair."""
    mid = 0.5 * coupling * (np.asarray(e_m, float) + np.asarray(e_n, float))
    return model.psi_double_prime(mid)


def small_gap_approx(model: LevyModel, coupling: float, e_m, e_n):
    """Leading small-gap form ``lam^2 (E_m - E_n)^2 q_eff / 8``."""
    gap = np.asarray(e_m, float) - np.asarray(e_n, float)
    return _out(0.125 * coupling ** 2 * gap ** 2 * effective_q(model, coupling, e_m, e_n))


def rate_matrix(model: LevyModel, coupling: float, energies) -> np.ndarray:
    E = np.asarray(energies, dtype=float)
    G = gamma_rate(model, coupling, E[:, None], E[None, :])
    G = np.asarray(G, dtype=float)
    np.fill_diagonal(G, 0.0)
    return G


@dataclass(frozen=True, eq=False)
class DecoherenceTable:
    energies: np.ndarray
    rates: np.ndarray
    effective_q: np.ndarray
    model: LevyModel
    coupling: float

    @classmethod
    def compute(cls, model: LevyModel, coupling: float, energies) -> "DecoherenceTable":
        E = np.asarray(energies, dtype=float)
        rates = rate_matrix(model, coupling, E)
        q = np.asarray(effective_q(model, coupling, E[:, None], E[None, :]), dtype=float)
        return cls(E, rates, q, model, float(coupling))

    @property
    def min_rate(self) -> float:
        off = self.rates[~np.eye(self.energies.size, dtype=bool)]
        off = off[off > 0]
        return float(off.min()) if off.size else 0.0

    @property
    def max_rate(self) -> float:
        return float(self.rates.max())

    def to_records(self):
        rows = []
        n = self.energies.size
        for m in range(n):
            for k in range(n):
                rows.append({"m": m + 1, "n": k + 1,
                             "E_m": float(self.energies[m]), "E_n": float(self.energies[k]),
                             "gamma_mn": float(self.rates[m, k]),
                             "q_eff_mn": float(self.effective_q[m, k])})
        return rows


def _blocks(rho0, spec):
    rho = _matrix_of(rho0)
    P = spec.projectors
    return np.einsum("mab,bc,ncd->mnad", P, rho, P)


def mean_density(rho0, spec: EnergySpectrum, model: LevyModel, coupling: float, t) -> np.ndarray:
    """Noise-averaged state at time(s) ``t``; returns ``(d, d)`` or ``t.shape + (d, d)``."""
    t = np.asarray(t, dtype=float)
    E = spec.eigenvalues
    G = rate_matrix(model, coupling, E)
    gaps = E[:, None] - E[None, :]
    tt = t[..., None, None]
    if np.isinf(spec.hbar):
        phase = np.zeros(gaps.shape)
    else:
        phase = np.mod(gaps * tt / spec.hbar, 2.0 * np.pi)
    factor = np.exp(-1j * phase - G * tt)
    return np.einsum("...mn,mnab->...ab", factor, _blocks(rho0, spec))


def lindblad_generator(spec: EnergySpectrum, model: LevyModel, coupling: float):
    """Build ``mu -> dmu/dt`` for the mean-state master equation.

    The Gaussian part is applied as the double-commutator superoperator of
    ``H``; the jump part ``int (L mu L - {L^2, mu}/2) nu(dz)`` with
    ``L(z) = exp(lam H z / 2)`` is evaluated blockwise, with each block
    coefficient obtained by quadrature over the Lévy measure (exact sums for
    atomic measures).
    """
    E = spec.eigenvalues
    model.check_domain(coupling * E, "lambda*E")
    _, q, _ = model.triplet()
    H = spec.hamiltonian()
    H2 = H @ H
    gauss = 0.25 * q * coupling ** 2
    unitary = 0.0 if np.isinf(spec.hbar) else 1.0 / spec.hbar
    n = E.size
    J = np.zeros((n, n))
    for m in range(n):
        for k in range(m + 1, n):
            J[m, k] = J[k, m] = -jump_integral(model, coupling, E[m], E[k])
    P = spec.projectors

    def rhs(mu):
        mu = np.asarray(mu, dtype=complex)
        out = -1j * unitary * (H @ mu - mu @ H)
        out = out + gauss * (H @ mu @ H - 0.5 * (mu @ H2 + H2 @ mu))
        if np.any(J):
            out = out + np.einsum("mn,mab,...bc,ncd->...ad", J, P, mu, P)
        return out

    return rhs


def lindblad_rhs(mu, spec: EnergySpectrum, model: LevyModel, coupling: float) -> np.ndarray:
    return lindblad_generator(spec, model, coupling)(_matrix_of(mu))


def integrate_lindblad(rho0, spec: EnergySpectrum, model: LevyModel, coupling: float,
                       times, max_step: float) -> np.ndarray:
    """Classical fourth-order Runge-Kutta integration of the mean-state equation.

    ``times`` must be increasing and start at or after zero; each interval is
    split into equal steps no longer than ``max_step``.
    """
    rhs = lindblad_generator(spec, model, coupling)
    times = np.asarray(times, dtype=float)
    mu = _matrix_of(rho0).astype(complex)
    out = np.empty(times.shape + mu.shape, dtype=complex)
    t_prev = 0.0
    for i, t in enumerate(times):
        span = t - t_prev
        if span < 0:
            raise ValueError("times must be nondecreasing and nonnegative")
        steps = int(np.ceil(span / max_step)) if span > 0 else 0
        if steps:
            h = span / steps
            for _ in range(steps):
                k1 = rhs(mu)
                k2 = rhs(mu + 0.5 * h * k1)
                k3 = rhs(mu + 0.5 * h * k2)
                k4 = rhs(mu + h * k3)
                mu = mu + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i] = mu
        t_prev = t
    return out


def clock_bound(delta_e_ev: float, ramsey_time_s: float) -> float:
    """Upper bound on ``sigma^2`` (MeV^-2 s^-1) from requiring ``Gamma T < 1``.

    With ``Gamma = sigma^2 dE^2 / 8`` the condition becomes
    ``sigma^2 < 8 / (dE^2 T)``; ``dE`` is given in eV and ``T`` in seconds.
    """
    if not (delta_e_ev > 0 and ramsey_time_s > 0):
        raise NonpositiveInput("energy gap and Ramsey time must be positive")
    delta_e_mev = delta_e_ev * 1e-6
    return 8.0 / (delta_e_mev ** 2 * ramsey_time_s)


def clock_report(delta_e_ev: float = CESIUM_HYPERFINE_EV, ramsey_time_s: float = 1.0,
                 candidate: float = PLANCK_SIGMA_SQUARED) -> dict:
    bound = clock_bound(delta_e_ev, ramsey_time_s)
    return {
        "delta_e_ev": delta_e_ev,
        "ramsey_time_s": ramsey_time_s,
        "sigma2_bound_mev2_per_s": bound,
        "candidate_sigma2_mev2_per_s": candidate,
        "candidate_within_bound": bool(candidate < bound),
        "orders_of_magnitude_margin": float(np.log10(bound / candidate)),
    }
