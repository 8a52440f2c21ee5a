"""Lévy information processes carrying a discrete energy signal.

Conditional on the signal taking the value ``E_j``, the information process
is again a Lévy process whose exponent is ``psi(a + lam*E_j) - psi(lam*E_j)``.
For every supported family that tilted law is another member of the same
family (see :meth:`LevyModel.tilt`), so paths are drawn exactly from it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import BadGrid, InvalidSignal, OutsideExponentDomain, WrongNoiseKind
from .levy_noise import Brownian, LevyModel
from .quantum_core import EnergySpectrum, level_probabilities


@dataclass(frozen=True, eq=False)
class Signal:
    """Prior law of the energy: levels, their probabilities and the coupling ``lam``."""

    energies: np.ndarray
    probabilities: np.ndarray
    coupling: float

    def __post_init__(self):
        E = np.asarray(self.energies, dtype=float).reshape(-1)
        p = np.asarray(self.probabilities, dtype=float).reshape(-1)
        if E.size == 0 or E.shape != p.shape:
            raise InvalidSignal("energies and probabilities must be non-empty and the same length")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise InvalidSignal(f"probabilities {p} must be nonnegative and sum to one")
        if not np.isfinite(self.coupling):
            raise InvalidSignal("coupling must be finite")
        E.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "energies", E)
        object.__setattr__(self, "probabilities", p)
        object.__setattr__(self, "coupling", float(self.coupling))

    @classmethod
    def from_state(cls, state, spec: EnergySpectrum, coupling: float) -> "Signal":
        p = level_probabilities(state, spec)
        return cls(spec.eigenvalues, p / p.sum(), coupling)

    @property
    def tilts(self) -> np.ndarray:
        """The values ``lam * E_j`` taken by the signal."""
        return self.coupling * self.energies

    def check_domain(self, model: LevyModel):
        if not np.all(model.in_domain(self.tilts)):
            raise OutsideExponentDomain(
                f"lambda*E_j = {self.tilts} not inside the exponent domain {model.domain}")


@dataclass(frozen=True, eq=False)
class InformationPath:
    """Cumulative values of the information process on a time grid, ``values[0] == 0``."""

    grid: np.ndarray
    values: np.ndarray
    true_outcome: Optional[int]
    model: LevyModel

    def to_records(self):
        return [{"t": float(t), "xi": float(x)} for t, x in zip(self.grid, self.values)]


def validate_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float).reshape(-1)
    if g.size < 1 or g[0] != 0.0:
        raise BadGrid("grid must start at t = 0")
    if g.size > 1 and not np.all(np.diff(g) > 0):
        raise BadGrid("grid times must be strictly increasing")
    if not np.all(np.isfinite(g)):
        raise BadGrid("grid times must be finite")
    return g


def uniform_grid(horizon: float, dt: float) -> np.ndarray:
    n = int(round(horizon / dt))
    if n < 1 or abs(n * dt - horizon) > 1e-9 * max(1.0, horizon):
        raise BadGrid(f"horizon {horizon} is not a whole number of steps {dt}")
    return np.linspace(0.0, horizon, n + 1)


def sample_outcome(signal: Signal, rng: np.random.Generator, size=None):
    """Draw level indices with the prior probabilities."""
    return rng.choice(signal.probabilities.size, size=size, p=signal.probabilities)


def conditional_model(model: LevyModel, signal_value: float) -> LevyModel:
    """The law of the information process given ``lam * H = signal_value``."""
    return model.tilt(signal_value)


def conditional_exponent(model: LevyModel, signal_value: float, alpha):
    """``psi(alpha + lam H) - psi(lam H)``."""
    model.check_domain(signal_value, "lambda*H")
    alpha = np.asarray(alpha, dtype=float)
    model.check_domain(alpha + signal_value, "alpha + lambda*H")
    out = model.psi(alpha + signal_value) - model.psi(signal_value)
    return float(out) if np.ndim(out) == 0 else out


def sample_increments(model: LevyModel, signal: Signal, outcome: int, dts,
                      rng: np.random.Generator) -> np.ndarray:
    x = signal.tilts[outcome]
    return conditional_model(model, x).sample(np.asarray(dts, dtype=float), rng)


def sample_information_path(model: LevyModel, signal: Signal, outcome: int, grid,
                            rng: np.random.Generator) -> InformationPath:
    """Sample ``xi`` on ``grid`` given that the energy is level ``outcome``."""
    g = validate_grid(grid)
    if not 0 <= outcome < signal.energies.size:
        raise InvalidSignal(f"outcome {outcome} is not a level index")
    values = np.zeros(g.size)
    if g.size > 1:
        values[1:] = np.cumsum(sample_increments(model, signal, outcome, np.diff(g), rng))
    values.setflags(write=False)
    return InformationPath(g, values, int(outcome), model)


def sample_base_path(model: LevyModel, grid, rng: np.random.Generator) -> InformationPath:
    """Sample the signal-free process on ``grid``."""
    g = validate_grid(grid)
    values = np.zeros(g.size)
    if g.size > 1:
        values[1:] = np.cumsum(model.sample(np.diff(g), rng))
    return InformationPath(g, values, None, model)


def cumulative_trapezoid(y, x) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    out = np.zeros(y.shape)
    out[..., 1:] = np.cumsum(0.5 * (y[..., 1:] + y[..., :-1]) * np.diff(x), axis=-1)
    return out


def innovations_path(path: InformationPath, posterior_energy, sigma: float) -> np.ndarray:
    """``W_t = xi_t - sigma * int_0^t H_s ds`` with the trapezoid rule.

    The observation is first brought to the form ``sigma H t + B_t`` by
    removing the drift ``p`` and dividing by ``sqrt(q)``; for the standard
    parametrization ``p = 0, q = 1`` this is the identity.
    """
    if not isinstance(path.model, Brownian):
        raise WrongNoiseKind("innovations are defined for Brownian information only")
    H = np.asarray(posterior_energy, dtype=float)
    if H.shape[-1] != path.grid.size:
        raise BadGrid("posterior energy must be given on the path grid")
    xi = (path.values - path.model.drift * path.grid) / np.sqrt(path.model.diffusion)
    return xi - sigma * cumulative_trapezoid(H, path.grid)
