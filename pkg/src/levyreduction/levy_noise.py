"""Lévy exponents, characteristic triplets and increment samplers.

Four noise families are supported, each as a small immutable dataclass:

========================  =====================================  ===============
model                     exponent ``psi(a)``                    domain
========================  =====================================  ===============
``Brownian(p, q)``        ``p a + q a**2 / 2``                   all reals
``Poisson(m)``            ``m (exp(a) - 1)``                     all reals
``CompoundPoissonExp``    ``m (beta / (beta - a) - 1)``          ``a < beta``
``GammaProcess(m, phi)``  ``-m log(1 - phi a)``                  ``a < 1/phi``
========================  =====================================  ===============

Samplers take an explicit ``numpy.random.Generator``; nothing here holds
global random state.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, ClassVar, Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import (
    InvalidLevyMeasure,
    NonpositiveTimestep,
    OutsideExponentDomain,
    QuadratureFailure,
    ZeroKappa,
)


def _scalar_or_array(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


# ---------------------------------------------------------------------------
# Lévy measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevyMeasureSpec:
    """A Lévy measure given either as weighted atoms or as a density.

    Exactly one of ``atoms`` (a sequence of ``(jump_size, rate)`` pairs) and
    ``density`` (a vectorizable callable on ``support``) must be set.
    """

    atoms: Optional[tuple] = None
    density: Optional[Callable[[np.ndarray], np.ndarray]] = None
    support: tuple = (-np.inf, np.inf)
    # positive decay rate of the density tail; lets integrals be truncated
    tail_decay: Optional[float] = None

    def __post_init__(self):
        if (self.atoms is None) == (self.density is None):
            raise InvalidLevyMeasure("give exactly one of atoms or density")
        if self.atoms is not None:
            atoms = tuple((float(z), float(w)) for z, w in self.atoms)
            for z, w in atoms:
                if z == 0.0:
                    raise InvalidLevyMeasure("Lévy measure cannot charge the origin")
                if w < 0 or not np.isfinite(w):
                    raise InvalidLevyMeasure(f"atom rate {w} must be finite and nonnegative")
            object.__setattr__(self, "atoms", atoms)
        else:
            a, b = self.support
            if not a < b:
                raise InvalidLevyMeasure("empty support")
            try:
                mass = self.integrate(lambda z: np.minimum(1.0, z * z))
            except QuadratureFailure as exc:
                raise InvalidLevyMeasure(f"integral of min(1, z^2) diverges: {exc}") from exc
            if not np.isfinite(mass):
                raise InvalidLevyMeasure("integral of min(1, z^2) diverges")

    @classmethod
    def atomic(cls, atoms: Sequence[tuple]) -> "LevyMeasureSpec":
        return cls(atoms=tuple(atoms))

    @property
    def is_atomic(self) -> bool:
        return self.atoms is not None

    def _pieces(self, upper_decay=None):
        a, b = self.support
        cuts = [a] + [c for c in (-1.0, 0.0, 1.0) if a < c < b] + [b]
        pieces = list(zip(cuts[:-1], cuts[1:]))
        if upper_decay is not None and upper_decay > 0 and np.isinf(b):
            # integrand below 1e-16 of its scale beyond this point; the cap keeps
            # the density factor above exp(-700) so neither factor over/underflows
            z_max = max(2.0, 40.0 / upper_decay)
            if self.tail_decay:
                z_max = min(z_max, 700.0 / self.tail_decay)
            lo, _ = pieces[-1]
            pieces[-1] = (lo, max(z_max, lo + 1.0))
        return pieces

    def integrate(self, f: Callable, decay: Optional[float] = None,
                  epsabs: float = 1e-15, epsrel: float = 1e-12) -> float:
        """Integrate ``f(z) nu(dz)``; ``decay`` is the integrand's tail decay rate, if known.

        Density integrals are split at ``z = -1, 0, 1`` so the compensator
        indicator never falls inside a quadrature panel.
        """
        if self.is_atomic:
            z = np.array([z for z, _ in self.atoms])
            w = np.array([w for _, w in self.atoms])
            return float(np.sum(w * f(z)))
        total = 0.0
        for lo, hi in self._pieces(decay):
            res = integrate.quad(lambda z: f(z) * self.density(z), lo, hi,
                                 epsabs=epsabs, epsrel=epsrel, limit=500, full_output=1)
            val, err = res[0], res[1]
            if not np.isfinite(val) or (len(res) == 4 and err > 1e-7 * max(1.0, abs(val))):
                raise QuadratureFailure(
                    f"quadrature on ({lo}, {hi}) did not converge: value={val}, error={err}")
            total += val
        return total


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------


class LevyModel(ABC):
    """Common interface of the Lévy noise families."""

    kind: ClassVar[str]

    @property
    @abstractmethod
    def domain(self) -> tuple:
        """Open interval ``(lo, hi)`` on which the exponent is finite."""

    @abstractmethod
    def _psi(self, a): ...

    @abstractmethod
    def _psi_prime(self, a): ...

    @abstractmethod
    def _psi_double_prime(self, a): ...

    @abstractmethod
    def _sample(self, dt, rng, size): ...

    @abstractmethod
    def tilt(self, kappa: float) -> "LevyModel":
        """Law of the process after an Esscher change of measure with parameter ``kappa``."""

    @abstractmethod
    def triplet(self) -> tuple:
        """``(p, q, nu)``: drift, Gaussian rate and Lévy measure (``None`` when zero)."""

    @abstractmethod
    def params(self) -> dict: ...

    @property
    def spectrally_positive(self) -> bool:
        return True

    @property
    def nondecreasing(self) -> bool:
        return True

    def in_domain(self, alpha) -> np.ndarray:
        lo, hi = self.domain
        a = np.asarray(alpha, dtype=float)
        return (a > lo) & (a < hi) & np.isfinite(a)

    def check_domain(self, alpha, what="argument"):
        if not np.all(self.in_domain(alpha)):
            lo, hi = self.domain
            bad = np.asarray(alpha, dtype=float)[~self.in_domain(alpha)]
            raise OutsideExponentDomain(
                f"{what} {bad.ravel()[:3]} outside exponent domain ({lo}, {hi}) of {self!r}")

    def psi(self, alpha):
        self.check_domain(alpha)
        return _scalar_or_array(self._psi(np.asarray(alpha, dtype=float)))

    def psi_prime(self, alpha):
        self.check_domain(alpha)
        return _scalar_or_array(self._psi_prime(np.asarray(alpha, dtype=float)))

    def psi_double_prime(self, alpha):
        self.check_domain(alpha)
        return _scalar_or_array(self._psi_double_prime(np.asarray(alpha, dtype=float)))

    def sample(self, dt, rng: np.random.Generator, size=None):
        dt = np.asarray(dt, dtype=float)
        if np.any(~(dt > 0)):
            raise NonpositiveTimestep("time step must be positive")
        return self._sample(dt, rng, size)

    def describe(self) -> dict:
        return {"kind": self.kind, **self.params()}


@dataclass(frozen=True)
class Brownian(LevyModel):
    """Brownian motion with drift ``p`` and variance rate ``q`` (both per unit time)."""

    drift: float = 0.0
    diffusion: float = 1.0
    kind: ClassVar[str] = "brownian"

    def __post_init__(self):
        if not self.diffusion > 0:
            raise InvalidLevyMeasure("Brownian diffusion rate q must be positive")

    @property
    def domain(self):
        return (-np.inf, np.inf)

    @property
    def spectrally_positive(self):
        return False

    @property
    def nondecreasing(self):
        return False

    def _psi(self, a):
        return self.drift * a + 0.5 * self.diffusion * a * a

    def _psi_prime(self, a):
        return self.drift + self.diffusion * a

    def _psi_double_prime(self, a):
        return self.diffusion * np.ones_like(a)

    def _sample(self, dt, rng, size):
        return rng.normal(self.drift * dt, np.sqrt(self.diffusion * dt), size)

    def tilt(self, kappa):
        self.check_domain(kappa, "tilt")
        return Brownian(self.drift + self.diffusion * kappa, self.diffusion)

    def triplet(self):
        return self.drift, self.diffusion, None

    def params(self):
        return {"drift": self.drift, "diffusion": self.diffusion}


@dataclass(frozen=True)
class Poisson(LevyModel):
    """Counting process with unit jumps arriving at rate ``m``."""

    intensity: float = 1.0
    kind: ClassVar[str] = "poisson"

    def __post_init__(self):
        if not self.intensity > 0:
            raise InvalidLevyMeasure("Poisson intensity must be positive")

    @property
    def domain(self):
        return (-np.inf, np.inf)

    def _psi(self, a):
        return self.intensity * np.expm1(a)

    def _psi_prime(self, a):
        return self.intensity * np.exp(a)

    _psi_double_prime = _psi_prime

    def _sample(self, dt, rng, size):
        return rng.poisson(self.intensity * dt, size).astype(float)

    def tilt(self, kappa):
        self.check_domain(kappa, "tilt")
        return Poisson(self.intensity * np.exp(kappa))

    def triplet(self):
        return 0.0, 0.0, LevyMeasureSpec.atomic([(1.0, self.intensity)])

    def params(self):
        return {"intensity": self.intensity}


@dataclass(frozen=True)
class CompoundPoissonExp(LevyModel):
    """Compound Poisson process: rate ``m`` arrivals of Exp(``beta``) sized jumps."""

    intensity: float = 1.0
    jump_rate: float = 1.0
    kind: ClassVar[str] = "compound_poisson_exp"

    def __post_init__(self):
        if not (self.intensity > 0 and self.jump_rate > 0):
            raise InvalidLevyMeasure("intensity and jump rate must be positive")

    @property
    def domain(self):
        return (-np.inf, self.jump_rate)

    def _psi(self, a):
        b = self.jump_rate
        return self.intensity * a / (b - a)

    def _psi_prime(self, a):
        b = self.jump_rate
        return self.intensity * b / (b - a) ** 2

    def _psi_double_prime(self, a):
        b = self.jump_rate
        return 2.0 * self.intensity * b / (b - a) ** 3

    def _sample(self, dt, rng, size):
        counts = rng.poisson(self.intensity * dt, size)
        counts = np.asarray(counts)
        out = np.zeros(counts.shape)
        hit = counts > 0
        # a sum of k iid Exp(beta) jumps is Gamma(k, 1/beta) distributed
        out[hit] = rng.gamma(counts[hit], 1.0 / self.jump_rate)
        return float(out) if out.ndim == 0 else out

    def tilt(self, kappa):
        self.check_domain(kappa, "tilt")
        b = self.jump_rate
        return CompoundPoissonExp(self.intensity * b / (b - kappa), b - kappa)

    def triplet(self):
        m, b = self.intensity, self.jump_rate
        measure = LevyMeasureSpec(density=lambda z: m * b * np.exp(-b * z),
                                  support=(0.0, np.inf), tail_decay=b)
        # compensator drift: integral of z over jumps smaller than one
        p = m * (1.0 - np.exp(-b) * (1.0 + b)) / b
        return p, 0.0, measure

    def params(self):
        return {"intensity": self.intensity, "jump_rate": self.jump_rate}


@dataclass(frozen=True)
class GammaProcess(LevyModel):
    """Gamma process with rate ``m`` and scale ``phi``: increments are Gamma(m dt, phi)."""

    rate: float = 1.0
    scale: float = 1.0
    kind: ClassVar[str] = "gamma"

    def __post_init__(self):
        if not (self.rate > 0 and self.scale > 0):
            raise InvalidLevyMeasure("gamma rate and scale must be positive")

    @property
    def domain(self):
        return (-np.inf, 1.0 / self.scale)

    def _psi(self, a):
        return -self.rate * np.log1p(-self.scale * a)

    def _psi_prime(self, a):
        return self.rate * self.scale / (1.0 - self.scale * a)

    def _psi_double_prime(self, a):
        return self.rate * self.scale ** 2 / (1.0 - self.scale * a) ** 2

    def _sample(self, dt, rng, size):
        return rng.gamma(self.rate * dt, self.scale, size)

    def tilt(self, kappa):
        self.check_domain(kappa, "tilt")
        return GammaProcess(self.rate, self.scale / (1.0 - self.scale * kappa))

    def triplet(self):
        m, phi = self.rate, self.scale
        measure = LevyMeasureSpec(density=lambda z: m * np.exp(-z / phi) / z,
                                  support=(0.0, np.inf), tail_decay=1.0 / phi)
        p = m * phi * (1.0 - np.exp(-1.0 / phi))
        return p, 0.0, measure

    def params(self):
        return {"rate": self.rate, "scale": self.scale}


MODEL_KINDS = {cls.kind: cls for cls in (Brownian, Poisson, CompoundPoissonExp, GammaProcess)}


def model_from_dict(d: dict) -> LevyModel:
    d = dict(d)
    kind = d.pop("kind")
    try:
        cls = MODEL_KINDS[kind]
    except KeyError:
        raise InvalidLevyMeasure(f"unknown noise kind {kind!r}") from None
    return cls(**{k: float(v) for k, v in d.items()})


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def psi(model: LevyModel, alpha):
    return model.psi(alpha)


def psi_prime(model: LevyModel, alpha):
    return model.psi_prime(alpha)


def psi_double_prime(model: LevyModel, alpha):
    return model.psi_double_prime(alpha)


def levy_khintchine_check(model: LevyModel, alpha: float, measure: Optional[LevyMeasureSpec] = None,
                          drift: Optional[float] = None, diffusion: Optional[float] = None) -> float:
    """Evaluate the exponent through the Lévy-Khintchine integral of the model's triplet.

    Any of ``measure``, ``drift`` and ``diffusion`` can be supplied to override
    the model's own triplet.  The result should agree with ``model.psi(alpha)``.
    """
    model.check_domain(alpha)
    p0, q0, nu0 = model.triplet()
    p = p0 if drift is None else drift
    q = q0 if diffusion is None else diffusion
    nu = nu0 if measure is None else measure
    a = float(alpha)
    value = p * a + 0.5 * q * a * a
    if nu is None:
        return value

    def integrand(z):
        z = np.asarray(z, dtype=float)
        small = np.abs(z) < 1.0
        return np.expm1(a * z) - np.where(small, a * z, 0.0)

    decay = None
    if nu.tail_decay is not None:
        decay = nu.tail_decay - max(a, 0.0)
    return value + nu.integrate(integrand, decay=decay)


def sample_increment(model: LevyModel, dt, rng: np.random.Generator, size=None):
    """One draw (or ``size`` draws) of ``xi_{t+dt} - xi_t`` under the signal-free law."""
    return model.sample(dt, rng, size)


def log_exponential_martingale(model: LevyModel, kappa: float, xi, t):
    model.check_domain(kappa, "kappa")
    return kappa * np.asarray(xi, dtype=float) - model.psi(kappa) * np.asarray(t, dtype=float)


def exponential_martingale(model: LevyModel, kappa: float, xi, t):
    """``exp(kappa xi_t - psi(kappa) t)``, formed in log space."""
    return _scalar_or_array(np.exp(log_exponential_martingale(model, kappa, xi, t)))


def cantelli_bound(model: LevyModel, kappa: float, epsilon: float, t):
    """One-sided Chebyshev bound on ``P(exponential martingale > epsilon)`` at time ``t``.

    Returns 1 wherever the deviation ``log(eps) + (psi(k) - k psi'(0)) t`` is
    still negative, since the inequality says nothing there.
    """
    if kappa == 0:
        raise ZeroKappa("kappa must be nonzero")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    model.check_domain(kappa, "kappa")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise NonpositiveTimestep("t must be positive")
    gap = model.psi(kappa) - kappa * model.psi_prime(0.0)
    dev = np.log(epsilon) + gap * t
    var = model.psi_double_prime(0.0) * t
    with np.errstate(over="ignore"):
        bound = var / (var + (dev / kappa) ** 2)
    return _scalar_or_array(np.where(dev >= 0, bound, 1.0))
