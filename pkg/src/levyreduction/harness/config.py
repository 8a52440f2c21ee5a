"""Scenario configuration: JSON documents with unit-suffixed numbers.

Internally energies are in eV, times in seconds and rates in 1/s unless a
scenario is written in bare numbers, in which case those numbers are used as
they stand (dimensionless units with ``hbar = 1``).  Suffixes are resolved
once, at parse time.
"""

from __future__ import annotations

import copy
import hashlib
import json
import re
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from ..decoherence import DecoherenceTable
from ..errors import ConfigInvalid, ReductionError
from ..information import Signal, uniform_grid
from ..levy_noise import LevyModel, model_from_dict
from ..quantum_core import DensityMatrix, EnergySpectrum, PureState, spectrum_from_dense

HBAR_EV_S = 6.582119569e-16

UNITS = {
    "energy": {"eV": 1.0, "meV": 1e-3, "keV": 1e3, "MeV": 1e6, "GeV": 1e9},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9},
    "rate": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9, "/s": 1.0},
    "inverse_energy": {"/eV": 1.0, "/meV": 1e3, "/keV": 1e-3, "/MeV": 1e-6},
}

_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S*)\s*$")


def parse_quantity(value, kind: Optional[str] = None) -> float:
    """Turn ``3.801e-5eV`` or ``1 s`` or ``2.5`` into a float in internal units."""
    if isinstance(value, bool):
        raise ConfigInvalid(f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ConfigInvalid(f"expected a number, got {value!r}")
    m = _NUMBER.match(value)
    if not m:
        raise ConfigInvalid(f"cannot parse quantity {value!r}")
    number, unit = float(m.group(1)), m.group(2)
    if not unit:
        return number
    tables = [UNITS[kind]] if kind else list(UNITS.values())
    for table in tables:
        if unit in table:
            return number * table[unit]
    raise ConfigInvalid(f"unit {unit!r} not allowed here ({kind or 'any'})")


def _parse_complex(x):
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return complex(float(x[0]), float(x[1]))
    if isinstance(x, str):
        return complex(x.replace(" ", ""))
    return complex(x)


def _complex_to_json(z: complex):
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


NOISE_PARAM_KINDS = {
    "drift": "rate", "diffusion": "rate", "intensity": "rate", "rate": "rate",
    "jump_rate": None, "scale": None,
}


@dataclass
class ScenarioConfig:
    """Everything needed to run one ensemble.

    The spectrum is given either by ``energies`` (diagonal Hamiltonian, with
    optional ``multiplicities``) or by a dense ``hamiltonian``.  The initial
    state is either ``amplitudes`` or a ``density`` matrix.  ``horizon`` may
    be ``"auto"``, meaning ``horizon_factor / Gamma_min``.
    """

    name: str = "custom"
    energies: Optional[list] = None
    multiplicities: Optional[list] = None
    hamiltonian: Optional[list] = None
    amplitudes: Optional[list] = None
    density: Optional[list] = None
    noise: dict = field(default_factory=lambda: {"kind": "brownian", "drift": 0.0, "diffusion": 1.0})
    coupling: float = 1.0
    sigma: Optional[float] = None
    hbar: float = 1.0
    horizon: object = "auto"
    horizon_factor: float = 10.0
    steps: int = 200
    dt: Optional[float] = None
    checkpoints: int = 10
    paths: int = 1000
    seed: int = 0
    delta: float = 1e-6
    output_dir: str = "output"

    # -- derived objects ---------------------------------------------------

    def spectrum(self) -> EnergySpectrum:
        if self.hamiltonian is not None:
            H = np.array([[_parse_complex(x) for x in row] for row in self.hamiltonian])
            return spectrum_from_dense(H, hbar=self.hbar)
        return EnergySpectrum.diagonal(self.energies, self.multiplicities, hbar=self.hbar)

    def initial_state(self) -> DensityMatrix:
        if self.density is not None:
            rho = np.array([[_parse_complex(x) for x in row] for row in self.density])
            return DensityMatrix(rho)
        return PureState.from_amplitudes([_parse_complex(a) for a in self.amplitudes]).density()

    def model(self) -> LevyModel:
        return model_from_dict(self.noise)

    def signal(self) -> Signal:
        return Signal.from_state(self.initial_state(), self.spectrum(), self.coupling)

    def decoherence_table(self) -> DecoherenceTable:
        return DecoherenceTable.compute(self.model(), self.coupling, self.spectrum().eigenvalues)

    def resolved_horizon(self) -> float:
        if self.horizon == "auto":
            gmin = self.decoherence_table().min_rate
            if gmin <= 0:
                raise ConfigInvalid("horizon 'auto' needs at least two distinct levels and nonzero coupling")
            return self.horizon_factor / gmin
        return float(self.horizon)

    def n_steps(self) -> int:
        if self.dt is None:
            return self.steps
        return max(1, int(np.ceil(self.resolved_horizon() / self.dt - 1e-9)))

    def grid(self) -> np.ndarray:
        """Uniform grid; with ``dt`` set the horizon is rounded up to a whole number of steps."""
        n = self.n_steps()
        if self.dt is None:
            T = self.resolved_horizon()
            return uniform_grid(T, T / n)
        return uniform_grid(n * self.dt, self.dt)

    def checkpoint_indices(self) -> np.ndarray:
        n = self.n_steps()
        k = min(self.checkpoints, n + 1)
        return np.unique(np.rint(np.linspace(0, n, k)).astype(int))

    # -- validation and serialization ---------------------------------------

    def validate(self) -> "ScenarioConfig":
        """Check every constraint that can be checked before sampling."""
        try:
            if (self.energies is None) == (self.hamiltonian is None):
                raise ConfigInvalid("give exactly one of 'energies' and 'hamiltonian'")
            if (self.amplitudes is None) == (self.density is None):
                raise ConfigInvalid("give exactly one of 'amplitudes' and 'density'")
            if self.paths < 1 or self.steps < 1 or self.checkpoints < 1:
                raise ConfigInvalid("paths, steps and checkpoints must be positive")
            if self.dt is not None and not self.dt > 0:
                raise ConfigInvalid("dt must be positive")
            if self.sigma is not None:
                q = self.model().triplet()[1]
                if self.noise.get("kind") != "brownian" or q <= 0:
                    raise ConfigInvalid("sigma is only meaningful for Brownian noise")
                if abs(self.coupling * np.sqrt(q) - self.sigma) > 1e-12 * max(1.0, abs(self.sigma)):
                    raise ConfigInvalid("sigma and coupling disagree (sigma = coupling * sqrt(diffusion))")
            if not 0 < self.delta < 0.5:
                raise ConfigInvalid("delta must lie in (0, 1/2)")
            if self.seed < 0:
                raise ConfigInvalid("seed must be nonnegative")
            spec = self.spectrum()
            rho = self.initial_state()
            if rho.dim != spec.dim:
                raise ConfigInvalid(f"state dimension {rho.dim} != Hamiltonian dimension {spec.dim}")
            model = self.model()
            self.signal().check_domain(model)
            T = self.resolved_horizon()
            if not T > 0:
                raise ConfigInvalid("horizon must be positive")
        except ConfigInvalid:
            raise
        except (ReductionError, TypeError, KeyError) as exc:
            raise ConfigInvalid(f"{type(exc).__name__}: {exc}") from exc
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: v for k, v in d.items() if v is not None}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def digest(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def with_overrides(self, **kwargs) -> "ScenarioConfig":
        return replace(copy.deepcopy(self), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigInvalid("scenario must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigInvalid(f"unknown keys: {sorted(unknown)}")
        d = copy.deepcopy(data)
        try:
            if "energies" in d and d["energies"] is not None:
                d["energies"] = [parse_quantity(e, "energy") for e in d["energies"]]
            if "hamiltonian" in d and d["hamiltonian"] is not None:
                d["hamiltonian"] = [[_complex_to_json(_parse_complex(
                    parse_quantity(x, "energy") if isinstance(x, str) and x[-1:].isalpha() else x))
                    for x in row] for row in d["hamiltonian"]]
            for key in ("amplitudes",):
                if d.get(key) is not None:
                    d[key] = [_complex_to_json(_parse_complex(a)) for a in d[key]]
            if d.get("density") is not None:
                d["density"] = [[_complex_to_json(_parse_complex(x)) for x in row] for row in d["density"]]
            if "noise" in d:
                noise = dict(d["noise"])
                if "kind" not in noise:
                    raise ConfigInvalid("noise needs a 'kind'")
                for k, v in list(noise.items()):
                    if k != "kind":
                        if k not in NOISE_PARAM_KINDS:
                            raise ConfigInvalid(f"unknown noise parameter {k!r}")
                        noise[k] = parse_quantity(v, NOISE_PARAM_KINDS[k])
                d["noise"] = noise
            if "coupling" in d:
                d["coupling"] = parse_quantity(d["coupling"], "inverse_energy")
            if d.get("sigma") is not None:
                d["sigma"] = parse_quantity(d["sigma"], "inverse_energy")
                if "coupling" not in d:
                    q = float(d.get("noise", {}).get("diffusion", 1.0))
                    d["coupling"] = d["sigma"] / np.sqrt(q) if q > 0 else d["sigma"]
            if d.get("dt") is not None:
                d["dt"] = parse_quantity(d["dt"], "time")
            if "hbar" in d:
                d["hbar"] = HBAR_EV_S if d["hbar"] == "physical" else (
                    float("inf") if d["hbar"] in ("inf", "infinite", None) else parse_quantity(d["hbar"]))
            if "horizon" in d and d["horizon"] != "auto":
                d["horizon"] = parse_quantity(d["horizon"], "time")
            for key in ("steps", "checkpoints", "paths", "seed"):
                if key in d:
                    if isinstance(d[key], bool) or int(d[key]) != d[key]:
                        raise ConfigInvalid(f"{key} must be an integer")
                    d[key] = int(d[key])
            for key in ("horizon_factor", "delta"):
                if key in d:
                    d[key] = parse_quantity(d[key])
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigInvalid):
                raise
            raise ConfigInvalid(str(exc)) from exc
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        with open(path) as fh:
            return cls.from_json(fh.read())


_SQRT = float(np.sqrt(0.3)), float(np.sqrt(0.7))

PRESETS = {
    "appendix-a": dict(
        name="appendix-a", energies=[0.0, 1.0], amplitudes=list(_SQRT),
        noise={"kind": "brownian", "drift": 0.0, "diffusion": 1.0}, coupling=1.0,
        horizon="auto", horizon_factor=20.0, steps=200, paths=5000, seed=42),
    "appendix-b": dict(
        name="appendix-b", energies=[0.0, 1.0],
        amplitudes=[float(np.sqrt(0.5)), float(np.sqrt(0.5))],
        noise={"kind": "poisson", "intensity": 1.0}, coupling=1.0,
        horizon="auto", horizon_factor=20.0, steps=200, paths=5000, seed=42),
    "appendix-c": dict(
        name="appendix-c", energies=[0.0, 0.5], amplitudes=list(_SQRT),
        noise={"kind": "gamma", "rate": 1.0, "scale": 1.0}, coupling=1.0,
        horizon="auto", horizon_factor=20.0, steps=200, paths=5000, seed=42),
    "compound-exp": dict(
        name="compound-exp", energies=[0.0, 1.0], amplitudes=list(_SQRT),
        noise={"kind": "compound_poisson_exp", "intensity": 1.0, "jump_rate": 2.0}, coupling=1.0,
        horizon="auto", horizon_factor=20.0, steps=200, paths=5000, seed=42),
    "custom": dict(
        name="custom", energies=[0.0, 1.0], amplitudes=list(_SQRT),
        noise={"kind": "brownian", "drift": 0.0, "diffusion": 1.0}, coupling=1.0),
}

PRESET_DESCRIPTIONS = {
    "appendix-a": "two-level Brownian reduction, p = (0.3, 0.7)",
    "appendix-b": "two-level Poisson reduction, p = (0.5, 0.5)",
    "appendix-c": "two-level gamma reduction, lambda*E < 1, p = (0.3, 0.7)",
    "compound-exp": "two-level compound Poisson reduction with Exp(2) jumps, p = (0.3, 0.7)",
    "custom": "template to copy and edit",
}


def preset(name: str, **overrides) -> ScenarioConfig:
    try:
        base = PRESETS[name]
    except KeyError:
        raise ConfigInvalid(f"unknown scenario {name!r}; choose from {sorted(PRESETS)}") from None
    return ScenarioConfig.from_dict({**copy.deepcopy(base), **overrides})
