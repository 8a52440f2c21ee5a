"""Ensemble Monte Carlo over independent copies of the reduction process.

Every path draws from its own Philox stream keyed by ``(master seed, path
index)``.  Paths are processed in chunks of fixed size; chunk sums use
numpy's pairwise summation and are combined in index order with Kahan
compensation, so the result does not depend on how many workers ran.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import __version__
from ..errors import PathError, ReductionError
from ..information import conditional_model, sample_outcome
from ..quantum_core import check_density_batch
from ..reduction import detect_collapse, evolve_density_batch, posterior_probabilities
from .config import ScenarioConfig

CHUNK_SIZE = 512


def path_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(master_seed, spawn_key=(index,))))


class KahanSum:
    """Compensated running sum of equally shaped arrays."""

    def __init__(self, shape, dtype=float):
        self.total = np.zeros(shape, dtype=dtype)
        self._carry = np.zeros(shape, dtype=dtype)

    def add(self, x):
        y = x - self._carry
        t = self.total + y
        self._carry = (t - self.total) - y
        self.total = t


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    """Per-path records plus aggregate series on the grid.

    Level indices are 0-based; ``collapse == -1`` marks a path whose final
    posterior has not crossed ``1 - delta``.
    """

    config: ScenarioConfig
    grid: np.ndarray
    energies: np.ndarray
    prior: np.ndarray
    checkpoint_index: np.ndarray
    outcomes: np.ndarray
    collapse: np.ndarray
    collapse_step: np.ndarray
    final_posteriors: np.ndarray
    H_checkpoints: np.ndarray
    V_checkpoints: np.ndarray
    rho_checkpoints: np.ndarray
    mean_H: np.ndarray
    se_H: np.ndarray
    mean_V: np.ndarray
    se_V: np.ndarray
    born_fraction: np.ndarray
    mean_rho: np.ndarray
    invariants: dict
    config_hash: str
    version: str = __version__
    extras: dict = field(default_factory=dict)

    @property
    def n_paths(self) -> int:
        return int(self.outcomes.size)

    @property
    def checkpoint_times(self) -> np.ndarray:
        return self.grid[self.checkpoint_index]

    @property
    def collapsed_fraction(self) -> float:
        return float(np.mean(self.collapse >= 0))

    def born_frequencies(self) -> np.ndarray:
        n = self.energies.size
        return np.bincount(self.collapse[self.collapse >= 0], minlength=n)[:n] / self.n_paths

    def path_records(self):
        """CSV rows; level columns here are 1-based like ``pi_j``."""
        rows = []
        for i in range(self.n_paths):
            row = {"path": i, "master_seed": self.config.seed,
                   "outcome": int(self.outcomes[i]) + 1,
                   "collapse": None if self.collapse[i] < 0 else int(self.collapse[i]) + 1,
                   "collapse_time": (None if self.collapse_step[i] < 0
                                     else float(self.grid[self.collapse_step[i]]))}
            for j, pj in enumerate(self.final_posteriors[i]):
                row[f"pi_{j + 1}"] = float(pj)
            rows.append(row)
        return rows


def _first_hit(post, delta):
    """Step index of the first grid time with some ``pi_j > 1 - delta``, else -1."""
    hit = np.any(post > 1.0 - delta, axis=-1)
    return np.where(hit.any(axis=-1), np.argmax(hit, axis=-1), -1)


def _run_chunk(args):
    config, start, stop = args
    spec = config.spectrum()
    rho0 = config.initial_state().matrix
    model = config.model()
    signal = config.signal()
    grid = config.grid()
    dts = np.diff(grid)
    E = spec.eigenvalues
    ck = config.checkpoint_indices()
    B = stop - start

    xi = np.zeros((B, grid.size))
    outcomes = np.empty(B, dtype=int)
    for b in range(B):
        i = start + b
        try:
            rng = path_rng(config.seed, i)
            j = int(sample_outcome(signal, rng))
            outcomes[b] = j
            xi[b, 1:] = np.cumsum(conditional_model(model, signal.tilts[j]).sample(dts, rng))
        except ReductionError as exc:
            raise PathError(i, exc) from exc

    try:
        post = posterior_probabilities(model, signal, xi, grid)
        states = evolve_density_batch(model, config.coupling, rho0, spec, xi, grid)
    except ReductionError as exc:
        raise PathError(start, exc) from exc
    H = post @ E
    V = np.clip(post @ E ** 2 - H ** 2, 0.0, None)
    inv = check_density_batch(states.reshape((-1,) + states.shape[-2:]))
    collapsed_now = post > 1.0 - config.delta
    return {
        "outcomes": outcomes,
        "collapse": detect_collapse(post[:, -1, :], config.delta),
        "collapse_step": _first_hit(post, config.delta),
        "final_posteriors": post[:, -1, :],
        "H_ck": H[:, ck], "V_ck": V[:, ck], "rho_ck": states[:, ck],
        "sum_H": H.sum(axis=0), "sum_H2": (H ** 2).sum(axis=0),
        "sum_V": V.sum(axis=0), "sum_V2": (V ** 2).sum(axis=0),
        "sum_rho": states.sum(axis=0),
        "born_count": collapsed_now.sum(axis=0).astype(float),
        "inv": inv,
    }


def run_ensemble(config: ScenarioConfig, workers: int = 1) -> EnsembleResult:
    """Simulate ``config.paths`` independent reduction paths and aggregate them."""
    config.validate()
    grid = config.grid()
    spec = config.spectrum()
    n, d = spec.n_levels, spec.dim
    N = config.paths
    bounds = [(config, s, min(s + CHUNK_SIZE, N)) for s in range(0, N, CHUNK_SIZE)]
    if workers > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_chunk, bounds))
    else:
        chunks = [_run_chunk(b) for b in bounds]

    M = grid.size
    sums = {k: KahanSum(M) for k in ("sum_H", "sum_H2", "sum_V", "sum_V2")}
    rho_sum = KahanSum((M, d, d), complex)
    born = KahanSum((M, n))
    worst = {"trace_error": 0.0, "hermiticity_error": 0.0, "min_eigenvalue": np.inf}
    for c in chunks:
        for k, acc in sums.items():
            acc.add(c[k])
        rho_sum.add(c["sum_rho"])
        born.add(c["born_count"])
        worst["trace_error"] = max(worst["trace_error"], c["inv"]["trace_error"])
        worst["hermiticity_error"] = max(worst["hermiticity_error"], c["inv"]["hermiticity_error"])
        worst["min_eigenvalue"] = min(worst["min_eigenvalue"], c["inv"]["min_eigenvalue"])
    worst["states_checked"] = int(N * M)
    worst["ok"] = bool(worst["trace_error"] <= 1e-10 and worst["hermiticity_error"] <= 1e-10
                       and worst["min_eigenvalue"] >= -1e-10)

    def cat(key):
        return np.concatenate([c[key] for c in chunks], axis=0)

    mean_H = sums["sum_H"].total / N
    mean_V = sums["sum_V"].total / N
    dof = max(N - 1, 1)
    var_H = np.clip(sums["sum_H2"].total - N * mean_H ** 2, 0.0, None) / dof
    var_V = np.clip(sums["sum_V2"].total - N * mean_V ** 2, 0.0, None) / dof
    return EnsembleResult(
        config=config, grid=grid, energies=spec.eigenvalues, prior=config.signal().probabilities,
        checkpoint_index=config.checkpoint_indices(),
        outcomes=cat("outcomes"), collapse=cat("collapse"), collapse_step=cat("collapse_step"),
        final_posteriors=cat("final_posteriors"),
        H_checkpoints=cat("H_ck"), V_checkpoints=cat("V_ck"), rho_checkpoints=cat("rho_ck"),
        mean_H=mean_H, se_H=np.sqrt(var_H / N), mean_V=mean_V, se_V=np.sqrt(var_V / N),
        born_fraction=born.total / N, mean_rho=rho_sum.total / N,
        invariants=worst, config_hash=config.digest(),
    )
