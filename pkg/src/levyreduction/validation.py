"""Executable property suite.

Every check returns one or more :class:`CheckReport` objects.  The checks are
grouped by module; those that double as acceptance checks carry a
``criterion`` number.  :func:`run_validation` runs everything and also audits
every density matrix produced along the way.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import stats

from .decoherence import (CESIUM_HYPERFINE_EV, PLANCK_SIGMA_SQUARED, clock_report, effective_q,
                          gamma_rate, gamma_rate_integral, gamma_rate_sinh, integrate_lindblad,
                          lindblad_rhs, mean_density, rate_matrix)
from .harness import thresholds as th
from .harness.checks import CheckReport, born_test, cantelli_test, martingale_test, mean_density_test, \
    supermartingale_test
from .harness.config import ScenarioConfig, preset
from .harness.ensemble import run_ensemble
from .information import (Signal, conditional_model, cumulative_trapezoid, innovations_path,
                          sample_information_path)
from .levy_noise import Brownian, LevyModel, Poisson, cantelli_bound, levy_khintchine_check, \
    model_from_dict
from .quantum_core import (DensityMatrix, EnergySpectrum, PureState, check_density_batch,
                           expectation_energy, level_probabilities, luders_state, spectrum_from_dense,
                           trace_distance, variance_energy)
from .reduction import euler_maruyama_density, euler_maruyama_vector, evolve_density_batch, \
    evolve_state_vector, posterior_probabilities

# Two-level reference scenarios, one per noise family.  Energies keep every
# tilt lam*E_j well inside the exponent domain.
KIND_SETUPS = {
    "brownian": ({"kind": "brownian", "drift": 0.0, "diffusion": 1.0}, [0.0, 1.0]),
    "poisson": ({"kind": "poisson", "intensity": 1.0}, [0.0, 1.0]),
    "gamma": ({"kind": "gamma", "rate": 1.0, "scale": 1.0}, [0.0, 0.5]),
    "compound_poisson_exp": ({"kind": "compound_poisson_exp", "intensity": 1.0, "jump_rate": 2.0},
                             [0.0, 1.0]),
}
KINDS = tuple(KIND_SETUPS)
CANTELLI_KAPPA = {"brownian": 0.7, "poisson": 0.7, "gamma": 0.5, "compound_poisson_exp": 0.7}


def two_level_config(kind: str, probabilities=(0.3, 0.7), **overrides) -> ScenarioConfig:
    noise, energies = KIND_SETUPS[kind]
    amps = [float(np.sqrt(p)) for p in probabilities]
    base = dict(name=f"two-level-{kind}", energies=list(energies), amplitudes=amps,
                noise=dict(noise), coupling=1.0, horizon="auto", horizon_factor=20.0,
                steps=200, checkpoints=10, paths=5000, seed=20240501)
    base.update(overrides)
    return ScenarioConfig.from_dict(base)


def model_of(kind: str) -> LevyModel:
    return model_from_dict(KIND_SETUPS[kind][0])


class StateAudit:
    """Worst trace, Hermiticity and positivity violations over every audited state."""

    def __init__(self, tol: float = 1e-10):
        self.tol = tol
        self.trace_error = 0.0
        self.hermiticity_error = 0.0
        self.min_eigenvalue = np.inf
        self.count = 0
        self.sources = {}

    def record(self, matrices, source: str):
        m = np.asarray(matrices)
        if m.size == 0:
            return
        r = check_density_batch(m, self.tol)
        self._merge(r, int(m.size // (m.shape[-1] * m.shape[-2])), source)

    def record_summary(self, summary: dict, n: int, source: str):
        self._merge(summary, n, source)

    def _merge(self, r, n, source):
        self.trace_error = max(self.trace_error, r["trace_error"])
        self.hermiticity_error = max(self.hermiticity_error, r["hermiticity_error"])
        self.min_eigenvalue = min(self.min_eigenvalue, r["min_eigenvalue"])
        self.count += n
        self.sources[source] = self.sources.get(source, 0) + n

    def report(self) -> CheckReport:
        worst = max(self.trace_error, self.hermiticity_error, max(0.0, -self.min_eigenvalue))
        ok = (self.trace_error < self.tol and self.hermiticity_error < self.tol
              and self.min_eigenvalue > -self.tol)
        return CheckReport("state_invariants", bool(ok), worst, 0.0, worst, [],
                           {"states": self.count, "trace_error": self.trace_error,
                            "hermiticity_error": self.hermiticity_error,
                            "min_eigenvalue": self.min_eigenvalue, "tolerance": self.tol,
                            "by_source": dict(sorted(self.sources.items()))})


@dataclass
class Context:
    audit: StateAudit = field(default_factory=StateAudit)
    seed: int = 12345

    def rng(self, tag: int) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(self.seed, spawn_key=(tag,))))


def _exact(name, err, tol, rows=None, **info) -> CheckReport:
    """Report for a deterministic check: effect is the worst error, SE is zero."""
    err = float(err)
    return CheckReport(name, bool(err <= tol), err, 0.0, err, rows or [], {"tolerance": tol, **info})


def _mean_z(sample, target):
    sample = np.asarray(sample, float)
    se = sample.std(ddof=1) / np.sqrt(sample.size)
    eff = sample.mean() - target
    return float(eff), float(se), float(eff / se) if se > 0 else (0.0 if eff == 0 else np.inf)


def _ensemble(ctx: Context, config: ScenarioConfig, source: str):
    r = run_ensemble(config)
    ctx.audit.record_summary(r.invariants, r.invariants["states_checked"], source)
    return r


# ---------------------------------------------------------------------------
# quantum_core
# ---------------------------------------------------------------------------


def random_unitary(rng, d):
    """Haar-random unitary from the QR decomposition of a complex Gaussian matrix."""
    Z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def _random_spectrum(rng, d):
    n = rng.integers(1, d + 1)
    levels = np.sort(rng.choice(np.arange(-5, 6), size=n, replace=False)).astype(float)
    mult = np.ones(n, dtype=int)
    for _ in range(d - n):
        mult[rng.integers(n)] += 1
    U = random_unitary(rng, d)
    H = U @ np.diag(np.repeat(levels, mult)) @ U.conj().T
    return H, levels


def _random_density(rng, d, rank=None):
    rank = rank or int(rng.integers(1, d + 1))
    A = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = A @ A.conj().T
    return rho / np.trace(rho).real


def check_core(ctx: Context):
    rng = ctx.rng(1)
    worst_luders_e = worst_luders_v = worst_sum = worst_rebuild = 0.0
    for _ in range(200):
        d = int(rng.integers(1, 6))
        H, levels = _random_spectrum(rng, d)
        spec = spectrum_from_dense(H)
        worst_rebuild = max(worst_rebuild, np.max(np.abs(spec.hamiltonian() - H)))
        rho = DensityMatrix(_random_density(rng, d))
        ctx.audit.record(rho.matrix, "random_state")
        worst_sum = max(worst_sum, abs(level_probabilities(rho, spec).sum() - 1.0))
        for j in range(spec.n_levels):
            if level_probabilities(rho, spec)[j] > 1e-14:
                L = luders_state(rho, spec, j)
                ctx.audit.record(L.matrix, "luders_state")
                worst_luders_e = max(worst_luders_e, abs(expectation_energy(L, spec) - spec.eigenvalues[j]))
                worst_luders_v = max(worst_luders_v, variance_energy(L, spec))
    return [
        _exact("core_luders_energy", worst_luders_e, 1e-10),
        _exact("core_luders_variance", worst_luders_v, 1e-10),
        _exact("core_probability_sum", worst_sum, 1e-10),
        _exact("core_spectrum_rebuild", worst_rebuild, 1e-8),
    ]


# ---------------------------------------------------------------------------
# levy_noise
# ---------------------------------------------------------------------------


def check_noise_moments(ctx: Context):
    out = []
    dt, N = 0.5, 100_000
    for i, kind in enumerate(KINDS):
        model = model_of(kind)
        x = model.sample(dt, ctx.rng(100 + i), size=N)
        rows = []
        m_eff, m_se, m_z = _mean_z(x, model.psi_prime(0.0) * dt)
        rows.append({"moment": "mean", "effect": m_eff, "se": m_se, "z": m_z})
        c = x - x.mean()
        var = c.var(ddof=1)
        v_se = float(np.sqrt(max(np.mean(c ** 4) - var ** 2, 0.0) / N))
        v_eff = float(var - model.psi_double_prime(0.0) * dt)
        rows.append({"moment": "variance", "effect": v_eff, "se": v_se, "z": v_eff / v_se})
        rows.append({"moment": "psi(0)", "effect": float(model.psi(0.0)), "se": 0.0, "z": 0.0})
        worst = max(rows, key=lambda r: abs(r["z"]))
        ok = all(abs(r["z"]) < th.MEAN_Z for r in rows) and model.psi(0.0) == 0.0
        out.append(CheckReport(f"noise_moments[{kind}]", bool(ok), worst["effect"], worst["se"],
                               worst["z"], rows))
    return out


def _domain_grid(model, n=15):
    lo, hi = model.domain
    hi_eff = min(0.9 * hi, 3.0) if np.isfinite(hi) else 3.0
    return np.linspace(max(lo, -3.0), hi_eff, n)


def check_noise_convexity_and_lk(ctx: Context):
    out = []
    for kind in KINDS:
        model = model_of(kind)
        a = _domain_grid(model)
        A, B = np.meshgrid(a, a)
        mask = A != B
        gap = 0.5 * model.psi(A[mask]) + 0.5 * model.psi(B[mask]) - model.psi(0.5 * (A[mask] + B[mask]))
        out.append(CheckReport(f"noise_convexity[{kind}]", bool(np.all(gap > 0)), float(gap.min()), 0.0,
                               float(gap.min()), [], {"pairs": int(mask.sum())}))
        rel = [abs(levy_khintchine_check(model, float(x)) - model.psi(x)) / max(abs(model.psi(x)), 1e-300)
               if model.psi(x) != 0 else abs(levy_khintchine_check(model, float(x))) for x in a]
        out.append(_exact(f"noise_levy_khintchine[{kind}]", max(rel), 1e-8))
        kappas = a[a != 0]
        gaps = model.psi(kappas) - kappas * model.psi_prime(0.0)
        out.append(CheckReport(f"noise_cantelli_gap[{kind}]", bool(np.all(gaps > 0)), float(gaps.min()),
                               0.0, float(gaps.min())))
    return out


def check_noise_chain_additivity(ctx: Context):
    out = []
    N, dt = 10_000, 0.8
    for i, kind in enumerate(KINDS):
        model = model_of(kind)
        rng = ctx.rng(200 + i)
        one = model.sample(dt, rng, size=N)
        two = model.sample(dt / 2, rng, size=N) + model.sample(dt / 2, rng, size=N)
        res = stats.ks_2samp(one, two, method="asymp")
        out.append(CheckReport(f"noise_chain_additivity[{kind}]", bool(res.pvalue > th.DISTRIBUTION_P),
                               float(res.statistic), float(np.sqrt(2.0 / N)), float(res.pvalue), [],
                               {"p_value": float(res.pvalue), "ks_statistic": float(res.statistic)}))
    return out


def check_noise_exponential_martingale(ctx: Context):
    out = []
    kappa, times, N = 0.3, np.array([0.5, 1.0, 2.0, 3.0, 4.0]), 100_000
    for i, kind in enumerate(KINDS):
        model = model_of(kind)
        assert (model.psi(2 * kappa) - 2 * model.psi(kappa)) * times[-1] < 4
        rng = ctx.rng(300 + i)
        dts = np.diff(np.concatenate([[0.0], times]))
        xi = np.cumsum(np.stack([model.sample(dt, rng, size=N) for dt in dts], axis=1), axis=1)
        lam = np.exp(kappa * xi - model.psi(kappa) * times)
        rows = []
        for k, t in enumerate(times):
            eff, se, z = _mean_z(lam[:, k], 1.0)
            rows.append({"t": float(t), "effect": eff, "se": se, "z": z})
        worst = max(rows, key=lambda r: abs(r["z"]))
        out.append(CheckReport(f"noise_exponential_martingale[{kind}]",
                               bool(all(abs(r["z"]) < th.MEAN_Z for r in rows)),
                               worst["effect"], worst["se"], worst["z"], rows, {"kappa": kappa}))
    return out


def check_cantelli(ctx: Context):
    """Cantelli bound against the empirical exceedance probability at t = 1, 5, 25."""
    out = []
    for i, kind in enumerate(KINDS):
        rep = cantelli_test(model_of(kind), CANTELLI_KAPPA[kind], 0.1, [1.0, 5.0, 25.0], 10_000,
                            seed=ctx.seed + 400 + i)
        rep.name = f"cantelli[{kind}]"
        out.append(rep)
    return out


# ---------------------------------------------------------------------------
# information
# ---------------------------------------------------------------------------


def check_conditional_exponent(ctx: Context):
    out = []
    N, t = 100_000, 1.0
    for i, kind in enumerate(KINDS):
        model = model_of(kind)
        x = 0.3
        rng = ctx.rng(500 + i)
        xi = conditional_model(model, x).sample(t, rng, size=N)
        hi = model.domain[1]
        rows = []
        for a in (-0.6, -0.3, 0.2, 0.4, 0.6):
            if np.isfinite(hi) and 2 * a + x > hi - 0.2:
                continue
            w = np.exp(a * xi)
            m = w.mean()
            se = float(w.std(ddof=1) / np.sqrt(N) / m / t)
            eff = float(np.log(m) / t - (model.psi(a + x) - model.psi(x)))
            rows.append({"alpha": a, "effect": eff, "se": se, "z": eff / se})
        worst = max(rows, key=lambda r: abs(r["z"]))
        out.append(CheckReport(f"info_conditional_exponent[{kind}]",
                               bool(all(abs(r["z"]) < th.MEAN_Z for r in rows)),
                               worst["effect"], worst["se"], worst["z"], rows, {"signal": x}))
    return out


def check_information_paths(ctx: Context):
    out = []
    grid = np.linspace(0.0, 5.0, 101)
    for i, kind in enumerate(KINDS[1:]):
        model = model_of(kind)
        cfg = two_level_config(kind)
        signal = cfg.signal()
        rng = ctx.rng(600 + i)
        worst = 0.0
        for _ in range(200):
            path = sample_information_path(model, signal, int(rng.integers(2)), grid, rng)
            worst = min(worst, float(np.diff(path.values).min()))
        out.append(CheckReport(f"info_monotone_paths[{kind}]", bool(worst >= 0), worst, 0.0, worst))
    N = 10_000
    for i, kind in enumerate(KINDS):
        model = model_of(kind)
        rng = ctx.rng(650 + i)
        base = model.sample(1.0, rng, size=N)
        cond = conditional_model(model, 0.0).sample(1.0, rng, size=N)
        res = stats.ks_2samp(base, cond, method="asymp")
        out.append(CheckReport(f"info_zero_coupling[{kind}]", bool(res.pvalue > th.DISTRIBUTION_P),
                               float(res.statistic), float(np.sqrt(2.0 / N)), float(res.pvalue), [],
                               {"p_value": float(res.pvalue)}))
    # long-run identification: xi_T / (sigma T) -> E_j
    sigma, T, E = 1.0, 1e4, np.array([0.0, 1.0, 2.5])
    signal = Signal(E, np.full(3, 1 / 3), sigma)
    rng = ctx.rng(690)
    j = rng.choice(3, size=N, p=signal.probabilities)
    xi = Brownian(0.0, 1.0).sample(T, rng, size=N) + sigma * E[j] * T
    frac = float(np.mean(np.abs(xi / (sigma * T) - E[j]) < 4 / (sigma * np.sqrt(T))))
    se = float(np.sqrt(frac * (1 - frac) / N))
    out.append(CheckReport("info_long_run_identification", bool(frac >= 0.99), frac - 0.99, se,
                           (frac - 0.99) / se if se > 0 else np.inf, [], {"fraction": frac}))
    # innovations are standard Brownian
    model = Brownian(0.0, 1.0)
    signal = Signal([0.0, 1.0], [0.3, 0.7], sigma)
    grid = np.linspace(0.0, 1.0, 201)
    rng = ctx.rng(695)
    j = rng.choice(2, size=N, p=signal.probabilities)
    inc = rng.normal(0.0, np.sqrt(np.diff(grid)), size=(N, grid.size - 1)) + sigma * signal.energies[j][:, None] * np.diff(grid)
    xi = np.concatenate([np.zeros((N, 1)), np.cumsum(inc, axis=1)], axis=1)
    H = posterior_probabilities(model, signal, xi, grid) @ signal.energies
    W1 = xi[:, -1] - sigma * cumulative_trapezoid(H, grid)[:, -1]
    m_eff, m_se, m_z = _mean_z(W1, 0.0)
    c = W1 - W1.mean()
    v = c.var(ddof=1)
    v_se = float(np.sqrt((np.mean(c ** 4) - v ** 2) / N))
    rows = [{"moment": "mean", "effect": m_eff, "se": m_se, "z": m_z},
            {"moment": "variance", "effect": float(v - 1), "se": v_se, "z": float((v - 1) / v_se)}]
    worst = max(rows, key=lambda r: abs(r["z"]))
    out.append(CheckReport("info_innovations_standard_brownian",
                           bool(all(abs(r["z"]) < th.MEAN_Z for r in rows)),
                           worst["effect"], worst["se"], worst["z"], rows))
    return out


# ---------------------------------------------------------------------------
# reduction_engine
# ---------------------------------------------------------------------------


def check_posterior_normalization(ctx: Context):
    rng = ctx.rng(700)
    worst = 0.0
    for kind in KINDS:
        model = model_of(kind)
        E = np.array(KIND_SETUPS[kind][1] + [0.25])
        signal = Signal(E, [0.2, 0.5, 0.3], 1.0)
        xi = rng.uniform(-2e4, 2e4, size=2000) if kind == "brownian" else rng.uniform(0, 4e4, size=2000)
        t = rng.uniform(0, 1e4, size=2000)
        post = posterior_probabilities(model, signal, xi, t)
        if not np.all(np.isfinite(post)):
            return [_exact("red_posterior_normalization", np.inf, 1e-12)]
        worst = max(worst, float(np.max(np.abs(post.sum(axis=-1) - 1.0))))
    return [_exact("red_posterior_normalization", worst, 1e-12)]


def check_purity(ctx: Context):
    rng = ctx.rng(710)
    worst = worst_vec = 0.0
    for kind in KINDS:
        model = model_of(kind)
        E = np.array([0.0, 0.25, 0.5])
        U = random_unitary(rng, 3)
        spec = spectrum_from_dense(U @ np.diag(E) @ U.conj().T)
        for _ in range(100):
            v = rng.normal(size=3) + 1j * rng.normal(size=3)
            psi0 = PureState(v / np.linalg.norm(v))
            signal = Signal.from_state(psi0.density(), spec, 1.0)
            xi, t = float(rng.uniform(0, 20)), float(rng.uniform(0, 20))
            rho = evolve_density_batch(model, 1.0, psi0.density(), spec, xi, t)
            ctx.audit.record(rho, "evolve_density")
            worst = max(worst, abs(np.trace(rho @ rho).real - 1.0))
            vec = evolve_state_vector(model, signal, psi0, spec, xi, t).vector
            worst_vec = max(worst_vec, np.linalg.norm(np.outer(vec, vec.conj()) - rho))
    return [_exact("red_purity", worst, 1e-10), _exact("red_vector_vs_density", worst_vec, 1e-10)]


def martingale_ensembles(ctx: Context):
    """Posterior, energy and variance laws on 10^4-path ensembles, one per kind.

    The horizon ``ln(100) / Gamma`` is where the decay of coherence predicts
    99 % decoherence; 10 checkpoints.
    """
    out = []
    for i, kind in enumerate(KINDS):
        probe = two_level_config(kind)
        T = np.log(100.0) / probe.decoherence_table().min_rate
        cfg = two_level_config(kind, horizon=T, steps=100, checkpoints=10, paths=10_000,
                               seed=ctx.seed + 800 + i)
        r = _ensemble(ctx, cfg, "ensemble")
        m = martingale_test(r)
        m.name = f"energy_martingale[{kind}]"
        s = supermartingale_test(r)
        s.name = f"variance_supermartingale[{kind}]"
        out += [m, s]
        rows = []
        for j, pj in enumerate(r.prior):
            eff, se, z = _mean_z(r.final_posteriors[:, j], pj)
            rows.append({"level": j + 1, "effect": eff, "se": se, "z": z})
        worst = max(rows, key=lambda x: abs(x["z"]))
        out.append(CheckReport(f"posterior_martingale[{kind}]",
                               bool(all(abs(x["z"]) < th.MEAN_Z for x in rows)),
                               worst["effect"], worst["se"], worst["z"], rows))
        V0 = s.info["V0"]
        VT = float(r.V_checkpoints[:, -1].mean())
        se = float(r.V_checkpoints[:, -1].std(ddof=1) / np.sqrt(r.n_paths))
        out.append(CheckReport(f"variance_decay_99pct[{kind}]", bool(VT < 0.05 * V0),
                               VT / V0, se / V0, (VT - 0.05 * V0) / se if se > 0 else -np.inf, [],
                               {"horizon": T, "V0": V0, "VT": VT}))
    return out


def check_conditional_convergence(ctx: Context):
    """Given outcome ``j``, ``P(tr(P_j rho_T) < 1 - eps)`` against the Cantelli-derived bound."""
    out = []
    eps, N = 0.01, 10_000
    for i, kind in enumerate(KINDS):
        cfg = two_level_config(kind)
        model = cfg.model()
        signal = cfg.signal()
        T = 10.0 / cfg.decoherence_table().min_rate
        rows = []
        ok = True
        for j in range(2):
            k = 1 - j
            xj, xk = signal.tilts[j], signal.tilts[k]
            tilted = conditional_model(model, xj)
            xi = tilted.sample(T, ctx.rng(900 + 10 * i + j), size=N)
            post = posterior_probabilities(model, signal, xi, T)
            p_hat = float(np.mean(post[:, j] < 1 - eps))
            se = float(np.sqrt(p_hat * (1 - p_hat) / N))
            eps_ratio = eps * signal.probabilities[j] / ((1 - eps) * signal.probabilities[k])
            bound = float(cantelli_bound(tilted, xk - xj, eps_ratio, T))
            row_ok = p_hat <= bound + th.ONE_SIDED_Z * se
            ok &= row_ok
            rows.append({"outcome": j + 1, "probability": p_hat, "bound": bound,
                         "effect": p_hat - bound, "se": se, "ok": bool(row_ok)})
        worst = max(rows, key=lambda r: r["effect"])
        out.append(CheckReport(f"conditional_convergence[{kind}]", bool(ok), worst["effect"], worst["se"],
                               worst["effect"] / worst["se"] if worst["se"] > 0 else worst["effect"],
                               rows, {"epsilon": eps, "horizon": T}))
    return out


def check_luders_limit(ctx: Context):
    """Collapsed final states sit within ``10 delta`` of the Lüders projection of ``rho_0``."""
    out = []
    rng = ctx.rng(950)
    U = random_unitary(rng, 3)
    v = rng.normal(size=3) + 1j * rng.normal(size=3)
    v /= np.linalg.norm(v)
    for i, kind in enumerate(KINDS):
        low, high = KIND_SETUPS[kind][1]
        H = U @ np.diag([low, low, high]) @ U.conj().T
        cfg = ScenarioConfig.from_dict(dict(
            name="degenerate", hamiltonian=[[[z.real, z.imag] for z in row] for row in H],
            amplitudes=[[z.real, z.imag] for z in v], noise=dict(KIND_SETUPS[kind][0]),
            horizon="auto", horizon_factor=20.0, steps=50, checkpoints=2, paths=2000,
            seed=ctx.seed + 960 + i))
        r = _ensemble(ctx, cfg, "ensemble")
        spec = cfg.spectrum()
        rho0 = cfg.initial_state()
        targets = [luders_state(rho0, spec, j).matrix for j in range(spec.n_levels)]
        final = r.rho_checkpoints[:, -1]
        dists = [trace_distance(final[p], targets[r.collapse[p]]) for p in np.flatnonzero(r.collapse >= 0)]
        worst = max(dists) if dists else np.inf
        out.append(_exact(f"luders_limit[{kind}]", worst, 10 * cfg.delta,
                          collapsed=len(dists), paths=r.n_paths))
    return out


def em_oracle(ctx: Context, paths: int = 50, dt: float = 1e-3, horizon: float = 5.0):
    """Euler-Maruyama on the Brownian SSE, driven by the innovations of the same observation.

    Returns the path-averaged sup-norm posterior error at ``dt`` and ``dt/2``
    (the coarse Brownian increments are sums of the fine ones).
    """
    sigma = 1.0
    model = Brownian(0.0, 1.0)
    spec = EnergySpectrum.diagonal([0.0, 1.0])
    psi0 = PureState.from_amplitudes([np.sqrt(0.5), np.sqrt(0.5)])
    signal = Signal.from_state(psi0.density(), spec, sigma)
    rng = ctx.rng(1000)
    j = rng.choice(2, size=paths, p=signal.probabilities)
    fine = int(round(horizon / dt)) * 2
    dB = rng.normal(0.0, np.sqrt(dt / 2), size=(paths, fine))
    errors = {}
    for label, inc in (("dt", dB.reshape(paths, -1, 2).sum(axis=-1)), ("dt/2", dB)):
        n = inc.shape[1]
        grid = np.linspace(0.0, horizon, n + 1)
        xi = np.zeros((paths, n + 1))
        xi[:, 1:] = np.cumsum(inc + sigma * signal.energies[j][:, None] * (horizon / n), axis=1)
        exact = posterior_probabilities(model, signal, xi, grid)
        W = np.stack([innovations_path(_path(grid, xi[p], model), exact[p] @ signal.energies, sigma)
                      for p in range(paths)])
        psi = euler_maruyama_vector(psi0, spec, sigma, np.diff(W, axis=1), grid)
        em = np.abs(psi) ** 2
        errors[label] = float(np.max(np.abs(em - exact), axis=(1, 2)).mean())
    return errors


def _path(grid, values, model):
    from .information import InformationPath
    return InformationPath(grid, values, None, model)


def check_em_oracle(ctx: Context):
    errs = em_oracle(ctx)
    ratio = errs["dt"] / errs["dt/2"]
    return [
        _exact("em_sup_error", errs["dt"], 0.05, error_half_step=errs["dt/2"]),
        CheckReport("em_halving_ratio", bool(1.2 <= ratio <= 1.7), ratio, 0.0, ratio, [],
                    {"error_dt": errs["dt"], "error_dt_half": errs["dt/2"], "expected": float(np.sqrt(2)),
                     "accepted": [1.2, 1.7]}),
    ]


def check_em_density(ctx: Context):
    """Density-matrix Euler-Maruyama: agreement with the vector scheme and diagonal martingale."""
    sigma, dt, T = 1.0, 1e-3, 1.0
    spec = EnergySpectrum.diagonal([0.0, 1.0])
    grid = np.linspace(0.0, T, int(round(T / dt)) + 1)
    rng = ctx.rng(1100)
    psi0 = PureState.from_amplitudes([np.sqrt(0.3), np.sqrt(0.7)])
    dW = rng.normal(0.0, np.sqrt(dt), size=(20, grid.size - 1))
    vec = euler_maruyama_vector(psi0, spec, sigma, dW, grid)
    rho = euler_maruyama_density(psi0.density(), spec, sigma, dW, grid)
    ctx.audit.record(rho, "euler_maruyama_density")
    outer = np.einsum("...a,...b->...ab", vec, vec.conj())
    gap = float(np.max(np.linalg.norm(rho - outer, axis=(-2, -1))))
    mixed = DensityMatrix(np.diag([0.5, 0.5]))
    dW = rng.normal(0.0, np.sqrt(dt), size=(1000, grid.size - 1))
    rho_m = euler_maruyama_density(mixed, spec, sigma, dW, grid)
    ctx.audit.record(rho_m[:, -1], "euler_maruyama_density")
    eff, se, z = _mean_z(rho_m[:, -1, 0, 0].real, 0.5)
    return [
        _exact("em_density_vs_vector", gap, 0.05),
        CheckReport("em_density_diagonal_martingale", bool(abs(z) < th.MEAN_Z), eff, se, z),
    ]


def check_long_horizon_collapse(ctx: Context):
    """Brownian two-level collapse frequency against its exact law, plus the 99.9 % horizon.

    For ``p = (1/2, 1/2)`` and unit gap, the path collapses by ``T`` iff
    ``T/2 + sqrt(T) Z > log((1 - delta)/delta)``.
    """
    out = []
    delta = 1e-6
    for T in (50.0, 100.0):
        cfg = ScenarioConfig.from_dict(dict(
            name="long-horizon", energies=[0.0, 1.0], amplitudes=[np.sqrt(0.5), np.sqrt(0.5)],
            noise={"kind": "brownian", "drift": 0.0, "diffusion": 1.0}, coupling=1.0,
            horizon=T, steps=1, checkpoints=2, paths=10_000, seed=ctx.seed + int(T), delta=delta))
        r = _ensemble(ctx, cfg, "ensemble")
        exact = float(stats.norm.cdf((0.5 * T - np.log((1 - delta) / delta)) / np.sqrt(T)))
        frac = r.collapsed_fraction
        se = float(np.sqrt(exact * (1 - exact) / r.n_paths))
        z = (frac - exact) / se
        ok = abs(z) < th.MEAN_Z
        if T == 100.0:
            ok &= frac >= 0.999
        out.append(CheckReport(f"collapse_fraction[T={T:g}]", bool(ok), frac - exact, se, z, [],
                               {"fraction": frac, "exact": exact}))
    return out


# ---------------------------------------------------------------------------
# decoherence
# ---------------------------------------------------------------------------

RATE_GRIDS = {
    "brownian": [-2.0, -1.0, 0.0, 1.0, 2.0],
    "poisson": [-2.0, -1.0, 0.0, 1.0, 2.0],
    "gamma": [-2.0, -1.0, 0.0, 0.4, 0.8],
    "compound_poisson_exp": [-2.0, -1.0, 0.0, 0.8, 1.6],
}


def check_rate_formulas(ctx: Context):
    out = []
    for kind in KINDS:
        model = model_of(kind)
        t0 = time.perf_counter()
        worst = 0.0
        rows = []
        for em in RATE_GRIDS[kind]:
            for en in RATE_GRIDS[kind]:
                g = gamma_rate(model, 1.0, em, en)
                gi = gamma_rate_integral(model, 1.0, em, en)
                gs = gamma_rate_sinh(model, 1.0, em, en)
                scale = max(abs(g), 1e-300)
                rel = 0.0 if g == gi == gs == 0 else max(abs(g - gi), abs(g - gs), abs(gi - gs)) / scale
                worst = max(worst, rel)
                rows.append({"E_m": em, "E_n": en, "gamma": g, "effect": rel, "se": 0.0})
        elapsed = time.perf_counter() - t0
        rep = _exact(f"rate_formulas[{kind}]", worst, 1e-6, rows, seconds=elapsed)
        rep.passed = bool(rep.passed and elapsed < 10.0)
        out.append(rep)
    return out


def check_rate_properties(ctx: Context):
    out = []
    for kind in KINDS:
        model = model_of(kind)
        E = np.array(RATE_GRIDS[kind])
        G = rate_matrix(model, 1.0, E)
        off = G[~np.eye(E.size, dtype=bool)]
        ok = bool(np.all(np.diag(G) == 0) and np.all(off > 0) and np.allclose(G, G.T, rtol=0, atol=0))
        out.append(CheckReport(f"rate_positivity[{kind}]", ok, float(off.min()), 0.0, float(off.min())))
        q = effective_q(model, 1.0, E[:, None], E[None, :])
        out.append(CheckReport(f"effective_q_positive[{kind}]", bool(np.all(q > 0)), float(q.min()), 0.0,
                               float(q.min())))
    # shifts: Poisson strictly increasing, Brownian invariant
    shifts = np.linspace(0.0, 5.0, 11)
    pois = np.array([gamma_rate(Poisson(1.0), 1.0, c, c + 0.01) for c in shifts])
    out.append(CheckReport("rate_shift_poisson_increasing", bool(np.all(np.diff(pois) > 0)),
                           float(np.diff(pois).min()), 0.0, float(np.diff(pois).min())))
    brown = np.array([gamma_rate(Brownian(0.3, 1.0), 1.0, c, c + 0.5) for c in shifts])
    out.append(_exact("rate_shift_brownian_invariant", np.max(np.abs(brown - brown[0])) / brown[0], 1e-12))
    return out


def amplification(ctx: Context, paths: int = 4000):
    """Poisson rates at ``lam (E_m + E_n)`` in {0, 5, 10} with ``lam dE = 0.01``, plus a Monte Carlo decay comparison."""
    model = Poisson(1.0)
    gap = 0.01
    rates = {s: gamma_rate(model, 1.0, 0.5 * (s - gap), 0.5 * (s + gap)) for s in (0.0, 5.0, 10.0)}
    r5, r10 = rates[5.0] / rates[0.0], rates[10.0] / rates[0.0]
    exact_err = max(abs(r5 / np.exp(2.5) - 1), abs(r10 / np.exp(5.0) - 1))
    fits = {}
    horizon = 2.0 / rates[10.0]
    for s in (0.0, 10.0):
        cfg = ScenarioConfig.from_dict(dict(
            name=f"shift-{s:g}", energies=[0.5 * (s - gap), 0.5 * (s + gap)],
            amplitudes=[np.sqrt(0.5), np.sqrt(0.5)], noise={"kind": "poisson", "intensity": 1.0},
            coupling=1.0, horizon=horizon, steps=20, checkpoints=11, paths=paths,
            seed=ctx.seed + 1200 + int(s)))
        r = _ensemble(ctx, cfg, "ensemble")
        fits[s] = decay_rate_fit(r.rho_checkpoints[:, :, 0, 1], r.checkpoint_times, ctx.rng(1300 + int(s)))
    return rates, exact_err, fits


def decay_rate_fit(offdiag, t, rng, n_boot: int = 100):
    """Least-squares decay rate of ``|mean offdiag|`` and its bootstrap SE."""
    N = offdiag.shape[0]

    def fit(x):
        return -np.polyfit(t, np.log(np.abs(x.mean(axis=0))), 1)[0]

    rate = float(fit(offdiag))
    boots = [fit(offdiag[rng.integers(0, N, N)]) for _ in range(n_boot)]
    return rate, float(np.std(boots, ddof=1))


def check_amplification(ctx: Context):
    rates, exact_err, fits = amplification(ctx)
    (r_lo, se_lo), (r_hi, se_hi) = fits[0.0], fits[10.0]
    # conservative: compare the shifted rate with the unshifted rate plus 3 SE
    ceiling = max(r_lo + th.ONE_SIDED_Z * se_lo, 0.0)
    speedup = r_hi / ceiling if ceiling > 0 else np.inf
    return [
        _exact("amplification_exact_ratios", exact_err, 0.01,
               ratio_5=rates[5.0] / rates[0.0], ratio_10=rates[10.0] / rates[0.0]),
        CheckReport("amplification_monte_carlo", bool(r_hi > 0 and speedup >= 10.0), r_hi - 10 * r_lo,
                    se_hi, float(speedup), [],
                    {"rate_unshifted": r_lo, "rate_unshifted_se": se_lo, "rate_shifted": r_hi,
                     "rate_shifted_se": se_hi, "exact_unshifted": rates[0.0], "exact_shifted": rates[10.0],
                     "speedup_vs_unshifted_upper": speedup}),
    ]


def check_lindblad(ctx: Context):
    """RK4-integrated mean-state equation against the closed form, three levels in a rotated basis."""
    out = []
    rng = ctx.rng(1400)
    U = random_unitary(rng, 3)
    rho0 = DensityMatrix(_random_density(rng, 3, rank=2))
    for kind in KINDS:
        model = model_of(kind)
        low, high = KIND_SETUPS[kind][1]
        E = np.array([low, 0.5 * (low + high), high])
        spec = spectrum_from_dense(U @ np.diag(E) @ U.conj().T)
        gmax = rate_matrix(model, 1.0, spec.eigenvalues).max()
        times = np.linspace(0.1, 3.0, 10) / gmax
        exact = mean_density(rho0, spec, model, 1.0, times)
        fastest = max(gmax, np.ptp(spec.eigenvalues) / spec.hbar)
        ode = integrate_lindblad(rho0, spec, model, 1.0, times, max_step=0.01 / fastest)
        ctx.audit.record(ode, "lindblad")
        ctx.audit.record(exact, "mean_density")
        err = float(np.max(np.linalg.norm(ode - exact, axis=(-2, -1))))
        out.append(_exact(f"lindblad_vs_mean_density[{kind}]", err, 1e-6, points=int(times.size)))
        flow = check_density_batch(ode)
        rhs_trace = abs(np.trace(lindblad_rhs(rho0, spec, model, 1.0)))
        worst = max(flow["trace_error"], flow["hermiticity_error"], rhs_trace)
        out.append(_exact(f"lindblad_trace_hermiticity[{kind}]", worst, 1e-10))
    return out


def check_lln(ctx: Context):
    """Ensemble mean of 2x10^4 conditional states against the exact average at 5 checkpoints."""
    out = []
    for i, kind in enumerate(KINDS):
        cfg = two_level_config(kind, probabilities=(0.5, 0.5), horizon_factor=2.0, steps=40,
                               checkpoints=5, paths=20_000, seed=ctx.seed + 1500 + i)
        r = _ensemble(ctx, cfg, "ensemble")
        rep = mean_density_test(r, seed=ctx.seed + i)
        rep.name = f"lln_mean_density[{kind}]"
        if rep.info.get("decay_ok") is None:
            rep.passed = False
        out.append(rep)
    return out


def check_clock(ctx: Context):
    rep = clock_report(CESIUM_HYPERFINE_EV, 1.0, PLANCK_SIGMA_SQUARED)
    bound = rep["sigma2_bound_mev2_per_s"]
    four_sig = float(f"{bound:.4g}")
    err = abs(four_sig - 0.5537e22) / 0.5537e22
    return [CheckReport("clock_bound", bool(err == 0 and rep["candidate_within_bound"]), bound - 0.5537e22,
                        0.0, err, [], rep)]


# ---------------------------------------------------------------------------
# harness
# ---------------------------------------------------------------------------


def check_born(ctx: Context):
    """Born frequencies for each kind, ``p = (0.3, 0.7)``, 5000 paths, horizon ``20 / Gamma``."""
    out = []
    for i, kind in enumerate(KINDS):
        cfg = two_level_config(kind, paths=5000, seed=ctx.seed + 1600 + i)
        t0 = time.perf_counter()
        r = _ensemble(ctx, cfg, "ensemble")
        elapsed = time.perf_counter() - t0
        rep = born_test(r)
        f2 = float(r.born_frequencies()[1])
        tol = 3 * np.sqrt(0.21 / 5000)
        rep.name = f"born[{kind}]"
        rep.info.update(seconds=elapsed, frequency_level_2=f2, tolerance_level_2=tol)
        rep.passed = bool(rep.passed and abs(f2 - 0.7) <= tol and r.collapsed_fraction >= 0.999
                          and elapsed < 60.0)
        out.append(rep)
    return out


def check_born_negative_control(ctx: Context):
    cfg = two_level_config("poisson", probabilities=(0.5, 0.5), paths=5000, seed=42)
    r = _ensemble(ctx, cfg, "ensemble")
    good = born_test(r)
    bad = born_test(r, prior=[0.4, 0.6])
    return [
        CheckReport("born_balanced_poisson", good.passed, good.effect, good.se, good.statistic, good.rows, good.info),
        CheckReport("born_negative_control", bool(not bad.passed), bad.effect, bad.se, bad.statistic, bad.rows,
                    {"detected": not bad.passed}),
    ]


def check_determinism(ctx: Context):
    cfg = two_level_config("gamma", paths=700, steps=30, seed=7)
    a, b = run_ensemble(cfg), run_ensemble(cfg)
    c = run_ensemble(cfg, workers=2)
    same = all(np.array_equal(getattr(a, f), getattr(x, f))
               for x in (b, c) for f in ("outcomes", "collapse", "final_posteriors", "mean_H", "mean_V",
                                           "mean_rho", "born_fraction", "rho_checkpoints"))
    return [CheckReport("determinism", bool(same), 0.0 if same else 1.0, 0.0, 0.0)]


def check_config_roundtrip(ctx: Context):
    docs = [preset(name).to_json() for name in ("appendix-a", "appendix-b", "appendix-c", "compound-exp", "custom")]
    raw = ('{"energies": ["0 eV", "3.801e-5eV"], "amplitudes": [0.6, 0.8],'
           ' "noise": {"kind": "brownian", "drift": 0, "diffusion": "1Hz"}, "coupling": "2e4/eV",'
           ' "horizon": "5ms", "steps": 10}')
    docs.append(ScenarioConfig.from_json(raw).to_json())
    worst = 0
    for doc in docs:
        once = ScenarioConfig.from_json(doc).to_json()
        twice = ScenarioConfig.from_json(once).to_json()
        worst += int(once != doc or twice != once)
    return [CheckReport("config_roundtrip", worst == 0, float(worst), 0.0, float(worst), [],
                        {"documents": len(docs)})]


@dataclass(frozen=True)
class Check:
    name: str
    module: str
    run: Callable
    criterion: Optional[int] = None


CHECKS = [
    Check("core", "quantum_core", check_core),
    Check("noise_moments", "levy_noise", check_noise_moments),
    Check("noise_convexity_lk", "levy_noise", check_noise_convexity_and_lk),
    Check("noise_chain", "levy_noise", check_noise_chain_additivity),
    Check("noise_martingale", "levy_noise", check_noise_exponential_martingale),
    Check("cantelli", "levy_noise", check_cantelli, 9),
    Check("conditional_exponent", "information", check_conditional_exponent),
    Check("information_paths", "information", check_information_paths),
    Check("posterior_normalization", "reduction_engine", check_posterior_normalization),
    Check("purity", "reduction_engine", check_purity),
    Check("martingales", "reduction_engine", martingale_ensembles, 2),
    Check("conditional_convergence", "reduction_engine", check_conditional_convergence),
    Check("luders_limit", "reduction_engine", check_luders_limit),
    Check("em_oracle", "reduction_engine", check_em_oracle, 3),
    Check("em_density", "reduction_engine", check_em_density),
    Check("long_horizon_collapse", "reduction_engine", check_long_horizon_collapse),
    Check("rate_formulas", "decoherence", check_rate_formulas, 4),
    Check("rate_properties", "decoherence", check_rate_properties),
    Check("lindblad", "decoherence", check_lindblad, 5),
    Check("lln", "decoherence", check_lln, 6),
    Check("amplification", "decoherence", check_amplification, 7),
    Check("clock", "decoherence", check_clock, 8),
    Check("born", "harness_cli", check_born, 1),
    Check("born_control", "harness_cli", check_born_negative_control),
    Check("determinism", "harness_cli", check_determinism),
    Check("config_roundtrip", "harness_cli", check_config_roundtrip),
]


@dataclass
class ValidationRun:
    reports: dict
    seconds: dict
    total_seconds: float
    audit: CheckReport

    @property
    def all_reports(self):
        return [r for reps in self.reports.values() for r in reps] + [self.audit]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.all_reports) and self.total_seconds < 600.0

    def for_criterion(self, k: int):
        return [r for c in CHECKS if c.criterion == k for r in self.reports.get(c.name, [])]


def run_validation(only=None, seed: int = 12345, progress: Optional[Callable] = None) -> ValidationRun:
    """Run the property suite (or the named subset) and audit every produced state."""
    ctx = Context(seed=seed)
    reports, seconds = {}, {}
    t_start = time.perf_counter()
    for check in CHECKS:
        if only and check.name not in only:
            continue
        t0 = time.perf_counter()
        reps = check.run(ctx)
        seconds[check.name] = time.perf_counter() - t0
        reports[check.name] = reps
        if progress:
            for r in reps:
                progress(check, r, seconds[check.name])
    # every report must carry an effect size and a standard error
    for reps in reports.values():
        for r in reps:
            if not (np.isfinite(r.effect) or np.isinf(r.effect)) or r.se is None:
                r.passed = False
    total = time.perf_counter() - t_start
    return ValidationRun(reports, seconds, total, ctx.audit.report())
