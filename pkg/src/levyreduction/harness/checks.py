"""Statistical checks on ensembles.

Each check returns a :class:`CheckReport` whose rows carry the effect size
and its standard error next to the pass flag, so a failure can be judged by
magnitude and not just by verdict.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..decoherence import mean_density, rate_matrix
from ..errors import ZeroKappa
from ..levy_noise import LevyModel, cantelli_bound
from . import thresholds as th
from .ensemble import EnsembleResult


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else repr(x)
    return x


@dataclass
class CheckReport:
    name: str
    passed: bool
    effect: float
    se: float
    statistic: float
    rows: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{verdict} {self.name}: effect={self.effect:.4g} se={self.se:.3g} "
                f"statistic={self.statistic:.3g}")


def _z(effect, se):
    if abs(effect) <= th.EXACT_TOL:
        return 0.0
    return float(effect / se) if se > 0 else float(np.copysign(np.inf, effect))


def born_test(result: EnsembleResult, prior=None, z_max: float = th.MEAN_Z) -> CheckReport:
    """Binomial z-score of the collapse frequency of each level against the prior.

    ``prior`` overrides the Born probabilities (used as a negative control).
    Uncollapsed paths count as collapsing nowhere and are reported.
    """
    p = np.asarray(result.prior if prior is None else prior, dtype=float)
    N = result.n_paths
    f = result.born_frequencies()
    rows = []
    for j, (pj, fj) in enumerate(zip(p, f)):
        se = float(np.sqrt(pj * (1.0 - pj) / N))
        rows.append({"level": j + 1, "expected": float(pj), "frequency": float(fj),
                     "effect": float(fj - pj), "se": se, "z": _z(fj - pj, se)})
    worst = max(rows, key=lambda r: abs(r["z"]))
    uncollapsed = int(np.sum(result.collapse < 0))
    return CheckReport(
        "born", bool(all(abs(r["z"]) < z_max for r in rows)),
        worst["effect"], worst["se"], worst["z"], rows,
        {"paths": N, "uncollapsed": uncollapsed, "collapsed_fraction": result.collapsed_fraction},
    )


def martingale_test(result: EnsembleResult, z_max: float = th.MEAN_Z) -> CheckReport:
    """Ensemble mean of the posterior energy against its initial value at each checkpoint."""
    H0 = float(result.prior @ result.energies)
    N = result.n_paths
    rows = []
    for k, t in enumerate(result.checkpoint_times):
        h = result.H_checkpoints[:, k]
        se = float(h.std(ddof=1) / np.sqrt(N)) if N > 1 else 0.0
        eff = float(h.mean() - H0)
        rows.append({"t": float(t), "mean": float(h.mean()), "effect": eff, "se": se, "z": _z(eff, se)})
    worst = max(rows, key=lambda r: abs(r["z"]))
    return CheckReport("martingale", bool(all(abs(r["z"]) < z_max for r in rows)),
                       worst["effect"], worst["se"], worst["z"], rows, {"H0": H0})


def variance_decay_bound(prior, energies, rates, t) -> float:
    """Upper bound on ``E[V_t]`` from ``pi_m pi_n <= sqrt(pi_m pi_n) / 2``.

    ``E[sqrt(pi_m pi_n)] = sqrt(p_m p_n) exp(-Gamma_mn t)``, hence
    ``E[V_t] <= sum_{m<n} sqrt(p_m p_n) (E_m - E_n)^2 exp(-Gamma_mn t) / 2``.
    """
    p = np.asarray(prior, float)
    E = np.asarray(energies, float)
    iu = np.triu_indices(E.size, 1)
    terms = np.sqrt(p[:, None] * p[None, :]) * (E[:, None] - E[None, :]) ** 2 * np.exp(-rates * t)
    return float(0.5 * terms[iu].sum())


def supermartingale_test(result: EnsembleResult, z_step: float = th.MONOTONE_Z,
                         z_final: float = th.MEAN_Z) -> CheckReport:
    """``E[V_t]`` must not rise between checkpoints and must respect the decay bound at the end."""
    N = result.n_paths
    V = result.V_checkpoints
    t = result.checkpoint_times
    rows = []
    ok = True
    for k in range(V.shape[1] - 1):
        dv = V[:, k + 1] - V[:, k]
        se = float(dv.std(ddof=1) / np.sqrt(N)) if N > 1 else 0.0
        eff = float(dv.mean())
        step_ok = eff <= z_step * se + th.EXACT_TOL
        ok &= step_ok
        rows.append({"t0": float(t[k]), "t1": float(t[k + 1]), "effect": eff, "se": se,
                     "z": _z(eff, se), "ok": bool(step_ok)})
    V0 = float(V[:, 0].mean())
    cfg = result.config
    rates = rate_matrix(cfg.model(), cfg.coupling, result.energies)
    T = float(t[-1])
    if V0 > th.EXACT_TOL:
        bound = variance_decay_bound(result.prior, result.energies, rates, T) / V0
        ratio = float(V[:, -1].mean() / V0)
        ratio_se = float(V[:, -1].std(ddof=1) / np.sqrt(N) / V0) if N > 1 else 0.0
        final_ok = ratio <= bound + z_final * ratio_se + th.EXACT_TOL
    else:
        bound, ratio, ratio_se = 0.0, 0.0, 0.0
        final_ok = bool(np.all(V <= th.EXACT_TOL))
    ok &= final_ok
    worst = max(rows, key=lambda r: r["z"]) if rows else {"effect": 0.0, "se": 0.0, "z": 0.0}
    return CheckReport("supermartingale", bool(ok), worst["effect"], worst["se"], worst["z"], rows,
                       {"V0": V0, "final_ratio": ratio, "final_ratio_se": ratio_se,
                        "final_ratio_bound": bound, "final_ok": bool(final_ok)})


def _block_norms(mats, P, m, n):
    return np.linalg.norm(P[m] @ mats @ P[n], axis=(-2, -1))


def mean_density_test(result: EnsembleResult, n_boot: int = th.BOOTSTRAP_RESAMPLES,
                      z_max: float = th.BOOTSTRAP_Z, seed: int = 0, pair=(0, 1)) -> CheckReport:
    """Compare the ensemble-mean state with the exact noise average at each checkpoint.

    Standard errors come from a path-level bootstrap.  When the chosen pair of
    levels carries coherence, the decay rate of that block is also fitted by
    least squares on ``log |block|`` over checkpoints where the block stands
    well above its standard error.
    """
    cfg = result.config
    spec = cfg.spectrum()
    model = cfg.model()
    rho0 = cfg.initial_state()
    t = result.checkpoint_times
    exact = mean_density(rho0, spec, model, cfg.coupling, t)
    samples = result.rho_checkpoints
    N = samples.shape[0]
    emp = samples.mean(axis=0)
    flat = samples.reshape(N, -1)
    rng = np.random.default_rng(seed)
    boot = np.empty((n_boot, flat.shape[1]), dtype=complex)
    for b in range(n_boot):
        w = rng.multinomial(N, np.full(N, 1.0 / N))
        boot[b] = (w @ flat) / N
    boot = boot.reshape((n_boot,) + emp.shape)
    dev = boot - boot.mean(axis=0)
    se = np.sqrt(np.sum(np.abs(dev) ** 2, axis=(0, -2, -1)) / max(n_boot - 1, 1))
    dist = np.linalg.norm(emp - exact, axis=(-2, -1))
    rows = []
    ok = True
    for k in range(t.size):
        row_ok = dist[k] < z_max * se[k] or dist[k] < th.EXACT_TOL
        ok &= row_ok
        rows.append({"t": float(t[k]), "effect": float(dist[k]), "se": float(se[k]),
                     "z": float(dist[k] / se[k]) if se[k] > 0 else (0.0 if dist[k] < th.EXACT_TOL else np.inf),
                     "ok": bool(row_ok)})

    info = {"paths": N, "resamples": n_boot}
    m, n = pair
    P = spec.projectors
    if max(m, n) < spec.n_levels:
        gamma = float(rate_matrix(model, cfg.coupling, spec.eigenvalues)[m, n])
        block = _block_norms(emp, P, m, n)
        block_se = np.sqrt(np.sum(np.abs(P[m] @ dev @ P[n]) ** 2, axis=(0, -2, -1)) / max(n_boot - 1, 1))
        usable = (block > th.DECAY_FIT_MIN_SNR * block_se) | (t == 0)
        usable &= block > 0
        info["decay_rate_exact"] = gamma
        if gamma > 0 and usable.sum() >= 3:
            slope = np.polyfit(t[usable], np.log(block[usable]), 1)[0]
            fitted = float(-slope)
            rel = abs(fitted - gamma) / gamma
            info.update(decay_rate_fitted=fitted, decay_rate_rel_error=rel,
                        decay_points=int(usable.sum()),
                        decay_ok=bool(rel < th.DECAY_RATE_REL_TOL))
            ok &= rel < th.DECAY_RATE_REL_TOL
        else:
            info["decay_ok"] = None
    worst = max(rows, key=lambda r: r["z"])
    return CheckReport("mean_density", bool(ok), worst["effect"], worst["se"], worst["z"], rows, info)


def cantelli_test(model: LevyModel, kappa: float, epsilon: float, times, n_paths: int,
                  seed: int = 0, z_max: float = th.ONE_SIDED_Z) -> CheckReport:
    """Empirical ``P(exp(kappa xi_t - psi(kappa) t) > epsilon)`` against the Cantelli bound.

    Also requires the empirical probability to be nonincreasing in ``t``
    (within ``z_max`` standard errors of each difference) and lower at the
    last time than at the first.
    """
    if kappa == 0:
        raise ZeroKappa("kappa must be nonzero")
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 1 or np.any(np.diff(times) <= 0) or times[0] <= 0:
        raise ValueError("times must be positive and strictly increasing")
    model.check_domain(kappa, "kappa")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    dts = np.diff(np.concatenate([[0.0], times]))
    xi = np.cumsum(np.stack([model.sample(dt, rng, size=n_paths) for dt in dts], axis=1), axis=1)
    log_lam = kappa * xi - model.psi(kappa) * times
    exceed = log_lam > np.log(epsilon)
    p_hat = exceed.mean(axis=0)
    se = np.sqrt(p_hat * (1.0 - p_hat) / n_paths)
    bound = np.atleast_1d(cantelli_bound(model, kappa, epsilon, times))
    rows = []
    ok = True
    for k in range(times.size):
        row_ok = p_hat[k] <= bound[k] + z_max * se[k]
        ok &= row_ok
        rows.append({"t": float(times[k]), "probability": float(p_hat[k]), "bound": float(bound[k]),
                     "effect": float(p_hat[k] - bound[k]), "se": float(se[k]), "ok": bool(row_ok)})
    diffs = np.diff(p_hat)
    diff_se = np.sqrt(se[1:] ** 2 + se[:-1] ** 2)
    monotone = bool(np.all(diffs <= z_max * diff_se + th.EXACT_TOL))
    decreasing = bool(p_hat[-1] < p_hat[0]) if times.size > 1 else True
    ok &= monotone and decreasing
    worst = max(rows, key=lambda r: r["effect"] / r["se"] if r["se"] > 0 else r["effect"])
    return CheckReport("cantelli", bool(ok), worst["effect"], worst["se"],
                       worst["effect"] / worst["se"] if worst["se"] > 0 else worst["effect"], rows,
                       {"kappa": kappa, "epsilon": epsilon, "paths": n_paths,
                        "nonincreasing": monotone, "lower_at_end": decreasing,
                        "model": model.describe()})


def ensemble_checks(result: EnsembleResult) -> list:
    """The standard battery run after every ensemble."""
    return [born_test(result), martingale_test(result), supermartingale_test(result),
            mean_density_test(result)]
