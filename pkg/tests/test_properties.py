"""Property-based tests of the invariants each module promises."""

import numpy as np
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from levyreduction.decoherence import gamma_rate, mean_density, rate_matrix
from levyreduction.harness.config import ScenarioConfig
from levyreduction.information import Signal, conditional_exponent
from levyreduction.levy_noise import Brownian, CompoundPoissonExp, GammaProcess, Poisson, cantelli_bound
from levyreduction.quantum_core import (
    DensityMatrix, EnergySpectrum, check_density_batch, level_probabilities, luders_state, spectrum_from_dense,
)
from levyreduction.reduction import (
    detect_collapse, euler_maruyama_density, evolve_density_batch, evolve_state_vector, posterior_probabilities,
)

pos = st.floats(0.1, 5.0)
models = st.one_of(
    st.builds(Brownian, st.floats(-2.0, 2.0), pos),
    st.builds(Poisson, pos),
    st.builds(CompoundPoissonExp, pos, st.floats(0.5, 5.0)),
    st.builds(GammaProcess, pos, st.floats(0.2, 2.0)),
)


def in_domain(model, u):
    """Map ``u`` in [-1, 1] into the exponent domain, clipped to |alpha| <= 3."""
    lo, hi = model.domain
    hi = min(hi * 0.95 if np.isfinite(hi) else 3.0, 3.0)
    lo = max(lo, -3.0)
    return lo + (u + 1) / 2 * (hi - lo)


unit = st.floats(-1.0, 1.0)


@st.composite
def spectra(draw, max_levels=4):
    n = draw(st.integers(1, max_levels))
    gaps = draw(arrays(float, n, elements=st.floats(0.05, 1.0)))
    E = np.cumsum(gaps) - draw(st.floats(0.0, 1.0))
    mult = draw(arrays(int, n, elements=st.integers(1, 2)))
    return EnergySpectrum.diagonal(E, mult)


@st.composite
def densities(draw, d):
    re = draw(arrays(float, (d, d), elements=st.floats(-1, 1)))
    im = draw(arrays(float, (d, d), elements=st.floats(-1, 1)))
    A = re + 1j * im
    rho = A @ A.conj().T + 1e-3 * np.eye(d)
    return rho / np.trace(rho).real


@st.composite
def probability_vectors(draw, n):
    w = draw(arrays(float, n, elements=st.floats(0.01, 1.0)))
    return w / w.sum()


@given(models, unit, unit)
def test_exponent_convex(model, u, v):
    a, b = in_domain(model, u), in_domain(model, v)
    assume(abs(a - b) > 1e-3)
    assert model.psi(0.5 * (a + b)) < 0.5 * model.psi(a) + 0.5 * model.psi(b)


@given(models, unit, unit)
def test_esscher_tilts_compose(model, u, v):
    k1 = 0.5 * in_domain(model, u)
    k2 = 0.5 * in_domain(model, v)
    assume(model.in_domain(k1 + k2))
    twice = model.tilt(k1).tilt(k2)
    once = model.tilt(k1 + k2)
    for a in (-0.3, 0.0, 0.1):
        assume(once.in_domain(a))
        np.testing.assert_allclose(twice.psi(a), once.psi(a), rtol=1e-10, atol=1e-12)


@given(models, unit)
def test_conditional_exponent_vanishes_at_zero(model, u):
    x = 0.5 * in_domain(model, u)
    assert conditional_exponent(model, x, 0.0) == 0.0


@given(models, unit, st.floats(0.1, 0.9), st.floats(0.1, 100.0), st.floats(0.5, 100.0))
def test_cantelli_bound_is_probability_and_decreasing(model, u, eps, t, dt):
    k = in_domain(model, u)
    assume(abs(k) > 1e-2)
    b1, b2 = cantelli_bound(model, k, eps, t), cantelli_bound(model, k, eps, t + dt)
    assert 0 < b2 <= b1 <= 1


@given(models, st.data())
def test_posteriors_are_probabilities(model, data):
    n = data.draw(st.integers(1, 4))
    p = data.draw(probability_vectors(n))
    E = np.sort(data.draw(arrays(float, n, elements=st.floats(-1.0, 1.0), unique=True)))
    lam = 0.3 / max(1.0, float(np.max(np.abs(E))))
    sig = Signal(E, p, lam)
    assume(np.all(model.in_domain(sig.tilts)))
    xi = data.draw(st.floats(-1e3, 1e3))
    t = data.draw(st.floats(0.0, 1e3))
    pi = posterior_probabilities(model, sig, xi, t)
    assert np.all(pi >= 0) and abs(pi.sum() - 1) < 1e-12


@given(models, spectra(), st.data())
def test_closed_form_states_are_valid(model, spec, data):
    rho0 = data.draw(densities(spec.dim))
    lam = 0.3 / max(1.0, float(np.max(np.abs(spec.eigenvalues))))
    assume(np.all(model.in_domain(lam * spec.eigenvalues)))
    xi = data.draw(arrays(float, 5, elements=st.floats(-50.0, 50.0)))
    t = data.draw(arrays(float, 5, elements=st.floats(0.0, 50.0)))
    states = evolve_density_batch(model, lam, rho0, spec, xi, t)
    inv = check_density_batch(states)
    assert inv["ok"], inv
    sig = Signal(spec.eigenvalues, level_probabilities(rho0, spec), lam)
    blocks = np.einsum("jab,tba->tj", spec.projectors, states).real
    np.testing.assert_allclose(blocks, posterior_probabilities(model, sig, xi, t), atol=1e-10)


@given(spectra(max_levels=3), st.data())
def test_pure_states_stay_pure(spec, data):
    re = data.draw(arrays(float, spec.dim, elements=st.floats(-1, 1)))
    im = data.draw(arrays(float, spec.dim, elements=st.floats(-1, 1)))
    v = re + 1j * im
    assume(np.linalg.norm(v) > 0.1)
    v /= np.linalg.norm(v)
    model = Brownian(0.0, 1.0)
    sig = Signal(spec.eigenvalues, level_probabilities(np.outer(v, v.conj()), spec), 1.0)
    xi, t = data.draw(st.floats(-20, 20)), data.draw(st.floats(0, 20))
    rho = evolve_density_batch(model, 1.0, np.outer(v, v.conj()), spec, xi, t)
    assert abs(np.trace(rho @ rho).real - 1) < 1e-10
    psi = evolve_state_vector(model, sig, v, spec, xi, t).vector
    assert np.linalg.norm(np.outer(psi, psi.conj()) - rho) < 1e-10


@given(models, st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_rates_nonnegative_and_symmetric(model, a, b):
    lam = 0.5
    assume(np.all(model.in_domain(lam * np.array([a, b]))))
    g = gamma_rate(model, lam, a, b)
    assert g == gamma_rate(model, lam, b, a)
    if a == b:
        assert g == 0.0
    elif abs(a - b) > 1e-4:
        assert g > 0


@given(models, spectra(max_levels=3), st.data())
def test_mean_density_structure(model, spec, data):
    rho0 = data.draw(densities(spec.dim))
    lam = 0.3 / max(1.0, float(np.max(np.abs(spec.eigenvalues))))
    assume(np.all(model.in_domain(lam * spec.eigenvalues)))
    t = data.draw(st.floats(0.0, 20.0))
    mu = mean_density(rho0, spec, model, lam, t)
    G = rate_matrix(model, lam, spec.eigenvalues)
    P = spec.projectors
    for m in range(spec.n_levels):
        for n in range(spec.n_levels):
            b0 = np.linalg.norm(P[m] @ rho0 @ P[n])
            bt = np.linalg.norm(P[m] @ mu @ P[n])
            np.testing.assert_allclose(bt, b0 * np.exp(-G[m, n] * t), rtol=1e-10, atol=1e-14)
    assert abs(np.trace(mu).real - 1) < 1e-12


@given(st.data())
def test_luders_is_idempotent(data):
    d = data.draw(st.integers(2, 4))
    H = data.draw(arrays(float, (d, d), elements=st.floats(-1, 1)))
    spec = spectrum_from_dense(H + H.T)
    rho = data.draw(densities(d))
    j = data.draw(st.integers(0, spec.n_levels - 1))
    once = luders_state(rho, spec, j)
    twice = luders_state(once, spec, j)
    np.testing.assert_allclose(twice.matrix, once.matrix, atol=1e-12)
    assert abs(level_probabilities(once, spec)[j] - 1) < 1e-12


@given(arrays(float, 3, elements=st.floats(0, 1)), st.floats(1e-6, 0.49))
def test_collapse_detection_consistent(w, delta):
    assume(w.sum() > 0)
    pi = w / w.sum()
    j = detect_collapse(pi, delta)
    assert (j is None) == (pi.max() <= 1 - delta)


@given(st.floats(0.1, 3.0), arrays(float, 30, elements=st.floats(-0.5, 0.5)), st.data())
def test_kraus_em_keeps_states_valid(sigma, dW, data):
    spec = EnergySpectrum.diagonal([0.0, 0.7, 1.5])
    rho0 = data.draw(densities(3))
    grid = np.linspace(0.0, 0.3, 31)
    out = euler_maruyama_density(rho0, spec, sigma, dW, grid)
    assert check_density_batch(out, tol=1e-10)["ok"]


@given(st.fixed_dictionaries({
    "energies": st.lists(st.floats(-2, 2), min_size=2, max_size=3, unique=True).map(sorted),
    "steps": st.integers(1, 500), "paths": st.integers(1, 10_000), "seed": st.integers(0, 2 ** 32),
    "coupling": st.floats(0.01, 0.3), "delta": st.floats(1e-9, 0.4),
    "noise": st.sampled_from([{"kind": "poisson", "intensity": "2Hz"}, {"kind": "gamma", "rate": 1, "scale": 0.5},
                              {"kind": "brownian", "drift": 0, "diffusion": 1}]),
}))
def test_config_serialization_idempotent(d):
    d = dict(d, amplitudes=[1.0] * len(d["energies"]))
    cfg = ScenarioConfig.from_dict(d)
    once = cfg.to_json()
    again = ScenarioConfig.from_json(once)
    assert again.to_json() == once and again.digest() == cfg.digest()
    assert ScenarioConfig.from_json(again.to_json()).to_json() == once
