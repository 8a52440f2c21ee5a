import numpy as np
import pytest
from scipy import stats

from conftest import mean_z
from levyreduction.errors import BadGrid, InvalidSignal, OutsideExponentDomain, WrongNoiseKind
from levyreduction.information import (
    InformationPath, Signal, conditional_exponent, innovations_path, sample_base_path,
    sample_information_path, sample_outcome, uniform_grid, validate_grid,
)
from levyreduction.levy_noise import Brownian, CompoundPoissonExp, GammaProcess, Poisson, sample_increment
from levyreduction.quantum_core import DensityMatrix, EnergySpectrum


class TestSignal:
    def test_validation(self):
        with pytest.raises(InvalidSignal):
            Signal([0.0, 1.0], [0.5, 0.6], 1.0)
        with pytest.raises(InvalidSignal):
            Signal([0.0, 1.0], [1.0], 1.0)

    def test_from_state(self):
        spec = EnergySpectrum.diagonal([0.0, 1.0])
        sig = Signal.from_state(DensityMatrix(np.diag([0.3, 0.7])), spec, 2.0)
        np.testing.assert_allclose(sig.probabilities, [0.3, 0.7])
        np.testing.assert_allclose(sig.tilts, [0.0, 2.0])

    def test_domain(self):
        with pytest.raises(OutsideExponentDomain):
            Signal([0.0, 2.0], [0.5, 0.5], 1.0).check_domain(GammaProcess(1.0, 1.0))


class TestOutcome:
    def test_certain(self, rng):
        assert np.all(sample_outcome(Signal([0.0, 1.0], [1.0, 0.0], 1.0), rng, size=1000) == 0)

    def test_binomial_frequency(self, rng):
        draws = sample_outcome(Signal([0.0, 1.0], [0.3, 0.7], 1.0), rng, size=100_000)
        assert abs(np.mean(draws == 1) - 0.7) <= 3 * np.sqrt(0.21 / 100_000)

    def test_uniform_three_levels(self, rng):
        draws = sample_outcome(Signal([0.0, 1.0, 2.0], [1 / 3, 1 / 3, 1 / 3], 1.0), rng, size=30_000)
        assert stats.chisquare(np.bincount(draws, minlength=3)).pvalue > 1e-3


class TestGrid:
    def test_uniform(self):
        g = uniform_grid(1.0, 0.25)
        np.testing.assert_allclose(g, [0, 0.25, 0.5, 0.75, 1.0])

    def test_bad_grids(self):
        with pytest.raises(BadGrid):
            validate_grid([0.1, 0.2])
        with pytest.raises(BadGrid):
            validate_grid([0.0, 0.2, 0.2])
        with pytest.raises(BadGrid):
            uniform_grid(1.0, 0.3)


class TestConditionalLaw:
    def test_exponent_zero_at_origin(self):
        assert conditional_exponent(Poisson(2.0), 1.0, 0.0) == 0.0

    def test_brownian_form(self):
        a = np.linspace(-2, 2, 9)
        np.testing.assert_allclose(conditional_exponent(Brownian(0.0, 1.0), 0.7, a), 0.7 * a + 0.5 * a ** 2)

    def test_poisson_value(self):
        assert conditional_exponent(Poisson(2.0), 1.0, 1.0) == pytest.approx(2 * np.e * (np.e - 1), rel=1e-12)
        assert conditional_exponent(Poisson(2.0), 1.0, 1.0) == pytest.approx(9.3415, abs=1e-4)

    def test_zero_coupling_matches_base_law(self, rng):
        model = GammaProcess(1.0, 1.0)
        sig = Signal([0.0, 1.0], [0.5, 0.5], 0.0)
        grid = np.linspace(0.0, 1.0, 2)
        cond = np.array([sample_information_path(model, sig, 1, grid, rng).values[-1] for _ in range(3000)])
        base = sample_increment(model, 1.0, rng, size=3000)
        assert stats.ks_2samp(cond, base, method="asymp").pvalue > 1e-3

    def test_poisson_rate_multiplied(self, rng):
        sig = Signal([0.0, 1.0], [0.5, 0.5], np.log(2.0))
        grid = np.array([0.0, 10.0])
        counts = np.array([sample_information_path(Poisson(1.0), sig, 1, grid, rng).values[-1]
                           for _ in range(2000)])
        assert abs(mean_z(counts, 20.0)) < 4

    def test_gamma_scale_stretched(self, rng):
        sig = Signal([0.0, 0.5], [0.5, 0.5], 1.0)
        grid = np.array([0.0, 1.0])
        vals = np.array([sample_information_path(GammaProcess(1.0, 1.0), sig, 1, grid, rng).values[-1]
                         for _ in range(20_000)])
        assert abs(mean_z(vals, 2.0)) < 4

    @pytest.mark.parametrize("model", [Brownian(0.2, 1.3), Poisson(1.5), CompoundPoissonExp(1.0, 3.0),
                                       GammaProcess(2.0, 0.5)], ids=lambda m: m.kind)
    def test_tilted_moments(self, model, rng):
        x = 0.4
        sig = Signal([0.0, 1.0], [0.5, 0.5], x)
        cond = model.tilt(x)
        samples = cond.sample(np.full(50_000, 0.5), rng)
        assert abs(mean_z(samples, 0.5 * (model.psi_prime(x)))) < 4
        assert sig.tilts[1] == x

    def test_path_starts_at_zero(self, rng):
        path = sample_information_path(Poisson(1.0), Signal([0.0, 1.0], [0.5, 0.5], 1.0), 0,
                                       np.linspace(0, 1, 11), rng)
        assert path.values[0] == 0.0 and path.true_outcome == 0 and len(path.to_records()) == 11

    def test_bad_outcome(self, rng):
        with pytest.raises(InvalidSignal):
            sample_information_path(Poisson(1.0), Signal([0.0, 1.0], [0.5, 0.5], 1.0), 2, [0.0, 1.0], rng)


class TestInnovations:
    def test_zero_signal_identity(self, rng):
        path = sample_base_path(Brownian(0.0, 1.0), np.linspace(0, 1, 21), rng)
        np.testing.assert_allclose(innovations_path(path, np.zeros(21), 1.0), path.values)

    def test_constant_signal(self, rng):
        grid = np.linspace(0, 2, 41)
        path = sample_base_path(Brownian(0.0, 1.0), grid, rng)
        np.testing.assert_allclose(innovations_path(path, np.full(41, 0.7), 1.5), path.values - 1.5 * 0.7 * grid,
                                   atol=1e-13)

    def test_wrong_kind(self, rng):
        path = sample_base_path(Poisson(1.0), [0.0, 1.0], rng)
        with pytest.raises(WrongNoiseKind):
            innovations_path(path, np.zeros(2), 1.0)

    def test_innovations_are_standard_brownian(self, rng):
        from levyreduction.reduction import posterior_probabilities

        sig = Signal([0.0, 1.0], [0.5, 0.5], 1.0)
        model = Brownian(0.0, 1.0)
        grid = np.linspace(0.0, 1.0, 201)
        W = np.empty(10_000)
        for i in range(W.size):
            path = sample_information_path(model, sig, int(sample_outcome(sig, rng)), grid, rng)
            H = posterior_probabilities(model, sig, path.values, grid) @ sig.energies
            W[i] = innovations_path(path, H, 1.0)[-1]
        assert abs(mean_z(W, 0.0)) < 4
        assert abs(mean_z((W - W.mean()) ** 2, 1.0)) < 4

    def test_long_run_identification(self, rng):
        sig = Signal([0.0, 1.0], [0.5, 0.5], 1.0)
        T = 1e4
        hits = 0
        for i in range(500):
            j = i % 2
            xi = sample_information_path(Brownian(0.0, 1.0), sig, j, [0.0, T], rng).values[-1]
            hits += abs(xi / T - sig.energies[j]) < 4 / np.sqrt(T)
        assert hits / 500 >= 0.99
