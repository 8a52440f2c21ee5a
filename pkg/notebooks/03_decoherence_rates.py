# %% [markdown]
# # Decoherence of the mean state
#
# Averaging over the noise turns the reduction dynamics into a linear master
# equation.  Each off-diagonal block of the mean state decays at its own rate
# fixed by the Lévy exponent.

# %%
import numpy as np

from levyreduction import Brownian, EnergySpectrum, GammaProcess, Poisson
from levyreduction.decoherence import (clock_report, gamma_rate, gamma_rate_integral, integrate_lindblad,
                                       mean_density)

# %% [markdown]
# ## Three ways to compute a rate
# The exponent form, the Lévy-measure integral and the hyperbolic-sine form
# must agree.

# %%
for model in (Brownian(0.0, 1.0), Poisson(1.0), GammaProcess(1.0, 1.0)):
    print(f"{model!r}: gamma(0, 0.4) = {gamma_rate(model, 1.0, 0.0, 0.4):.10f}, "
          f"integral = {gamma_rate_integral(model, 1.0, 0.0, 0.4):.10f}")

# %% [markdown]
# ## Amplification by the energy scale
# For Brownian noise the rate depends only on the gap.  For Poisson noise it
# grows exponentially with the mean energy of the pair.

# %%
poisson = Poisson(1.0)
gap = 0.01
base = gamma_rate(poisson, 1.0, 0.0, gap)
for s in (0.0, 5.0, 10.0):
    lo, hi = 0.5 * (s - gap), 0.5 * (s + gap)
    ratio = gamma_rate(poisson, 1.0, lo, hi) / gamma_rate(poisson, 1.0, -gap / 2, gap / 2)
    print(f"lambda(E_m+E_n) = {s:4.1f}: rate ratio {ratio:10.4f}  (e^(s/2) = {np.exp(s / 2):10.4f})")

# %% [markdown]
# ## The master equation reproduces the closed form

# %%
spec = EnergySpectrum.diagonal([0.0, 0.5, 1.0])
rho0 = np.full((3, 3), 1 / 3, dtype=complex)
times = np.linspace(0.0, 4.0, 5)
exact = mean_density(rho0, spec, poisson, 1.0, times)
ode = integrate_lindblad(rho0, spec, poisson, 1.0, times, max_step=1e-3)
print("max Frobenius gap:", np.max(np.linalg.norm(exact - ode, axis=(-2, -1))))
print("|rho_13| over time:", np.round(np.abs(exact[:, 0, 2]), 5))

# %% [markdown]
# ## A laboratory bound
# A cesium clock keeps hyperfine coherence for about a second.  Requiring the
# Brownian rate to stay below one inverse second bounds the noise strength.

# %%
rep = clock_report()
print(f"sigma^2 < {rep['sigma2_bound_mev2_per_s']:.4e} MeV^-2 s^-1; "
      f"candidate {rep['candidate_sigma2_mev2_per_s']} is within bound by "
      f"{rep['orders_of_magnitude_margin']:.1f} orders of magnitude")
