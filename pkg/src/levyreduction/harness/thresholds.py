"""Statistical thresholds used by every Monte Carlo check, kept in one place."""

MEAN_Z = 4.0                # two-sided tests of a mean against its exact value
ONE_SIDED_Z = 3.0           # one-sided bounds (probability <= bound + z SE)
MONOTONE_Z = 2.0            # consecutive-checkpoint decrease of a supermartingale
DISTRIBUTION_P = 1e-3       # minimum p-value for distributional tests
BOOTSTRAP_Z = 5.0           # mean-density distance in bootstrap standard errors
BOOTSTRAP_RESAMPLES = 200
DECAY_RATE_REL_TOL = 0.10   # fitted off-diagonal decay rate vs the exact rate
DECAY_FIT_MIN_SNR = 20.0    # only fit checkpoints whose block is this many SEs above zero
COLLAPSE_DELTA = 1e-6
EXACT_TOL = 1e-12           # differences treated as exactly zero
