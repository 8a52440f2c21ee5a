"""Energy-driven state reduction driven by Lévy information processes."""

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .quantum_core import (  # noqa: E402
    DensityMatrix,
    EnergySpectrum,
    PureState,
    energy_moments,
    expectation_energy,
    level_probabilities,
    luders_state,
    projector_probability,
    spectrum_from_dense,
    third_central_moment,
    trace_distance,
    variance_energy,
)
from .levy_noise import (  # noqa: E402
    Brownian,
    CompoundPoissonExp,
    GammaProcess,
    LevyMeasureSpec,
    LevyModel,
    Poisson,
    cantelli_bound,
    exponential_martingale,
    levy_khintchine_check,
    model_from_dict,
    psi,
    psi_double_prime,
    psi_prime,
    sample_increment,
)
from .information import (  # noqa: E402
    InformationPath,
    Signal,
    conditional_exponent,
    conditional_model,
    innovations_path,
    sample_information_path,
    sample_outcome,
    uniform_grid,
)
from .reduction import (  # noqa: E402
    ReductionPath,
    detect_collapse,
    euler_maruyama_density,
    euler_maruyama_vector,
    evolve_density,
    evolve_state_vector,
    posterior_probabilities,
    reduce_path,
)
from .decoherence import (  # noqa: E402
    DecoherenceTable,
    clock_bound,
    clock_report,
    gamma_rate,
    gamma_rate_integral,
    gamma_rate_sinh,
    integrate_lindblad,
    lindblad_generator,
    mean_density,
    rate_matrix,
)
from .harness.config import ScenarioConfig, preset  # noqa: E402
from .harness.ensemble import EnsembleResult, run_ensemble  # noqa: E402
