"""Bounded-confidence opinion dynamics with radicals and noise.

Mean-field (Fourier ODE and pseudo-spectral) solvers, an agent-based
Euler-Maruyama simulator, stationary states and noise thresholds, and
order-disorder / clustering analysis.
"""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    BlowUpError,
    ConfigurationError,
    FourierState,
    GridDensity,
    ModelParams,
    RadicalDensity,
    convolve_G,
    cosine_analyze,
    cosine_synthesize,
    fold,
)
from .fourier_ode import build_system, equilibrium, integrate, rhs  # noqa: E402
from .spectral import spectral_run  # noqa: E402
from .stationary import apply_T, approx_stationary, bounds, lipschitz_const, picard_stationary  # noqa: E402
from .analysis import (  # noqa: E402
    ClusterReport,
    critical_noise,
    initial_clusters,
    linearize_at_uniform,
    order_param_continuum,
)
from .agents import AgentEnsemble, MonteCarloConfig, drift, em_step, monte_carlo, order_param_discrete  # noqa: E402
