"""Second-order relaxed dynamics for monotone inclusions and convex optimization.

Simulates ``x'' + gam(t) x' + lam(t) B(x) = 0`` for cocoercive ``B`` (gradients,
residuals of nonexpansive or averaged maps, forward-backward residuals),
validates the damping/relaxation schedules that guarantee convergence, and
checks the resulting Lyapunov, rate and limit certificates numerically.
"""

from .exceptions import *  # noqa: F401,F403
from .operators import *  # noqa: F401,F403
from .schedules import *  # noqa: F401,F403
from .dynamics import *  # noqa: F401,F403
from .diagnostics import *  # noqa: F401,F403
from .discrete import *  # noqa: F401,F403
from .problems import *  # noqa: F401,F403
from .config import ExperimentConfig, ConfigError, load_config, parse_config
from .experiment import run_experiment, build_experiment

__version__ = "0.1.0"
