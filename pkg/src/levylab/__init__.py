"""Symmetric pure-jump Lévy processes killed on leaving an interval or a box.

Monte Carlo and grid-solver estimators of survival probabilities, exit laws
and first Dirichlet eigenpairs, with checks of the monotonicity and
mid-concavity of survival profiles.
"""

from levylab.domain import Domain, Window
from levylab.errors import (DomainError, LevyLabError, NoJumpError, ParameterError,
                            UnsupportedModelError)
from levylab.models import (Kind, LevyModel, char_exponent, check_hypotheses, check_log_growth,
                            levy_density, transition_density)
from levylab.pathsim import (compound_poisson_rate, estimate_survival, estimate_survival_profile,
                             sample_exit_law, sample_jump)

__version__ = "0.1.0"

__all__ = [
    "Domain", "DomainError", "Kind", "LevyLabError", "LevyModel", "NoJumpError", "ParameterError",
    "UnsupportedModelError", "Window", "char_exponent", "check_hypotheses", "check_log_growth",
    "compound_poisson_rate", "estimate_survival", "estimate_survival_profile", "levy_density",
    "sample_exit_law", "sample_jump", "transition_density",
]
