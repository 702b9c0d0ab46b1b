"""Additive path functionals for reversible Markov models.

Exact event-list evaluation of the martingale / drift decomposition of
u(X_t), a time-reversal construction of the drift part that needs no
generator solve, its linear-algebra counterpart, and partition-sum
integrals against it -- plus a discretized circle diffusion where the
same identities hold at O(sqrt h).  Hot kernels run through a compiled
extension when available (set REVAF_PURE=1 to force the Python lane).
"""

import os

from .chain import (
    ChainModel,
    ModelError,
    ParseError,
    beurling_deny,
    default_horizon,
    dirichlet_energy,
    dirichlet_form_view,
    energy_measure,
    generator_apply,
    revuz_density,
    revuz_limit_check,
    semigroup,
    time_average,
    validate_model,
)
from .functionals import (
    MarkovAF,
    caf_from_density,
    compensator_defect,
    dyadic_times,
    energy,
    fukushima,
    jump_killing_parts,
    levy_system_check,
    maf_from_jump,
    martingale_integral,
    square_bracket,
    stieltjes_integral,
)
from .integrals import (
    SmoothMap,
    StochasticIntegral,
    associativity_check,
    integral_dlambda,
    ito_residual,
    lambda_trajectory,
    quad_variation,
    riemann_sum,
    stieltjes_consistency,
)
from .kernels import IMPL_NAME as kernel_impl
from .nakao import (
    characterization_check,
    gamma_functional,
    lambda_gamma_agreement,
    solve_gamma,
)
from .paths import Path, dead_path, equivalence, evaluate, reverse, shift, state_pair
from .reversal import (
    DualAF,
    LambdaAF,
    compensated_jump_maf,
    dual_af,
    jump_function,
    lambda_af,
    lambda_density,
    parity_check,
    reverse_window,
)
from .simulate import SeedSpec, sample_batch, sample_path, sample_stationary

__version__ = "0.1.0"


def data_file(name):
    """Path of a shipped model or scenario file."""
    return os.path.join(os.path.dirname(__file__), "data", name)
