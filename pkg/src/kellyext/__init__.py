"""Optimal betting for a finite number of rounds with a ln(1 + x) goal.

The capital ``x`` at stake is measured in units of an external reserve that
is never wagered.  Modules:

``gamble``       single-round rates: optimal fractions, kappa, h, diffusion
``dp``           backward induction of the value function on a log grid
``asymptotics``  large-n WKB and diffusion approximations
``simulator``    Monte Carlo and exact distributions of the final capital
``cli``          the ``kellyext`` command
"""

__version__ = "0.1.0"

from .gamble import (  # noqa: E402
    EXAMPLE_GAMBLE,
    Gamble,
    RateSpectrum,
    attractiveness_threshold,
    classify,
    diffusion_params,
    failure_rate_h,
    kappa,
    kappa_prime,
    optimal_fraction,
)
from .dp import GridSpec, Solution, solve, query_policy, query_value  # noqa: E402
from .asymptotics import DiffusionEvaluator, WkbEvaluator  # noqa: E402
from .simulator import (  # noqa: E402
    FixedFraction,
    PolicyDriven,
    blend,
    exact_distribution,
    simulate,
    simulate_common,
)
