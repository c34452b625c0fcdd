"""Distributions of Markov-modulated fluid random walks and fluid queues at an
Erlang-distributed horizon, with a Monte Carlo oracle to check them."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .model import (CALM_EXCITED_RATES, ErlangClock, FluidModel, build_model,  # noqa: F401
                    calm_excited_generator, calm_excited_model, erlang_clock,
                    stationary_drift, stationary_vector, symmetric_model)
from .families import StageMatrixFamily, StageVectorFamily  # noqa: F401
from .stage_matrices import (ReturnMatrices, RecordGenerators, record_generators,  # noqa: F401
                             solve_riccati, solve_stage_matrices, solve_sylvester)
from .toeplitz_expm import w_blocks  # noqa: F401
from .rw_dist import (BilateralPhaseType, RandomWalk, SignProbabilities,  # noqa: F401
                      bph_density, sign_probabilities)
from .queue_dist import FluidQueue, TwoBoundaryMatrices, boundary_exit  # noqa: F401
