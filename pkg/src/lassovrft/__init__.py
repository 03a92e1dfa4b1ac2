"""Data-driven nonlinear controller design by virtual reference feedback tuning,
with optional L1 regularization."""

from .closed_loop import (ClosedLoopResult, DictionaryController, IdealController, desired_response,
                          eval_reference, ideal_controller, mr_cost, simulate_closed_loop)
from .lti import TransferFunction, dc_gain, deflate_root, filter, relative_degree, settling_time
from .nonlin import (Dictionary, PiecewiseAffineMap, benchmark_phi, deadzone_dictionary, dict_eval,
                     polynomial_dictionary, pwa_eval, pwa_invert, static_map)
from .plant import (HammersteinPlant, NoiseSpec, builtin_plant, excitation_filter, gen_input,
                    reference_model, simulate_plant)
from .solvers import ControllerParams, lasso_cd, nonzero_count, ols_solve, soft_threshold
from .vrft import Dataset, RegressionProblem, build_regression, virtual_reference, vrft_cost

__version__ = "0.1.0"
