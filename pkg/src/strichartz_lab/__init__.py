"""Numerical laboratory for endpoint Strichartz constants in the plane.

Library layers, bottom to top: ``symbols`` (bump multipliers and their
transforms), ``kernels`` (oscillatory propagation kernels), ``walk_gram``
(random-walk atom Gram matrices), ``experiments`` (growth-law fits and dual
witnesses), ``grid_sim`` (periodic spectral cross-validation), ``reports``
and ``cli`` (deterministic CSV/JSON/SVG reporting).
"""

__version__ = "0.1.0"

from .errors import (AccuracyError, BoxTooSmallError, ConfigError,
                     ConvergenceError, DegenerateInputError,
                     GridTooCoarseError, InvalidParameterError,
                     StrichartzLabError)
from .experiments import (AtomField, BilinearWitness, GrowthSeries,
                          KhinchineReport, bilinear_ratio,
                          build_counterexample_f, endpoint_growth, fit_growth,
                          khinchine_check, nlogn_divergence)
from .grid_sim import (GridField, GridSpec, apply_multiplier,
                       crosscheck_kernel, direct_endpoint_constant,
                       discretization_check, l4_strichartz_ratio, mixed_norm,
                       propagate)
from .kernels import KernelEvaluator, free_kernel
from .symbols import (Symbol, SymbolProduct, galilean_recenter,
                      inverse_ft_table, make_bump, symbol_integral,
                      symbol_l2_norm_sq)
from .walk_gram import (GramMatrix, WalkPath, assemble_gram,
                        expected_quadratic_form, lambda_max, quadratic_form,
                        sample_walk)

__all__ = [
    "__version__",
    "AccuracyError", "BoxTooSmallError", "ConfigError", "ConvergenceError",
    "DegenerateInputError", "GridTooCoarseError", "InvalidParameterError",
    "StrichartzLabError",
    "AtomField", "BilinearWitness", "GrowthSeries", "KhinchineReport",
    "bilinear_ratio", "build_counterexample_f", "endpoint_growth",
    "fit_growth", "khinchine_check", "nlogn_divergence",
    "GridField", "GridSpec", "apply_multiplier", "crosscheck_kernel",
    "direct_endpoint_constant", "discretization_check", "l4_strichartz_ratio",
    "mixed_norm", "propagate",
    "KernelEvaluator", "free_kernel",
    "Symbol", "SymbolProduct", "galilean_recenter", "inverse_ft_table",
    "make_bump", "symbol_integral", "symbol_l2_norm_sq",
    "GramMatrix", "WalkPath", "assemble_gram", "expected_quadratic_form",
    "lambda_max", "quadratic_form", "sample_walk",
]
