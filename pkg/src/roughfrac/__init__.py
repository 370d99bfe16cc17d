"""Rough-kernel fractional operators, weak-type norms, and limit experiments."""

from .errors import DomainError, NumericError, ParameterError
from .fields import Exponents, HomogeneousField, beta_t, homog_field_eval, \
    homog_weak_norm_closed, level_products
from .functions import Component, TestFunction, VectorTestFunction, absolute, \
    cone, eval_test_function, first_moment, gauss, indicator, l1_norm, \
    make_test_function, normalize, parse_function, rescale, scale
from .kernels import DiniReport, SphereKernel, arc_integral, const_kernel, \
    cos_kernel, dini_integral, dini_modulus, eval_kernel, eval_kernel_angle, \
    kernel_difference, kernel_sup, lipschitz_estimate, mollify_kernel, \
    pair_kernel, parse_kernel, sign_cos_kernel, sphere_norm, step_kernel, \
    table_kernel, truncate_kernel
from .lorentz import WeakNormResult, distribution_measure, lr_norm, \
    tail_bound_weak, weak_quasinorm
from .operators import AnnulusGrid, QuadratureSpec, UniformGrid, annulus_grid, \
    frac_integral, frac_integral_abs, frac_maximal, grid_apply, uniform_grid, \
    vector_lr_field
from .experiments import IdentityReport, LimitRun, RateReport, ReductionRow, \
    SweepReport, TypeMetrics, convergence_types, default_run_grid, \
    identity_check, identity_grid, limit_run, opnorm_lower_bound, rate_check, \
    reduction_decomposition, vector_limit_run, young_monitor

__version__ = "0.1.0"
