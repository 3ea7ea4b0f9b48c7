"""Certified uniform approximation of Lipschitz functions by shallow networks.

The package turns a constructive density argument into executable stages:
restrict to a box, extend samples to a Lipschitz function, mollify it to a
smooth surrogate, fit a one-hidden-layer network to values and gradients,
and certify the Lipschitz constant of the result.  A covering experiment
exhibits a single width sufficient for every function in a Lipschitz ball.
"""

from .certification import (
    LipschitzCertificate,
    certify,
    empirical_lipschitz,
    grid_gradient_sup,
    relu_exact_lipschitz,
    weight_bound_lipschitz,
)
from .core import (
    BoxDomain,
    BoxRescaling,
    CapacityError,
    NormSpec,
    SampleConsistencyError,
    SampledFunction,
    affine_rescale,
    derived_seed,
    euclidean_conversion_constant,
    l1_conversion_constant,
    load_sampled_csv,
    pairwise_distance,
    save_sampled_csv,
)
from .covering import (
    EpsNet,
    UniformWidthResult,
    build_eps_net,
    covering_radius_check,
    uniform_width_experiment,
    validate_uniform_width,
)
from .extension import (
    ExtensionProblem,
    extend_to_grid,
    load_samples_csv,
    mcshane_extend,
    random_lipschitz_mixture,
)
from .fitting import FitReport, FitTarget, fit_adaptive, fit_c1
from .network import (
    ACTIVATIONS,
    Activation,
    ShallowNet,
    hat_net,
    load_net_json,
    save_net_json,
)
from .pipeline import (
    ApproximationProblem,
    CanonicalProblem,
    PipelineReport,
    ToleranceSchedule,
    approximate,
    canonicalize,
    choose_tolerances,
)
from .smoothing import (
    MollifierKernel,
    build_kernel,
    fidelity_curve,
    gradient_deviation,
    mollify_batch,
    mollify_eval,
    mollify_grad_batch,
    mollify_grad_eval,
)
from .targets import BuiltinTarget, TARGETS, builtin_target, target_names

__all__ = [
    "ACTIVATIONS",
    "Activation",
    "ApproximationProblem",
    "BoxDomain",
    "BoxRescaling",
    "BuiltinTarget",
    "CanonicalProblem",
    "CapacityError",
    "EpsNet",
    "ExtensionProblem",
    "FitReport",
    "FitTarget",
    "LipschitzCertificate",
    "MollifierKernel",
    "NormSpec",
    "PipelineReport",
    "SampleConsistencyError",
    "SampledFunction",
    "ShallowNet",
    "TARGETS",
    "ToleranceSchedule",
    "UniformWidthResult",
    "affine_rescale",
    "approximate",
    "build_eps_net",
    "build_kernel",
    "builtin_target",
    "canonicalize",
    "certify",
    "choose_tolerances",
    "covering_radius_check",
    "derived_seed",
    "empirical_lipschitz",
    "euclidean_conversion_constant",
    "extend_to_grid",
    "fidelity_curve",
    "fit_adaptive",
    "fit_c1",
    "gradient_deviation",
    "grid_gradient_sup",
    "hat_net",
    "l1_conversion_constant",
    "load_net_json",
    "load_samples_csv",
    "load_sampled_csv",
    "mcshane_extend",
    "mollify_batch",
    "mollify_eval",
    "mollify_grad_batch",
    "mollify_grad_eval",
    "pairwise_distance",
    "random_lipschitz_mixture",
    "relu_exact_lipschitz",
    "save_net_json",
    "save_sampled_csv",
    "target_names",
    "uniform_width_experiment",
    "validate_uniform_width",
    "weight_bound_lipschitz",
]

__version__ = "0.1.0"
