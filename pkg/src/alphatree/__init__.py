"""Random planar binary trees grown by the alpha model, and their infinite-volume limit."""
from ._accel import backend
from .dimensions import (
    ReturnProbabilityCurve,
    ScalingFit,
    ball_volume_curve,
    finite_size_distance_scaling,
    fit_power_law,
    hausdorff_estimate,
    return_probability_curve,
    spectral_estimate,
)
from .exact import (
    exact_pi,
    growth_chain_distribution,
    mu_mass,
    mu_size_pmf,
    mu_size_tail,
    q_alpha,
    q_alpha_exact,
)
from .growth import GrowableTree, graft_step, grow, leaf_depth_sample
from .limit import (
    IntervalEstimate,
    SpineEnvironment,
    ball_prob_finite_n,
    ball_prob_limit,
    environment_ball,
    sample_environment,
    sample_outgrowth,
)
from .rng import RNG_VERSION, make_rng
from .tree import (
    BallShape,
    PlanarTree,
    TreeParseError,
    all_shapes,
    all_trees,
    ball,
    decode,
    distance,
    encode,
    mirror,
    stats,
)

__version__ = "0.1.0"

__all__ = [
    "BallShape",
    "GrowableTree",
    "IntervalEstimate",
    "PlanarTree",
    "RNG_VERSION",
    "ReturnProbabilityCurve",
    "ScalingFit",
    "SpineEnvironment",
    "TreeParseError",
    "all_shapes",
    "all_trees",
    "backend",
    "ball",
    "ball_prob_finite_n",
    "ball_prob_limit",
    "ball_volume_curve",
    "decode",
    "distance",
    "encode",
    "environment_ball",
    "exact_pi",
    "finite_size_distance_scaling",
    "fit_power_law",
    "graft_step",
    "grow",
    "growth_chain_distribution",
    "hausdorff_estimate",
    "leaf_depth_sample",
    "make_rng",
    "mirror",
    "mu_mass",
    "mu_size_pmf",
    "mu_size_tail",
    "q_alpha",
    "q_alpha_exact",
    "return_probability_curve",
    "sample_environment",
    "sample_outgrowth",
    "spectral_estimate",
    "stats",
]
