"""Rate-distortion functions of Markov chains via block-independent approximations."""

from .blocks import BlockSource, block_distribution, l1_distance, projected_distribution
from .bounds import (
    BoundReport,
    RateCache,
    check_convex_gap,
    check_initial_dist_bound,
    check_normalization,
    check_sandwich,
    check_shift_gap,
    convergence_experiment,
)
from .chain import MarkovChain, delta_tau, stationary, t_step_distribution, validate_chain
from .distortion import DistortionSpec, hamming, make_distortion
from .errors import RDBIAError
from .rdsolver import AdditiveSource, RDCurve, RDPoint, ba_point, brute_force_rd, rd_at_distortion, rd_curve

__all__ = [
    "AdditiveSource", "BlockSource", "BoundReport", "DistortionSpec", "MarkovChain", "RDBIAError",
    "RDCurve", "RDPoint", "RateCache", "ba_point", "block_distribution", "brute_force_rd",
    "check_convex_gap", "check_initial_dist_bound", "check_normalization", "check_sandwich",
    "check_shift_gap", "convergence_experiment", "delta_tau", "hamming", "l1_distance",
    "make_distortion", "projected_distribution", "rd_at_distortion", "rd_curve", "stationary",
    "t_step_distribution", "validate_chain",
]
