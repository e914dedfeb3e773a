"""Noise perturbation, Lipschitz estimation, bound checks and amplification factors."""
from .amplification import Amplification, amplification_factors
from .hierarchy import (
    HIERARCHY_SCHEMES,
    REDUCTION_TOL,
    RobustnessReport,
    SeedResult,
    hierarchy_experiment,
    logit_map,
    network_lipschitz,
)
from .lemmas import (
    LEMMAS,
    SLACK,
    LemmaReport,
    LemmaTally,
    bound_terms,
    check_lemma_bounds,
    projection_bound,
    random_lemma_suite,
)
from .lipschitz import LipschitzEstimate, empirical_lipschitz, spectral_norm
from .noise import NoiseSpec, anticorrelated_rho, draw_noise, perturb_features

__all__ = [
    "Amplification",
    "HIERARCHY_SCHEMES",
    "LEMMAS",
    "LemmaReport",
    "LemmaTally",
    "LipschitzEstimate",
    "NoiseSpec",
    "REDUCTION_TOL",
    "RobustnessReport",
    "SLACK",
    "SeedResult",
    "amplification_factors",
    "anticorrelated_rho",
    "bound_terms",
    "check_lemma_bounds",
    "draw_noise",
    "empirical_lipschitz",
    "hierarchy_experiment",
    "logit_map",
    "network_lipschitz",
    "perturb_features",
    "projection_bound",
    "random_lemma_suite",
    "spectral_norm",
]
