"""Model zoo: specs, samplers, implied moments and special-case checks."""
from .base import MODELS, ModelSpec, dump_spec, load_spec, spec_from_dict
from .dataset import Dataset
from .generators import random_fa, random_lisrel
from .gfa import ArdPrior, draw_ard_prior, gfa_from_prior, sample_gfa_loadings
from .gsca import gsca_residual, gsca_residual_covariances, gsca_stacked_sides
from .moments import ImpliedMoments, implied_moments, lisrel_latent_covariance, stationary_state_covariance
from .reduction import Condition, ReductionReport, check_reduction
from .regression import HierarchicalRegression, reduce_rank_regression, sample_hierarchical_regression
from .sampling import SampleBatch, sample_lvm, sample_temporal, sample_tobit
from .specs import (
    CCA,
    FA,
    GFA,
    IBFA,
    ICA,
    MBFA,
    PPCA,
    Airy,
    DirichletCategorical,
    Gsca,
    LinearGaussianLvm,
    Lisrel,
    MatrixNormal,
    MultiViewSpec,
    TemporalLinearGaussian,
    Tobit,
)

__all__ = [
    "MODELS", "ModelSpec", "dump_spec", "load_spec", "spec_from_dict", "Dataset",
    "random_fa", "random_lisrel",
    "ArdPrior", "draw_ard_prior", "gfa_from_prior", "sample_gfa_loadings",
    "gsca_residual", "gsca_residual_covariances", "gsca_stacked_sides",
    "ImpliedMoments", "implied_moments", "lisrel_latent_covariance", "stationary_state_covariance",
    "Condition", "ReductionReport", "check_reduction",
    "HierarchicalRegression", "reduce_rank_regression", "sample_hierarchical_regression",
    "SampleBatch", "sample_lvm", "sample_temporal", "sample_tobit",
    "CCA", "FA", "GFA", "IBFA", "ICA", "MBFA", "PPCA", "Airy", "DirichletCategorical", "Gsca",
    "LinearGaussianLvm", "Lisrel", "MatrixNormal", "MultiViewSpec", "TemporalLinearGaussian", "Tobit",
]
