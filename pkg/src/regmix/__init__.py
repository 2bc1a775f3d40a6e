"""Regularized Gaussian mixture clustering with hybrid genetic search."""

from .covariance import RegularizationMethod
from .errors import (
    DegenerateCluster,
    GenerationFailure,
    InsufficientData,
    InvalidParameter,
    InvalidState,
    NotPositiveDefinite,
    ParseError,
    RegmixError,
)
from .gmm import FitConfig, MixtureSolution, em_fit, e_step, hard_assign, init_random, m_step, predict
from .datagen import DatasetSpec, generate
from .harness import ExperimentConfig, load_dataset, run_experiment
from .kmeans import CentroidSolution, lloyd_fit
from .metrics import ari, centroid_index, nmi, wilcoxon_signed_rank
from .search import GMMLocalSearch, KMeansLocalSearch, SearchConfig, hgs, multi_start, random_swap

__version__ = "0.1.0"
