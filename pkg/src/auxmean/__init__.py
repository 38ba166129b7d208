"""Robust mean estimation with auxiliary samples under a Wasserstein-2 shift budget."""

from .adversary import AdversaryPair, BudgetExhaustedError, worst_case_kkt, worst_case_large_n
from .estimator import (
    AuxiliaryMeanEstimator,
    MatrixEstimator,
    NormMode,
    ProblemSpec,
    RiskReport,
    ScalarEstimator,
    apply_estimator,
    matrix_objective,
    minmax_risk,
    optimal_weight,
    risk_from_moments,
    scalar_objective,
)
from .gaussian import (
    AsymmetricMatrixError,
    GaussianMoments,
    NotPSDError,
    SpectralDecomposition,
    gelbrich_w2,
    gelbrich_w2_squared,
    psd_sqrt,
    spectral_decompose,
)

__version__ = "0.1.0"
