"""Similarity of dose-response curves and of minimum effective doses.

Fits parametric dose-response models to two groups, builds delta-method
confidence bands for the difference of the curves, tests whether the
maximum absolute difference or the MED difference lies within a margin,
and runs seeded Monte Carlo studies of those procedures.
"""

from curveq.errors import (
    ConfigError,
    CurveqError,
    DataFormatError,
    DomainError,
    NotAttainableError,
    RankDeficiencyError,
    UnsupportedModelError,
)
from curveq.fitting import FitResult, GroupDataset, covariance_of_estimate, fit
from curveq.io import ingest_dataset, write_band_csv, write_dataset
from curveq.models import DoseRange, Family, ModelSpec
from curveq.scenarios import SCENARIO_NAMES, ScenarioSpec, get_scenario
from curveq.similarity import BandResult, CurveTestResult, band, rho_hat, test_curves
from curveq.simulation import (
    Replications,
    SimSummary,
    generate_data,
    run_coverage_study,
    run_replications,
    run_size_power_study,
)
from curveq.target_dose import (
    MedEstimate,
    MedInference,
    critical_constant,
    estimate_med,
    infer_med,
    med_ci,
    tau_hat,
    test_med,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "CurveqError",
    "DataFormatError",
    "DomainError",
    "NotAttainableError",
    "RankDeficiencyError",
    "UnsupportedModelError",
    "FitResult",
    "GroupDataset",
    "covariance_of_estimate",
    "fit",
    "ingest_dataset",
    "write_band_csv",
    "write_dataset",
    "DoseRange",
    "Family",
    "ModelSpec",
    "SCENARIO_NAMES",
    "ScenarioSpec",
    "get_scenario",
    "BandResult",
    "CurveTestResult",
    "band",
    "rho_hat",
    "test_curves",
    "Replications",
    "SimSummary",
    "generate_data",
    "run_coverage_study",
    "run_replications",
    "run_size_power_study",
    "MedEstimate",
    "MedInference",
    "critical_constant",
    "estimate_med",
    "infer_med",
    "med_ci",
    "tau_hat",
    "test_med",
]
