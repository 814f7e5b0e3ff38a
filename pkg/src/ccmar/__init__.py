"""Complete-case inference for partially linear regression with responses missing at random."""

__version__ = "0.1.0"

from .data import CompleteCases, MarDataset, extract_complete_cases, load_csv, write_csv
from .kernels import BACKEND
from .limits import SUP_BM, SUP_BRIDGE, LimitLaw
from .linearity import LinearityReport, NullDesign, run_linearity_test
from .normality import NormalityReport, run_normality_test
from .series import SeriesFit, choose_K, cosine_basis, fit_complete_case, fit_series_ls, normalized_residuals
from .simulation import ScenarioConfig, generate_scenario, replicate
from .transfer import StatisticFamily, complete_case_statistic, lemma1_mixture

__all__ = [
    "BACKEND",
    "CompleteCases",
    "LimitLaw",
    "LinearityReport",
    "MarDataset",
    "NormalityReport",
    "NullDesign",
    "SUP_BM",
    "SUP_BRIDGE",
    "ScenarioConfig",
    "SeriesFit",
    "StatisticFamily",
    "choose_K",
    "complete_case_statistic",
    "cosine_basis",
    "extract_complete_cases",
    "fit_complete_case",
    "fit_series_ls",
    "generate_scenario",
    "lemma1_mixture",
    "load_csv",
    "normalized_residuals",
    "replicate",
    "run_linearity_test",
    "run_normality_test",
    "write_csv",
]
