from .config import SolverConfig
from .data_io import load_csv, load_libsvm, save_csv, train_test_split
from .datagen import BayesOracle, ScenarioSpec, gen_datapiling, gen_example, gen_mixture
from .dataset import Dataset, FeatureScaling
from .estimator import DWDClassifier
from .kernel_dwd import KernelModel, fit_kernel, fit_kernel_path
from .kernels import KernelSpec, median_heuristic_sigma
from .linear import FitReport, LinearModel, fit_linear, fit_linear_path
from .loss import LossSpec
from .model import decision_function, load_model, predict, save_model, to_constrained
from .tuning import CvPlan, CvResult, cross_validate

__all__ = [
    "BayesOracle",
    "CvPlan",
    "CvResult",
    "DWDClassifier",
    "Dataset",
    "FeatureScaling",
    "FitReport",
    "KernelModel",
    "KernelSpec",
    "LinearModel",
    "LossSpec",
    "ScenarioSpec",
    "SolverConfig",
    "cross_validate",
    "decision_function",
    "fit_kernel",
    "fit_kernel_path",
    "fit_linear",
    "fit_linear_path",
    "gen_datapiling",
    "gen_example",
    "gen_mixture",
    "load_csv",
    "load_libsvm",
    "load_model",
    "median_heuristic_sigma",
    "predict",
    "save_model",
    "to_constrained",
    "train_test_split",
]
