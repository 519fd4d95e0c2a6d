"""Multiscale discrete kernel convolution (MDCT) spatial regression."""

from .grid import DomainBox, MultiresGrid, TreeIndex, build_grid, father, locate, neighborhood, subtree
from .kernel import SparseDesign, build_design, kernel_eval, wendland
from .predict import PredictionDraws, mse, predict, predict_at, predictive_metrics, residual_surface
from .probit import BinaryDataset, auc, run_probit_chain
from .sampler import ChainConfig, ChainSamples, Dataset, Hyperparams, ModelState, run_chain
from .shrinkage import ShrinkageState, alpha_of, draw_prior

__all__ = [
    "BinaryDataset", "ChainConfig", "ChainSamples", "Dataset", "DomainBox", "Hyperparams",
    "ModelState", "MultiresGrid", "PredictionDraws", "ShrinkageState", "SparseDesign", "TreeIndex",
    "alpha_of", "auc", "build_design", "build_grid", "draw_prior", "father", "kernel_eval",
    "locate", "mse", "neighborhood", "predict", "predict_at", "predictive_metrics",
    "residual_surface", "run_chain", "run_probit_chain", "subtree", "wendland",
]
