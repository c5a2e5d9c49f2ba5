"""Differentially private synthetic data by space partitioning and Laplace noise."""

__version__ = "0.1.0"

from .core_types import Bin, BoundingBox, WeightedDataset, bounding_box
from .estimators import DataDependentSynthesizer, DataIndependentSynthesizer
from .kernels import kde, kde_sup_distance, mmd, mmd_vs_standard_gaussian
from .noise import RngStreams
from .release import (
    PrivacyLedger,
    PrivacySpec,
    SynthesisResult,
    synthesize_data_dependent,
    synthesize_data_independent,
)

__all__ = [
    "Bin",
    "BoundingBox",
    "DataDependentSynthesizer",
    "DataIndependentSynthesizer",
    "PrivacyLedger",
    "PrivacySpec",
    "RngStreams",
    "SynthesisResult",
    "WeightedDataset",
    "bounding_box",
    "kde",
    "kde_sup_distance",
    "mmd",
    "mmd_vs_standard_gaussian",
    "synthesize_data_dependent",
    "synthesize_data_independent",
]
