"""Sybil detection for robot swarms from backscatter-tag multipath signatures.

Submodules:

- ``scene``: robot motion, attack schedules, received-trace synthesis
- ``sigproc``: segmentation and per-tag signature extraction
- ``similarity``: distance tensors and similarity vectors
- ``forest``: the random-forest classifier
- ``evaluation``: datasets, metrics, cross-validation, sweeps
- ``cli``: command-line front end
"""
from .exceptions import ConfigurationError, DomainError, SingularityError
from .scene import NOISE_LEVELS, ScenarioConfig, preset
from .sigproc import MultipathSignature, SignalProfile, make_template, trace_signature
from .similarity import DistanceTensor, distance_tensor, similarity_vector
from .forest import ForestModel, predict, predict_score, train_forest
from .evaluation import LabeledDataset, MetricsReport, PipelineConfig, build_dataset, cross_validate

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError", "DomainError", "SingularityError",
    "NOISE_LEVELS", "ScenarioConfig", "preset",
    "MultipathSignature", "SignalProfile", "make_template", "trace_signature",
    "DistanceTensor", "distance_tensor", "similarity_vector",
    "ForestModel", "predict", "predict_score", "train_forest",
    "LabeledDataset", "MetricsReport", "PipelineConfig", "build_dataset", "cross_validate",
]
