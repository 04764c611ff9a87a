"""Sugeno fuzzy classifiers built by per-dimension subtractive clustering, with
GA, PSO and SA searches over the cluster radii."""

from .dataset import Dataset, DomainError, FieldRecord, InteractionLabels, IVR_LAYOUT, Layout
from .fis import SugenoFis, build_fis, classify, infer
from .metrics import ConfusionCounts, FitnessContext, accuracy_eq1, confusion, fitness
from .optim import OptimizerConfig, RunReport, run
from .subclust import ClusterModel, subclust
from .synthgen import FieldProfile, LabelRuleSet, default_profile, default_rules, generate_dataset

__version__ = "0.1.0"
