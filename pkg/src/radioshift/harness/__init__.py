"""Experiment orchestration: splits, training loops, scenarios and aggregation."""
from .config import DomainSpec, ScenarioKind, ScenarioSpec, TrainConfig
from .data import UnlabeledView, fold_indices, split_dataset, unlabeled
from .metrics import RunMetrics, accuracy_from_confusion, confusion_matrix
from .scenarios import (
    CSV_HEADER, DomainData, expand_cells, recovery_over_base, run_scenario, stepwise_sweep,
    summarize_rows,
)
from .train import ModelBundle, build_bundle, evaluate, train_adapt, train_base, train_method

__all__ = [
    "CSV_HEADER", "DomainData", "DomainSpec", "ModelBundle", "RunMetrics", "ScenarioKind",
    "ScenarioSpec", "TrainConfig", "UnlabeledView", "accuracy_from_confusion",
    "build_bundle", "confusion_matrix", "evaluate", "expand_cells", "fold_indices",
    "recovery_over_base", "run_scenario", "split_dataset", "stepwise_sweep",
    "summarize_rows", "train_adapt", "train_base", "train_method", "unlabeled",
]
