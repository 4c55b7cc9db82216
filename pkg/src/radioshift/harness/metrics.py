"""Accuracy aggregation across repeated runs."""
from dataclasses import dataclass, field

import numpy as np


@dataclass
class RunMetrics:
    accuracies: list
    confusion: np.ndarray | None = field(default=None, repr=False)

    @property
    def mean(self):
        return float(np.mean(self.accuracies))

    @property
    def max(self):
        return float(np.max(self.accuracies))

    @property
    def var(self):
        """Sample variance (n - 1); 0 for a single run."""
        if len(self.accuracies) < 2:
            return 0.0
        return float(np.var(self.accuracies, ddof=1))

    def to_dict(self):
        return {"accuracies": [float(a) for a in self.accuracies], "mean": self.mean,
                "max": self.max, "var": self.var}


def confusion_matrix(y_true, y_pred, k):
    cm = np.zeros((k, k), dtype=np.int64)
    np.add.at(cm, (np.asarray(y_true), np.asarray(y_pred)), 1)
    return cm


def accuracy_from_confusion(cm):
    return 100.0 * np.trace(cm) / max(cm.sum(), 1)
