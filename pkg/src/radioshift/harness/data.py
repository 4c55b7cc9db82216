"""Fold splits and the target-label guard."""
import numpy as np

from ..errors import ConfigError, TargetLabelAccessError
from ..sigsynth.dataset import SignalSet


class UnlabeledView:
    """Target-domain frames with the modulation labels withheld.

    Only frames and domain descriptors are exposed; any attempt to read
    labels raises :class:`TargetLabelAccessError`.
    """

    __slots__ = ("_frames", "domain", "snr_db", "num_classes")

    def __init__(self, ds: SignalSet):
        self._frames = ds.frames
        self.domain = ds.domain
        self.snr_db = ds.snr_db
        self.num_classes = ds.num_classes

    @property
    def frames(self):
        return self._frames

    @property
    def mod_labels(self):
        raise TargetLabelAccessError("target-domain labels are not available during adaptation")

    labels = mod_labels

    def __len__(self):
        return len(self._frames)


def unlabeled(ds: SignalSet) -> UnlabeledView:
    return UnlabeledView(ds)


def fold_indices(ds: SignalSet, fold: int, runs: int):
    """Eval indices of ``fold``: the fold-th of ``runs`` contiguous slices per stratum.

    Strata are (modulation, SNR) cells; frames keep file order inside a stratum.
    """
    if not 0 <= fold < runs:
        raise ConfigError(f"fold {fold} outside 0..{runs - 1}")
    eval_idx = []
    keys = np.stack([ds.mod_labels.astype(np.float64), ds.snr_db.astype(np.float64)], axis=1)
    for key in np.unique(keys, axis=0):
        idx = np.flatnonzero((keys == key).all(axis=1))
        if len(idx) < runs:
            raise ConfigError(
                f"stratum (mod={int(key[0])}, snr={key[1]:g}) has {len(idx)} frames, fewer than {runs} folds")
        eval_idx.append(np.array_split(idx, runs)[fold])
    eval_idx = np.sort(np.concatenate(eval_idx))
    train_idx = np.setdiff1d(np.arange(len(ds)), eval_idx)
    return train_idx, eval_idx


def split_dataset(ds: SignalSet, fold: int, runs: int):
    """Stratified (train, eval) subsets for ``fold`` of ``runs``."""
    tr, ev = fold_indices(ds, fold, runs)
    return ds.subset(tr), ds.subset(ev)
