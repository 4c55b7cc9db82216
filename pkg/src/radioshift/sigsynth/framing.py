"""Framing of received samples into max-abs normalised 2xN IQ matrices."""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..errors import InsufficientSamplesError


class Domain(str, Enum):
    SIM = "SIM"
    OTA_EMU = "OTA_EMU"


@dataclass
class IQFrame:
    data: np.ndarray          # (2, N): row 0 real, row 1 imag
    modulation: str | None = None
    snr_label_db: float | None = None
    domain: Domain | None = None


def normalize_frame(mat: np.ndarray) -> np.ndarray:
    """Divide a frame by its largest absolute entry; all-zero frames pass through."""
    peak = np.max(np.abs(mat))
    if peak == 0:
        return mat.copy()
    return mat / peak


def frame_and_normalize(r: np.ndarray, n: int, modulation=None, snr_label_db=None,
                        domain=None) -> list[IQFrame]:
    """Cut ``r`` into consecutive non-overlapping frames of ``n`` samples.

    A trailing partial frame is dropped.
    """
    r = np.asarray(r)
    if len(r) < n:
        raise InsufficientSamplesError(f"need at least {n} samples, got {len(r)}")
    frames = []
    for k in range(len(r) // n):
        seg = r[k * n:(k + 1) * n]
        mat = np.stack([seg.real, seg.imag]).astype(np.float64)
        frames.append(IQFrame(normalize_frame(mat), modulation, snr_label_db, domain))
    return frames
