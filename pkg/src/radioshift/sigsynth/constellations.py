"""Gray-coded, unit-power constellations for the supported schemes."""
from dataclasses import dataclass
from enum import Enum

import numpy as np


class Scheme(str, Enum):
    BPSK = "BPSK"
    QPSK = "QPSK"
    APSK8 = "APSK8"
    QAM16 = "QAM16"


@dataclass(frozen=True)
class ModulationScheme:
    name: Scheme
    order: int
    constellation: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.constellation, dtype=np.complex128)
        if len(pts) != self.order:
            raise ValueError(f"{self.name}: {len(pts)} points for order {self.order}")
        if len(np.unique(np.round(pts, 12))) != self.order:
            raise ValueError(f"{self.name}: duplicate constellation points")


_GRAY2 = {0: 0, 1: 1, 3: 2, 2: 3}  # 2-bit gray code -> position


def _pam4_gray():
    # bit pairs 00,01,11,10 map to -3,-1,+1,+3
    levels = np.array([-3.0, -1.0, 1.0, 3.0])
    return np.array([levels[_GRAY2[b]] for b in range(4)])


def _unit_power(points):
    points = np.asarray(points, dtype=np.complex128)
    return points / np.sqrt(np.mean(np.abs(points) ** 2))


def make_constellation(scheme) -> ModulationScheme:
    """Build the Gray-coded constellation for ``scheme`` (name or Scheme)."""
    scheme = Scheme(scheme.upper() if isinstance(scheme, str) else scheme)
    if scheme is Scheme.BPSK:
        pts = np.array([1.0, -1.0], dtype=np.complex128)
    elif scheme is Scheme.QPSK:
        # quadrant index gray-coded: 00 (+,+), 01 (-,+), 10 (+,-), 11 (-,-)
        pts = np.array([1 + 1j, -1 + 1j, 1 - 1j, -1 - 1j]) / np.sqrt(2)
    elif scheme is Scheme.APSK8:
        # high bit selects the ring, low two bits walk the ring in gray order
        ring_pos = np.array([_GRAY2[b] for b in range(4)])
        inner = np.exp(1j * np.pi / 2 * ring_pos)
        outer = 2.0 * np.exp(1j * (np.pi / 2 * ring_pos + np.pi / 4))
        pts = _unit_power(np.concatenate([inner, outer]))
    else:
        pam = _pam4_gray()
        pts = _unit_power([pam[m >> 2] + 1j * pam[m & 3] for m in range(16)])
    return ModulationScheme(scheme, len(pts), pts)


ALL_SCHEMES = (Scheme.BPSK, Scheme.QPSK, Scheme.APSK8, Scheme.QAM16)
