"""Symbol generation and root-raised-cosine pulse shaping."""
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from .constellations import ModulationScheme


@dataclass
class SymbolStream:
    indices: np.ndarray
    symbols: np.ndarray
    sps: int = 8

    def __post_init__(self):
        if len(self.indices) != len(self.symbols):
            raise ValueError("indices and symbols differ in length")

    def __len__(self):
        return len(self.indices)


def generate_symbols(scheme: ModulationScheme, count: int, seed, sps: int = 8) -> SymbolStream:
    """Draw ``count`` i.i.d. uniform symbol indices and map them to points.

    ``seed`` may be an int, a ``SeedSequence`` or a ``Generator``.
    """
    if count <= 0:
        raise ValueError("empty symbol stream requested (count must be > 0)")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, scheme.order, size=count)
    return SymbolStream(idx, np.asarray(scheme.constellation)[idx], sps)


def rrc_taps(rolloff: float, sps: int, span_symbols: int) -> np.ndarray:
    """Unit-energy root-raised-cosine taps, ``span_symbols * sps + 1`` long."""
    if not 0.0 < rolloff <= 1.0:
        raise ConfigError(f"rolloff must be in (0, 1], got {rolloff}")
    if sps < 2:
        raise ConfigError(f"sps must be >= 2, got {sps}")
    if span_symbols < 1:
        raise ConfigError(f"span_symbols must be >= 1, got {span_symbols}")
    n = span_symbols * sps + 1
    t = (np.arange(n) - (n - 1) / 2) / sps  # in symbol periods
    b = rolloff
    h = np.empty(n)
    for i, ti in enumerate(t):
        if np.isclose(ti, 0.0):
            h[i] = 1.0 - b + 4 * b / np.pi
        elif np.isclose(abs(ti), 1 / (4 * b)):
            h[i] = b / np.sqrt(2) * (
                (1 + 2 / np.pi) * np.sin(np.pi / (4 * b))
                + (1 - 2 / np.pi) * np.cos(np.pi / (4 * b))
            )
        else:
            num = np.sin(np.pi * ti * (1 - b)) + 4 * b * ti * np.cos(np.pi * ti * (1 + b))
            h[i] = num / (np.pi * ti * (1 - (4 * b * ti) ** 2))
    return h / np.sqrt(np.sum(h ** 2))


def rrc_pulse_shape(stream: SymbolStream, rolloff: float = 0.35, sps: int = 8,
                    span_symbols: int = 10) -> np.ndarray:
    """Upsample and filter ``stream``, returning only steady-state samples.

    The full convolution is trimmed by ``span_symbols * sps`` samples at both
    ends, so the result has ``(len(stream) - span_symbols) * sps`` samples and
    every output sample sees the complete filter. With an even span, symbol
    centres fall on multiples of ``sps``; index 0 carries symbol
    ``span_symbols // 2``.
    """
    taps = rrc_taps(rolloff, sps, span_symbols)
    if len(stream) <= span_symbols:
        raise ConfigError(
            f"need more than {span_symbols} symbols for a steady-state output, got {len(stream)}")
    up = np.zeros(len(stream) * sps, dtype=np.complex128)
    up[::sps] = stream.symbols
    full = np.convolve(up, taps)
    trim = span_symbols * sps
    return full[trim:len(up)]
