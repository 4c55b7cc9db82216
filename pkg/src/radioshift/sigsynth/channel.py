"""Baseband channel: fading, carrier offsets, IQ imbalance and AWGN."""
from dataclasses import dataclass
import math

import numpy as np

from ..errors import ConfigError


@dataclass(frozen=True)
class RicianFading:
    k_factor: float = 6.0
    n_taps: int = 1

    def __post_init__(self):
        if self.k_factor < 0:
            raise ConfigError(f"k_factor must be >= 0, got {self.k_factor}")
        if self.n_taps < 1:
            raise ConfigError(f"n_taps must be >= 1, got {self.n_taps}")


@dataclass(frozen=True)
class ChannelConfig:
    """One channel realisation. ``snr_db = inf`` disables the AWGN stage."""

    snr_db: float = math.inf
    fading: RicianFading | None = None
    cfo: float = 0.0                  # cycles / sample
    phase: float = 0.0                # radians
    iq_gain_db: float = 0.0
    iq_phase_deg: float = 0.0
    phase_noise_std: float = 0.0      # radians / sample
    seed: int = 0

    def __post_init__(self):
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise ConfigError(f"snr_db must be finite or +inf, got {self.snr_db}")


def rician_taps(k_factor: float, n_taps: int, rng) -> np.ndarray:
    """Channel impulse response: fixed LOS on tap 0 plus diffuse Gaussian taps.

    LOS power is K/(K+1); the diffuse power 1/(K+1) is split evenly over
    ``n_taps`` taps, so the expected total power is 1.
    """
    los = math.sqrt(k_factor / (k_factor + 1.0))
    sigma = math.sqrt(1.0 / ((k_factor + 1.0) * n_taps) / 2.0)
    diffuse = sigma * (rng.standard_normal(n_taps) + 1j * rng.standard_normal(n_taps))
    h = diffuse.astype(np.complex128)
    h[0] += los
    return h


def iq_imbalance(x: np.ndarray, gain_db: float, phase_deg: float) -> np.ndarray:
    """Receiver IQ imbalance: Q branch gain error and quadrature skew."""
    if gain_db == 0.0 and phase_deg == 0.0:
        return x
    g = 10.0 ** (gain_db / 20.0)
    th = math.radians(phase_deg)
    i, q = x.real, x.imag
    return i + 1j * g * (q * math.cos(th) - i * math.sin(th))


def apply_channel(x: np.ndarray, cfg: ChannelConfig) -> np.ndarray:
    """Pass ``x`` through the channel described by ``cfg``.

    Random draws happen in a fixed order (fading taps, phase noise, AWGN) from
    ``cfg.seed``, so rerunning with ``snr_db = inf`` reproduces the noiseless
    part of a noisy realisation exactly.
    """
    x = np.asarray(x, dtype=np.complex128)
    if x.size == 0:
        raise ValueError("empty input sequence")
    rng = np.random.default_rng(cfg.seed)
    y = x
    if cfg.fading is not None:
        h = rician_taps(cfg.fading.k_factor, cfg.fading.n_taps, rng)
        y = np.convolve(y, h)[: len(x)]
    # AWGN is referenced to the faded signal power so fading does not bias the label
    p_sig = float(np.mean(np.abs(y) ** 2))

    n = np.arange(len(x))
    theta = 2 * np.pi * cfg.cfo * n + cfg.phase
    if cfg.phase_noise_std > 0:
        theta = theta + np.cumsum(rng.normal(0.0, cfg.phase_noise_std, len(x)))
    if cfg.cfo != 0.0 or cfg.phase != 0.0 or cfg.phase_noise_std > 0:
        y = y * np.exp(1j * theta)
    y = iq_imbalance(y, cfg.iq_gain_db, cfg.iq_phase_deg)

    if math.isfinite(cfg.snr_db):
        var = p_sig / 10.0 ** (cfg.snr_db / 10.0)
        y = y + math.sqrt(var / 2.0) * (rng.standard_normal(len(x)) + 1j * rng.standard_normal(len(x)))
    return y
