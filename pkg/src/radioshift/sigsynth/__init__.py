"""Seedable IQ frame synthesis for the simulated and emulated-OTA domains."""
from .channel import ChannelConfig, RicianFading, apply_channel, iq_imbalance, rician_taps
from .constellations import ALL_SCHEMES, ModulationScheme, Scheme, make_constellation
from .dataset import (
    DatasetManifest, ImpairmentTemplate, SignalSet, build_dataset, generate_cell,
    read_iqds, synthesize_frame, write_iqds, write_signalset,
)
from .framing import Domain, IQFrame, frame_and_normalize, normalize_frame
from .oracle import oracle_classify, recover_symbols
from .shaping import SymbolStream, generate_symbols, rrc_pulse_shape, rrc_taps

__all__ = [
    "ALL_SCHEMES", "ChannelConfig", "DatasetManifest", "Domain", "IQFrame",
    "ImpairmentTemplate", "ModulationScheme", "RicianFading", "Scheme", "SignalSet",
    "SymbolStream", "apply_channel", "build_dataset", "frame_and_normalize",
    "generate_cell", "generate_symbols", "iq_imbalance", "make_constellation",
    "normalize_frame", "oracle_classify", "read_iqds", "recover_symbols",
    "rician_taps", "rrc_pulse_shape", "rrc_taps", "synthesize_frame", "write_iqds",
    "write_signalset",
]
