"""Dataset manifests, deterministic frame synthesis and the IQDS file format."""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict, fields, replace
import json
import math
import struct

import numpy as np

from ..errors import ConfigError
from .channel import ChannelConfig, RicianFading, apply_channel
from .constellations import ALL_SCHEMES, Scheme, make_constellation
from .framing import Domain, normalize_frame
from .shaping import generate_symbols, rrc_pulse_shape

IQDS_MAGIC = b"IQDS"
IQDS_VERSION = 1
DEFAULT_SNR_GRID = (2.0, 6.0, 10.0, 14.0, 18.0, 22.0)


@dataclass(frozen=True)
class ImpairmentTemplate:
    """Per-domain channel recipe; per-frame offsets are drawn from it."""

    k_factor: float = 6.0
    n_taps: int = 1
    cfo_max: float = 0.0            # |cfo| ~ U(-cfo_max, cfo_max), cycles/sample
    random_phase: bool = False      # phase ~ U[0, 2pi) when set
    iq_gain_db: float = 0.0
    iq_phase_deg: float = 0.0
    phase_noise_std: float = 0.0

    @classmethod
    def for_domain(cls, domain) -> "ImpairmentTemplate":
        if Domain(domain) is Domain.SIM:
            return cls()
        return cls(k_factor=6.0, n_taps=3, cfo_max=1e-4, random_phase=True,
                   iq_gain_db=0.5, iq_phase_deg=2.0, phase_noise_std=1e-3)


@dataclass(frozen=True)
class DatasetManifest:
    frames_per_class_per_snr: int = 1024
    snr_grid_db: tuple = DEFAULT_SNR_GRID
    modulations: tuple = tuple(s.value for s in ALL_SCHEMES)
    frame_len: int = 4096
    domain: str = Domain.SIM.value
    channel: ImpairmentTemplate | None = None
    seed: int = 0
    sps: int = 8
    rolloff: float = 0.35
    span_symbols: int = 10
    version: int = IQDS_VERSION

    def __post_init__(self):
        object.__setattr__(self, "domain", Domain(self.domain).value)
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in self.snr_grid_db))
        object.__setattr__(self, "modulations", tuple(Scheme(m).value for m in self.modulations))
        if self.channel is None:
            object.__setattr__(self, "channel", ImpairmentTemplate.for_domain(self.domain))
        elif isinstance(self.channel, dict):
            object.__setattr__(self, "channel", _from_dict(ImpairmentTemplate, self.channel))
        self.validate()

    def validate(self):
        if self.frames_per_class_per_snr < 1:
            raise ConfigError("frames_per_class_per_snr must be >= 1")
        if not self.snr_grid_db or not all(math.isfinite(s) for s in self.snr_grid_db):
            raise ConfigError("snr_grid_db must be a non-empty list of finite values")
        if len(set(self.snr_grid_db)) != len(self.snr_grid_db):
            raise ConfigError("snr_grid_db has duplicates")
        if not self.modulations or len(set(self.modulations)) != len(self.modulations):
            raise ConfigError("modulations must be non-empty and unique")
        if self.frame_len < 1:
            raise ConfigError("frame_len must be >= 1")
        if self.sps < 2 or not 0 < self.rolloff <= 1 or self.span_symbols < 2 or self.span_symbols % 2:
            raise ConfigError("need sps >= 2, rolloff in (0, 1], even span_symbols >= 2")
        if self.frame_len % self.sps:
            raise ConfigError("frame_len must be a multiple of sps")
        if self.version != IQDS_VERSION:
            raise ConfigError(f"unsupported manifest version {self.version}")

    @property
    def total_frames(self) -> int:
        return len(self.modulations) * len(self.snr_grid_db) * self.frames_per_class_per_snr

    def cells(self):
        """(snr_index, mod_index) pairs in file order: SNR-major, then modulation."""
        return [(si, mi) for si in range(len(self.snr_grid_db)) for mi in range(len(self.modulations))]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["snr_grid_db"] = list(self.snr_grid_db)
        d["modulations"] = list(self.modulations)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetManifest":
        return _from_dict(cls, d)

    @classmethod
    def full(cls, domain=Domain.SIM, seed=0) -> "DatasetManifest":
        return cls(domain=Domain(domain).value, seed=seed)

    @classmethod
    def desk(cls, domain=Domain.SIM, seed=0) -> "DatasetManifest":
        return cls(frames_per_class_per_snr=64, frame_len=1024, domain=Domain(domain).value, seed=seed)


def _from_dict(cls, d):
    if not isinstance(d, dict):
        raise ConfigError(f"{cls.__name__}: expected an object, got {type(d).__name__}")
    known = {f.name for f in fields(cls)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"{cls.__name__}: unknown keys {sorted(unknown)}")
    try:
        return cls(**d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{cls.__name__}: {exc}") from exc


@dataclass
class SignalSet:
    """Frames with modulation and SNR labels from one domain."""

    frames: np.ndarray              # (n, 2, N) float32
    mod_labels: np.ndarray          # (n,) int, index into ``modulations``
    snr_db: np.ndarray              # (n,) float
    domain: str
    modulations: tuple
    manifest: DatasetManifest | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.frames)

    @property
    def num_classes(self):
        return len(self.modulations)

    def subset(self, idx) -> "SignalSet":
        idx = np.asarray(idx)
        return replace(self, frames=self.frames[idx], mod_labels=self.mod_labels[idx],
                       snr_db=self.snr_db[idx])

    def at_snr(self, snr_db: float) -> "SignalSet":
        idx = np.flatnonzero(np.isclose(self.snr_db, snr_db))
        if idx.size == 0:
            raise ConfigError(f"{self.domain} set has no frames at {snr_db} dB")
        return self.subset(idx)


def _frame_seeds(m: DatasetManifest, si: int, mi: int, k: int):
    domain_code = 0 if m.domain == Domain.SIM.value else 1
    ss = np.random.SeedSequence([m.seed & 0xFFFFFFFFFFFFFFFF, domain_code, si, mi, k])
    sym, chan, offs = ss.spawn(3)
    return sym, int(chan.generate_state(1, np.uint64)[0]), np.random.default_rng(offs)


def frame_channel(m: DatasetManifest, snr_db: float, seed: int, offs_rng) -> ChannelConfig:
    t = m.channel
    cfo = offs_rng.uniform(-t.cfo_max, t.cfo_max) if t.cfo_max > 0 else 0.0
    phase = offs_rng.uniform(0.0, 2 * np.pi) if t.random_phase else 0.0
    return ChannelConfig(
        snr_db=snr_db, fading=RicianFading(t.k_factor, t.n_taps), cfo=cfo, phase=phase,
        iq_gain_db=t.iq_gain_db, iq_phase_deg=t.iq_phase_deg,
        phase_noise_std=t.phase_noise_std, seed=seed)


def _received(m: DatasetManifest, si: int, mi: int, k: int, snr_db=None) -> np.ndarray:
    sym_seed, chan_seed, offs_rng = _frame_seeds(m, si, mi, k)
    scheme = make_constellation(m.modulations[mi])
    # one leading symbol period absorbs the multipath transient
    n_sym = m.frame_len // m.sps + m.span_symbols + 1
    stream = generate_symbols(scheme, n_sym, sym_seed, sps=m.sps)
    x = rrc_pulse_shape(stream, m.rolloff, m.sps, m.span_symbols)
    snr = m.snr_grid_db[si] if snr_db is None else snr_db
    r = apply_channel(x, frame_channel(m, snr, chan_seed, offs_rng))
    return r[m.sps:m.sps + m.frame_len]


def synthesize_frame(m: DatasetManifest, si: int, mi: int, k: int, snr_db=None) -> np.ndarray:
    """Frame ``k`` of cell (SNR ``si``, modulation ``mi``) as a normalised (2, N) array.

    ``snr_db`` overrides the grid value (e.g. ``inf`` for the noiseless twin).
    """
    seg = _received(m, si, mi, k, snr_db)
    return normalize_frame(np.stack([seg.real, seg.imag]))


def realized_snr_db(m: DatasetManifest, si: int, mi: int, k: int) -> float:
    """Measured SNR of frame ``k``: noiseless-twin power over the residual noise power."""
    noisy = _received(m, si, mi, k)
    clean = _received(m, si, mi, k, snr_db=math.inf)
    p_sig = np.mean(np.abs(clean) ** 2)
    p_noise = np.mean(np.abs(noisy - clean) ** 2)
    return float(10 * np.log10(p_sig / p_noise))


def generate_cell(m: DatasetManifest, si: int, mi: int) -> np.ndarray:
    out = np.empty((m.frames_per_class_per_snr, 2, m.frame_len), dtype=np.float32)
    for k in range(m.frames_per_class_per_snr):
        out[k] = synthesize_frame(m, si, mi, k)
    return out


def _cell_job(args):
    return generate_cell(*args)


def iter_cells(m: DatasetManifest, jobs: int = 1):
    """Yield ((snr_index, mod_index), frames) in manifest order."""
    cells = m.cells()
    if jobs <= 1:
        for si, mi in cells:
            yield (si, mi), generate_cell(m, si, mi)
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for cell, frames in zip(cells, pool.map(_cell_job, [(m, si, mi) for si, mi in cells])):
            yield cell, frames


def build_dataset(m: DatasetManifest, jobs: int = 1) -> SignalSet:
    frames = np.empty((m.total_frames, 2, m.frame_len), dtype=np.float32)
    mods = np.empty(m.total_frames, dtype=np.int64)
    snrs = np.empty(m.total_frames, dtype=np.float64)
    c = m.frames_per_class_per_snr
    for i, ((si, mi), block) in enumerate(iter_cells(m, jobs)):
        frames[i * c:(i + 1) * c] = block
        mods[i * c:(i + 1) * c] = mi
        snrs[i * c:(i + 1) * c] = m.snr_grid_db[si]
    return SignalSet(frames, mods, snrs, m.domain, m.modulations, m)


def labels_from_manifest(m: DatasetManifest):
    c = m.frames_per_class_per_snr
    mods = np.repeat([mi for _, mi in m.cells()], c)
    snrs = np.repeat([m.snr_grid_db[si] for si, _ in m.cells()], c).astype(np.float64)
    return mods.astype(np.int64), snrs


def manifest_json(m: DatasetManifest) -> bytes:
    return json.dumps(m.to_dict(), sort_keys=True, separators=(",", ":")).encode()


def write_iqds(path, m: DatasetManifest, jobs: int = 1, on_cell=None) -> int:
    """Stream a dataset to ``path``; returns the number of frames written."""
    header = manifest_json(m)
    n = 0
    with open(path, "wb") as fh:
        fh.write(IQDS_MAGIC + struct.pack("<II", IQDS_VERSION, len(header)) + header)
        for cell, block in iter_cells(m, jobs):
            fh.write(np.ascontiguousarray(block, dtype="<f4").tobytes())
            n += len(block)
            if on_cell is not None:
                on_cell(cell, len(block))
    return n


def write_signalset(path, ds: SignalSet):
    header = manifest_json(ds.manifest)
    with open(path, "wb") as fh:
        fh.write(IQDS_MAGIC + struct.pack("<II", IQDS_VERSION, len(header)) + header)
        fh.write(np.ascontiguousarray(ds.frames, dtype="<f4").tobytes())


def read_iqds(path) -> SignalSet:
    with open(path, "rb") as fh:
        head = fh.read(12)
        if len(head) < 12 or head[:4] != IQDS_MAGIC:
            raise ValueError(f"{path}: not an IQDS file")
        version, hlen = struct.unpack("<II", head[4:])
        if version != IQDS_VERSION:
            raise ValueError(f"{path}: unsupported IQDS version {version}")
        m = DatasetManifest.from_dict(json.loads(fh.read(hlen)))
        raw = np.frombuffer(fh.read(), dtype="<f4")
    expected = m.total_frames * 2 * m.frame_len
    if raw.size != expected:
        raise ValueError(f"{path}: expected {expected} floats, found {raw.size}")
    frames = raw.astype(np.float32).reshape(m.total_frames, 2, m.frame_len)
    mods, snrs = labels_from_manifest(m)
    return SignalSet(frames, mods, snrs, m.domain, m.modulations, m)
