"""Scenario, domain and training configuration records."""
from dataclasses import dataclass, asdict, field
from enum import Enum
import math

from ..errors import ConfigError
from ..sigsynth.framing import Domain
from ..udalosses import AdaptConfig


class ScenarioKind(str, Enum):
    CROSS_SNR = "cross-snr"
    SNR_MATCHED = "snr-matched"
    STEPWISE = "stepwise"
    IN_DOMAIN = "in-domain"

    @classmethod
    def parse(cls, v):
        if isinstance(v, cls):
            return v
        s = str(v).strip().lower().replace("_", "-")
        try:
            return cls(s)
        except ValueError:
            raise ConfigError(f"unknown scenario kind {v!r}") from None


@dataclass(frozen=True)
class DomainSpec:
    domain: str
    snr_db: float

    def __post_init__(self):
        object.__setattr__(self, "domain", Domain(self.domain if isinstance(self.domain, Domain) else str(self.domain).upper()).value)
        object.__setattr__(self, "snr_db", float(self.snr_db))
        if not math.isfinite(self.snr_db):
            raise ConfigError("domain SNR must be finite")

    def label(self):
        return f"{self.domain}@{self.snr_db:g}"


@dataclass
class TrainConfig:
    lr: float = 1e-3
    epochs: int = 50
    batch: int = 128            # source + target frames per step; each domain gets half
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0 or self.epochs < 1 or self.batch < 4:
            raise ConfigError("need lr > 0, epochs >= 1, batch >= 4")

    @property
    def half_batch(self):
        return self.batch // 2

    @classmethod
    def desk(cls, **kw):
        base = dict(epochs=20, batch=32)
        base.update(kw)
        return cls(**base)

    def to_dict(self):
        return asdict(self)


@dataclass
class ScenarioSpec:
    kind: ScenarioKind
    source: DomainSpec
    target: DomainSpec
    method: AdaptConfig = field(default_factory=AdaptConfig)
    runs: int = 5
    eval_frac: float = 0.2

    def __post_init__(self):
        self.kind = ScenarioKind.parse(self.kind)
        s, t = self.source, self.target
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.kind is ScenarioKind.CROSS_SNR and (s.domain != t.domain or s.snr_db == t.snr_db):
            raise ConfigError("cross-snr needs the same domain and different SNRs")
        if self.kind is ScenarioKind.SNR_MATCHED and (s.domain == t.domain or s.snr_db != t.snr_db):
            raise ConfigError("snr-matched needs different domains at the same SNR")
        if self.kind is ScenarioKind.STEPWISE and (s.domain != Domain.SIM.value or t.domain != Domain.OTA_EMU.value):
            raise ConfigError("stepwise needs a SIM source and an OTA_EMU target")
        if self.kind is ScenarioKind.IN_DOMAIN and s != t:
            raise ConfigError("in-domain needs source == target")
