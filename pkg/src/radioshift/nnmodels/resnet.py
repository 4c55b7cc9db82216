"""1-D ResNet feature extractor for 2xN IQ frames."""
from dataclasses import dataclass, asdict

import numpy as np

from ..adcore import ops
from ..adcore.kernels import out_length
from ..errors import ConfigError, ShapeError
from .layers import BatchNorm1d, Conv1d
from .module import Module


@dataclass
class ResNetConfig:
    input_len: int = 4096
    stem_channels: int = 64
    stage_channels: tuple = (64, 128, 256, 512)
    blocks_per_stage: int = 2
    kernel: int = 3
    feature_dim: int = 512
    num_classes: int = 4
    head_hidden: int = 256
    dropout: float = 0.5
    bn_eps: float = 1e-5
    bn_momentum: float = 0.1
    zero_init_residual: bool = True     # last BN of each residual branch starts at gamma = 0

    def __post_init__(self):
        self.stage_channels = tuple(int(c) for c in self.stage_channels)
        self.validate()

    def validate(self):
        if self.input_len < 1 or self.stem_channels < 1 or self.blocks_per_stage < 1:
            raise ConfigError("input_len, stem_channels and blocks_per_stage must be >= 1")
        if not self.stage_channels or any(c < 1 for c in self.stage_channels):
            raise ConfigError("stage_channels must be a non-empty list of positive ints")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ConfigError("kernel must be a positive odd integer")
        if self.feature_dim != self.stage_channels[-1]:
            raise ConfigError(
                f"feature_dim {self.feature_dim} must equal last stage channels {self.stage_channels[-1]}")
        if self.num_classes < 2:
            raise ConfigError("num_classes must be >= 2")
        self.stage_lengths()

    def stage_lengths(self):
        """Temporal length after the stem and after every stage."""
        pad = self.kernel // 2
        length = out_length(self.input_len, self.kernel, 2, pad)
        if length < 1:
            raise ConfigError("temporal length collapses below 1 in the stem")
        lengths = [length]
        for s in range(len(self.stage_channels)):
            for _ in range(self.blocks_per_stage):
                length = out_length(length, self.kernel, 2, pad) if length + 2 * pad >= self.kernel else 0
                if length < 1:
                    raise ConfigError(f"temporal length collapses below 1 in stage {s + 1}")
            lengths.append(length)
        return lengths

    def to_dict(self):
        d = asdict(self)
        d["stage_channels"] = list(self.stage_channels)
        return d

    @classmethod
    def desk(cls, **kw):
        base = dict(input_len=1024, stem_channels=16, stage_channels=(16, 32, 64, 128),
                    blocks_per_stage=1, feature_dim=128)
        base.update(kw)
        return cls(**base)


class ResidualBlock(Module):
    def __init__(self, cin, cout, k, rng, dtype, eps, momentum, zero_init=True):
        super().__init__()
        pad = k // 2
        self.conv1 = Conv1d(cin, cout, k, stride=2, pad=pad, rng=rng, dtype=dtype)
        self.bn1 = BatchNorm1d(cout, eps, momentum, dtype)
        self.conv2 = Conv1d(cout, cout, k, stride=1, pad=pad, rng=rng, dtype=dtype)
        self.bn2 = BatchNorm1d(cout, eps, momentum, dtype)
        if zero_init:
            # residual branch starts switched off, so each block begins as its shortcut
            self.bn2.gamma.data[:] = 0
        # the first conv always halves the length, so the shortcut always projects
        self.short = Conv1d(cin, cout, 1, stride=2, pad=0, rng=rng, dtype=dtype)
        self.short_bn = BatchNorm1d(cout, eps, momentum, dtype)

    def __call__(self, x, mode="train", update_stats=True):
        h = ops.relu(self.bn1(self.conv1(x), mode, update_stats))
        h = self.bn2(self.conv2(h), mode, update_stats)
        s = self.short_bn(self.short(x), mode, update_stats)
        return ops.relu(h + s)


class ResNet1D(Module):
    """Stem conv, strided residual stages, global average pool.

    ``mode`` is ``"train"`` (batch statistics), ``"eval"`` or ``"target"``;
    the last uses running statistics while keeping the graph differentiable,
    for unlabeled target batches during adaptation.
    """

    def __init__(self, cfg: ResNetConfig, rng=None, dtype=np.float32):
        super().__init__()
        rng = rng if rng is not None else np.random.default_rng()
        self.cfg = cfg
        k, pad = cfg.kernel, cfg.kernel // 2
        self.stem = Conv1d(2, cfg.stem_channels, k, stride=2, pad=pad, rng=rng, dtype=dtype)
        self.stem_bn = BatchNorm1d(cfg.stem_channels, cfg.bn_eps, cfg.bn_momentum, dtype)
        self.blocks = []
        cin = cfg.stem_channels
        for s, cout in enumerate(cfg.stage_channels):
            for b in range(cfg.blocks_per_stage):
                blk = self.add_child(f"stage{s + 1}_{b + 1}",
                                     ResidualBlock(cin, cout, k, rng, dtype, cfg.bn_eps, cfg.bn_momentum,
                                                   cfg.zero_init_residual))
                self.blocks.append(blk)
                cin = cout

    @property
    def feature_dim(self):
        return self.cfg.feature_dim

    def __call__(self, x, mode="train", update_stats=True):
        if x.ndim != 3 or x.shape[1] != 2 or x.shape[2] != self.cfg.input_len:
            raise ShapeError(f"expected [B, 2, {self.cfg.input_len}] frames, got {x.shape}")
        h = ops.relu(self.stem_bn(self.stem(x), mode, update_stats))
        for blk in self.blocks:
            h = blk(h, mode, update_stats)
        return ops.global_avg_pool(h)


def build_feature_extractor(cfg: ResNetConfig, rng=None, dtype=np.float32) -> ResNet1D:
    return ResNet1D(cfg, rng, dtype)
