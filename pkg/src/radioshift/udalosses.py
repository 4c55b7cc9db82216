"""Alignment losses for unsupervised domain adaptation and the combined objective."""
from dataclasses import dataclass, asdict
from enum import Enum
import math

import numpy as np

from .adcore import Tensor, adam_step, backward, ops, zero_grad
from .errors import ConfigError, DegenerateBatchError, DivergenceError, ShapeError


class Method(str, Enum):
    BASE = "BASE"
    DANN = "DANN"
    MCD = "MCD"
    CORAL = "CORAL"
    STAR = "STAR"
    JAN = "JAN"


DEFAULT_LAMBDA = {
    Method.BASE: 0.0, Method.DANN: 1.0, Method.MCD: 0.0, Method.CORAL: 10.0,
    Method.STAR: 0.1, Method.JAN: 1.0,
}


@dataclass
class AdaptConfig:
    method: Method = Method.BASE
    lam: float | None = None
    mcd_n_steps_c: int = 4
    star_samples: int = 2
    jan_kernels: tuple = (5, 2.0)       # (count, multiplicative step between bandwidths)
    coral_scale: bool = True

    def __post_init__(self):
        if not isinstance(self.method, Method):
            try:
                self.method = Method(str(self.method).upper())
            except ValueError:
                raise ConfigError(f"unknown adaptation method {self.method!r}") from None
        if self.lam is None:
            self.lam = DEFAULT_LAMBDA[self.method]
        if not math.isfinite(self.lam) or self.lam < 0:
            raise ConfigError(f"lambda must be finite and >= 0, got {self.lam}")
        if self.mcd_n_steps_c < 0:
            raise ConfigError("mcd_n_steps_c must be >= 0")
        if self.star_samples < 2:
            raise ConfigError("star_samples must be >= 2")
        self.jan_kernels = (int(self.jan_kernels[0]), float(self.jan_kernels[1]))
        if self.jan_kernels[0] < 1 or self.jan_kernels[1] <= 0:
            raise ConfigError("jan_kernels needs count >= 1 and a positive step")

    def to_dict(self):
        d = asdict(self)
        d["method"] = self.method.value
        d["jan_kernels"] = list(self.jan_kernels)
        return d


@dataclass
class DomainBatchPair:
    """Labelled source frames and unlabelled target frames for one step."""

    x_source: np.ndarray
    y_source: np.ndarray        # one-hot
    x_target: np.ndarray

    def __post_init__(self):
        if len(self.x_source) == 0 or len(self.x_target) == 0:
            raise ValueError("source and target batches must be non-empty")
        if len(self.y_source) != len(self.x_source):
            raise ValueError("one label row per source frame required")


def loss_total(ce, align, lam):
    """``ce + lam * align``; raises :class:`DivergenceError` on non-finite input."""
    for name, t in (("classification", ce), ("alignment", align)):
        v = t.data if isinstance(t, Tensor) else np.asarray(t)
        if not np.all(np.isfinite(v)):
            raise DivergenceError(f"{name} loss is not finite ({v})")
    if not math.isfinite(lam):
        raise DivergenceError(f"lambda is not finite ({lam})")
    if not isinstance(ce, Tensor):
        ce = Tensor(ce, dtype=np.float64)
    return ce + align * lam


# -- DANN -------------------------------------------------------------------------
def dann_align(features_s, features_t, discriminator, grl_coeff=None):
    """Binary cross-entropy of the discriminator on source (d=1) + target (d=0).

    Features pass through the discriminator's gradient reversal, so minimising
    this loss trains the discriminator while pushing the extractor the other way.
    """
    f = ops.concat([features_s, features_t], axis=0)
    d = np.concatenate([np.ones(len(features_s)), np.zeros(len(features_t))])
    return ops.binary_cross_entropy(discriminator(f, grl_coeff), d)


# -- MCD --------------------------------------------------------------------------
def mcd_discrepancy(logits_1, logits_2):
    """Mean over the batch of the L1 distance between the two softmax outputs."""
    if logits_1.shape != logits_2.shape:
        raise ShapeError(f"logit shapes differ: {logits_1.shape} vs {logits_2.shape}")
    diff = ops.abs(ops.softmax(logits_1) - ops.softmax(logits_2))
    return diff.sum(axis=1).mean()


def _features_const(extractor, x, mode, update_stats):
    return Tensor(extractor(Tensor(x), mode, update_stats).data)


def mcd_train_step(batch: DomainBatchPair, extractor, head1, head2, n_steps_c=4, lr=1e-3,
                   rng=None, diagnostics=False, target_mode="train"):
    """One three-phase MCD update on ``batch``; returns the losses of each phase.

    A: extractor and both heads minimise source cross-entropy.
    B: extractor frozen; heads minimise source CE minus target discrepancy.
    C: heads frozen; extractor minimises target discrepancy, ``n_steps_c`` times.

    Target batches are normalised with their own batch statistics by default
    (running statistics are left untouched); with running statistics the
    extractor can satisfy step C by collapsing target features.
    """
    xs, ys, xt = Tensor(batch.x_source), batch.y_source, batch.x_target
    out = {}
    heads_params = head1.parameters() + head2.parameters()
    f_params = extractor.parameters()

    # A
    fs = extractor(xs, "train")
    ce = ops.softmax_cross_entropy(head1(fs, "train", rng), ys) + \
        ops.softmax_cross_entropy(head2(fs, "train", rng), ys)
    if not np.isfinite(ce.data):
        raise DivergenceError(f"MCD step A loss is not finite ({ce.data})")
    zero_grad(f_params + heads_params)
    backward(ce)
    adam_step(f_params + heads_params, lr)
    out["step_a_ce"] = float(ce.data)

    # B
    fs = _features_const(extractor, batch.x_source, "train", False)
    ft = _features_const(extractor, xt, target_mode, False)
    if diagnostics:
        out["disc_before_b"] = _eval_disc(head1, head2, ft)
    ce = ops.softmax_cross_entropy(head1(fs, "train", rng), ys) + \
        ops.softmax_cross_entropy(head2(fs, "train", rng), ys)
    disc = mcd_discrepancy(head1(ft, "train", rng), head2(ft, "train", rng))
    loss = ce - disc
    if not np.isfinite(loss.data):
        raise DivergenceError(f"MCD step B loss is not finite ({loss.data})")
    zero_grad(heads_params)
    backward(loss)
    adam_step(heads_params, lr)
    out["step_b_objective"] = float(loss.data)
    if diagnostics:
        out["disc_after_b"] = _eval_disc(head1, head2, ft)

    # C
    for _ in range(n_steps_c):
        ft_live = extractor(Tensor(xt), target_mode, False)
        disc = mcd_discrepancy(head1(ft_live, "train", rng), head2(ft_live, "train", rng))
        if not np.isfinite(disc.data):
            raise DivergenceError(f"MCD step C discrepancy is not finite ({disc.data})")
        zero_grad(f_params + heads_params)
        backward(disc)
        adam_step(f_params, lr)
        out["step_c_disc"] = float(disc.data)
    if diagnostics:
        out["disc_after_c"] = _eval_disc(head1, head2, _features_const(extractor, xt, target_mode, False))
    return out


def _eval_disc(head1, head2, ft):
    return float(mcd_discrepancy(head1(ft, "eval"), head2(ft, "eval")).data)


# -- CORAL ------------------------------------------------------------------------
def _covariance(f):
    n = f.shape[0]
    xc = f - f.mean(axis=0, keepdims=True)
    return (xc.T @ xc) * (1.0 / (n - 1))


def coral_align(features_s, features_t, scaled=True):
    """Squared Frobenius distance of the unbiased feature covariances.

    With ``scaled`` the result is divided by 4 d^2.
    """
    for f in (features_s, features_t):
        if f.ndim != 2 or f.shape[0] < 2:
            raise DegenerateBatchError(f"coral needs [B>=2, d] features, got {f.shape}")
    if features_s.shape[1] != features_t.shape[1]:
        raise ShapeError("source and target feature widths differ")
    diff = _covariance(features_s) - _covariance(features_t)
    loss = (diff * diff).sum()
    if scaled:
        d = features_s.shape[1]
        loss = loss * (1.0 / (4.0 * d * d))
    return loss


# -- STAR -------------------------------------------------------------------------
def star_align(prob_list, eps=1e-8):
    """Batch mean of sum over m < n of KL(p_m || p_n), probabilities clamped at ``eps``."""
    if len(prob_list) < 2:
        raise ConfigError("STAR needs at least two probability sets")
    logs = [ops.log(ops.clamp_min(p, eps)) for p in prob_list]
    total = None
    for m in range(len(prob_list)):
        pm = ops.clamp_min(prob_list[m], eps)
        for n in range(m + 1, len(prob_list)):
            kl = (pm * (logs[m] - logs[n])).sum(axis=1)
            total = kl if total is None else total + kl
    return total.mean()


# -- JAN --------------------------------------------------------------------------
def kernel_multipliers(count, step):
    return [step ** (i - (count - 1) / 2.0) for i in range(count)]


def _pairwise_sq_dists(z):
    sq = (z * z).sum(axis=1, keepdims=True)
    d = sq + sq.T - (z @ z.T) * 2.0
    return ops.clamp_min(d, 0.0) if isinstance(d, Tensor) else np.maximum(d, 0.0)


def median_bandwidth(z):
    """Median pairwise Euclidean distance of the rows of ``z`` (1.0 if degenerate)."""
    zd = z.data if isinstance(z, Tensor) else np.asarray(z)
    d2 = _pairwise_sq_dists(zd)
    off = d2[~np.eye(len(zd), dtype=bool)]
    med = float(np.median(np.sqrt(off))) if off.size else 0.0
    return med if med > 0 else 1.0


def _layer_kernel(z, multipliers, bandwidth=None):
    # the bandwidth is a data-dependent constant: no gradient flows through it
    d2 = _pairwise_sq_dists(z)
    med = median_bandwidth(z) if bandwidth is None else float(bandwidth)
    k = None
    for m in multipliers:
        sigma2 = (med * m) ** 2
        term = ops.exp(d2 * (-1.0 / (2.0 * sigma2)))
        k = term if k is None else k + term
    return k * (1.0 / len(multipliers))


def jmmd_matrix(layers_s, layers_t, kernels=(5, 2.0), bandwidths=None):
    """Joint kernel over the union batch: product of per-layer Gaussian mixtures.

    Each layer's base bandwidth is the median pairwise distance of the union
    batch unless given in ``bandwidths``; the mixture uses that base times
    :func:`kernel_multipliers`.
    """
    if len(layers_s) != len(layers_t) or not layers_s:
        raise ShapeError("source and target must supply the same non-empty layer set")
    mult = kernel_multipliers(*kernels)
    joint = None
    if bandwidths is None:
        bandwidths = [None] * len(layers_s)
    for zs, zt, bw in zip(layers_s, layers_t, bandwidths):
        if zs.shape != zt.shape:
            raise ShapeError(f"layer shapes differ: {zs.shape} vs {zt.shape}")
        k = _layer_kernel(ops.concat([zs, zt], axis=0), mult, bw)
        joint = k if joint is None else joint * k
    return joint


def jan_align(layers_s, layers_t, kernels=(5, 2.0), clamp=False, bandwidths=None):
    """Unbiased JMMD^2 between source and target activations.

    ``layers_s``/``layers_t`` are lists of [B, d_l] tensors. The raw estimate
    can dip below zero; ``clamp=True`` returns ``max(0, estimate)`` for
    reporting, while training uses the raw value.
    """
    k = jmmd_matrix(layers_s, layers_t, kernels, bandwidths)
    b = layers_s[0].shape[0]
    if b < 2:
        raise DegenerateBatchError("JMMD needs at least two samples per domain")
    w = np.full((2 * b, 2 * b), -1.0 / (b * b))
    w[:b, :b] = 1.0 / (b * (b - 1))
    w[b:, b:] = 1.0 / (b * (b - 1))
    np.fill_diagonal(w, 0.0)
    est = (k * w.astype(k.dtype)).sum()
    if clamp:
        return max(0.0, float(est.data))
    return est
