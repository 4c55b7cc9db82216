"""Training loops for the baseline and the adaptation methods."""
from dataclasses import dataclass, field
import json
import math

import numpy as np

from ..adcore import Tensor, adam_step, backward, ops, save_checkpoint, load_checkpoint, zero_grad
from ..errors import DivergenceError, TargetLabelAccessError
from ..nnmodels import (
    ClassifierHead, DomainDiscriminator, ResNet1D, ResNetConfig, StochasticClassifier,
    dann_lambda, sample_stochastic_classifiers,
)
from ..udalosses import (
    AdaptConfig, DomainBatchPair, Method, coral_align, dann_align, jan_align, loss_total,
    mcd_train_step, star_align,
)
from .config import TrainConfig
from .data import UnlabeledView
from .metrics import accuracy_from_confusion, confusion_matrix


@dataclass
class ModelBundle:
    method: Method
    extractor: ResNet1D
    heads: dict
    model_cfg: ResNetConfig
    curve: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    def parameters(self):
        ps = self.extractor.parameters()
        for h in self.heads.values():
            ps += h.parameters()
        return ps

    def state_dict(self):
        sd = self.extractor.state_dict("f.")
        for name, h in self.heads.items():
            sd.update(h.state_dict(f"{name}."))
        return sd

    def load_state_dict(self, sd):
        self.extractor.load_state_dict(sd, "f.")
        for name, h in self.heads.items():
            h.load_state_dict(sd, f"{name}.")

    def save(self, path):
        save_checkpoint(path, self.state_dict())
        with open(f"{path}.json", "w") as fh:
            json.dump({"method": self.method.value, "model": self.model_cfg.to_dict()}, fh,
                      indent=2, sort_keys=True)

    @classmethod
    def load(cls, path):
        with open(f"{path}.json") as fh:
            meta = json.load(fh)
        cfg = ResNetConfig(**meta["model"])
        bundle = build_bundle(Method(meta["method"]), cfg, np.random.default_rng(0))
        bundle.load_state_dict(load_checkpoint(path))
        return bundle

    def predict_proba(self, frames, batch=64):
        out = []
        for i in range(0, len(frames), batch):
            f = self.extractor(Tensor(np.asarray(frames[i:i + batch])), "eval")
            if self.method is Method.MCD:
                p = (ops.softmax(self.heads["y1"](f, "eval")).data
                     + ops.softmax(self.heads["y2"](f, "eval")).data) / 2
            else:
                p = ops.softmax(self.heads["y"](f, "eval")).data
            out.append(p)
        return np.concatenate(out)

    def predict(self, frames, batch=64):
        return np.argmax(self.predict_proba(frames, batch), axis=1)


def build_bundle(method: Method, cfg: ResNetConfig, rng_init, rng_aux=None, dtype=np.float32):
    """Extractor plus the heads ``method`` needs.

    The extractor and primary classifier come from ``rng_init`` first, so every
    method shares the baseline's initial weights; extra heads use ``rng_aux``.
    """
    rng_aux = rng_aux if rng_aux is not None else rng_init
    extractor = ResNet1D(cfg, rng_init, dtype)
    d, k, hid, p = cfg.feature_dim, cfg.num_classes, cfg.head_hidden, cfg.dropout
    if method is Method.STAR:
        heads = {"y": StochasticClassifier(d, k, hid, p, rng=rng_init, dtype=dtype)}
    else:
        heads = {"y": ClassifierHead(d, k, hid, p, rng=rng_init, dtype=dtype)}
    if method is Method.MCD:
        heads = {"y1": heads["y"], "y2": ClassifierHead(d, k, hid, p, rng=rng_aux, dtype=dtype)}
    elif method is Method.DANN:
        heads["d"] = DomainDiscriminator(d, hid, rng=rng_aux, dtype=dtype)
    for h in heads.values():
        fin = getattr(h, "fc1").weight.shape[1]
        assert fin == extractor.feature_dim, "head input width must equal the feature dim"
    return ModelBundle(method, extractor, heads, cfg)


class _TargetSampler:
    """Endless reshuffled stream of target frames."""

    def __init__(self, frames, rng):
        self.frames, self.rng = frames, rng
        self.perm, self.pos = rng.permutation(len(frames)), 0

    def draw(self, n):
        idx = []
        while len(idx) < n:
            if self.pos >= len(self.perm):
                self.perm, self.pos = self.rng.permutation(len(self.frames)), 0
            take = min(n - len(idx), len(self.perm) - self.pos)
            idx.extend(self.perm[self.pos:self.pos + take])
            self.pos += take
        return self.frames[np.asarray(idx)]


def _streams(seed):
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF)
    names = ("init", "aux_init", "src_order", "src_drop", "tgt_order", "tgt_drop")
    return {n: np.random.default_rng(s) for n, s in zip(names, ss.spawn(len(names)))}


def _check_finite(loss, seed, step):
    if not np.all(np.isfinite(loss.data)):
        raise DivergenceError(f"loss became {loss.data} at step {step} (seed {seed})", seed, step)


def _fit(source, target, adapt: AdaptConfig, cfg: TrainConfig, model_cfg: ResNetConfig,
         seed=None, dtype=np.float32, log_every=None):
    seed = cfg.seed if seed is None else seed
    rs = _streams(seed)
    method = adapt.method
    bundle = build_bundle(method, model_cfg, rs["init"], rs["aux_init"], dtype)
    g_f = bundle.extractor
    params = bundle.parameters()
    for p in params:
        p.reset_state()

    xs_all = np.asarray(source.frames, dtype=dtype)
    ys_all = ops.onehot(source.mod_labels, model_cfg.num_classes, dtype)
    sampler = None
    if method is not Method.BASE:
        if not isinstance(target, UnlabeledView):
            raise TargetLabelAccessError("adaptation target must be an UnlabeledView")
        sampler = _TargetSampler(np.asarray(target.frames, dtype=dtype), rs["tgt_order"])

    half = cfg.half_batch
    n = len(xs_all)
    steps_per_epoch = max(1, math.ceil(n / half))
    total_steps = cfg.epochs * steps_per_epoch
    step = 0
    for epoch in range(cfg.epochs):
        perm = rs["src_order"].permutation(n)
        losses = []
        for s in range(steps_per_epoch):
            idx = perm[s * half:(s + 1) * half]
            if len(idx) < 2:
                continue
            xs, ys = xs_all[idx], ys_all[idx]
            xt = sampler.draw(len(idx)) if sampler is not None else None
            progress = step / max(1, total_steps - 1)
            if method is Method.MCD:
                out = mcd_train_step(DomainBatchPair(xs, ys, xt), g_f, bundle.heads["y1"],
                                     bundle.heads["y2"], adapt.mcd_n_steps_c, cfg.lr, rs["src_drop"])
                if not all(np.isfinite(v) for v in out.values()):
                    raise DivergenceError(f"MCD losses not finite at step {step} (seed {seed})", seed, step)
                losses.append(out["step_a_ce"])
            else:
                total, ce = _objective(bundle, adapt, xs, ys, xt, progress, rs)
                _check_finite(total, seed, step)
                zero_grad(params)
                backward(total)
                adam_step(params, cfg.lr)
                losses.append(float(ce.data))
            step += 1
        bundle.curve.append(float(np.mean(losses)) if losses else float("nan"))
        if log_every and (epoch + 1) % log_every == 0:
            print(f"[{method.value} seed={seed}] epoch {epoch + 1}/{cfg.epochs} ce={bundle.curve[-1]:.4f}")
    return bundle


def _target_features(g_f, xt):
    # target batches are normalised with their own statistics; the running
    # statistics stay source-only so a zero-weight alignment term changes nothing
    return g_f(Tensor(xt), "train", False)


def _objective(bundle, adapt, xs, ys, xt, progress, rs):
    method, g_f, heads = adapt.method, bundle.extractor, bundle.heads
    fs = g_f(Tensor(xs), "train")
    if method is Method.STAR:
        sc = heads["y"]
        hs = sc.hidden(fs, "train", rs["src_drop"])
        samples = sample_stochastic_classifiers(sc, adapt.star_samples, rs["tgt_drop"])
        ce = None
        for hd in samples:
            term = ops.softmax_cross_entropy(hd(hs), ys)
            ce = term if ce is None else ce + term
        ce = ce * (1.0 / len(samples))
        ht = sc.hidden(_target_features(g_f, xt), "train", rs["tgt_drop"])
        align = star_align([ops.softmax(hd(ht)) for hd in samples])
        return loss_total(ce, align, adapt.lam), ce

    ls = heads["y"](fs, "train", rs["src_drop"])
    ce = ops.softmax_cross_entropy(ls, ys)
    if method is Method.BASE:
        return loss_total(ce, Tensor(np.zeros((), ce.dtype)), 0.0), ce
    ft = _target_features(g_f, xt)
    if method is Method.CORAL:
        align = coral_align(fs, ft, adapt.coral_scale)
    elif method is Method.JAN:
        lt = heads["y"](ft, "train", rs["tgt_drop"])
        align = jan_align([fs, ops.softmax(ls)], [ft, ops.softmax(lt)], adapt.jan_kernels)
    elif method is Method.DANN:
        align = dann_align(fs, ft, heads["d"], dann_lambda(progress))
        # discriminator accuracy on this batch; drifts toward 0.5 as features align
        p = heads["d"](Tensor(np.concatenate([fs.data, ft.data]))).data
        hits = np.concatenate([p[:len(xs)] > 0.5, p[len(xs):] <= 0.5])
        bundle.diagnostics.append(float(np.mean(hits)))
    else:
        raise ValueError(f"no objective for {method}")
    return loss_total(ce, align, adapt.lam), ce


def train_base(train_s, cfg: TrainConfig, model_cfg: ResNetConfig, seed=None, **kw) -> ModelBundle:
    """Cross-entropy training on labelled source frames only."""
    return _fit(train_s, None, AdaptConfig(Method.BASE), cfg, model_cfg, seed, **kw)


def train_adapt(train_s, train_t: UnlabeledView, adapt: AdaptConfig, cfg: TrainConfig,
                model_cfg: ResNetConfig, seed=None, **kw) -> ModelBundle:
    """Joint training on labelled source and unlabelled target frames."""
    if adapt.method is Method.BASE:
        raise ValueError("use train_base for the BASE method")
    return _fit(train_s, train_t, adapt, cfg, model_cfg, seed, **kw)


def train_method(train_s, train_t, adapt, cfg, model_cfg, seed=None, **kw):
    if adapt.method is Method.BASE:
        return train_base(train_s, cfg, model_cfg, seed, **kw)
    return train_adapt(train_s, train_t, adapt, cfg, model_cfg, seed, **kw)


def evaluate(model, eval_t):
    """Top-1 accuracy (percent) and confusion matrix (rows true, columns predicted).

    ``model`` is a :class:`ModelBundle` or any callable mapping frames to class ids.
    """
    frames, labels = eval_t.frames, eval_t.mod_labels
    pred = model.predict(frames) if hasattr(model, "predict") else np.asarray(model(frames))
    k = eval_t.num_classes
    cm = confusion_matrix(labels, pred, k)
    return accuracy_from_confusion(cm), cm
