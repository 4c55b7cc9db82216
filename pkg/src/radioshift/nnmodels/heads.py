"""Method-specific heads on top of the feature vector."""
import numpy as np

from ..adcore import Parameter, Tensor, ops
from ..errors import ConfigError
from .layers import Dense
from .module import Module


def _head_mode(mode):
    return "eval" if mode == "eval" else "train"


class ClassifierHead(Module):
    """dense(d -> hidden) -> ReLU -> dropout -> dense(hidden -> K)."""

    def __init__(self, d, k, hidden=256, p_drop=0.5, rng=None, dtype=np.float32):
        super().__init__()
        self.p_drop = p_drop
        self.fc1 = Dense(d, hidden, rng, dtype)
        self.fc2 = Dense(hidden, k, rng, dtype)

    def __call__(self, f, mode="train", rng=None):
        h = ops.relu_dropout(self.fc1(f), self.p_drop, _head_mode(mode), rng)
        return self.fc2(h)


class DomainDiscriminator(Module):
    """dense(d -> hidden) -> ReLU -> dense(hidden -> 1) -> sigmoid, behind a GRL."""

    def __init__(self, d, hidden=256, rng=None, dtype=np.float32):
        super().__init__()
        self.fc1 = Dense(d, hidden, rng, dtype)
        self.fc2 = Dense(hidden, 1, rng, dtype)
        self.grl_coeff = 1.0

    def __call__(self, f, grl_coeff=None):
        coeff = self.grl_coeff if grl_coeff is None else grl_coeff
        h = ops.relu(self.fc1(ops.grad_reverse(f, coeff)))
        return ops.sigmoid(self.fc2(h)).reshape(-1)


def grl_forward_backward(features, coeff):
    return ops.grad_reverse(features, coeff)


def dann_lambda(progress):
    """Ramp 2 / (1 + exp(-10 p)) - 1 from 0 to ~1 over training progress p."""
    return 2.0 / (1.0 + np.exp(-10.0 * float(progress))) - 1.0


class StochasticClassifier(Module):
    """Classifier whose last layer weights are Gaussian: mean ``mu``, std softplus(``rho``)."""

    def __init__(self, d, k, hidden=256, p_drop=0.5, init_std_frac=0.05, rng=None,
                 dtype=np.float32):
        super().__init__()
        rng = rng if rng is not None else np.random.default_rng()
        self.p_drop = p_drop
        self.fc1 = Dense(d, hidden, rng, dtype)
        mu = (rng.standard_normal((k, hidden)) * np.sqrt(2.0 / hidden)).astype(dtype)
        std0 = init_std_frac * float(np.mean(np.abs(mu)))
        self.mu = Parameter(mu)
        self.rho = Parameter(np.full((k, hidden), np.log(np.expm1(std0)), dtype))
        self.bias = Parameter(np.zeros(k, dtype))

    def hidden(self, f, mode="train", rng=None):
        return ops.relu_dropout(self.fc1(f), self.p_drop, _head_mode(mode), rng)

    def std(self):
        return ops.softplus(self.rho)

    def __call__(self, f, mode="train", rng=None):
        """Logits of the mean classifier."""
        return ops.dense(self.hidden(f, mode, rng), self.mu, self.bias)


def sample_stochastic_classifiers(sc: StochasticClassifier, c: int, rng):
    """Draw ``c`` reparameterised last layers ``mu + softplus(rho) * eps``.

    Returns functions mapping hidden activations to logits; gradients reach
    ``mu`` and ``rho`` through every sample.
    """
    if c < 2:
        raise ConfigError(f"need at least 2 stochastic classifiers, got {c}")
    std = sc.std()
    heads = []
    for _ in range(c):
        eps = Tensor(rng.standard_normal(sc.mu.shape).astype(sc.mu.dtype))
        w = sc.mu + std * eps
        heads.append(lambda h, w=w: ops.dense(h, w, sc.bias))
    return heads
