"""ResNet-18-1D feature extractor and adaptation heads."""
from .heads import (
    ClassifierHead, DomainDiscriminator, StochasticClassifier, dann_lambda,
    grl_forward_backward, sample_stochastic_classifiers,
)
from .layers import BatchNorm1d, Conv1d, Dense
from .module import Module
from .resnet import ResidualBlock, ResNet1D, ResNetConfig, build_feature_extractor


def forward_classify(extractor, head, batch, mode="eval", rng=None):
    """Logits ``head(extractor(batch))``; softmax is left to the loss."""
    return head(extractor(batch, mode), mode, rng)


__all__ = [
    "BatchNorm1d", "ClassifierHead", "Conv1d", "Dense", "DomainDiscriminator", "Module",
    "ResNet1D", "ResNetConfig", "ResidualBlock", "StochasticClassifier",
    "build_feature_extractor", "dann_lambda", "forward_classify", "grl_forward_backward",
    "sample_stochastic_classifiers",
]
