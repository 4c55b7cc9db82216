"""IQ dataset synthesis and domain-adaptive modulation classification."""

__version__ = "0.1.0"
