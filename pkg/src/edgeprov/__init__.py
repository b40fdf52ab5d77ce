"""Intent-driven edge AI service provisioning over a simulated O-RAN stack."""

__version__ = "0.1.0"
