"""Fairness-aware insurance pricing: fair cost models, fairness audits and an evolved accuracy/fairness ensemble."""

__version__ = "0.1.0"
