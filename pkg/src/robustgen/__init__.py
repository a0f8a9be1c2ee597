"""Generalization curves of adversarially trained models as the training set grows."""

__version__ = "0.1.0"
