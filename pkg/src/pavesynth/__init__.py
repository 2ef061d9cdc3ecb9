"""Synthetic pavement-crack datasets, augmentation, losses and segmentation metrics."""

from .errors import DatasetIOError, ParameterError
from .sample import Sample

__version__ = "0.1.0"

__all__ = ["DatasetIOError", "ParameterError", "Sample", "__version__"]
