"""Few-shot semantic edge detection: datasets, model, training, and evaluation."""

__version__ = "0.1.0"
