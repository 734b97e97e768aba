"""Split inference with client-side denoising under dχ-privacy."""

__version__ = "0.1.0"
