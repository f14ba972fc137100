"""Fluctuating line-of-sight (fLoS) fading statistics."""
from .flos import FLoSParams, cdf, mgf, moment, pdf

__version__ = "0.1.0"

__all__ = ["FLoSParams", "cdf", "mgf", "moment", "pdf"]
