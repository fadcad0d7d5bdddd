"""Numerical verification of conformal Killing-Yano 2-forms and the integral
identities they generate on Minkowski, de Sitter and anti-de Sitter space."""

from .charts import ANTI_DE_SITTER, DE_SITTER, MINKOWSKI, ChartPoint, SpacetimeId

__version__ = "0.1.0"

__all__ = ["ANTI_DE_SITTER", "DE_SITTER", "MINKOWSKI", "ChartPoint", "SpacetimeId", "__version__"]
