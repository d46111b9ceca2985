"""Spectra and time evolution of the induction operator on flowing 2D metrics.

The package computes magnetic growth rates on constant-curvature surfaces
whose metric evolves by its Ricci curvature, cross-validates the closed-form
eigenvalue expressions against independent numerical routes, and classifies
the resulting cosmological dynamo regimes.
"""

from . import cosmology, dynamics, geometry, operator, spectrum
from .errors import (
    DegenerateMetric,
    DivisionByZero,
    GridMismatch,
    InsufficientSamples,
    NegativeDensity,
    NoConvergence,
    NonConvergent,
    RicciDynamoError,
    ScenarioError,
    SchemaMismatch,
    StepUnstable,
)

__version__ = "0.1.0"

__all__ = [
    "cosmology",
    "dynamics",
    "geometry",
    "operator",
    "spectrum",
    "RicciDynamoError",
    "DegenerateMetric",
    "InsufficientSamples",
    "GridMismatch",
    "DivisionByZero",
    "NonConvergent",
    "NoConvergence",
    "StepUnstable",
    "NegativeDensity",
    "SchemaMismatch",
    "ScenarioError",
    "__version__",
]
