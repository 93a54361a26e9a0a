"""Seed-driven group formation: size law, Dunbar ladder, simulation and fitting."""

from ._backend import BACKEND
from .analytic import (
    REFERENCE_BANDS,
    AttentionBand,
    DomainError,
    GroupScalingParams,
    HierarchyLadder,
    continuous_mode,
    discrete_normalizer,
    integer_mode,
    ladder,
    normalization_integral,
    psi,
    scaled_nu,
    throughput_product,
)

__version__ = "0.1.0"
