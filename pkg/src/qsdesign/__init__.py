"""Quantitative-sequence designs: a permutation-valued sequence part O paired with a Latin hypercube X.

The main entry points are :func:`generate` (any supported run size),
:func:`construct_nm` (n = m) and :func:`evaluate` (every criterion, bound and
structural flag for a design).
"""

from .core import (
    DesignError,
    MetricsReport,
    QSDesign,
    QuantDesign,
    SeqDesign,
    BlockedSeqDesign,
    evaluate,
    is_marginally_coupled,
    r_ave,
)
from .multi import generate, general_km, paired_construct, three_step
from .optimizer import TAConfig
from .single import construct_nm

__all__ = [
    "BlockedSeqDesign",
    "DesignError",
    "MetricsReport",
    "QSDesign",
    "QuantDesign",
    "SeqDesign",
    "TAConfig",
    "construct_nm",
    "evaluate",
    "general_km",
    "generate",
    "is_marginally_coupled",
    "paired_construct",
    "r_ave",
    "three_step",
]
