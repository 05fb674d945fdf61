"""Partition values through traces of CM values of a weak Maass form on
Gamma_0(6), their reductions at supersingular points, and Brandt matrices
of level-6 Eichler orders."""

from .partition import euler_p, partition_table
from .cm_trace import trace, class_polynomial

__version__ = "0.1.0"
