"""Computations with groups generated by automata acting on rooted trees."""

from ._accel import HAVE_NUMBA, backend
from .automaton import Transducer, builtin, parse_transducer, validate
from .words import AutomatonGroup, ball, compute_nucleus, decompose, equal, is_identity

__all__ = [
    "HAVE_NUMBA", "backend", "Transducer", "builtin", "parse_transducer", "validate",
    "AutomatonGroup", "ball", "compute_nucleus", "decompose", "equal", "is_identity",
]

__version__ = "0.1.0"
