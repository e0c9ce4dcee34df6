"""Numerical laboratory for spreading-front free boundary problems.

Solves the classical Stefan-type reaction-diffusion free boundary problem by
front fixing, and its scaled nonlocal-dispersal counterpart on a fixed grid,
then quantifies how the two agree as the kernel scale shrinks.
"""

__version__ = "0.1.0"
