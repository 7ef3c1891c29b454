"""Riesz potentials, Lorentz functionals and horizontal perimeters on R^d and H1.

Everything is computed on finite grids: heat kernels, Riesz potentials by
subordination in the heat time, heat maximal functions, rearrangements and
mollified perimeters.  The ``harness`` modules wire these into experiments
that measure the ratio of each side of the inequalities being tested.
"""
from .group import HEISENBERG1, GroupDescriptor, euclidean, heisenberg, parse_group
from .grid import GridFunction, GridSpec

__all__ = ["GridFunction", "GridSpec", "GroupDescriptor", "HEISENBERG1", "euclidean", "heisenberg", "parse_group"]
__version__ = "0.1.0"
