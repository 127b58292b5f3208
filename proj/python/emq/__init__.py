"""Learning dynamics, emergent quantum mechanics and measurement on finite grids.

Fields are NumPy arrays shaped like the grid in Fortran order (axis 0 fastest).
"""

from ._emq import *  # noqa: F401,F403
from ._emq import Grid, FreeEnergy, InvalidArgument, NumericalError, NoMultivaluedStructure  # noqa: F401

__version__ = "0.1.0"
