"""Online scheduling on uniform machines with bounded migration.

Makespan minimization and machine covering are maintained by a state
machine over a configuration ILP, solved exactly at small scale.
"""

from .core import Instance, PowerGrid, threshold_ell
from .lexsolver import Solver, State

__all__ = ["Instance", "PowerGrid", "Solver", "State", "threshold_ell"]
__version__ = "0.1.0"
