"""Figure rendering for opo-smoothing sweep and trajectory files."""

__version__ = "0.1.0"

from .io import SchemaError, SweepTable, TrajectoryTable, load_sweep, load_trajectory
from .render import KINDS, FigureSpec, render

__all__ = [
    "__version__",
    "FigureSpec",
    "render",
    "KINDS",
    "SchemaError",
    "SweepTable",
    "TrajectoryTable",
    "load_sweep",
    "load_trajectory",
]
