"""Wave-packet dynamics near the conical intersection of the linear E x e Jahn-Teller model."""
from .model import ModelParams
from .grid import Grid2D, SpinorField
from .propagator import PropagationPlan
from .series import ObservableSeries

__version__ = "0.1.0"

__all__ = ["ModelParams", "Grid2D", "SpinorField", "PropagationPlan", "ObservableSeries", "__version__"]
