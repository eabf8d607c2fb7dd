"""Random ad hoc network connectivity under stochastic vs deterministic channels."""

__version__ = "0.1.0"

from .channel import ConnectionModel, Disk, Rayleigh
from .geometry import Domain

__all__ = ["ConnectionModel", "Disk", "Rayleigh", "Domain", "__version__"]
