"""graphfuse: token classification with GAT + decoder fusion on token graphs."""

__version__ = "0.1.0"

from .tensor import Tensor  # noqa: F401
from .rng import RngState  # noqa: F401
