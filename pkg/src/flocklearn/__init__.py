"""flocklearn: online collective-activity recognition for animal flocks.

Library layout:

- ``numeric`` / ``rng``     core math and seeded randomness
- ``lstm`` / ``conv``       recurrent cell and 1-D convolution primitives
- ``network``               full models (LSTM, CNN+LSTM), forward/backward
- ``training``              Adam, mini-batch training loop
- ``checkpoint``            versioned text checkpoints
- ``pipeline``              trajectories -> features -> labeled windows
- ``sim``                   seeded agent-based flock simulator
- ``evaluation``            accuracy / confusion-matrix reports
- ``session``               JSON exchange with the labeling UI
- ``cli``                   operator commands
"""

from .rng import Rng
from .errors import (
    FlockError,
    ShapeError,
    ContractError,
    ValidationError,
    ParseError,
    ConfigError,
    CheckpointError,
)

__all__ = [
    "Rng",
    "FlockError",
    "ShapeError",
    "ContractError",
    "ValidationError",
    "ParseError",
    "ConfigError",
    "CheckpointError",
]

__version__ = "0.1.0"
