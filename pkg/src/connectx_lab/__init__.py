"""ConnectX laboratory: rules engine, search agents, self-play training, and play services."""

from .game import (
    Board,
    BoardTooLargeError,
    GameConfig,
    IllegalMoveError,
    Mark,
    Outcome,
    ParseError,
)

__version__ = "0.1.0"

__all__ = [
    "Board",
    "BoardTooLargeError",
    "GameConfig",
    "IllegalMoveError",
    "Mark",
    "Outcome",
    "ParseError",
    "__version__",
]
