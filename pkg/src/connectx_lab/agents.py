"""Agent contract plus the two baseline players: uniform random and one-step greedy."""

from __future__ import annotations

import abc

import numpy as np

from .game import Board, Mark


class NoLegalMoveError(RuntimeError):
    """Raised when an agent is asked to move on a full board."""


class Agent(abc.ABC):
    """A player: maps (board, mark) to a column, within an optional time budget.

    `deadline` is the move's wall-clock budget in seconds (None = unlimited).
    Implementations must return a legal column whenever one exists, before the
    budget elapses. Stochastic agents draw from a generator seeded at
    construction, so one seed reproduces one move sequence; a single instance
    serves one game at a time.
    """

    name: str = "agent"

    @abc.abstractmethod
    def choose(self, board: Board, mark: Mark, deadline: float | None = None) -> int:
        """Return the column to drop in."""

    def _require_turn(self, board: Board, mark: Mark) -> list[int]:
        if board.to_move != mark:
            raise ValueError(f"{self.name}: asked to move as {mark.name} "
                             f"but {board.to_move.name} is to move")
        legal = board.legal_moves()
        if not legal:
            raise NoLegalMoveError(f"{self.name}: no legal moves")
        return legal

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


class RandomAgent(Agent):
    """Uniform choice among the legal columns."""

    def __init__(self, seed: int = 0):
        self.name = "random"
        self._rng = np.random.default_rng(seed)

    def choose(self, board: Board, mark: Mark, deadline: float | None = None) -> int:
        legal = self._require_turn(board, mark)
        return int(legal[self._rng.integers(len(legal))])


class GreedyAgent(Agent):
    """One-step lookahead: take an immediately winning column if any, else the
    lowest open column.

    Equivalent to scoring every column (+inf for a winning drop, 0 for any
    other legal drop, -inf for a full column) and taking the lowest-index
    argmax. Deliberately never blocks the opponent.
    """

    def __init__(self) -> None:
        self.name = "greedy"

    def choose(self, board: Board, mark: Mark, deadline: float | None = None) -> int:
        legal = self._require_turn(board, mark)
        for col in legal:
            child = board.apply(col)
            outcome = child.outcome(col)
            if outcome.is_win and outcome.winner == mark:
                return col
        return legal[0]
