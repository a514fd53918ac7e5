"""Run-count heuristic, depth-limited alpha-beta search, and an exhaustive solver.

The search values positions for a fixed `mark`. Leaves return the run-count
heuristic; wins and losses discovered inside the tree are mapped onto a
terminal score that dominates every achievable heuristic value and is scaled
by remaining depth so faster wins (and slower losses) are preferred. Values
are exact integers in float64 up to magnitudes of 2**53, which covers the
default constants at inarow <= 4.

The exhaustive solver is a memoized negamax over the full game tree, intended
as a perfect-play oracle for small boards.
"""

from __future__ import annotations

import struct
import time
from dataclasses import dataclass, field
from hashlib import blake2b

import numpy as np

from . import kernels
from .agents import Agent
from .game import Board, BoardTooLargeError, GameConfig, Mark


@dataclass(frozen=True)
class HeuristicParams:
    """Weight bases for own and opponent runs (empirically chosen defaults)."""

    own_base: float = 1000.0
    opp_base: float = 2000.0

    def __post_init__(self) -> None:
        if self.own_base <= 1 or self.opp_base <= 1:
            raise ValueError("heuristic bases must be > 1")


@dataclass(frozen=True)
class MinimaxConfig:
    depth: int = 5
    params: HeuristicParams = field(default_factory=HeuristicParams)

    def __post_init__(self) -> None:
        if self.depth < 1:
            raise ValueError("search depth must be >= 1")


def count_runs(board: Board, mark: Mark) -> dict[int, int]:
    """Counts of maximal `mark` runs, keyed by run length from 2 to inarow.

    A maximal run of L consecutive tokens along one line contributes one count
    to bucket min(L, inarow); sub-runs are not counted separately.
    """
    inarow = board.config.inarow
    counts = kernels.count_runs(board.grid, int(mark), inarow)
    return {i: int(counts[i]) for i in range(2, inarow + 1)}


def heuristic(board: Board, mark: Mark, params: HeuristicParams | None = None) -> float:
    """Signed run-count evaluation of `board` from `mark`'s perspective."""
    p = params or HeuristicParams()
    return float(kernels.heuristic_value(
        board.grid, int(mark), board.config.inarow, p.own_base, p.opp_base))


def terminal_score(config: GameConfig, params: HeuristicParams | None = None) -> float:
    """Magnitude assigned to won positions, before the remaining-depth scaling."""
    p = params or HeuristicParams()
    return float(kernels.terminal_score(config.rows, config.cols, config.inarow, p.own_base))


def alphabeta(board: Board, mark: Mark, depth: int, alpha: float, beta: float,
              maximizing: bool, params: HeuristicParams | None = None) -> float:
    """Fail-soft alpha-beta value of `board` for `mark`.

    `maximizing` must be consistent with the side to move (True iff `mark` is
    to move). Terminal positions score +/- terminal_score * (depth + 1) for
    wins and losses, and the raw heuristic for draws.
    """
    p = params or HeuristicParams()
    if maximizing != (board.to_move == mark):
        raise ValueError("maximizing flag inconsistent with side to move")
    term = terminal_score(board.config, p)
    outcome = board.outcome()
    if outcome.is_win:
        sign = 1.0 if outcome.winner == mark else -1.0
        return sign * term * (depth + 1)
    if outcome.is_draw or depth <= 0:
        return heuristic(board, mark, p)
    return float(kernels.alphabeta_value(
        board.grid_copy(), int(board.to_move), int(mark), board.config.inarow,
        depth, alpha, beta, p.own_base, p.opp_base, term))


class MinimaxAgent(Agent):
    """Alpha-beta player with iterative deepening under the move deadline.

    Runs depths 1..config.depth, keeping the deepest completed iteration's
    move; a next depth is attempted only when the projected time fits the
    remaining budget. Ties break toward the lowest column.
    """

    # projected cost multiplier from one depth to the next; deliberately
    # pessimistic so a started iteration finishes inside the budget
    _GROWTH = 8.0

    def __init__(self, config: MinimaxConfig | None = None):
        self.config = config or MinimaxConfig()
        self.name = f"minimax(depth={self.config.depth})"

    def choose(self, board: Board, mark: Mark, deadline: float | None = None) -> int:
        legal = self._require_turn(board, mark)
        if len(legal) == 1:
            return legal[0]
        p = self.config.params
        term = terminal_score(board.config, p)
        grid = board.grid_copy()
        start = time.monotonic()
        best = legal[0]
        for depth in range(1, self.config.depth + 1):
            if deadline is not None and depth > 1:
                elapsed = time.monotonic() - start
                if elapsed + last_duration * self._GROWTH > deadline:
                    break
            depth_start = time.monotonic()
            col = int(kernels.best_move_alphabeta(
                grid, int(board.to_move), board.config.inarow, depth,
                p.own_base, p.opp_base, term))
            last_duration = time.monotonic() - depth_start
            if col >= 0:
                best = col
        return best


def solve_exhaustive(board: Board, mark: Mark, cell_cap: int = 16) -> int:
    """Game-theoretic value of `board` for `mark` under perfect play.

    Returns +1 (win), 0 (draw), or -1 (loss). Full-tree negamax memoized on
    position hashes; refuses boards with more than `cell_cap` cells.
    """
    config = board.config
    if config.rows * config.cols > cell_cap:
        raise BoardTooLargeError(
            f"{config.rows}x{config.cols} exceeds the {cell_cap}-cell solver cap")
    outcome = board.outcome()
    if outcome.is_win:
        return 1 if outcome.winner == mark else -1
    if outcome.is_draw:
        return 0
    grid = board.grid_copy()
    memo: dict[int, int] = {}
    value_to_move = _negamax(grid, int(board.to_move), config.inarow, memo)
    return value_to_move if mark == board.to_move else -value_to_move


def _position_key(grid: np.ndarray, to_move: int) -> int:
    # compact position hash; avoids building Board objects per solver node
    h = blake2b(digest_size=8)
    h.update(struct.pack("<iiib", grid.shape[0], grid.shape[1], 0, to_move))
    h.update(grid.tobytes())
    return int.from_bytes(h.digest(), "little")


def _negamax(grid: np.ndarray, to_move: int, inarow: int, memo: dict[int, int]) -> int:
    """Exact value for the side to move; the position must not be terminal."""
    key = _position_key(grid, to_move)
    cached = memo.get(key)
    if cached is not None:
        return cached
    best = -1
    for col in range(grid.shape[1]):
        row = int(kernels.lowest_empty_row(grid, col))
        if row < 0:
            continue
        grid[row, col] = to_move
        if kernels.win_at(grid, inarow, row, col):
            value = 1
        elif kernels.board_is_full(grid):
            value = 0
        else:
            value = -_negamax(grid, 3 - to_move, inarow, memo)
        grid[row, col] = 0
        if value > best:
            best = value
            if best == 1:
                break
    memo[key] = best
    return best
